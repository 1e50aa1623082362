#pragma once

// Spectrum of the Laplace-Beltrami operator on the cone cross-section.
//
// Three cross-sections are supported:
//   Circle  - a 2*pi-periodic angle with metric scale^2 dtheta^2, sampled on a
//             uniform grid with trapezoidal weights. Modes are the sampled
//             trigonometric functions, exact eigenvectors of the continuum operator.
//   Sphere  - the round unit sphere S^n, restricted to zonal functions. The grid is
//             a Gauss-Gegenbauer rule in cos(polar angle), the modes are normalized
//             Gegenbauer polynomials C_j^{(n-1)/2}. Multiplicities report the full
//             eigenspace dimension; the basis only carries the zonal representative.
//   Custom  - a user-given list of eigenvalues. There is no physical grid: the
//             "grid" is one coefficient channel per distinct eigenvalue.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conetool/errors.hpp"

namespace conetool {

enum class CrossSectionKind { Circle, Sphere, Custom };

inline std::string to_string(CrossSectionKind kind) {
  switch (kind) {
    case CrossSectionKind::Circle: return "circle";
    case CrossSectionKind::Sphere: return "sphere";
    case CrossSectionKind::Custom: return "custom";
  }
  return "unknown";
}

/// Eigenvalues closer than this are one multiplicity class.
inline constexpr double kEigenvalueMergeTol = 1e-9;

struct CrossSectionSpec {
  CrossSectionKind kind = CrossSectionKind::Circle;
  double scale = 1.0;                     // circle only
  int dim = 1;                            // sphere: n >= 2; custom: any n >= 1
  std::vector<double> custom_eigenvalues;  // custom only, any order, repeats = multiplicity
  int grid_points = 0;                    // 0 picks the smallest complete grid
  bool exhaustive = false;                // custom only: the list is the whole spectrum

  static CrossSectionSpec circle(double scale, int grid_points = 0) {
    CrossSectionSpec s;
    s.kind = CrossSectionKind::Circle;
    s.scale = scale;
    s.dim = 1;
    s.grid_points = grid_points;
    return s;
  }
  static CrossSectionSpec sphere(int n, int grid_points = 0) {
    CrossSectionSpec s;
    s.kind = CrossSectionKind::Sphere;
    s.dim = n;
    s.grid_points = grid_points;
    return s;
  }
  static CrossSectionSpec custom(int n, std::vector<double> eigenvalues, bool exhaustive = false) {
    CrossSectionSpec s;
    s.kind = CrossSectionKind::Custom;
    s.dim = n;
    s.custom_eigenvalues = std::move(eigenvalues);
    s.exhaustive = exhaustive;
    return s;
  }
};

namespace detail {

inline double sphere_area(int m) {
  // |S^m| = 2 pi^{(m+1)/2} / Gamma((m+1)/2)
  const double h = 0.5 * (m + 1);
  return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

inline long long binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Nodes and weights of the Gauss rule for the weight (1 - x^2)^{a - 1/2} on [-1, 1],
// via Golub-Welsch on the Jacobi matrix of the Gegenbauer family with parameter a > 0.
inline void gauss_gegenbauer(int count, double a, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(count, count);
  for (int k = 1; k < count; ++k) {
    const double b = std::sqrt(k * (k + 2.0 * a - 1.0) / (4.0 * (k + a) * (k + a - 1.0)));
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  const double mu0 = std::sqrt(std::numbers::pi) * std::tgamma(a + 0.5) / std::tgamma(a + 1.0);
  nodes = eig.eigenvalues();
  weights.resize(count);
  for (int i = 0; i < count; ++i) weights(i) = mu0 * eig.eigenvectors()(0, i) * eig.eigenvectors()(0, i);
}

}  // namespace detail

class CrossSectionSpectrum {
 public:
  CrossSectionKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double scale() const { return scale_; }
  bool exhaustive() const { return exhaustive_; }

  /// Distinct eigenvalues, strictly decreasing, the first one is 0.
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  const std::vector<int>& multiplicities() const { return multiplicities_; }
  int mode_count() const { return static_cast<int>(eigenvalues_.size()); }
  double eigenvalue(int j) const { return eigenvalues_.at(check_mode(j)); }

  /// False for custom spectra: there is no physical cross-section grid on which
  /// pointwise products make sense.
  bool has_physical_grid() const { return kind_ != CrossSectionKind::Custom; }

  int grid_size() const { return static_cast<int>(weights_.size()); }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::VectorXd& nodes() const { return nodes_; }
  double volume() const { return weights_.sum(); }

  /// Orthonormal grid vectors spanning the resolved part of E_j (columns).
  const Eigen::MatrixXd& basis(int j) const { return basis_.at(check_mode(j)); }
  int basis_size(int j) const { return static_cast<int>(basis(j).cols()); }

  /// True when the mode bases together span every grid vector.
  bool complete() const {
    int total = 0;
    for (const auto& b : basis_) total += static_cast<int>(b.cols());
    return total == grid_size();
  }

  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    check_length(u);
    check_length(v);
    return (u.array() * v.array() * weights_.array()).sum();
  }

  /// Coefficients of `values` against the orthonormal basis of E_j.
  Eigen::VectorXd project_mode(const Eigen::VectorXd& values, int j) const {
    check_length(values);
    return basis(j).transpose() * weights_.cwiseProduct(values);
  }

  Eigen::VectorXd reconstruct_mode(const Eigen::VectorXd& coefficients, int j) const {
    require(coefficients.size() == basis(j).cols(), ErrorKind::InvalidArgument,
            "coefficient vector does not match the eigenspace basis");
    return basis(j) * coefficients;
  }

  /// Orthogonal projection pi_j as an operator on grid vectors.
  Eigen::MatrixXd projector(int j) const {
    const Eigen::MatrixXd& b = basis(j);
    return b * b.transpose() * weights_.asDiagonal();
  }

  /// Delta_h(0) through its eigen-expansion sum_j lambda_j pi_j.
  Eigen::VectorXd apply_cross_laplacian(const Eigen::VectorXd& values) const {
    check_length(values);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(values.size());
    for (int j = 1; j < mode_count(); ++j)
      out += eigenvalues_[j] * reconstruct_mode(project_mode(values, j), j);
    return out;
  }

  /// Matrix of apply_cross_laplacian for given per-mode eigenvalues.
  Eigen::MatrixXd spectral_matrix(const std::vector<double>& per_mode) const {
    require(static_cast<int>(per_mode.size()) == mode_count(), ErrorKind::InvalidArgument,
            "one value per mode expected");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(grid_size(), grid_size());
    for (int j = 0; j < mode_count(); ++j)
      if (per_mode[j] != 0.0) m += per_mode[j] * projector(j);
    return m;
  }

  friend CrossSectionSpectrum build_cross_section(const CrossSectionSpec& spec, int n_modes);

 private:
  int check_mode(int j) const {
    if (j < 0 || j >= mode_count())
      fail(ErrorKind::OutOfRange, "mode index " + std::to_string(j) + " outside [0, " +
                                      std::to_string(mode_count()) + ")");
    return j;
  }
  void check_length(const Eigen::VectorXd& v) const {
    require(v.size() == weights_.size(), ErrorKind::InvalidArgument,
            "grid vector has length " + std::to_string(v.size()) + ", expected " +
                std::to_string(weights_.size()));
  }

  CrossSectionKind kind_ = CrossSectionKind::Circle;
  int dim_ = 1;
  double scale_ = 1.0;
  bool exhaustive_ = false;
  std::vector<double> eigenvalues_;
  std::vector<int> multiplicities_;
  Eigen::VectorXd nodes_;
  Eigen::VectorXd weights_;
  std::vector<Eigen::MatrixXd> basis_;
};

inline CrossSectionSpectrum build_cross_section(const CrossSectionSpec& spec, int n_modes) {
  require(n_modes >= 1, ErrorKind::InvalidArgument, "n_modes must be at least 1");
  CrossSectionSpectrum out;
  out.kind_ = spec.kind;
  out.dim_ = spec.dim;

  switch (spec.kind) {
    case CrossSectionKind::Circle: {
      require(spec.dim == 1, ErrorKind::InvalidArgument, "a circle cross-section has dimension 1");
      require(std::isfinite(spec.scale) && spec.scale > 0.0, ErrorKind::InvalidArgument,
              "circle scale must be positive");
      const int n_grid = spec.grid_points > 0 ? spec.grid_points : 2 * n_modes - 1;
      // Trapezoidal orthonormality is exact while 2 j_max < n_grid.
      require(n_grid > 2 * (n_modes - 1), ErrorKind::OutOfRange,
              std::to_string(n_modes) + " modes need more than " + std::to_string(2 * (n_modes - 1)) +
                  " angular grid points");
      const double ell = spec.scale;
      out.scale_ = ell;
      out.nodes_.resize(n_grid);
      for (int k = 0; k < n_grid; ++k) out.nodes_(k) = 2.0 * std::numbers::pi * k / n_grid;
      out.weights_ = Eigen::VectorXd::Constant(n_grid, ell * 2.0 * std::numbers::pi / n_grid);
      for (int j = 0; j < n_modes; ++j) {
        out.eigenvalues_.push_back(-(j / ell) * (j / ell));
        if (j == 0) {
          out.multiplicities_.push_back(1);
          out.basis_.push_back(Eigen::MatrixXd::Constant(n_grid, 1, 1.0 / std::sqrt(2.0 * std::numbers::pi * ell)));
        } else {
          out.multiplicities_.push_back(2);
          Eigen::MatrixXd b(n_grid, 2);
          const double c = 1.0 / std::sqrt(std::numbers::pi * ell);
          for (int k = 0; k < n_grid; ++k) {
            b(k, 0) = c * std::cos(j * out.nodes_(k));
            b(k, 1) = c * std::sin(j * out.nodes_(k));
          }
          out.basis_.push_back(std::move(b));
        }
      }
      break;
    }
    case CrossSectionKind::Sphere: {
      require(spec.dim >= 2, ErrorKind::InvalidArgument, "a sphere cross-section needs n >= 2");
      const int n = spec.dim;
      const int n_grid = spec.grid_points > 0 ? spec.grid_points : n_modes;
      require(n_modes <= n_grid, ErrorKind::OutOfRange,
              std::to_string(n_modes) + " zonal modes need at least as many Gauss nodes");
      const double a = 0.5 * (n - 1);  // Gegenbauer parameter of zonal harmonics on S^n
      Eigen::VectorXd w;
      detail::gauss_gegenbauer(n_grid, a, out.nodes_, w);
      out.weights_ = detail::sphere_area(n - 1) * w;
      for (int j = 0; j < n_modes; ++j) {
        out.eigenvalues_.push_back(-static_cast<double>(j) * (j + n - 1));
        out.multiplicities_.push_back(
            static_cast<int>(detail::binomial(j + n, n) - detail::binomial(j + n - 2, n)));
      }
      // Gegenbauer recurrence, then normalization under the (exact) quadrature.
      Eigen::MatrixXd c(n_grid, n_modes);
      for (int k = 0; k < n_grid; ++k) {
        const double x = out.nodes_(k);
        double prev2 = 1.0;
        double prev1 = 2.0 * a * x;
        for (int j = 0; j < n_modes; ++j) {
          double value;
          if (j == 0) {
            value = 1.0;
          } else if (j == 1) {
            value = prev1;
          } else {
            value = (2.0 * x * (j + a - 1.0) * prev1 - (j + 2.0 * a - 2.0) * prev2) / j;
            prev2 = prev1;
            prev1 = value;
          }
          c(k, j) = value;
        }
      }
      for (int j = 0; j < n_modes; ++j) {
        Eigen::VectorXd col = c.col(j);
        col /= std::sqrt((col.array().square() * out.weights_.array()).sum());
        out.basis_.emplace_back(col);
      }
      break;
    }
    case CrossSectionKind::Custom: {
      require(spec.dim >= 1, ErrorKind::InvalidArgument, "cross-section dimension must be >= 1");
      std::vector<double> values = spec.custom_eigenvalues;
      require(!values.empty(), ErrorKind::InvalidArgument, "custom spectrum is empty");
      for (double v : values) {
        require(std::isfinite(v), ErrorKind::InvalidArgument, "custom eigenvalue is not finite");
        require(v <= kEigenvalueMergeTol, ErrorKind::InvalidArgument,
                "custom eigenvalues must be <= 0 (got " + std::to_string(v) + ")");
      }
      std::sort(values.begin(), values.end(), std::greater<>());
      for (double v : values) {
        if (!out.eigenvalues_.empty() && std::abs(out.eigenvalues_.back() - v) < kEigenvalueMergeTol) {
          ++out.multiplicities_.back();
        } else {
          out.eigenvalues_.push_back(v);
          out.multiplicities_.push_back(1);
        }
      }
      require(std::abs(out.eigenvalues_.front()) < kEigenvalueMergeTol, ErrorKind::InvalidArgument,
              "a custom spectrum must contain the eigenvalue 0");
      out.eigenvalues_.front() = 0.0;
      const int distinct = static_cast<int>(out.eigenvalues_.size());
      require(distinct >= n_modes, ErrorKind::OutOfRange,
              "custom spectrum has fewer distinct eigenvalues than requested modes");
      out.eigenvalues_.resize(n_modes);
      out.multiplicities_.resize(n_modes);
      // A truncated list is no longer the whole spectrum.
      out.exhaustive_ = spec.exhaustive && distinct == n_modes;
      out.nodes_ = Eigen::VectorXd::LinSpaced(n_modes, 0, n_modes - 1);
      out.weights_ = Eigen::VectorXd::Ones(n_modes);
      for (int j = 0; j < n_modes; ++j) {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n_modes, 1);
        e(j, 0) = 1.0;
        out.basis_.push_back(std::move(e));
      }
      break;
    }
  }
  return out;
}

}  // namespace conetool
