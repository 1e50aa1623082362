#pragma once

// Log-radial discretization of the truncated straight cone [x_min, 1] x cross-section
// and the flux-form cone Laplacian.
//
// With tau = ln x the Laplacian of dx^2 + x^2 h is
//   Delta = x^{-2} (d_tau^2 + (n-1) d_tau + Delta_h) = x^{-n-1} d_tau (x^{n-1} d_tau) + x^{-2} Delta_h,
// and the volume element x^n dx dy is x^{n+1} dtau dy. Node i carries the radial
// weight w_i = x_i^{n+1} |cell_i| (half cells at both ends), faces carry the
// conductance x_{i+1/2}^{n-1} / dtau, so W L is symmetric and L 1 = 0.

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conetool/cross_section.hpp"
#include "conetool/errors.hpp"
#include "conetool/linalg.hpp"
#include "conetool/mellin.hpp"

namespace conetool {

enum class InnerBoundary {
  AsymptoticRobin,  // d_tau u_j = -q_j^- u_j at x_min
  NeumannTau,       // d_tau u = 0 at x_min
};

/// How the cross-section Laplacian enters the solver.
enum class CrossDiscretization {
  Spectral,          // exact eigenvalues lambda_j
  SecondDifference,  // circle only: eigenvalues of the periodic three-point stencil
};

inline std::string to_string(InnerBoundary b) {
  return b == InnerBoundary::AsymptoticRobin ? "robin" : "neumann";
}
inline std::string to_string(CrossDiscretization c) {
  return c == CrossDiscretization::Spectral ? "spectral" : "second-difference";
}

class ConeGrid {
 public:
  ConeGrid(std::shared_ptr<const CrossSectionSpectrum> spectrum, double x_min, int nx)
      : spectrum_(std::move(spectrum)), x_min_(x_min), nx_(nx) {
    require(spectrum_ != nullptr, ErrorKind::InvalidArgument, "grid needs a cross-section spectrum");
    require(x_min > 0.0 && x_min < 1.0, ErrorKind::InvalidArgument, "x_min must lie in (0, 1)");
    require(nx >= 3, ErrorKind::InvalidArgument, "at least three radial nodes are needed");
    n_ = spectrum_->dim();
    dtau_ = -std::log(x_min) / (nx - 1);
    tau_.resize(nx);
    x_.resize(nx);
    weight_.resize(nx);
    for (int i = 0; i < nx; ++i) {
      tau_(i) = std::log(x_min) + i * dtau_;
      if (i == nx - 1) tau_(i) = 0.0;
      x_(i) = std::exp(tau_(i));
      weight_(i) = std::pow(x_(i), n_ + 1) * cell(i);
    }
    conductance_.resize(nx - 1);
    for (int i = 0; i + 1 < nx; ++i) conductance_(i) = std::pow(face_x(i), n_ - 1) / dtau_;
  }

  const CrossSectionSpectrum& spectrum() const { return *spectrum_; }
  std::shared_ptr<const CrossSectionSpectrum> spectrum_ptr() const { return spectrum_; }
  int n() const { return n_; }
  double x_min() const { return x_min_; }
  int nx() const { return nx_; }
  int ny() const { return spectrum_->grid_size(); }
  double dtau() const { return dtau_; }
  const Eigen::VectorXd& tau() const { return tau_; }
  const Eigen::VectorXd& x() const { return x_; }

  /// Length of the control cell of node i in tau.
  double cell(int i) const { return (i == 0 || i == nx_ - 1) ? 0.5 * dtau_ : dtau_; }
  /// x at the face between nodes i and i+1.
  double face_x(int i) const { return std::exp(tau_(i) + 0.5 * dtau_); }
  /// Radial measure weights x_i^{n+1} |cell_i|.
  const Eigen::VectorXd& radial_weights() const { return weight_; }
  /// x_{i+1/2}^{n-1} / dtau.
  const Eigen::VectorXd& conductance() const { return conductance_; }

  /// Full measure weights, nx rows by ny columns.
  Eigen::MatrixXd measure_weights() const { return weight_ * spectrum_->weights().transpose(); }

 private:
  std::shared_ptr<const CrossSectionSpectrum> spectrum_;
  double x_min_;
  int nx_;
  int n_ = 1;
  double dtau_ = 0.0;
  Eigen::VectorXd tau_, x_, weight_, conductance_;
};

/// Discrete scalar field: nx radial nodes by ny cross-section grid points (or
/// coefficient channels for custom spectra).
struct ConeField {
  std::shared_ptr<const ConeGrid> grid;
  Eigen::MatrixXd values;

  ConeField() = default;
  ConeField(std::shared_ptr<const ConeGrid> g, Eigen::MatrixXd v) : grid(std::move(g)), values(std::move(v)) {
    require(grid != nullptr, ErrorKind::InvalidArgument, "field needs a grid");
    require(values.rows() == grid->nx() && values.cols() == grid->ny(), ErrorKind::InvalidArgument,
            "field shape does not match the grid");
  }
  static ConeField constant(std::shared_ptr<const ConeGrid> g, double c) {
    Eigen::MatrixXd v = Eigen::MatrixXd::Constant(g->nx(), g->ny(), c);
    return ConeField(std::move(g), std::move(v));
  }
  double min() const { return values.minCoeff(); }
  double max() const { return values.maxCoeff(); }
};

/// Per-mode radial coefficients: modes[j] is nx by basis_size(j).
using ModeCoefficients = std::vector<Eigen::MatrixXd>;

/// Symmetric tridiagonal T_j = W L_j (unscaled by the measure).
struct RadialTridiagonal {
  Eigen::VectorXd diag;
  Eigen::VectorXd off;       // off(i) couples nodes i and i+1
  Eigen::VectorXd reaction;  // diag minus the flux part: cross and Robin terms
};

class ConeLaplacian {
 public:
  ConeLaplacian(std::shared_ptr<const ConeGrid> grid, InnerBoundary inner = InnerBoundary::AsymptoticRobin,
                CrossDiscretization cross = CrossDiscretization::Spectral)
      : grid_(std::move(grid)), inner_(inner), cross_(cross) {
    require(grid_ != nullptr, ErrorKind::InvalidArgument, "operator needs a grid");
    const auto& s = grid_->spectrum();
    if (cross == CrossDiscretization::SecondDifference) {
      require(s.kind() == CrossSectionKind::Circle, ErrorKind::InvalidArgument,
              "the second-difference cross operator needs a circle cross-section");
      require(s.complete(), ErrorKind::InvalidArgument,
              "the second-difference cross operator needs a complete angular grid (2 modes - 1 points)");
    }
    const int modes = s.mode_count();
    const int n = grid_->n();
    lambda_.resize(modes);
    rho_.resize(modes);
    for (int j = 0; j < modes; ++j) {
      lambda_[j] = s.eigenvalue(j);
      if (cross == CrossDiscretization::SecondDifference && j > 0) {
        const double h = 2.0 * std::numbers::pi / s.grid_size();
        lambda_[j] = -(2.0 - 2.0 * std::cos(j * h)) / (s.scale() * h * s.scale() * h);
      }
      rho_[j] = inner == InnerBoundary::AsymptoticRobin ? -indicial_roots(n, j, lambda_[j]).q_minus : 0.0;
    }
    const double x0 = grid_->x()(0);
    tridiagonals_.resize(modes);
    const Eigen::VectorXd& a = grid_->conductance();
    for (int j = 0; j < modes; ++j) {
      RadialTridiagonal t;
      t.off = a;
      t.diag.resize(grid_->nx());
      t.reaction.resize(grid_->nx());
      for (int i = 0; i < grid_->nx(); ++i) {
        double r = lambda_[j] * std::pow(grid_->x()(i), n - 1) * grid_->cell(i);
        if (i == 0) r -= rho_[j] * std::pow(x0, n - 1);
        t.reaction(i) = r;
        double d = r;
        if (i > 0) d -= a(i - 1);
        if (i + 1 < grid_->nx()) d -= a(i);
        t.diag(i) = d;
      }
      tridiagonals_[j] = std::move(t);
    }
    // Physical-space cross matrices sum_j c_j B_j B_j^T diag(w).
    lambda_phys_ = s.spectral_matrix(lambda_);
    rho_phys_ = s.spectral_matrix(rho_);
  }

  const ConeGrid& grid() const { return *grid_; }
  std::shared_ptr<const ConeGrid> grid_ptr() const { return grid_; }
  InnerBoundary inner_boundary() const { return inner_; }
  CrossDiscretization cross_discretization() const { return cross_; }
  int mode_count() const { return static_cast<int>(lambda_.size()); }
  /// Cross-section eigenvalue the operator uses for mode j.
  double lambda(int j) const { return lambda_.at(j); }
  /// Robin coefficient -q_j^- (0 for Neumann).
  double rho(int j) const { return rho_.at(j); }
  const RadialTridiagonal& tridiagonal(int j) const { return tridiagonals_.at(j); }
  const Eigen::MatrixXd& cross_matrix() const { return lambda_phys_; }
  const Eigen::MatrixXd& robin_matrix() const { return rho_phys_; }

  /// Dense L_j = W^{-1} T_j.
  Eigen::MatrixXd assemble(int j) const {
    const auto& t = tridiagonal(j);
    const int nx = grid_->nx();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nx, nx);
    for (int i = 0; i < nx; ++i) {
      m(i, i) = t.diag(i);
      if (i + 1 < nx) m(i, i + 1) = m(i + 1, i) = t.off(i);
    }
    return grid_->radial_weights().cwiseInverse().asDiagonal() * m;
  }

  /// T_j v for every column of v, in flux-difference form so constants cancel exactly.
  Eigen::MatrixXd apply_tridiagonal(int j, const Eigen::MatrixXd& v) const {
    const auto& t = tridiagonal(j);
    const int nx = grid_->nx();
    Eigen::MatrixXd out = t.reaction.asDiagonal() * v;
    const Eigen::MatrixXd flux = t.off.asDiagonal() * (v.bottomRows(nx - 1) - v.topRows(nx - 1));
    out.topRows(nx - 1) += flux;
    out.bottomRows(nx - 1) -= flux;
    return out;
  }

  /// L_j v for every column of v.
  Eigen::MatrixXd apply_mode(int j, const Eigen::MatrixXd& v) const {
    return grid_->radial_weights().cwiseInverse().asDiagonal() * apply_tridiagonal(j, v);
  }

  ModeCoefficients to_modes(const Eigen::MatrixXd& values) const {
    const auto& s = grid_->spectrum();
    ModeCoefficients c(mode_count());
    const Eigen::MatrixXd weighted = values * s.weights().asDiagonal();
    for (int j = 0; j < mode_count(); ++j) c[j] = weighted * s.basis(j);
    return c;
  }

  Eigen::MatrixXd from_modes(const ModeCoefficients& c) const {
    const auto& s = grid_->spectrum();
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(grid_->nx(), grid_->ny());
    for (int j = 0; j < mode_count(); ++j) values += c[j] * s.basis(j).transpose();
    return values;
  }

  /// T v in physical coordinates (the weighted operator, rows not divided by w_i).
  Eigen::MatrixXd apply_weighted(const Eigen::MatrixXd& v) const {
    const int nx = grid_->nx();
    const int n = grid_->n();
    const Eigen::VectorXd& a = grid_->conductance();
    Eigen::MatrixXd out(nx, v.cols());
    // Mode 0 has no cross or Robin term, so shifting each row by a constant is exact
    // and makes constant rows contribute exactly zero.
    const Eigen::MatrixXd shifted = v - v.col(0).replicate(1, v.cols());
    const Eigen::MatrixXd cross = shifted * lambda_phys_.transpose();
    for (int i = 0; i < nx; ++i) {
      Eigen::RowVectorXd r = std::pow(grid_->x()(i), n - 1) * grid_->cell(i) * cross.row(i);
      if (i > 0) r += a(i - 1) * (v.row(i - 1) - v.row(i));
      if (i + 1 < nx) r += a(i) * (v.row(i + 1) - v.row(i));
      out.row(i) = r;
    }
    out.row(0) -= std::pow(grid_->x()(0), n - 1) * (shifted.row(0) * rho_phys_.transpose());
    return out;
  }

  /// Delta applied to a physical field.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& v) const {
    return grid_->radial_weights().cwiseInverse().asDiagonal() * apply_weighted(v);
  }

  ConeField apply(const ConeField& u) const { return ConeField(grid_, apply(u.values)); }

 private:
  std::shared_ptr<const ConeGrid> grid_;
  InnerBoundary inner_;
  CrossDiscretization cross_;
  std::vector<double> lambda_;
  std::vector<double> rho_;
  std::vector<RadialTridiagonal> tridiagonals_;
  Eigen::MatrixXd lambda_phys_;
  Eigen::MatrixXd rho_phys_;
};

/// Mode-by-mode evaluation: decompose, apply L_j, recompose.
inline ConeField apply_full_laplacian(const ConeLaplacian& op, const ConeField& u) {
  ModeCoefficients c = op.to_modes(u.values);
  for (int j = 0; j < op.mode_count(); ++j) c[j] = op.apply_mode(j, c[j]);
  return ConeField(op.grid_ptr(), op.from_modes(c));
}

inline Eigen::MatrixXd assemble_laplacian(const ConeLaplacian& op, int j) { return op.assemble(j); }

}  // namespace conetool
