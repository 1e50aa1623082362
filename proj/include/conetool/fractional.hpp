#pragma once

// Spectral powers (-L_j)^sigma of the radial operators.
//
// -L_j is self-adjoint for the weighted product, so with S_j = -W^{-1/2} T_j W^{-1/2}
// = V diag(mu) V^T we set (-L_j)^sigma = W^{-1/2} V diag(mu^sigma) V^T W^{1/2}.
// When the radial problem keeps constants (mode 0 with no Robin term) the kernel
// (the constants) is split off explicitly so the power maps constants to 0 and
// preserves the weighted mean to rounding.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "conetool/errors.hpp"
#include "conetool/grid.hpp"

namespace conetool {

class FractionalPower {
 public:
  explicit FractionalPower(const ConeLaplacian& op) : op_(&op) {
    const int modes = op.mode_count();
    const Eigen::VectorXd& w = op.grid().radial_weights();
    sqrt_w_ = w.cwiseSqrt();
    inv_sqrt_w_ = sqrt_w_.cwiseInverse();
    eig_.resize(modes);
    kernel_.resize(modes);
    for (int j = 0; j < modes; ++j) kernel_[j] = op.lambda(j) == 0.0 && op.rho(j) == 0.0;
    parallel_for(modes, [&](int j) {
      const auto& t = op.tridiagonal(j);
      Eigen::VectorXd diag = -t.diag.cwiseProduct(inv_sqrt_w_).cwiseProduct(inv_sqrt_w_);
      Eigen::VectorXd off(t.off.size());
      for (Eigen::Index i = 0; i < off.size(); ++i) off(i) = -t.off(i) * inv_sqrt_w_(i) * inv_sqrt_w_(i + 1);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
      solver.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
      require(solver.info() == Eigen::Success, ErrorKind::LinearSolveFailure, "radial eigensolve failed");
      const double scale = solver.eigenvalues().cwiseAbs().maxCoeff();
      const double floor = -1e-12 * std::max(1.0, scale);
      require(solver.eigenvalues().minCoeff() >= floor, ErrorKind::LinearSolveFailure,
              "negative eigenvalue of -L_" + std::to_string(j) + ": inconsistent boundary assembly");
      eig_[j] = {solver.eigenvalues().cwiseMax(0.0), solver.eigenvectors()};
      // The smallest eigenvalue belongs to the constants.
      if (kernel_[j]) eig_[j].values(0) = 0.0;
    });
  }

  /// Eigenvalues of -L_j, ascending.
  const Eigen::VectorXd& eigenvalues(int j) const { return eig_.at(j).values; }

  /// (-L_j)^sigma v for every column of v.
  Eigen::MatrixXd apply_mode(int j, double sigma, const Eigen::MatrixXd& v) const {
    return apply_function(j, v, [sigma](double mu) { return mu > 0.0 ? std::pow(mu, sigma) : 0.0; });
  }

  /// f(-L_j) v for a scalar function f of the eigenvalues.
  template <class F>
  Eigen::MatrixXd apply_function(int j, const Eigen::MatrixXd& v, F&& f) const {
    const auto& e = eig_.at(j);
    Eigen::VectorXd fv(e.values.size());
    for (Eigen::Index i = 0; i < fv.size(); ++i) fv(i) = f(e.values(i));
    if (!kernel_[j]) {
      const Eigen::MatrixXd y = sqrt_w_.asDiagonal() * v;
      return inv_sqrt_w_.asDiagonal() * (e.vectors * (fv.asDiagonal() * (e.vectors.transpose() * y)));
    }
    // Constants are handled exactly: the weighted mean is removed before the transform
    // and comes back multiplied by f(0).
    const Eigen::VectorXd& w = op_->grid().radial_weights();
    const Eigen::RowVectorXd mean = (w.transpose() * v) / w.sum();
    const Eigen::MatrixXd y = sqrt_w_.asDiagonal() * (v - Eigen::VectorXd::Ones(v.rows()) * mean);
    fv(0) = 0.0;
    Eigen::MatrixXd z = inv_sqrt_w_.asDiagonal() * (e.vectors * (fv.asDiagonal() * (e.vectors.transpose() * y)));
    z -= Eigen::VectorXd::Ones(v.rows()) * ((w.transpose() * z) / w.sum());
    if (const double f0 = f(0.0); f0 != 0.0) z += Eigen::VectorXd::Ones(v.rows()) * (f0 * mean);
    return z;
  }

  /// (-Delta)^sigma applied to a physical field mode by mode.
  Eigen::MatrixXd apply(double sigma, const Eigen::MatrixXd& values) const {
    // Constants lie in the kernel; removing one first keeps a constant input exactly at 0.
    ModeCoefficients c = op_->to_modes(values.array() - values(0, 0));
    for (int j = 0; j < op_->mode_count(); ++j) c[j] = apply_mode(j, sigma, c[j]);
    return op_->from_modes(c);
  }

 private:
  struct Decomposition {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
  };
  const ConeLaplacian* op_;
  Eigen::VectorXd sqrt_w_, inv_sqrt_w_;
  std::vector<Decomposition> eig_;
  std::vector<char> kernel_;
};

inline ConeField fractional_apply(const FractionalPower& power, double sigma, const ConeField& u) {
  require(sigma > 0.0 && sigma <= 1.0, ErrorKind::InvalidArgument, "sigma must lie in (0, 1]");
  return ConeField(u.grid, power.apply(sigma, u.values));
}

}  // namespace conetool
