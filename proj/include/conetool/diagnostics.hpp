#pragma once

// Quadratures and checks on solver output.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conetool/errors.hpp"
#include "conetool/grid.hpp"
#include "conetool/mellin.hpp"
#include "conetool/solver.hpp"

namespace conetool {

/// Measure-weighted integral of u over the truncated cone.
inline double mass(const ConeField& u) { return (u.grid->measure_weights().array() * u.values.array()).sum(); }

/// Discrete Dirichlet form -(u, L u): the gradient energy of the operator's realization,
/// including the Robin boundary term.
inline double dirichlet_energy(const ConeLaplacian& op, const ConeField& u) {
  const ModeCoefficients c = op.to_modes(u.values);
  double total = 0.0;
  for (int j = 0; j < op.mode_count(); ++j) total -= (c[j].array() * op.apply_tridiagonal(j, c[j]).array()).sum();
  return total;
}

/// Cahn-Hilliard energy 1/2 |grad u|^2 + 1/4 (u^2 - 1)^2.
inline double energy_phi(const ConeLaplacian& op, const ConeField& u) {
  const Eigen::ArrayXXd well = (u.values.array().square() - 1.0).square();
  return 0.5 * dirichlet_energy(op, u) + 0.25 * (u.grid->measure_weights().array() * well).sum();
}

/// Cone Sobolev norm with weight gamma for s in {0, 1}:
///   s = 0: |x^{(n+1)/2 - gamma} u|_{L^2(dx/x dy)}
///   s = 1: adds x d_x u and the cross-section gradient under the same weight.
inline double weighted_norm(const ConeLaplacian& op, const ConeField& u, double gamma, int s) {
  require(s == 0 || s == 1, ErrorKind::InvalidArgument, "weighted_norm supports s = 0 or s = 1");
  const ConeGrid& g = *u.grid;
  const double c = 0.5 * (g.n() + 1) - gamma;
  const Eigen::VectorXd& wy = g.spectrum().weights();
  double total = 0.0;
  for (int i = 0; i < g.nx(); ++i)
    total += std::exp(2.0 * c * g.tau()(i)) * g.cell(i) * (u.values.row(i).array().square() * wy.transpose().array()).sum();
  if (s == 1) {
    for (int i = 0; i + 1 < g.nx(); ++i) {
      const Eigen::RowVectorXd d = (u.values.row(i + 1) - u.values.row(i)) / g.dtau();
      total += std::exp(2.0 * c * (g.tau()(i) + 0.5 * g.dtau())) * g.dtau() *
               (d.array().square() * wy.transpose().array()).sum();
    }
    const ModeCoefficients m = op.to_modes(u.values);
    for (int j = 0; j < op.mode_count(); ++j)
      for (int i = 0; i < g.nx(); ++i)
        total -= op.lambda(j) * std::exp(2.0 * c * g.tau()(i)) * g.cell(i) * m[j].row(i).squaredNorm();
  }
  return std::sqrt(total);
}

struct ComparisonVerdict {
  bool precondition = true;  // u_0 <= v_0 held
  bool pass = true;          // u <= v + tol at every stored time
  double worst = 0.0;        // max over times of max(u - v)
  int worst_index = 0;
  std::string message;
};

/// Pointwise ordering of two trajectories stored at the same times.
inline ComparisonVerdict comparison_check(const Trajectory& u, const Trajectory& v, double tol) {
  require(u.states.size() == v.states.size() && !u.states.empty(), ErrorKind::InvalidArgument,
          "trajectories must store the same number of states");
  ComparisonVerdict out;
  out.worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < u.states.size(); ++k) {
    require(u.states[k].values.rows() == v.states[k].values.rows() &&
                u.states[k].values.cols() == v.states[k].values.cols(),
            ErrorKind::InvalidArgument, "trajectories live on different grids");
    const double gap = (u.states[k].values - v.states[k].values).maxCoeff();
    if (k == 0 && gap > 0.0) {
      out.precondition = false;
      out.pass = false;
      out.worst = gap;
      out.message = "initial data are not ordered: max(u0 - v0) = " + std::to_string(gap);
      return out;
    }
    if (gap > out.worst) {
      out.worst = gap;
      out.worst_index = static_cast<int>(k);
    }
  }
  out.pass = out.worst <= tol;
  if (!out.pass) out.message = "ordering violated by " + std::to_string(out.worst);
  return out;
}

struct TipFit {
  int mode = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double standard_error = 0.0;  // of the slope
  double predicted = 0.0;       // -q_j^-
  int points = 0;
  double relative_error() const {
    return predicted != 0.0 ? std::abs(slope - predicted) / std::abs(predicted) : std::abs(slope);
  }
};

/// Default fit window [3 x_min, 100 x_min], capped at x = 0.5.
inline std::pair<double, double> default_fit_window(double x_min) {
  return {3.0 * x_min, std::min(100.0 * x_min, 0.5)};
}

/// Least-squares slope of ln |amplitude| against ln x over [lo, hi]; mode and
/// predicted are left for the caller.
inline TipFit fit_log_slope(const Eigen::VectorXd& x, const Eigen::VectorXd& amplitude, double lo, double hi) {
  require(lo > 0.0 && hi > lo, ErrorKind::InvalidArgument, "fit window must satisfy 0 < lo < hi");
  require(x.size() == amplitude.size(), ErrorKind::InvalidArgument, "abscissae and amplitudes differ in length");
  std::vector<double> lx, ly;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) < lo * (1 - 1e-12) || x(i) > hi * (1 + 1e-12)) continue;
    const double a = std::abs(amplitude(i));
    require(a >= 1e-13, ErrorKind::NoSignal,
            "coefficient " + std::to_string(a) + " at x = " + std::to_string(x(i)) + " is below 1e-13");
    lx.push_back(std::log(x(i)));
    ly.push_back(std::log(a));
  }
  require(lx.size() >= 3, ErrorKind::UnderResolved, "fewer than three radial nodes in the fit window");
  const Eigen::Index k = static_cast<Eigen::Index>(lx.size());
  Eigen::MatrixXd a(k, 2);
  Eigen::VectorXd b(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    a(i, 0) = lx[i];
    a(i, 1) = 1.0;
    b(i) = ly[i];
  }
  const Eigen::Vector2d sol = a.colPivHouseholderQr().solve(b);
  TipFit fit;
  fit.slope = sol(0);
  fit.intercept = sol(1);
  fit.points = static_cast<int>(k);
  const double rss = (a * sol - b).squaredNorm();
  const double mean = a.col(0).mean();
  const double sxx = (a.col(0).array() - mean).square().sum();
  fit.standard_error = k > 2 && sxx > 0.0 ? std::sqrt(rss / (k - 2) / sxx) : 0.0;
  return fit;
}

/// Size of the mode-j coefficient at each radial node (norm over the eigenspace basis).
inline Eigen::VectorXd mode_amplitude(const ConeLaplacian& op, const ConeField& u, int j) {
  require(j >= 0 && j < op.mode_count(), ErrorKind::OutOfRange, "mode index out of range");
  return op.to_modes(u.values)[j].rowwise().norm();
}

/// Least-squares slope of ln |pi_j u(x)| against ln x over [lo, hi].
inline TipFit fit_tip_exponent(const ConeLaplacian& op, const ConeField& u, int j, double lo, double hi) {
  TipFit fit;
  try {
    fit = fit_log_slope(u.grid->x(), mode_amplitude(op, u, j), lo, hi);
  } catch (const ConeError& e) {
    if (e.kind() != ErrorKind::NoSignal) throw;
    const std::string what = e.what();
    fail(ErrorKind::NoSignal, "mode " + std::to_string(j) + " " + what.substr(what.find(':') + 2));
  }
  fit.mode = j;
  fit.predicted = 0.0 - indicial_roots(u.grid->n(), j, op.lambda(j)).q_minus;
  return fit;
}

/// Spatial part eta(x, y) of the test function psi(t) = (1 - t / T) eta, with d_x eta.
struct SpatialTest {
  std::function<double(double, double)> value;
  std::function<double(double, double)> dx;
};

enum class TimeInterpolant {
  Rothe,           // u^m piecewise constant, u piecewise linear
  PiecewiseConstant,
};

/// Residual of the weak porous medium identity
///   int_0^T [ <grad psi, grad u^m> - (d_t psi) u ] - (psi(0), u_0) = 0
/// for psi = (1 - t / T) eta, integrated exactly in time for the chosen interpolant of
/// the stored states. Radial gradients of psi are exact at the faces; the cross-section
/// and inner-boundary terms use the operator's realization.
/// The trajectory must store every step.
inline double weak_residual(const ConeLaplacian& op, const Trajectory& traj, double m, const SpatialTest& eta,
                            TimeInterpolant interpolant = TimeInterpolant::Rothe) {
  require(traj.states.size() >= 2, ErrorKind::InvalidArgument, "trajectory needs at least two states");
  const ConeGrid& g = op.grid();
  const int nx = g.nx(), ny = g.ny();
  const Eigen::VectorXd& wy = g.spectrum().weights();
  const Eigen::VectorXd& nodes = g.spectrum().nodes();
  Eigen::MatrixXd psi(nx, ny);
  for (int i = 0; i < nx; ++i)
    for (int k = 0; k < ny; ++k) psi(i, k) = eta.value(g.x()(i), nodes(k));
  Eigen::MatrixXd dpsi(nx - 1, ny);
  for (int i = 0; i + 1 < nx; ++i)
    for (int k = 0; k < ny; ++k) dpsi(i, k) = eta.dx(g.face_x(i), nodes(k));
  const Eigen::MatrixXd mw = g.measure_weights();

  auto gradient_pairing = [&](const Eigen::MatrixXd& v) {
    double total = 0.0;
    for (int i = 0; i + 1 < nx; ++i) {
      const double xf = g.face_x(i);
      total += std::pow(xf, g.n()) * ((dpsi.row(i).array() * (v.row(i + 1) - v.row(i)).array()) *
                                      wy.transpose().array()).sum();
    }
    // Cross-section and Robin parts: the reaction terms of -T, applied with constants removed.
    const Eigen::MatrixXd shifted = v - v.col(0).replicate(1, ny);
    const Eigen::MatrixXd cross = shifted * op.cross_matrix().transpose();
    for (int i = 0; i < nx; ++i)
      total -= std::pow(g.x()(i), g.n() - 1) * g.cell(i) *
               ((psi.row(i).array() * cross.row(i).array()) * wy.transpose().array()).sum();
    const Eigen::RowVectorXd robin = shifted.row(0) * op.robin_matrix().transpose();
    total += std::pow(g.x()(0), g.n() - 1) * ((psi.row(0).array() * robin.array()) * wy.transpose().array()).sum();
    return total;
  };

  const double t_end = traj.times.back();
  require(t_end > 0.0, ErrorKind::InvalidArgument, "trajectory must advance in time");
  double residual = -(psi.array() * traj.states[0].values.array() * mw.array()).sum();
  for (std::size_t k = 1; k < traj.states.size(); ++k) {
    const double dt = traj.times[k] - traj.times[k - 1];
    const double mid = 0.5 * (traj.times[k] + traj.times[k - 1]);
    const Eigen::MatrixXd& u = traj.states[k].values;
    const Eigen::MatrixXd v = u.unaryExpr([m](double s) { return signed_power(s, m); });
    const Eigen::MatrixXd avg =
        interpolant == TimeInterpolant::Rothe ? Eigen::MatrixXd(0.5 * (u + traj.states[k - 1].values)) : u;
    residual += dt * ((1.0 - mid / t_end) * gradient_pairing(v) +
                      (psi.array() * avg.array() * mw.array()).sum() / t_end);
  }
  return residual;
}

}  // namespace conetool
