#pragma once

// Time stepping on the truncated cone.
//
// Heat       W(u' - u) = dt T u'                              per mode, tridiagonal
// PME        W(u' - u) = dt T (u'^m)                          physical, block tridiagonal
// FPME       u' - u    = -dt (-L)^sigma (u'^m)                per mode, frozen mobility
// CH         W(u' - u) = dt T mu,  mu = -W^{-1} T u' + f(u) + S (u' - u),  f = u^3 - u
// Yamabe     u' - u    = dt n u^{-4/(n-1)} L u' - dt (n-1)/4 u^{(n-5)/(n-1)} R
//
// Every conservative scheme finishes with u' = u + dt W^{-1} T (...), which is a
// discrete divergence, so the measure-weighted mass only moves by rounding.

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "conetool/errors.hpp"
#include "conetool/fractional.hpp"
#include "conetool/grid.hpp"
#include "conetool/linalg.hpp"

namespace conetool {

enum class Equation { Heat, Pme, Fpme, CahnHilliard, Yamabe };

inline std::string to_string(Equation e) {
  switch (e) {
    case Equation::Heat: return "heat";
    case Equation::Pme: return "pme";
    case Equation::Fpme: return "fpme";
    case Equation::CahnHilliard: return "cahn-hilliard";
    case Equation::Yamabe: return "yamabe";
  }
  return "unknown";
}

/// How the PME nonlinearity is treated in the implicit step.
enum class Linearization {
  Newton,             // fully implicit, Newton iteration to convergence
  NewtonOneStep,      // one Newton step from u_old (linearly implicit)
  FrozenCoefficient,  // u_old^{m-1} u_new inside the divergence
  VForm,              // v = u^m, v_t = m v^{(m-1)/m} Delta v (not conservative)
};

inline std::string to_string(Linearization l) {
  switch (l) {
    case Linearization::Newton: return "newton";
    case Linearization::NewtonOneStep: return "newton-one-step";
    case Linearization::FrozenCoefficient: return "frozen-coefficient";
    case Linearization::VForm: return "v-form";
  }
  return "unknown";
}

/// Right-hand side added to the equation: f(t, u) on the physical grid.
using Forcing = std::function<Eigen::MatrixXd(double, const Eigen::MatrixXd&)>;

struct SolverConfig {
  Equation equation = Equation::Heat;
  double m = 2.0;
  double sigma = 1.0;
  double dt = 1e-4;
  double t_end = 0.01;
  InnerBoundary inner = InnerBoundary::AsymptoticRobin;
  CrossDiscretization cross = CrossDiscretization::Spectral;
  Linearization linearization = Linearization::Newton;
  /// Linear stabilization S of the Cahn-Hilliard step; energy stable for S >= max|f'| / 2.
  double ch_stabilization = 1.0;
  /// Scalar curvature source for Yamabe, nx by ny; empty means zero.
  Eigen::MatrixXd yamabe_curvature;
  Forcing forcing;
  int newton_max_iterations = 50;
  double newton_tolerance = 1e-12;
  double blowup_threshold = 1e12;

  void validate() const {
    require(dt > 0.0 && std::isfinite(dt), ErrorKind::InvalidArgument, "dt must be positive");
    require(t_end > 0.0 && std::isfinite(t_end), ErrorKind::InvalidArgument, "t_end must be positive");
    if (equation == Equation::Pme || equation == Equation::Fpme)
      require(m > 0.0, ErrorKind::InvalidArgument, "the exponent m must be positive");
    if (equation == Equation::Fpme)
      require(sigma > 0.0 && sigma <= 1.0, ErrorKind::InvalidArgument, "sigma must lie in (0, 1]");
    if (equation == Equation::CahnHilliard)
      require(ch_stabilization >= 0.0, ErrorKind::InvalidArgument, "stabilization must be nonnegative");
    require(newton_max_iterations >= 1 && newton_tolerance > 0.0, ErrorKind::InvalidArgument,
            "invalid Newton controls");
  }
};

/// Signed power |u|^{m-1} u, which is u^m for positive u.
inline double signed_power(double u, double m) { return std::copysign(std::pow(std::abs(u), m), u); }

class Stepper {
 public:
  Stepper(std::shared_ptr<const ConeGrid> grid, SolverConfig cfg)
      : cfg_(std::move(cfg)), op_(std::move(grid), cfg_.inner, cfg_.cross) {
    cfg_.validate();
    const auto& s = op_.grid().spectrum();
    require(s.complete(), ErrorKind::InvalidArgument,
            "the solver needs a cross-section grid that resolves every mode (use the default grid size)");
    if (cfg_.equation != Equation::Heat)
      require(s.has_physical_grid(), ErrorKind::Unsupported,
              "nonlinear equations need a cross-section with a physical grid; custom spectra support heat only");
    if (cfg_.equation == Equation::Yamabe) {
      require(op_.grid().n() >= 2, ErrorKind::InvalidArgument, "the Yamabe flow needs n >= 2");
      if (cfg_.yamabe_curvature.size() > 0)
        require(cfg_.yamabe_curvature.rows() == nx() && cfg_.yamabe_curvature.cols() == ny(),
                ErrorKind::InvalidArgument, "curvature source has the wrong shape");
    }
    if (cfg_.equation == Equation::Fpme) power_.emplace(op_);
  }

  const SolverConfig& config() const { return cfg_; }
  const ConeLaplacian& laplacian() const { return op_; }
  std::shared_ptr<const ConeGrid> grid_ptr() const { return op_.grid_ptr(); }
  const FractionalPower* fractional() const { return power_ ? &*power_ : nullptr; }

  /// Precondition checks on the initial datum.
  void check_initial(const ConeField& u) const {
    require(u.values.rows() == nx() && u.values.cols() == ny(), ErrorKind::InvalidArgument,
            "initial field does not match the grid");
    require(u.values.allFinite(), ErrorKind::InvalidArgument, "initial field is not finite");
    if (needs_positive()) check_positive(u.values, "initial datum");
  }

  /// One step of size h (default cfg.dt) from time t.
  ConeField step(const ConeField& u, double t, double h = 0.0) const {
    if (h <= 0.0) h = cfg_.dt;
    Eigen::MatrixXd next;
    switch (cfg_.equation) {
      case Equation::Heat: next = step_heat(u.values, t, h); break;
      case Equation::Pme: next = step_pme(u.values, t, h); break;
      case Equation::Fpme: next = step_fpme(u.values, t, h); break;
      case Equation::CahnHilliard: next = step_ch(u.values, t, h); break;
      case Equation::Yamabe: next = step_yamabe(u.values, t, h); break;
    }
    require(next.allFinite(), ErrorKind::Blowup, "non-finite values at t = " + std::to_string(t + h));
    const double peak = next.cwiseAbs().maxCoeff();
    require(peak <= cfg_.blowup_threshold, ErrorKind::Blowup,
            "|u| reached " + std::to_string(peak) + " at t = " + std::to_string(t + h) + "; reduce dt");
    if (needs_positive()) check_positive(next, "solution at t = " + std::to_string(t + h));
    return ConeField(u.grid, std::move(next));
  }

 private:
  int nx() const { return op_.grid().nx(); }
  int ny() const { return op_.grid().ny(); }
  const Eigen::VectorXd& w() const { return op_.grid().radial_weights(); }

  bool needs_positive() const {
    return cfg_.equation == Equation::Pme || cfg_.equation == Equation::Yamabe ||
           (cfg_.equation == Equation::Fpme && cfg_.m < 1.0);
  }

  void check_positive(const Eigen::MatrixXd& v, const std::string& what) const {
    Eigen::Index i = 0, k = 0;
    const double lowest = v.minCoeff(&i, &k);
    if (lowest > 0.0) return;
    fail(ErrorKind::PositivityLoss, what + " is not strictly positive: " + std::to_string(lowest) +
                                        " at radial node " + std::to_string(i) + " (x = " +
                                        std::to_string(op_.grid().x()(i)) + "), cross node " + std::to_string(k));
  }

  Eigen::MatrixXd forcing(double t, const Eigen::MatrixXd& u) const {
    if (!cfg_.forcing) return Eigen::MatrixXd::Zero(u.rows(), u.cols());
    Eigen::MatrixXd f = cfg_.forcing(t, u);
    require(f.rows() == u.rows() && f.cols() == u.cols(), ErrorKind::InvalidArgument, "forcing has the wrong shape");
    return f;
  }

  // ---- heat ----

  Eigen::MatrixXd step_heat(const Eigen::MatrixXd& u, double t, double h) const {
    // Increment form (W - h T) d = h T u + h W f, so that T u = 0 gives d = 0 exactly.
    ModeCoefficients c = op_.to_modes(u);
    ModeCoefficients f = op_.to_modes(forcing(t, u));
    parallel_for(op_.mode_count(), [&](int j) {
      const auto& tri = op_.tridiagonal(j);
      const Eigen::VectorXd off = -h * tri.off;
      const Eigen::VectorXd diag = w() - h * tri.diag;
      const Eigen::MatrixXd rhs = h * (op_.apply_tridiagonal(j, c[j]) + w().asDiagonal() * f[j]);
      for (Eigen::Index col = 0; col < c[j].cols(); ++col)
        c[j].col(col) += solve_tridiagonal(off, diag, off, rhs.col(col));
    });
    return op_.from_modes(c);
  }

  // ---- physical block systems: rows are radial nodes, each block acts on the cross grid ----

  /// Blocks of T: diag_i = -(a_{i-1} + a_i) I + x_i^{n-1} cell_i Lambda - [i = 0] x_0^{n-1} R.
  BlockTridiagonal weighted_blocks() const {
    const auto& g = op_.grid();
    const int G = ny();
    const Eigen::VectorXd& a = g.conductance();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(G, G);
    BlockTridiagonal b;
    b.diag.resize(nx());
    b.sub.resize(nx() - 1);
    b.super.resize(nx() - 1);
    for (int i = 0; i < nx(); ++i) {
      double flux = 0.0;
      if (i > 0) flux += a(i - 1);
      if (i + 1 < nx()) flux += a(i);
      b.diag[i] = -flux * id + std::pow(g.x()(i), g.n() - 1) * g.cell(i) * op_.cross_matrix();
      if (i == 0) b.diag[i] -= std::pow(g.x()(0), g.n() - 1) * op_.robin_matrix();
      if (i + 1 < nx()) b.sub[i] = b.super[i] = a(i) * id;
    }
    return b;
  }

  /// Solve (diag(mass) - h T diag(mobility)) X = rhs, with mass and mobility nx by ny.
  Eigen::MatrixXd solve_mobility_system(const BlockTridiagonal& t, const Eigen::MatrixXd& mass,
                                        const Eigen::MatrixXd& mobility, double h,
                                        const Eigen::MatrixXd& rhs) const {
    BlockTridiagonal s;
    s.diag.resize(nx());
    s.sub.resize(nx() - 1);
    s.super.resize(nx() - 1);
    for (int i = 0; i < nx(); ++i) {
      s.diag[i] = -h * t.diag[i] * mobility.row(i).asDiagonal();
      s.diag[i].diagonal() += mass.row(i).transpose();
      if (i + 1 < nx()) {
        s.super[i] = -h * t.super[i] * mobility.row(i + 1).asDiagonal();
        s.sub[i] = -h * t.sub[i] * mobility.row(i).asDiagonal();
      }
    }
    return s.solve(rhs);
  }

  Eigen::MatrixXd weight_rows(const Eigen::MatrixXd& v) const { return w().asDiagonal() * v; }

  // ---- porous medium ----

  Eigen::MatrixXd step_pme(const Eigen::MatrixXd& u, double t, double h) const {
    const double m = cfg_.m;
    auto phi = [m](const Eigen::MatrixXd& v) { return v.unaryExpr([m](double s) { return std::pow(s, m); }).eval(); };
    auto dphi = [m](const Eigen::MatrixXd& v) {
      return v.unaryExpr([m](double s) { return m * std::pow(s, m - 1.0); }).eval();
    };
    const Eigen::MatrixXd f = forcing(t, u);
    const Eigen::MatrixXd src = u + h * f;
    const BlockTridiagonal blocks = weighted_blocks();
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(nx(), ny());
    const Eigen::MatrixXd mass = w() * Eigen::RowVectorXd::Ones(ny());

    // The linear variants solve for the increment d = u' - u so constant states stay exact.
    switch (cfg_.linearization) {
      case Linearization::FrozenCoefficient: {
        // W(u' - u) = h T (u^{m-1} u') + h W f
        const Eigen::MatrixXd mob = u.unaryExpr([m](double s) { return std::pow(s, m - 1.0); });
        const Eigen::MatrixXd rhs = h * (op_.apply_weighted(phi(u)) + weight_rows(f));
        return u + solve_mobility_system(blocks, mass, mob, h, rhs);
      }
      case Linearization::VForm: {
        // (W D^{-1} - h T) v' = W D^{-1} (v + h D f),  D = m v^{(m-1)/m} = m u^{m-1}
        const Eigen::MatrixXd d = dphi(u);
        const Eigen::MatrixXd v = phi(u);
        const Eigen::MatrixXd scaled = mass.cwiseQuotient(d);
        const Eigen::MatrixXd rhs = h * (op_.apply_weighted(v) + weight_rows(f));
        const Eigen::MatrixXd next = v + solve_mobility_system(blocks, scaled, ones, h, rhs);
        check_positive(next, "v = u^m");
        return next.unaryExpr([m](double s) { return std::pow(s, 1.0 / m); });
      }
      case Linearization::NewtonOneStep: {
        // (W - h T diag(m u^{m-1})) u' = W src + h T (u^m - m u^{m-1} u)
        const Eigen::MatrixXd rhs = h * (op_.apply_weighted(phi(u)) + weight_rows(f));
        return u + solve_mobility_system(blocks, mass, dphi(u), h, rhs);
      }
      case Linearization::Newton: break;
    }

    // Newton on F(U) = W(U - src) - h T phi(U), damped to stay positive.
    Eigen::MatrixXd current = u;
    bool converged = false;
    for (int it = 0; it < cfg_.newton_max_iterations; ++it) {
      const Eigen::MatrixXd residual = weight_rows(current - src) - h * op_.apply_weighted(phi(current));
      if (residual.cwiseAbs().maxCoeff() == 0.0) {
        converged = true;
        break;
      }
      const Eigen::MatrixXd delta = solve_mobility_system(blocks, mass, dphi(current), h, -residual);
      double alpha = 1.0;
      Eigen::MatrixXd trial = current + delta;
      while (trial.minCoeff() <= 0.0 && alpha > 1e-8) {
        alpha *= 0.5;
        trial = current + alpha * delta;
      }
      require(trial.minCoeff() > 0.0, ErrorKind::PositivityLoss, "Newton iterate lost positivity; reduce dt");
      current = trial;
      if (alpha == 1.0 &&
          delta.cwiseAbs().maxCoeff() <= cfg_.newton_tolerance * std::max(1.0, current.cwiseAbs().maxCoeff())) {
        converged = true;
        break;
      }
    }
    require(converged, ErrorKind::LinearSolveFailure,
            "Newton iteration for the porous medium step did not converge; reduce dt");
    // Conservative form of the converged step.
    return src + w().cwiseInverse().asDiagonal() * (h * op_.apply_weighted(phi(current)));
  }

  // ---- fractional porous medium ----

  Eigen::MatrixXd step_fpme(const Eigen::MatrixXd& u, double t, double h) const {
    const double m = cfg_.m, sigma = cfg_.sigma;
    const Eigen::MatrixXd phi = u.unaryExpr([m](double s) { return signed_power(s, m); });
    double kappa = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i)
      kappa = std::max(kappa, m * std::pow(std::abs(u(i)), m - 1.0));
    require(std::isfinite(kappa), ErrorKind::PositivityLoss, "mobility is unbounded; the solution touched 0");
    const Eigen::MatrixXd src = u + h * forcing(t, u);
    // (I + h kappa A) u' = src - h A (phi - kappa u), A = (-L)^sigma
    ModeCoefficients c = op_.to_modes(phi - kappa * u);
    ModeCoefficients s = op_.to_modes(src);
    const FractionalPower& p = *power_;
    parallel_for(op_.mode_count(), [&](int j) {
      const Eigen::MatrixXd explicit_part = s[j] - h * p.apply_mode(j, sigma, c[j]);
      c[j] = p.apply_function(j, explicit_part, [&](double mu) {
        return 1.0 / (1.0 + h * kappa * (mu > 0.0 ? std::pow(mu, sigma) : 0.0));
      });
    });
    const Eigen::MatrixXd next = op_.from_modes(c);
    // Conservative form: u' = src - h A (phi + kappa (u' - u)).
    return src - h * p.apply(sigma, phi + kappa * (next - u));
  }

  // ---- Cahn-Hilliard ----

  struct ChFactor {
    std::vector<std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>> modes;
  };

  const ChFactor& ch_factor(double h) const {
    auto it = ch_cache_.find(h);
    if (it != ch_cache_.end()) return it->second;
    ChFactor f;
    f.modes.resize(op_.mode_count());
    const double stab = cfg_.ch_stabilization;
    const Eigen::VectorXd inv_w = w().cwiseInverse();
    parallel_for(op_.mode_count(), [&](int j) {
      // M = W + h T W^{-1} T - h S T, symmetric positive definite and pentadiagonal.
      const auto& tri = op_.tridiagonal(j);
      Eigen::SparseMatrix<double> t(nx(), nx());
      std::vector<Eigen::Triplet<double>> entries;
      for (int i = 0; i < nx(); ++i) {
        entries.emplace_back(i, i, tri.diag(i));
        if (i + 1 < nx()) {
          entries.emplace_back(i, i + 1, tri.off(i));
          entries.emplace_back(i + 1, i, tri.off(i));
        }
      }
      t.setFromTriplets(entries.begin(), entries.end());
      Eigen::SparseMatrix<double> winv(nx(), nx());
      winv.reserve(Eigen::VectorXi::Constant(nx(), 1));
      for (int i = 0; i < nx(); ++i) winv.insert(i, i) = inv_w(i);
      Eigen::SparseMatrix<double> wm(nx(), nx());
      wm.reserve(Eigen::VectorXi::Constant(nx(), 1));
      for (int i = 0; i < nx(); ++i) wm.insert(i, i) = w()(i);
      const Eigen::SparseMatrix<double> sys = wm + h * (t * winv * t) - (h * stab) * t;
      auto solver = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(sys);
      require(solver->info() == Eigen::Success, ErrorKind::LinearSolveFailure, "Cahn-Hilliard factorization failed");
      f.modes[j] = std::move(solver);
    });
    return ch_cache_.emplace(h, std::move(f)).first->second;
  }

  Eigen::MatrixXd step_ch(const Eigen::MatrixXd& u, double t, double h) const {
    const double stab = cfg_.ch_stabilization;
    const Eigen::MatrixXd nonlinear = u.unaryExpr([](double s) { return s * s * s - s; });
    const Eigen::MatrixXd f = forcing(t, u);
    const ChFactor& factor = ch_factor(h);
    ModeCoefficients uc = op_.to_modes(u);
    ModeCoefficients gc = op_.to_modes(nonlinear - stab * u);
    ModeCoefficients fc = op_.to_modes(f);
    ModeCoefficients next(op_.mode_count());
    parallel_for(op_.mode_count(), [&](int j) {
      // M u' = W (u + h f) + h T (g),  g = f(u) - S u
      const Eigen::MatrixXd rhs = w().asDiagonal() * (uc[j] + h * fc[j]) + h * op_.apply_tridiagonal(j, gc[j]);
      Eigen::MatrixXd sol(nx(), rhs.cols());
      for (Eigen::Index col = 0; col < rhs.cols(); ++col) sol.col(col) = factor.modes[j]->solve(rhs.col(col));
      // Chemical potential, then the conservative update u' = u + h W^{-1} T mu.
      const Eigen::MatrixXd mu = -op_.apply_mode(j, sol) + gc[j] + stab * sol;
      next[j] = uc[j] + h * fc[j] + h * op_.apply_mode(j, mu);
    });
    return op_.from_modes(next);
  }

  // ---- Yamabe ----

  Eigen::MatrixXd step_yamabe(const Eigen::MatrixXd& u, double t, double h) const {
    const double n = op_.grid().n();
    const Eigen::MatrixXd d = u.unaryExpr([n](double s) { return n * std::pow(s, -4.0 / (n - 1.0)); });
    Eigen::MatrixXd src = u + h * forcing(t, u);
    if (cfg_.yamabe_curvature.size() > 0) {
      const Eigen::MatrixXd growth = u.unaryExpr([n](double s) { return std::pow(s, (n - 5.0) / (n - 1.0)); });
      src -= h * (n - 1.0) / 4.0 * growth.cwiseProduct(cfg_.yamabe_curvature);
    }
    // (W D^{-1} - h T) u' = W D^{-1} src, solved for the increment.
    const Eigen::MatrixXd scaled = (w() * Eigen::RowVectorXd::Ones(ny())).cwiseQuotient(d);
    const Eigen::MatrixXd rhs = scaled.cwiseProduct(src - u) + h * op_.apply_weighted(u);
    return u + solve_mobility_system(weighted_blocks(), scaled, Eigen::MatrixXd::Ones(nx(), ny()), h, rhs);
  }

  SolverConfig cfg_;
  ConeLaplacian op_;
  std::optional<FractionalPower> power_;
  mutable std::map<double, ChFactor> ch_cache_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<ConeField> states;
};

/// Observer called after every step with (step index, time, state).
using StepObserver = std::function<void(int, double, const ConeField&)>;

/// Number of steps to reach t_end; the last one is shortened if dt does not divide t_end.
inline int step_count(const SolverConfig& cfg) {
  const double ratio = cfg.t_end / cfg.dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) return static_cast<int>(rounded);
  return static_cast<int>(std::ceil(ratio));
}

/// Run from u0 to t_end, storing the initial state and every save_every-th step (and the last).
inline Trajectory run(const Stepper& stepper, const ConeField& u0, int save_every = 1,
                      const StepObserver& observer = {}) {
  require(save_every >= 1, ErrorKind::InvalidArgument, "save_every must be at least 1");
  stepper.check_initial(u0);
  const SolverConfig& cfg = stepper.config();
  const int steps = step_count(cfg);
  Trajectory out;
  out.times.push_back(0.0);
  out.states.push_back(u0);
  ConeField u = u0;
  double t = 0.0;
  for (int k = 1; k <= steps; ++k) {
    const double h = k < steps ? cfg.dt : cfg.t_end - (steps - 1) * cfg.dt;
    u = stepper.step(u, t, h);
    t = k < steps ? k * cfg.dt : cfg.t_end;
    if (observer) observer(k, t, u);
    if (k % save_every == 0 || k == steps) {
      out.times.push_back(t);
      out.states.push_back(u);
    }
  }
  return out;
}

}  // namespace conetool
