#pragma once

// Property suites behind `conetool verify`. Each check reports the measured value
// against its threshold; sizes are kept small so a suite runs in seconds.

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "conetool/diagnostics.hpp"
#include "conetool/fractional.hpp"
#include "conetool/mellin.hpp"
#include "conetool/solver.hpp"
#include "conetool/weights.hpp"

namespace conetool {

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

using Suite = std::function<std::vector<Check>(unsigned seed)>;

namespace verify_detail {

inline std::shared_ptr<const ConeGrid> make_grid(const CrossSectionSpec& spec, int modes, double x_min, int nx) {
  return std::make_shared<const ConeGrid>(std::make_shared<const CrossSectionSpectrum>(build_cross_section(spec, modes)),
                                          x_min, nx);
}

inline std::string format_m(double v) {
  std::ostringstream o;
  o << v;
  return o.str();
}

inline Check below(std::string name, double value, double threshold, std::string detail = "") {
  return {std::move(name), value < threshold, value, threshold, std::move(detail)};
}

inline Check above(std::string name, double value, double threshold, std::string detail = "") {
  return {std::move(name), value > threshold, value, threshold, std::move(detail)};
}

inline std::string label(const CrossSectionSpec& s) {
  if (s.kind == CrossSectionKind::Circle) {
    std::ostringstream o;
    o << "circle l=" << s.scale;
    return o.str();
  }
  return "sphere n=" + std::to_string(s.dim);
}

inline Eigen::MatrixXd random_field(const ConeGrid& g, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::MatrixXd v(g.nx(), g.ny());
  for (int i = 0; i < g.nx(); ++i)
    for (int k = 0; k < g.ny(); ++k) v(i, k) = dist(rng);
  return v;
}

/// 1 + a sum_j x^{2+j} c_j Y_j-like profile, smooth at the tip.
inline ConeField smooth_field(std::shared_ptr<const ConeGrid> g, double base, double amplitude, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const auto& sp = g->spectrum();
  Eigen::MatrixXd v = Eigen::MatrixXd::Constant(g->nx(), g->ny(), base);
  for (int j = 0; j < sp.mode_count(); ++j) {
    const Eigen::VectorXd shape = sp.basis(j) * Eigen::VectorXd::NullaryExpr(sp.basis_size(j), [&] { return dist(rng); });
    const double scale = amplitude / std::max(1e-300, shape.cwiseAbs().maxCoeff()) / (1.0 + j);
    for (int i = 0; i < g->nx(); ++i) v.row(i) += scale * std::pow(g->x()(i), 2.0 + j) * shape.transpose();
  }
  return ConeField(g, v);
}

inline SolverConfig config(Equation e, double m, double dt, double t_end) {
  SolverConfig c;
  c.equation = e;
  c.m = m;
  c.dt = dt;
  c.t_end = t_end;
  return c;
}

inline std::vector<CrossSectionSpec> spectra() {
  std::vector<CrossSectionSpec> out;
  for (double l : {0.5, 0.75, 1.0, 1.5, 2.0, 3.0}) out.push_back(CrossSectionSpec::circle(l));
  for (int n : {2, 3, 4, 5}) out.push_back(CrossSectionSpec::sphere(n));
  return out;
}

}  // namespace verify_detail

inline std::vector<Check> verify_poles(unsigned) {
  using namespace verify_detail;
  std::vector<Check> out;
  std::vector<CrossSectionSpec> specs;
  for (double l : {0.5, 1.0, 2.0, 3.0}) specs.push_back(CrossSectionSpec::circle(l));
  for (int n : {2, 3, 4}) specs.push_back(CrossSectionSpec::sphere(n));
  for (const auto& spec : specs) {
    const MellinSymbol sym(build_cross_section(spec, 12));
    double residual = 0.0, symmetry = 0.0, sphere_gap = 0.0;
    for (int j = 0; j < sym.mode_count(); ++j) {
      const ModeRoots r = sym.roots(j);
      for (double q : {r.q_minus, r.q_plus})
        residual = std::max(residual, std::abs(q * q - (sym.n() - 1) * q + r.lambda) / std::max(1.0, std::abs(r.lambda)));
      symmetry = std::max(symmetry, std::abs(r.q_minus + r.q_plus - (sym.n() - 1)));
      if (spec.kind == CrossSectionKind::Sphere) sphere_gap = std::max(sphere_gap, std::abs(r.q_minus + j));
    }
    out.push_back(below(label(spec) + ": indicial residual", residual, 1e-12));
    out.push_back(below(label(spec) + ": q+ + q- = n - 1", symmetry, 1e-12));
    if (spec.kind == CrossSectionKind::Sphere) out.push_back(below(label(spec) + ": q_j^- = -j", sphere_gap, 1e-10));
  }
  int bad = 0;
  for (int k = 0; k < 20; ++k) {
    const double l = 0.25 + 0.25 * k;
    const PoleLattice lat = MellinSymbol(build_cross_section(CrossSectionSpec::circle(l), 32)).poles({-4, 4});
    int doubles = 0;
    bool zero = false;
    for (const auto& p : lat.poles) {
      doubles += p.order == 2;
      zero = zero || (p.order == 2 && std::abs(p.q) < 1e-12);
    }
    bad += !(doubles == 1 && zero);
  }
  out.push_back(below("n=1: one double pole at 0 over 20 scales (failures)", bad, 0.5));
  return out;
}

inline std::vector<Check> verify_windows(unsigned) {
  using namespace verify_detail;
  std::vector<Check> out;
  const MellinSymbol s2(build_cross_section(CrossSectionSpec::sphere(2), 12));
  const GammaWindow w = gamma_window(s2.poles({-6, 6}), 2, WindowMode::MaximalAsymptotics);
  const double gap = w.intervals.size() == 1 ? std::max(std::abs(w.intervals[0].lo - 0.5), std::abs(w.intervals[0].hi - 1.5))
                                             : 1.0;
  out.push_back(below("sphere n=2 max-asymptotics window = (0.5, 1.5)", gap, 1e-9));
  for (const auto& spec : spectra()) {
    const MellinSymbol sym(build_cross_section(spec, 40));
    const PoleLattice lat = sym.poles({-7, 7});
    int hits = 0, samples = 0;
    for (auto mode : {WindowMode::ShortTimePme, WindowMode::MaximalAsymptotics, WindowMode::TipAsymptotics,
                      WindowMode::CahnHilliard})
      for (const auto& iv : gamma_window(lat, sym.n(), mode).intervals)
        for (int k = 1; k <= 1000; ++k) {
          const double g = iv.lo + (iv.hi - iv.lo) * k / 1001.0;
          ++samples;
          hits += !is_elliptic_on_line(sym, g).elliptic || !is_elliptic_on_line(sym, g + 2.0).elliptic;
        }
    out.push_back(below(label(spec) + ": pole-hitting samples among " + std::to_string(samples), hits, 0.5));
  }
  return out;
}

inline std::vector<Check> verify_hinfty(unsigned) {
  using namespace verify_detail;
  std::vector<Check> out;
  for (const auto& spec : spectra()) {
    const CrossSectionSpectrum sp = build_cross_section(spec, 40);
    const MellinSymbol sym(sp);
    const PoleLattice lat = sym.poles({-7, 7});
    int presets = 0, preset_fail = 0, perturbed = 0, perturbed_ok = 0;
    for (auto [mode, preset] : {std::pair{WindowMode::ShortTimePme, DomainPreset::ConstantsOnly},
                                std::pair{WindowMode::MaximalAsymptotics, DomainPreset::AllDecaying}}) {
      const GammaWindow w = gamma_window(lat, sp.dim(), mode);
      if (preset == DomainPreset::AllDecaying && w.k == 0) continue;
      for (const auto& iv : w.intervals)
        for (double fraction : {0.1, 0.5, 0.9}) {
          WeightConfig cfg;
          cfg.n = sp.dim();
          cfg.gamma = iv.lo + fraction * (iv.hi - iv.lo);
          const DomainSpec d = build_domain(sym, cfg, DomainFlavor::Custom, preset);
          ++presets;
          preset_fail += !check_hinfty_admissible(d, cfg, lat).admissible;
          WeightConfig mirror = cfg;
          mirror.gamma = -cfg.gamma;
          const Interval a = interval_for(cfg, 2), b = interval_for(mirror, 2);
          for (const auto& p : lat.poles) {
            if (p.sign() == RootSign::Minus || !a.contains_open(p.q) || !b.contains_open(p.q)) continue;
            DomainSpec bad = d;
            for (int m : p.modes()) bad.selected.push_back({p.q, m, 0, full_dimension(lat, m, 0), RootSign::Plus, 0});
            const HinftyVerdict v = check_hinfty_admissible(bad, cfg, lat);
            ++perturbed;
            perturbed_ok += !v.admissible && v.condition("i") && !v.condition("i")->pass;
          }
        }
    }
    out.push_back(below(label(spec) + ": presets rejected out of " + std::to_string(presets), preset_fail, 0.5));
    out.push_back(below(label(spec) + ": perturbations passing (i) out of " + std::to_string(perturbed),
                        perturbed - perturbed_ok, 0.5));
  }
  return out;
}

inline std::vector<Check> verify_conservation(unsigned seed) {
  using namespace verify_detail;
  std::vector<Check> out;
  std::mt19937_64 rng(seed);
  auto g = make_grid(CrossSectionSpec::circle(1.0), 4, 1e-2, 64);
  for (double m : {0.5, 2.0, 3.0}) {
    Stepper s(g, config(Equation::Pme, m, 1e-3, 0.2));
    const ConeField u0(g, random_field(*g, 0.5, 1.5, rng));
    const ConeField u = run(s, u0, 1000000).states.back();
    const double drift = std::abs(mass(u) - mass(u0)) / std::abs(mass(u0));
    out.push_back(below("PME m=" + format_m(m) + ": relative mass drift over 200 steps", drift, 1e-9));
  }
  SolverConfig ch = config(Equation::CahnHilliard, 1.0, 1e-4, 0.02);
  Stepper s(g, ch);
  Eigen::MatrixXd v = random_field(*g, -0.5, 0.5, rng);
  const ConeField u0(g, v);
  const ConeField u = run(s, u0, 1000000).states.back();
  const double scale = (g->measure_weights().array() * u0.values.array().abs()).sum();
  out.push_back(below("Cahn-Hilliard: mass drift / mass of |u0| over 200 steps", std::abs(mass(u) - mass(u0)) / scale, 1e-9));
  return out;
}

inline std::vector<Check> verify_comparison(unsigned seed) {
  using namespace verify_detail;
  std::vector<Check> out;
  std::mt19937_64 rng(seed);
  auto g = make_grid(CrossSectionSpec::circle(1.0), 4, 1e-2, 32);
  SolverConfig cfg = config(Equation::Pme, 2.0, 1e-3, 0.05);
  cfg.inner = InnerBoundary::NeumannTau;
  cfg.cross = CrossDiscretization::SecondDifference;
  Stepper s(g, cfg);
  int failures = 0, bound_failures = 0;
  double worst = -1.0;
  for (int pair = 0; pair < 5; ++pair) {
    const Eigen::MatrixXd a = random_field(*g, 0.3, 1.2, rng);
    const Eigen::MatrixXd b = a + random_field(*g, 0.0, 0.6, rng);
    const Trajectory u = run(s, ConeField(g, a)), v = run(s, ConeField(g, b));
    const ComparisonVerdict c = comparison_check(u, v, 1e-8);
    failures += !(c.precondition && c.pass);
    worst = std::max(worst, c.worst);
    for (const auto* t : {&u, &v}) {
      const double lo = t->states.front().min(), hi = t->states.front().max();
      for (const auto& st : t->states) bound_failures += st.min() < lo - 1e-8 || st.max() > hi + 1e-8;
    }
  }
  out.push_back(below("5 ordered pairs violating u <= v + 1e-8", failures, 0.5, "worst max(u - v) = " + std::to_string(worst)));
  out.push_back(below("states leaving [min u0, max u0] by more than 1e-8", bound_failures, 0.5));
  return out;
}

inline std::vector<Check> verify_exponents(unsigned) {
  using namespace verify_detail;
  std::vector<Check> out;
  for (bool sphere : {false, true}) {
    const CrossSectionSpec spec = sphere ? CrossSectionSpec::sphere(2) : CrossSectionSpec::circle(2.0);
    auto g = make_grid(spec, 3, 1e-3, 256);
    Stepper s(g, config(Equation::Pme, 2.0, 1e-4, 0.05));
    const Eigen::VectorXd y = g->spectrum().basis(1).col(0) / g->spectrum().basis(1).col(0).cwiseAbs().maxCoeff();
    Eigen::MatrixXd v = Eigen::MatrixXd::Ones(g->nx(), g->ny());
    for (int i = 0; i < g->nx(); ++i) v.row(i) += 0.1 * std::exp(-1.0 / g->x()(i)) * y.transpose();
    const ConeField u = run(s, ConeField(g, v), 1000000).states.back();
    const auto [lo, hi] = default_fit_window(1e-3);
    const TipFit fit = fit_tip_exponent(s.laplacian(), u, 1, lo, hi);
    out.push_back(below(label(spec) + ": mode 1 slope vs " + format_m(fit.predicted) + " (relative error)",
                        fit.relative_error(), 0.1, "slope " + std::to_string(fit.slope)));
  }
  return out;
}

inline std::vector<Check> verify_fractional(unsigned seed) {
  using namespace verify_detail;
  std::vector<Check> out;
  std::mt19937_64 rng(seed);
  auto g = make_grid(CrossSectionSpec::circle(2.0), 3, 1e-3, 96);
  ConeLaplacian op(g);
  FractionalPower power(op);
  const Eigen::MatrixXd u = random_field(*g, -1.0, 1.0, rng);
  const Eigen::MatrixXd minus_lu = -op.apply(u);
  const double scale = minus_lu.cwiseAbs().maxCoeff();
  out.push_back(below("power 1 equals -Laplacian (relative max error)",
                      (power.apply(1.0, u) - minus_lu).cwiseAbs().maxCoeff() / scale, 1e-10));
  out.push_back(below("half power applied twice (relative max error)",
                      (power.apply(0.5, power.apply(0.5, u)) - minus_lu).cwiseAbs().maxCoeff() / scale, 1e-8));
  auto gf = make_grid(CrossSectionSpec::circle(1.0), 3, 1e-2, 48);
  SolverConfig cfg = config(Equation::Fpme, 2.0, 1e-3, 0.1);
  cfg.sigma = 0.5;
  Stepper s(gf, cfg);
  const ConeField u0(gf, random_field(*gf, 0.5, 1.5, rng));
  const ConeField end = run(s, u0, 1000000).states.back();
  out.push_back(below("FPME sigma=0.5: relative mass drift over 100 steps", std::abs(mass(end) - mass(u0)) / mass(u0), 1e-9));
  return out;
}

inline std::vector<Check> verify_weakform(unsigned seed) {
  using namespace verify_detail;
  std::vector<Check> out;
  const SpatialTest eta{
      [](double x, double y) { return (1 + 0.5 * std::cos(y)) * std::pow(std::cos(std::numbers::pi * x), 2); },
      [](double x, double y) { return -(1 + 0.5 * std::cos(y)) * std::numbers::pi * std::sin(2 * std::numbers::pi * x); }};
  std::vector<double> residual, constant;
  for (int level = 0; level < 3; ++level) {
    // dtau and dt halved together.
    auto g = make_grid(CrossSectionSpec::circle(1.0), 3, 1e-2, (32 << level) + 1);
    Stepper s(g, config(Equation::Pme, 2.0, 4e-3 / (1 << level), 0.05));
    std::mt19937_64 rng(seed);
    const Trajectory t = run(s, smooth_field(g, 1.0, 0.5, rng));
    residual.push_back(std::abs(weak_residual(s.laplacian(), t, 2.0, eta)));
    constant.push_back(std::abs(weak_residual(s.laplacian(), t, 2.0, eta, TimeInterpolant::PiecewiseConstant)));
  }
  for (int k = 0; k + 1 < 3; ++k)
    out.push_back(above("observed order, levels " + std::to_string(k) + "->" + std::to_string(k + 1),
                        std::log2(residual[k] / residual[k + 1]), 1.0,
                        "residuals " + format_m(residual[k]) + " -> " + format_m(residual[k + 1]) +
                            "; piecewise-constant u: order " + format_m(std::log2(constant[k] / constant[k + 1]))));
  return out;
}

inline const std::vector<std::pair<std::string, Suite>>& verify_suites() {
  static const std::vector<std::pair<std::string, Suite>> suites{
      {"poles", verify_poles},           {"windows", verify_windows},     {"hinfty", verify_hinfty},
      {"conservation", verify_conservation}, {"comparison", verify_comparison}, {"exponents", verify_exponents},
      {"fractional", verify_fractional}, {"weakform", verify_weakform}};
  return suites;
}

}  // namespace conetool
