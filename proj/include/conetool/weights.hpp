#pragma once

// Weight windows, asymptotics spaces, closed-extension domains and the
// admissibility test for a bounded H-infinity calculus of c - Delta.
//
// Conventions: for a weight gamma the "line" is c = (n+1)/2 - gamma. The
// Laplacian's window is I_gamma = (c - 2, c), the bilaplacian's J_gamma = (c - 4, c).
// A function omega(x) x^{-q} e(y) lies in the weighted space of weight gamma
// exactly when q < c.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "conetool/errors.hpp"
#include "conetool/mellin.hpp"

namespace conetool {

struct WeightConfig {
  int n = 1;
  double s = 0.0;
  double gamma = 0.0;
  double p = 2.0;
  double q = 2.0;
  bool h_x_dependent = false;

  double line() const { return 0.5 * (n + 1) - gamma; }
};

inline Interval interval_for(const WeightConfig& config, int mu) {
  require(mu == 2 || mu == 4, ErrorKind::InvalidArgument, "order must be 2 or 4");
  const double c = config.line();
  return {c - mu, c};
}

/// omega(x) x^{-q} ln^k(x) e(y) belongs to the weight-gamma space iff q < (n+1)/2 - gamma.
/// Exponents within kPoleTol of the line count as on it.
inline bool membership_x_power(double q_loc, int k, double gamma, int n) {
  require(k >= 0, ErrorKind::InvalidArgument, "log power must be nonnegative");
  return q_loc < 0.5 * (n + 1) - gamma - kPoleTol;
}

struct AsymptoticsSpace {
  double q_loc = 0.0;
  int mode = 0;
  int log_power = 0;
  int dimension = 1;
  RootSign sign = RootSign::Minus;
  int shift = 0;
};

/// Full dimension of the space a pole contributes for one mode.
inline int full_dimension(const PoleLattice& lattice, int mode, int log_power) {
  return lattice.modes.at(mode).multiplicity * (log_power + 1);
}

inline std::vector<AsymptoticsSpace> asymptotics_in_window(const PoleLattice& lattice, const Interval& window) {
  require(lattice.covers(window), ErrorKind::UnderResolved, "pole lattice does not cover the window");
  std::vector<AsymptoticsSpace> out;
  for (const auto& pole : lattice.poles) {
    if (window.near_endpoint(pole.q))
      fail(ErrorKind::WeightOnPole, "pole " + std::to_string(pole.q) + " sits on a window endpoint");
    if (!window.contains_open(pole.q)) continue;
    for (int mode : pole.modes()) {
      AsymptoticsSpace space;
      space.q_loc = pole.q;
      space.mode = mode;
      space.log_power = pole.mode_order(mode) - 1;
      space.dimension = full_dimension(lattice, mode, space.log_power);
      bool plus = false, minus = false;
      for (const auto& c : pole.contributions)
        if (c.mode == mode) {
          (c.sign == RootSign::Plus ? plus : minus) = true;
          space.shift = std::max(space.shift, c.shift);
        }
      space.sign = plus && minus ? RootSign::Both : (plus ? RootSign::Plus : RootSign::Minus);
      out.push_back(space);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Admissible weight windows

enum class WindowMode {
  ShortTimePme,        // max{-2, q_1^-} < c - 2 < 0
  MaximalAsymptotics,  // -2 < c - 2 < q_k^-, c != q_j^+
  TipAsymptotics,      // same inequalities, used for the tip-asymptotics domain
  CahnHilliard,        // as ShortTimePme, plus c - 4 != q_j^-
};

inline std::string to_string(WindowMode mode) {
  switch (mode) {
    case WindowMode::ShortTimePme: return "short-time-pme";
    case WindowMode::MaximalAsymptotics: return "max-asymptotics";
    case WindowMode::TipAsymptotics: return "tip-asymptotics";
    case WindowMode::CahnHilliard: return "cahn-hilliard";
  }
  return "unknown";
}

struct GammaWindow {
  WindowMode mode = WindowMode::ShortTimePme;
  int k = 0;                        // largest j with q_j^- > -2
  Interval base;                    // gamma range before pole removal
  std::vector<Interval> intervals;  // open gamma intervals
  std::vector<double> excluded;     // gamma values removed from `base`
  bool empty = true;

  bool contains(double gamma, double tol = kPoleTol) const {
    for (const auto& iv : intervals)
      if (iv.contains_open(gamma, tol)) return true;
    return false;
  }
};

/// Largest j with q_j^- > -2.
inline int decaying_count(const PoleLattice& lattice) {
  int k = 0;
  for (const auto& m : lattice.modes)
    if (m.j > 0 && m.q_minus > -2.0 + kPoleTol) k = std::max(k, m.j);
  return k;
}

namespace detail {

// Split the gamma range solving lo < c - 2 < hi at every gamma where c, c - 2 (and,
// when asked, c - 4 against a minus root) meets a pole.
inline GammaWindow split_window(const PoleLattice& lattice, int n, WindowMode mode, Interval t) {
  require(lattice.order == SymbolOrder::Laplacian, ErrorKind::InvalidArgument,
          "weight windows are read off the Laplacian's pole lattice");
  require(lattice.covers({-4.0, 2.0}), ErrorKind::UnderResolved, "pole lattice must cover [-4, 2]");
  GammaWindow w;
  w.mode = mode;
  w.k = decaying_count(lattice);
  const double half = 0.5 * (n + 1);
  w.base = {half - 2.0 - t.hi, half - 2.0 - t.lo};
  if (w.base.empty()) return w;

  std::vector<double> hits;
  for (const auto& pole : lattice.poles) {
    hits.push_back(half - pole.q);
    hits.push_back(half - 2.0 - pole.q);
    if (mode == WindowMode::CahnHilliard && pole.sign() != RootSign::Plus) hits.push_back(half - 4.0 - pole.q);
  }
  std::sort(hits.begin(), hits.end());
  double lo = w.base.lo;
  for (double g : hits) {
    if (!w.base.contains_open(g)) continue;
    if (!w.excluded.empty() && std::abs(w.excluded.back() - g) <= kPoleTol) continue;
    w.excluded.push_back(g);
    if (g - lo > kPoleTol) w.intervals.push_back({lo, g});
    lo = g;
  }
  if (w.base.hi - lo > kPoleTol) w.intervals.push_back({lo, w.base.hi});
  w.empty = w.intervals.empty();
  return w;
}

}  // namespace detail

/// Weights for which I_gamma holds exactly the decaying exponents q_1^-, ..., q_l^-:
/// max{-2, q_{l+1}^-} < c - 2 < q_l^- (q_0^- = 0).
inline GammaWindow decaying_window(const PoleLattice& lattice, int n, int ell) {
  require(ell >= 0, ErrorKind::InvalidArgument, "l must be nonnegative");
  const Interval t{std::max(-2.0, lattice.q_minus(ell + 1)), lattice.q_minus(ell)};
  return detail::split_window(lattice, n, WindowMode::ShortTimePme, t);
}

inline GammaWindow gamma_window(const PoleLattice& lattice, int n, WindowMode mode) {
  const int k = decaying_count(lattice);
  switch (mode) {
    case WindowMode::ShortTimePme:
    case WindowMode::CahnHilliard:
      return detail::split_window(lattice, n, mode, {std::max(-2.0, lattice.q_minus(1)), 0.0});
    case WindowMode::MaximalAsymptotics:
    case WindowMode::TipAsymptotics:
      return detail::split_window(lattice, n, mode, {-2.0, k == 0 ? 0.0 : lattice.q_minus(k)});
  }
  return {};
}

// ---------------------------------------------------------------------------
// Closed extensions

enum class DomainFlavor { Minimal, Maximal, Custom };

enum class DomainPreset {
  None,
  ConstantsOnly,  // core + constants near the tip
  AllDecaying,    // core + E_{q_1^-} + ... + E_{q_k^-} + constants
  Decaying,       // core + every E_{q_j^-}, j >= 1, inside I_gamma + constants
  Biharmonic,     // natural domain of the square of the ConstantsOnly extension
};

inline std::string to_string(DomainFlavor f) {
  switch (f) {
    case DomainFlavor::Minimal: return "minimal";
    case DomainFlavor::Maximal: return "maximal";
    case DomainFlavor::Custom: return "custom";
  }
  return "unknown";
}

inline std::string to_string(DomainPreset p) {
  switch (p) {
    case DomainPreset::None: return "none";
    case DomainPreset::ConstantsOnly: return "constants";
    case DomainPreset::AllDecaying: return "all-decaying";
    case DomainPreset::Decaying: return "decaying";
    case DomainPreset::Biharmonic: return "biharmonic";
  }
  return "unknown";
}

struct SobolevCore {
  double smoothness = 0.0;  // s + mu
  double weight = 0.0;      // gamma + mu
  double p = 2.0;
};

struct DomainSpec {
  WeightConfig config;
  int mu = 2;
  SobolevCore core;
  DomainFlavor flavor = DomainFlavor::Minimal;
  DomainPreset preset = DomainPreset::None;
  std::vector<AsymptoticsSpace> selected;
  bool underline_E0 = false;  // the constants slice omega(x) e_0(y), e_0 in E_0
};

namespace detail {

inline void check_line_off_poles(const PoleLattice& lattice, double line, const char* what) {
  if (const Pole* p = lattice.find(line))
    fail(ErrorKind::WeightOnPole, std::string(what) + " at " + std::to_string(line) + " hits pole " +
                                      std::to_string(p->q));
}

inline PoleLattice lattice_around(const MellinSymbol& sym, double lo, double hi) { return sym.poles({lo, hi}); }

}  // namespace detail

/// Build the domain of a closed extension of Delta (mu = 2) or Delta^2 (mu = 4) in the
/// weight-gamma space. `laplacian` must be the order-2 symbol.
inline DomainSpec build_domain(const MellinSymbol& laplacian, const WeightConfig& config, DomainFlavor flavor,
                               DomainPreset preset = DomainPreset::None, int mu = 2) {
  require(laplacian.order() == SymbolOrder::Laplacian, ErrorKind::InvalidArgument,
          "build_domain takes the Laplacian's symbol");
  if (config.h_x_dependent)
    fail(ErrorKind::Unsupported, "x-dependent cross-section metrics need warped correction terms");
  require(config.n == laplacian.n(), ErrorKind::InvalidArgument, "weight config and spectrum disagree on n");
  require((flavor == DomainFlavor::Custom) == (preset != DomainPreset::None), ErrorKind::InvalidArgument,
          "custom domains need a preset and presets need the custom flavor");
  if (preset == DomainPreset::Biharmonic) mu = 4;
  require(mu == 2 || mu == 4, ErrorKind::InvalidArgument, "order must be 2 or 4");
  require(mu == 2 || preset == DomainPreset::Biharmonic || preset == DomainPreset::None,
          ErrorKind::IncompatiblePreset, "this preset describes a Laplacian domain");

  const double c = config.line();
  DomainSpec d;
  d.config = config;
  d.mu = mu;
  d.core = {config.s + mu, config.gamma + mu, config.p};
  d.flavor = flavor;
  d.preset = preset;

  const PoleLattice delta = detail::lattice_around(laplacian, std::min(c - 2.0, -2.0), std::max(c, 0.0));
  const Interval window = interval_for(config, mu);

  if (mu == 2) {
    detail::check_line_off_poles(delta, c, "weight line");
    detail::check_line_off_poles(delta, c - 2.0, "shifted weight line");
  } else {
    const PoleLattice sq = detail::lattice_around(laplacian.squared(), c - 4.0, c);
    detail::check_line_off_poles(sq, c, "weight line");
    detail::check_line_off_poles(sq, c - 4.0, "shifted weight line");
    if (preset == DomainPreset::Biharmonic) detail::check_line_off_poles(delta, c - 2.0, "Laplacian domain line");
  }

  const Interval i_gamma = interval_for(config, 2);
  auto need_constants = [&] {
    if (!i_gamma.contains_open(0.0))
      fail(ErrorKind::IncompatiblePreset, "the constants slice needs q = 0 inside I_gamma");
  };

  switch (flavor) {
    case DomainFlavor::Minimal:
      break;
    case DomainFlavor::Maximal:
      d.selected = mu == 2 ? asymptotics_in_window(delta, window)
                           : asymptotics_in_window(detail::lattice_around(laplacian.squared(), c - 4.0, c), window);
      break;
    case DomainFlavor::Custom: {
      switch (preset) {
        case DomainPreset::ConstantsOnly:
          need_constants();
          break;
        case DomainPreset::AllDecaying:
        case DomainPreset::Decaying: {
          need_constants();
          const int k = decaying_count(delta);
          if (preset == DomainPreset::AllDecaying && k == 0)
            fail(ErrorKind::IncompatiblePreset, "no decaying exponent q_j^- > -2 (k = 0)");
          for (const auto& space : asymptotics_in_window(delta, window)) {
            if (space.mode == 0 || space.sign != RootSign::Minus) continue;
            d.selected.push_back(space);
          }
          if (preset == DomainPreset::AllDecaying && static_cast<int>(d.selected.size()) != k)
            fail(ErrorKind::IncompatiblePreset, "I_gamma does not contain all of q_1^-, ..., q_k^-");
          break;
        }
        case DomainPreset::Biharmonic: {
          need_constants();
          const PoleLattice sq = detail::lattice_around(laplacian.squared(), c - 4.0, c);
          // Exponents in [c - 2, c) would not stay in the Laplacian's domain.
          d.selected = asymptotics_in_window(sq, {c - 4.0, c - 2.0});
          break;
        }
        case DomainPreset::None:
          break;
      }
      d.underline_E0 = true;
      break;
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// H-infinity admissibility

enum class Granularity { Zero, Constants, Full };

inline std::string to_string(Granularity g) {
  switch (g) {
    case Granularity::Zero: return "zero";
    case Granularity::Constants: return "constants";
    case Granularity::Full: return "full";
  }
  return "unknown";
}

enum class HinftyFailure {
  None,
  NegativeSmoothness,
  WeightOutOfRange,
  WeightOnPole,
  Unsupported,
  SelectionOutsideWindow,
  Conditions,
};

inline std::string to_string(HinftyFailure f) {
  switch (f) {
    case HinftyFailure::None: return "none";
    case HinftyFailure::NegativeSmoothness: return "negative smoothness";
    case HinftyFailure::WeightOutOfRange: return "weight out of range";
    case HinftyFailure::WeightOnPole: return "weight on pole";
    case HinftyFailure::Unsupported: return "unsupported subspace";
    case HinftyFailure::SelectionOutsideWindow: return "selection outside window";
    case HinftyFailure::Conditions: return "conditions";
  }
  return "unknown";
}

struct ConditionReport {
  std::string id;  // "i", "ii", "iii"
  bool pass = true;
  std::vector<std::string> details;
};

struct PoleSelection {
  double q = 0.0;
  Granularity selection = Granularity::Zero;
  bool double_pole = false;
};

struct HinftyVerdict {
  bool admissible = false;
  HinftyFailure failure = HinftyFailure::None;
  std::string message;
  std::vector<PoleSelection> selections;
  std::vector<ConditionReport> conditions;

  const ConditionReport* condition(const std::string& id) const {
    for (const auto& c : conditions)
      if (c.id == id) return &c;
    return nullptr;
  }
};

namespace detail {

inline Granularity complement(Granularity g, bool double_pole) {
  switch (g) {
    case Granularity::Zero: return Granularity::Full;
    case Granularity::Full: return Granularity::Zero;
    case Granularity::Constants: return double_pole ? Granularity::Constants : Granularity::Zero;
  }
  return Granularity::Zero;
}

}  // namespace detail

/// Evaluate the three pairing conditions on the selected asymptotics spaces of a
/// Laplacian domain. `lattice` must be the order-2 lattice covering I_gamma and I_{-gamma}.
inline HinftyVerdict check_hinfty_admissible(const DomainSpec& domain, const WeightConfig& config,
                                             const PoleLattice& lattice) {
  HinftyVerdict v;
  auto reject = [&](HinftyFailure f, std::string msg) {
    v.admissible = false;
    v.failure = f;
    v.message = std::move(msg);
    return v;
  };
  if (domain.mu != 2 || lattice.order != SymbolOrder::Laplacian)
    return reject(HinftyFailure::Unsupported, "admissibility is decided for Laplacian domains only");
  if (config.s < 0.0)
    return reject(HinftyFailure::NegativeSmoothness, "s < 0 needs the adjoint domain, not implemented");
  const double half = 0.5 * (config.n + 1);
  if (!(std::abs(config.gamma) < half)) return reject(HinftyFailure::WeightOutOfRange, "|gamma| >= (n+1)/2");

  const Interval i_gamma = interval_for(config, 2);
  WeightConfig mirrored = config;
  mirrored.gamma = -config.gamma;
  const Interval i_mirror = interval_for(mirrored, 2);
  if (!lattice.covers({std::min(i_gamma.lo, i_mirror.lo), std::max(i_gamma.hi, i_mirror.hi)}))
    fail(ErrorKind::UnderResolved, "pole lattice does not cover I_gamma and I_-gamma");
  for (double line : {i_gamma.hi, i_gamma.lo})
    if (const Pole* p = lattice.find(line))
      return reject(HinftyFailure::WeightOnPole, "line " + std::to_string(line) + " hits pole " + std::to_string(p->q));

  // Selection at every pole inside I_gamma.
  auto index_of = [&](double q) -> int {
    for (std::size_t i = 0; i < v.selections.size(); ++i)
      if (std::abs(v.selections[i].q - q) <= kPoleTol) return static_cast<int>(i);
    return -1;
  };
  for (const auto& pole : lattice.poles)
    if (i_gamma.contains_open(pole.q)) v.selections.push_back({pole.q, Granularity::Zero, pole.order == 2});

  std::vector<std::set<int>> chosen(v.selections.size());
  for (const auto& space : domain.selected) {
    const int idx = index_of(space.q_loc);
    if (idx < 0)
      return reject(HinftyFailure::SelectionOutsideWindow,
                    "selected space at q = " + std::to_string(space.q_loc) + " is not a pole inside I_gamma");
    if (space.dimension != full_dimension(lattice, space.mode, space.log_power))
      return reject(HinftyFailure::Unsupported, "only zero, constants or full spaces are supported");
    chosen[idx].insert(space.mode);
  }
  for (std::size_t i = 0; i < v.selections.size(); ++i) {
    if (chosen[i].empty()) continue;
    if (chosen[i] != lattice.find(v.selections[i].q)->modes())
      return reject(HinftyFailure::Unsupported, "q = " + std::to_string(v.selections[i].q) +
                                                    " selects only some of the eigenspaces meeting there");
    v.selections[i].selection = Granularity::Full;
  }
  if (domain.underline_E0) {
    const int idx = index_of(0.0);
    if (idx < 0) return reject(HinftyFailure::SelectionOutsideWindow, "constants slice needs q = 0 in I_gamma");
    auto& sel = v.selections[idx];
    // Constants exhaust E_0, so the slice is the whole space unless 0 is the double pole.
    if (sel.selection != Granularity::Full) sel.selection = sel.double_pole ? Granularity::Constants : Granularity::Full;
  }

  ConditionReport c1{"i", true, {}}, c2{"ii", true, {}}, c3{"iii", true, {}};
  for (const auto& sel : v.selections) {
    const bool in_mirror = i_mirror.contains_open(sel.q);
    if (in_mirror) {
      const double partner_q = config.n - 1 - sel.q;
      const int pidx = index_of(partner_q);
      const Granularity partner = pidx < 0 ? Granularity::Zero : v.selections[pidx].selection;
      const Granularity expected = detail::complement(sel.selection, sel.double_pole);
      if (partner != expected) {
        c1.pass = false;
        c1.details.push_back("q = " + std::to_string(sel.q) + " is " + to_string(sel.selection) + ", partner " +
                             std::to_string(partner_q) + " is " + to_string(partner) + ", needs " +
                             to_string(expected));
      }
    } else if (config.gamma >= 0.0 && sel.selection != Granularity::Full) {
      c2.pass = false;
      c2.details.push_back("q = " + std::to_string(sel.q) + " must carry the full space");
    } else if (config.gamma <= 0.0 && sel.selection != Granularity::Zero) {
      c3.pass = false;
      c3.details.push_back("q = " + std::to_string(sel.q) + " must carry the zero space");
    }
  }
  v.conditions = {c1, c2, c3};
  v.admissible = c1.pass && c2.pass && c3.pass;
  v.failure = v.admissible ? HinftyFailure::None : HinftyFailure::Conditions;
  return v;
}

// ---------------------------------------------------------------------------
// Integrability constraints on (p, q)

enum class FeasibilityMode { Pme, Fpme, CahnHilliard };

inline std::string to_string(FeasibilityMode m) {
  switch (m) {
    case FeasibilityMode::Pme: return "pme";
    case FeasibilityMode::Fpme: return "fpme";
    case FeasibilityMode::CahnHilliard: return "cahn-hilliard";
  }
  return "unknown";
}

struct Inequality {
  std::string expression;
  double lhs = 0.0;
  double rhs = 0.0;
  bool strict = true;
  double slack() const { return rhs - lhs; }
  bool pass() const { return strict ? lhs < rhs : lhs <= rhs; }
};

struct Feasibility {
  bool feasible = true;
  std::vector<Inequality> inequalities;

  const Inequality* first_violation() const {
    for (const auto& i : inequalities)
      if (!i.pass()) return &i;
    return nullptr;
  }
};

inline Feasibility pq_feasible(const WeightConfig& config, FeasibilityMode mode, double sigma = 1.0) {
  require(config.p > 1.0 && config.q > 1.0 && std::isfinite(config.p) && std::isfinite(config.q),
          ErrorKind::InvalidArgument, "p and q must lie in (1, inf)");
  const double n1 = config.n + 1.0;
  const double c = config.line();
  Feasibility f;
  switch (mode) {
    case FeasibilityMode::Pme:
      f.inequalities.push_back({"(n+1)/p + 2/q < 1", n1 / config.p + 2.0 / config.q, 1.0, true});
      f.inequalities.push_back({"(n+1)/2 - gamma - 2 + 4/q < 0", c - 2.0 + 4.0 / config.q, 0.0, true});
      break;
    case FeasibilityMode::Fpme:
      require(sigma > 0.0 && sigma <= 1.0, ErrorKind::InvalidArgument, "sigma must lie in (0, 1]");
      f.inequalities.push_back(
          {"(n+1)/p + 2 sigma/q < 2 sigma", n1 / config.p + 2.0 * sigma / config.q, 2.0 * sigma, true});
      f.inequalities.push_back(
          {"(n+1)/2 - gamma - 2 sigma + 2 sigma/q < 0", c - 2.0 * sigma + 2.0 * sigma / config.q, 0.0, true});
      f.inequalities.push_back({"(n+1)/2 - gamma < 2 sigma", c, 2.0 * sigma, true});
      break;
    case FeasibilityMode::CahnHilliard:
      f.inequalities.push_back({"p >= n+1", n1, config.p, false});
      f.inequalities.push_back({"q > 2", 2.0, config.q, true});
      break;
  }
  for (const auto& i : f.inequalities) f.feasible = f.feasible && i.pass();
  return f;
}

// ---------------------------------------------------------------------------
// Interpolation spaces between the base space and a Laplacian domain

struct InterpolationDescriptor {
  SobolevCore inner_core;  // s + 2 - 2/q + eps, gamma + 2 - 2/q + eps (embeds into the space)
  SobolevCore outer_core;  // s + 2 - 2/q - eps, gamma + 2 - 2/q - eps (the space embeds into it)
  double epsilon = 1e-3;
  double threshold = 0.0;  // (n+1)/2 - gamma - 2 + 2/q + eps
  int r = 0;
  std::vector<AsymptoticsSpace> retained;
  bool underline_E0 = false;
};

inline InterpolationDescriptor interpolation_descriptor(const WeightConfig& config, const DomainSpec& domain,
                                                        const PoleLattice& lattice, double epsilon = 1e-3) {
  require(domain.mu == 2, ErrorKind::InvalidArgument, "interpolation descriptor needs a Laplacian domain");
  require(epsilon > 0.0, ErrorKind::InvalidArgument, "epsilon must be positive");
  require(config.q > 1.0, ErrorKind::InvalidArgument, "q must exceed 1");
  InterpolationDescriptor d;
  d.epsilon = epsilon;
  const double lift = 2.0 - 2.0 / config.q;
  d.inner_core = {config.s + lift + epsilon, config.gamma + lift + epsilon, config.p};
  d.outer_core = {config.s + lift - epsilon, config.gamma + lift - epsilon, config.p};
  d.threshold = config.line() - 2.0 + 2.0 / config.q + epsilon;
  if (!(d.threshold < -kPoleTol))
    fail(ErrorKind::Degenerate, "c - 2 + 2/q + eps = " + std::to_string(d.threshold) + " is not below q_0^- = 0");
  require(lattice.coverage.lo <= d.threshold, ErrorKind::UnderResolved, "pole lattice does not reach the threshold");
  for (const auto& m : lattice.modes) {
    if (std::abs(m.q_minus - d.threshold) <= kPoleTol)
      fail(ErrorKind::Degenerate, "threshold coincides with q_" + std::to_string(m.j) + "^-");
    if (m.q_minus > d.threshold) d.r = std::max(d.r, m.j);
  }
  if (domain.flavor == DomainFlavor::Minimal) return d;
  for (const auto& space : domain.selected)
    if (space.sign == RootSign::Minus && space.mode >= 1 && space.mode <= d.r) d.retained.push_back(space);
  d.underline_E0 = domain.underline_E0;
  return d;
}

}  // namespace conetool
