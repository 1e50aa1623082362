#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "conetool/weights.hpp"

using namespace conetool;

namespace {

CrossSectionSpectrum sphere(int n, int modes = 8) { return build_cross_section(CrossSectionSpec::sphere(n), modes); }
CrossSectionSpectrum circle(double ell, int modes) { return build_cross_section(CrossSectionSpec::circle(ell), modes); }

// Enough circle modes for q_j^- to pass below `depth`.
int circle_modes(double ell, double depth) { return static_cast<int>(std::ceil(-depth * ell)) + 2; }

WeightConfig config(int n, double gamma, double s = 0.0, double p = 2.0, double q = 2.0) {
  WeightConfig c;
  c.n = n;
  c.gamma = gamma;
  c.s = s;
  c.p = p;
  c.q = q;
  return c;
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const ConeError& e) {
    return e.kind();
  }
  return ErrorKind::ConfigError;
}

}  // namespace

TEST(Weights, IntervalArithmetic) {
  auto i = interval_for(config(2, 1.0), 2);
  EXPECT_DOUBLE_EQ(i.lo, -1.5);
  EXPECT_DOUBLE_EQ(i.hi, 0.5);
  i = interval_for(config(1, 1.0), 2);
  EXPECT_DOUBLE_EQ(i.lo, -2.0);
  EXPECT_DOUBLE_EQ(i.hi, 0.0);
  i = interval_for(config(2, 1.0), 4);
  EXPECT_DOUBLE_EQ(i.lo, -3.5);
  EXPECT_DOUBLE_EQ(i.hi, 0.5);
  for (double g : {-1.3, 0.0, 0.77, 2.4}) {
    EXPECT_DOUBLE_EQ(interval_for(config(3, g), 2).length(), 2.0);
    EXPECT_DOUBLE_EQ(interval_for(config(3, g), 4).length(), 4.0);
  }
}

TEST(Weights, PowerMembership) {
  EXPECT_FALSE(membership_x_power(0.0, 0, 1.0, 1));
  EXPECT_FALSE(membership_x_power(0.0, 0, 1.5, 2));
  EXPECT_TRUE(membership_x_power(-1.0, 3, 1.4, 2));
  EXPECT_FALSE(membership_x_power(0.1, 0, 1.4, 2));
}

TEST(Weights, AsymptoticsSpacesInWindow) {
  const auto sphere_lattice = MellinSymbol(sphere(2)).poles({-4, 2});
  auto spaces = asymptotics_in_window(sphere_lattice, {-1.5, 0.5});
  ASSERT_EQ(spaces.size(), 2u);
  EXPECT_EQ(spaces[0].q_loc, -1.0);
  EXPECT_EQ(spaces[0].mode, 1);
  EXPECT_EQ(spaces[0].dimension, 3);
  EXPECT_EQ(spaces[1].q_loc, 0.0);
  EXPECT_EQ(spaces[1].mode, 0);

  const auto circle_lattice = MellinSymbol(circle(1.0, 6)).poles({-4, 2});
  EXPECT_EQ(kind_of([&] { asymptotics_in_window(circle_lattice, {-2, 0}); }), ErrorKind::WeightOnPole);
  spaces = asymptotics_in_window(circle_lattice, {-1.5, 0.5});
  ASSERT_EQ(spaces.size(), 2u);
  EXPECT_EQ(spaces[0].q_loc, -1.0);
  EXPECT_EQ(spaces[0].log_power, 0);
  EXPECT_EQ(spaces[1].q_loc, 0.0);
  EXPECT_EQ(spaces[1].log_power, 1);
  EXPECT_EQ(spaces[1].dimension, 2);
  // The same window with the double pole just outside holds only q = -1.
  spaces = asymptotics_in_window(circle_lattice, {-1.9, -0.1});
  ASSERT_EQ(spaces.size(), 1u);
  EXPECT_EQ(spaces[0].q_loc, -1.0);
}

TEST(Weights, SphereMaximalAsymptoticsWindow) {
  const auto lattice = MellinSymbol(sphere(2)).poles({-4, 2});
  for (auto mode : {WindowMode::MaximalAsymptotics, WindowMode::TipAsymptotics}) {
    const auto w = gamma_window(lattice, 2, mode);
    EXPECT_EQ(w.k, 1);
    ASSERT_EQ(w.intervals.size(), 1u);
    EXPECT_NEAR(w.intervals[0].lo, 0.5, 1e-9);
    EXPECT_NEAR(w.intervals[0].hi, 1.5, 1e-9);
  }
}

TEST(Weights, CircleShortTimeWindowSolvesInequality) {
  // max{-2, q_1^-} = -1 < 1 - gamma - 2 + 2 - 2 < 0 gives -1 < gamma < 0.
  const auto lattice = MellinSymbol(circle(1.0, 6)).poles({-4, 2});
  const auto w = gamma_window(lattice, 1, WindowMode::ShortTimePme);
  ASSERT_EQ(w.intervals.size(), 1u);
  EXPECT_NEAR(w.intervals[0].lo, -1.0, 1e-12);
  EXPECT_NEAR(w.intervals[0].hi, 0.0, 1e-12);
  EXPECT_TRUE(w.excluded.empty());
}

TEST(Weights, CahnHilliardWindowExcludesQuarticHits) {
  // Circle of scale 0.7: q_j^- = -j/0.7. c - 4 meets q_2^- = -2.857 at gamma = 0.857.
  const auto lattice = MellinSymbol(circle(0.7, 5)).poles({-4, 2});
  const auto pme = gamma_window(lattice, 1, WindowMode::ShortTimePme);
  const auto ch = gamma_window(lattice, 1, WindowMode::CahnHilliard);
  EXPECT_NEAR(pme.base.lo, ch.base.lo, 1e-15);
  EXPECT_NEAR(pme.base.hi, ch.base.hi, 1e-15);
  EXPECT_GT(ch.excluded.size(), pme.excluded.size());
  const double hit = 1.0 - 4.0 + 2.0 / 0.7;
  bool found = false;
  for (double g : ch.excluded) found = found || std::abs(g - hit) < 1e-12;
  EXPECT_EQ(found, ch.base.contains_open(hit));
  // The n = 2 sphere has integer poles, so the quartic condition removes nothing.
  const auto sphere_ch = gamma_window(MellinSymbol(sphere(2)).poles({-4, 2}), 2, WindowMode::CahnHilliard);
  EXPECT_NEAR(sphere_ch.base.lo, -0.5, 1e-12);
  EXPECT_NEAR(sphere_ch.base.hi, 0.5, 1e-12);
}

TEST(Weights, WindowsAvoidPoleLines) {
  std::mt19937 rng(42);
  for (double ell : {0.3, 0.7, 1.0, 1.6, 2.5}) {
    const auto spectrum = circle(ell, circle_modes(ell, -7.0));
    const MellinSymbol sym(spectrum);
    const auto lattice = sym.poles({-4, 2});
    for (auto mode : {WindowMode::ShortTimePme, WindowMode::MaximalAsymptotics, WindowMode::CahnHilliard}) {
      for (const auto& iv : gamma_window(lattice, 1, mode).intervals) {
        std::uniform_real_distribution<double> pick(iv.lo, iv.hi);
        for (int i = 0; i < 200; ++i) {
          const double g = pick(rng);
          if (!iv.contains_open(g)) continue;
          EXPECT_TRUE(is_elliptic_on_line(sym, g).elliptic) << ell << " " << g;
          EXPECT_TRUE(is_elliptic_on_line(sym, g + 2.0).elliptic) << ell << " " << g;
        }
      }
    }
  }
}

TEST(Weights, DecayingWindowMatchesMaximalOneAtK) {
  const auto lattice = MellinSymbol(circle(2.0, 12)).poles({-4, 2});
  const int k = decaying_count(lattice);
  EXPECT_EQ(k, 3);
  const auto a = decaying_window(lattice, 1, k);
  const auto b = gamma_window(lattice, 1, WindowMode::MaximalAsymptotics);
  EXPECT_NEAR(a.base.lo, b.base.lo, 1e-15);
  EXPECT_NEAR(a.base.hi, b.base.hi, 1e-15);
  const auto zero = decaying_window(lattice, 1, 0);
  const auto pme = gamma_window(lattice, 1, WindowMode::ShortTimePme);
  EXPECT_NEAR(zero.base.lo, pme.base.lo, 1e-15);
  EXPECT_NEAR(zero.base.hi, pme.base.hi, 1e-15);
}

TEST(Weights, MaximalDomainOnSphere) {
  const MellinSymbol sym(sphere(2));
  const auto d = build_domain(sym, config(2, 1.2), DomainFlavor::Maximal);
  EXPECT_DOUBLE_EQ(d.core.smoothness, 2.0);
  EXPECT_DOUBLE_EQ(d.core.weight, 3.2);
  ASSERT_EQ(d.selected.size(), 2u);
  EXPECT_NEAR(d.selected[0].q_loc, -1.0, 1e-12);
  EXPECT_NEAR(d.selected[1].q_loc, 0.0, 1e-12);
  EXPECT_TRUE(build_domain(sym, config(2, 1.2), DomainFlavor::Minimal).selected.empty());
}

TEST(Weights, BiharmonicDomainOnSphere) {
  const MellinSymbol sym(sphere(2));
  const auto d = build_domain(sym, config(2, 1.2), DomainFlavor::Custom, DomainPreset::Biharmonic);
  EXPECT_EQ(d.mu, 4);
  EXPECT_DOUBLE_EQ(d.core.smoothness, 4.0);
  EXPECT_NEAR(d.core.weight, 5.2, 1e-15);
  EXPECT_TRUE(d.underline_E0);
  std::set<double> locations;
  for (const auto& s : d.selected) {
    EXPECT_GT(s.q_loc, -3.7);
    EXPECT_LT(s.q_loc, -1.7);
    locations.insert(s.q_loc);
  }
  EXPECT_EQ(locations, (std::set<double>{-3.0, -2.0}));
}

TEST(Weights, SelectedSpacesSitBetweenCoreAndBase) {
  const MellinSymbol sym(circle(1.6, 12));
  for (double g : {-0.3, 0.2, 0.45}) {
    const auto cfg = config(1, g);
    for (auto flavor : {DomainFlavor::Maximal}) {
      const auto d = build_domain(sym, cfg, flavor);
      for (const auto& s : d.selected) {
        EXPECT_TRUE(membership_x_power(s.q_loc, s.log_power, cfg.gamma, 1));
        EXPECT_FALSE(membership_x_power(s.q_loc, s.log_power, d.core.weight, 1));
      }
    }
  }
}

TEST(Weights, DomainErrors) {
  const MellinSymbol sym(sphere(2));
  EXPECT_EQ(kind_of([&] { build_domain(sym, config(2, 1.5), DomainFlavor::Maximal); }), ErrorKind::WeightOnPole);
  EXPECT_EQ(kind_of([&] { build_domain(sym, config(2, 0.5), DomainFlavor::Maximal); }), ErrorKind::WeightOnPole);
  auto xdep = config(2, 1.2);
  xdep.h_x_dependent = true;
  EXPECT_EQ(kind_of([&] { build_domain(sym, xdep, DomainFlavor::Maximal); }), ErrorKind::Unsupported);
  // k = 0 on a thin circle: q_1^- = -2.5.
  const MellinSymbol thin(circle(0.4, 4));
  EXPECT_EQ(kind_of([&] { build_domain(thin, config(1, -0.5), DomainFlavor::Custom, DomainPreset::AllDecaying); }),
            ErrorKind::IncompatiblePreset);
  // Constants outside I_gamma.
  EXPECT_EQ(kind_of([&] { build_domain(sym, config(2, -0.7), DomainFlavor::Custom, DomainPreset::ConstantsOnly); }),
            ErrorKind::IncompatiblePreset);
}

TEST(Weights, HinftyPresetPassesOnSphere) {
  const MellinSymbol sym(sphere(2));
  const auto lattice = sym.poles({-4, 4});
  // Maximal-asymptotics preset at gamma = 1.
  auto cfg = config(2, 1.0);
  auto d = build_domain(sym, cfg, DomainFlavor::Custom, DomainPreset::AllDecaying);
  auto v = check_hinfty_admissible(d, cfg, lattice);
  EXPECT_TRUE(v.admissible) << v.message;
  // Adding q_1^+ = 2 is outside I_gamma.
  d.selected.push_back({2.0, 1, 0, 3, RootSign::Plus, 0});
  v = check_hinfty_admissible(d, cfg, lattice);
  EXPECT_EQ(v.failure, HinftyFailure::SelectionOutsideWindow);
  // Constants-only preset with q_0^+ = 1 inside I_gamma and I_-gamma.
  cfg = config(2, 0.2);
  d = build_domain(sym, cfg, DomainFlavor::Custom, DomainPreset::ConstantsOnly);
  v = check_hinfty_admissible(d, cfg, lattice);
  EXPECT_TRUE(v.admissible) << v.message;
  d.selected.push_back({1.0, 0, 0, 1, RootSign::Plus, 0});
  v = check_hinfty_admissible(d, cfg, lattice);
  EXPECT_FALSE(v.admissible);
  EXPECT_FALSE(v.condition("i")->pass);
  EXPECT_TRUE(v.condition("ii")->pass);
}

TEST(Weights, HinftyDoublePoleTable) {
  const MellinSymbol sym(circle(0.5, 6));
  const auto lattice = sym.poles({-4, 4});
  const auto cfg = config(1, 0.0);
  auto d = build_domain(sym, cfg, DomainFlavor::Custom, DomainPreset::ConstantsOnly);
  auto v = check_hinfty_admissible(d, cfg, lattice);
  EXPECT_TRUE(v.admissible) << v.message;
  ASSERT_EQ(v.selections.size(), 1u);
  EXPECT_EQ(v.selections[0].selection, Granularity::Constants);
  // The whole log space at 0 pairs with itself and breaks (i).
  d.selected.push_back({0.0, 0, 1, 2, RootSign::Both, 0});
  v = check_hinfty_admissible(d, cfg, lattice);
  EXPECT_FALSE(v.condition("i")->pass);
  // Nothing at all at 0 is also unpaired.
  d = build_domain(sym, cfg, DomainFlavor::Minimal);
  v = check_hinfty_admissible(d, cfg, lattice);
  EXPECT_FALSE(v.condition("i")->pass);
}

TEST(Weights, HinftyConditionsTwoAndThree) {
  // gamma > 0 with q_1^- in I_gamma only: the full space is required.
  const MellinSymbol sym(circle(2.0, 12));
  const auto lattice = sym.poles({-4, 4});
  auto cfg = config(1, 0.4);  // c = 0.6, I_gamma = (-1.4, 0.6), I_-gamma = (-0.6, 1.4)
  auto d = build_domain(sym, cfg, DomainFlavor::Custom, DomainPreset::ConstantsOnly);
  auto v = check_hinfty_admissible(d, cfg, lattice);
  EXPECT_FALSE(v.condition("ii")->pass);
  d = build_domain(sym, cfg, DomainFlavor::Custom, DomainPreset::Decaying);
  v = check_hinfty_admissible(d, cfg, lattice);
  EXPECT_TRUE(v.admissible) << v.message;
  // gamma < 0: spaces in I_gamma \ I_-gamma must be zero.
  cfg = config(1, -0.4);
  d = build_domain(sym, cfg, DomainFlavor::Maximal);
  v = check_hinfty_admissible(d, cfg, lattice);
  EXPECT_FALSE(v.condition("iii")->pass);
}

TEST(Weights, HinftyPreconditions) {
  const MellinSymbol sym(sphere(2));
  const auto lattice = sym.poles({-4, 4});
  auto cfg = config(2, 1.0);
  auto d = build_domain(sym, cfg, DomainFlavor::Minimal);
  cfg.s = -1.0;
  EXPECT_EQ(check_hinfty_admissible(d, cfg, lattice).failure, HinftyFailure::NegativeSmoothness);
  cfg = config(2, 1.6);
  EXPECT_EQ(check_hinfty_admissible(d, cfg, lattice).failure, HinftyFailure::WeightOutOfRange);
  cfg = config(2, 0.5);
  EXPECT_EQ(check_hinfty_admissible(d, cfg, lattice).failure, HinftyFailure::WeightOnPole);
  cfg = config(2, 1.0);
  auto partial = build_domain(sym, cfg, DomainFlavor::Maximal);
  partial.selected[0].dimension = 1;
  EXPECT_EQ(check_hinfty_admissible(partial, cfg, lattice).failure, HinftyFailure::Unsupported);
}

TEST(Weights, PqFeasibility) {
  auto f = pq_feasible(config(2, 1.4, 0, 8, 8), FeasibilityMode::Pme);
  EXPECT_TRUE(f.feasible);
  EXPECT_NEAR(f.inequalities[0].lhs, 0.625, 1e-15);
  EXPECT_NEAR(f.inequalities[1].lhs, -1.4, 1e-15);
  f = pq_feasible(config(2, 1.4, 0, 2, 2), FeasibilityMode::Pme);
  EXPECT_FALSE(f.feasible);
  EXPECT_EQ(f.first_violation(), &f.inequalities[0]);
  f = pq_feasible(config(2, 1.4, 0, 12, 12), FeasibilityMode::Fpme, 0.5);
  EXPECT_NEAR(f.inequalities[0].lhs, 3.0 / 12 + 1.0 / 12, 1e-15);
  EXPECT_TRUE(f.inequalities[0].pass());
  f = pq_feasible(config(2, 1.4, 0, 3, 2.5), FeasibilityMode::CahnHilliard);
  EXPECT_TRUE(f.feasible);
  f = pq_feasible(config(2, 1.4, 0, 2.9, 2.5), FeasibilityMode::CahnHilliard);
  EXPECT_FALSE(f.feasible);
}

TEST(Weights, InterpolationIndex) {
  const MellinSymbol sym(circle(2.0, 12));
  const auto lattice = sym.poles({-4, 4});
  auto cfg = config(1, 0.9, 0, 2, 100);  // c - 2 = -1.9, inside (-2, q_3^- = -1.5)
  const auto d = build_domain(sym, cfg, DomainFlavor::Custom, DomainPreset::AllDecaying);
  auto desc = interpolation_descriptor(cfg, d, lattice);
  EXPECT_EQ(desc.r, decaying_count(lattice));
  EXPECT_EQ(static_cast<int>(desc.retained.size()), desc.r);
  EXPECT_TRUE(desc.underline_E0);

  cfg.q = 2.2;
  desc = interpolation_descriptor(cfg, d, lattice);
  const double th = desc.threshold;
  EXPECT_NEAR(th, -1.9 + 2 / 2.2 + 1e-3, 1e-14);
  EXPECT_GT(lattice.q_minus(desc.r), th);
  EXPECT_LT(lattice.q_minus(desc.r + 1), th);
  EXPECT_NEAR(desc.inner_core.smoothness - desc.outer_core.smoothness, 2e-3, 1e-15);

  const auto minimal = build_domain(sym, cfg, DomainFlavor::Minimal);
  EXPECT_TRUE(interpolation_descriptor(cfg, minimal, lattice).retained.empty());
  EXPECT_EQ(kind_of([&] { interpolation_descriptor(cfg, d, lattice, 2.0); }), ErrorKind::Degenerate);
}
