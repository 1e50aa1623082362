#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "conetool/diagnostics.hpp"
#include "conetool/solver.hpp"
#include "support.hpp"

using namespace conetool;
using testing_support::grid;
using testing_support::heat_exponential;
using testing_support::relative_max_error;
using testing_support::smooth_circle_field;

namespace {

SolverConfig config(Equation e, double dt, double t_end) {
  SolverConfig cfg;
  cfg.equation = e;
  cfg.dt = dt;
  cfg.t_end = t_end;
  return cfg;
}

}  // namespace

namespace {

// Zeros of J_j' for j = 0, 1, 2: J_j(k x) is a Neumann eigenfunction at x = 1 and
// behaves like x^j at the tip, so it is compatible with both boundary conditions.
constexpr double kBesselRoots[3] = {3.831705970207512, 1.841183781340659, 3.054236928227140};

Eigen::MatrixXd bessel_data(const ConeGrid& g, double amplitude) {
  Eigen::MatrixXd v(g.nx(), g.ny());
  for (int i = 0; i < g.nx(); ++i)
    for (int k = 0; k < g.ny(); ++k) {
      const double x = g.x()(i), th = g.spectrum().nodes()(k);
      v(i, k) = 1.0 + amplitude * (std::cyl_bessel_j(0.0, kBesselRoots[0] * x) +
                                   std::cyl_bessel_j(1.0, kBesselRoots[1] * x) * std::cos(th) +
                                   std::cyl_bessel_j(2.0, kBesselRoots[2] * x) * std::sin(2 * th));
    }
  return v;
}

}  // namespace

TEST(Heat, TenStepsMatchDenseExponential) {
  // Ten implicit Euler steps differ from exp(t L) by about t dt |L^2 u0| / 2; with
  // compatible data of amplitude 0.05 that is below 1e-6.
  auto g = grid(CrossSectionSpec::circle(1.0), 3, 1e-3, 64);
  Stepper stepper(g, config(Equation::Heat, 1e-4, 1e-3));
  const ConeField u0(g, bessel_data(*g, 0.05));
  const Trajectory traj = run(stepper, u0);
  ASSERT_EQ(traj.states.size(), 11u);
  const Eigen::MatrixXd exact = heat_exponential(stepper.laplacian(), u0.values, 1e-3);
  EXPECT_LT(relative_max_error(traj.states.back().values, exact), 1e-6);
}

TEST(Heat, TimeErrorMatchesImplicitEulerPrediction) {
  // On a discrete eigenvector of L_0 with eigenvalue -mu the gap after N steps is
  // (1 + mu dt)^{-N} - exp(-N mu dt) times the eigenvector.
  auto g = grid(CrossSectionSpec::circle(1.0), 3, 1e-3, 128);
  Stepper stepper(g, config(Equation::Heat, 1e-4, 1e-3));
  const Eigen::VectorXd sw = g->radial_weights().cwiseSqrt();
  const Eigen::MatrixXd sym = sw.asDiagonal() * stepper.laplacian().assemble(0) * sw.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (sym + sym.transpose()));
  const Eigen::Index idx = eig.eigenvalues().size() - 2;  // first nonzero mode
  const double mu = -eig.eigenvalues()(idx);
  const Eigen::VectorXd profile = sw.cwiseInverse().cwiseProduct(eig.eigenvectors().col(idx));
  const ConeField u0(g, 0.1 * profile * Eigen::RowVectorXd::Ones(g->ny()) / profile.cwiseAbs().maxCoeff());
  const Eigen::MatrixXd u = run(stepper, u0).states.back().values;
  const double factor = std::pow(1 + mu * 1e-4, -10);
  EXPECT_LT((u - factor * u0.values).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::MatrixXd exact = heat_exponential(stepper.laplacian(), u0.values, 1e-3);
  // The oracle itself, up to the rounding of scaling and squaring on a stiff matrix.
  EXPECT_LT((exact - std::exp(-mu * 1e-3) * u0.values).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Heat, ExponentialReferenceOverLongerHorizon) {
  auto g = grid(CrossSectionSpec::sphere(2), 3, 1e-3, 64);
  Stepper stepper(g, config(Equation::Heat, 1e-4, 1e-2));
  Eigen::MatrixXd v(g->nx(), g->ny());
  for (int i = 0; i < g->nx(); ++i)
    for (int k = 0; k < g->ny(); ++k) {
      const double x = g->x()(i), z = g->spectrum().nodes()(k);
      v(i, k) = 1.0 + x * x * (0.3 + 0.5 * z + 0.2 * (3 * z * z - 1));
    }
  const ConeField u0(g, v);
  const ConeField u = run(stepper, u0, 1000).states.back();
  EXPECT_LT(relative_max_error(u.values, heat_exponential(stepper.laplacian(), v, 1e-2)), 1e-3);
}

TEST(Heat, SelfConvergenceInTauIsSecondOrder) {
  // Nested grids 2^k * 24 + 1; differences of successive levels at the shared nodes.
  std::vector<Eigen::MatrixXd> finals;
  std::vector<std::shared_ptr<const ConeGrid>> grids;
  for (int level = 0; level < 4; ++level) {
    auto g = grid(CrossSectionSpec::circle(1.0), 3, 1e-2, (24 << level) + 1);
    Stepper stepper(g, config(Equation::Heat, 1e-4, 5e-3));
    finals.push_back(run(stepper, smooth_circle_field(g, 1.0, 0.5, 11), 1000).states.back().values);
    grids.push_back(g);
  }
  std::vector<double> diffs;
  for (int level = 0; level + 1 < 4; ++level) {
    double worst = 0.0;
    for (int i = 0; i < grids[level]->nx(); ++i)
      worst = std::max(worst, (finals[level].row(i) - finals[level + 1].row(2 * i)).cwiseAbs().maxCoeff());
    diffs.push_back(worst);
  }
  const double order = std::log2(diffs[1] / diffs[2]);
  EXPECT_NEAR(order, 2.0, 0.3) << diffs[0] << " " << diffs[1] << " " << diffs[2];
}

TEST(Heat, SelfConvergenceInTimeIsFirstOrder) {
  auto g = grid(CrossSectionSpec::circle(1.0), 3, 1e-2, 65);
  std::vector<Eigen::MatrixXd> finals;
  for (double dt : {4e-4, 2e-4, 1e-4, 5e-5}) {
    Stepper stepper(g, config(Equation::Heat, dt, 2e-2));
    finals.push_back(run(stepper, smooth_circle_field(g, 1.0, 0.5, 12), 100000).states.back().values);
  }
  const double d0 = (finals[0] - finals[1]).cwiseAbs().maxCoeff();
  const double d1 = (finals[1] - finals[2]).cwiseAbs().maxCoeff();
  const double d2 = (finals[2] - finals[3]).cwiseAbs().maxCoeff();
  EXPECT_NEAR(std::log2(d0 / d1), 1.0, 0.15);
  EXPECT_NEAR(std::log2(d1 / d2), 1.0, 0.15);
}

TEST(Heat, ForcingIsAdded) {
  auto g = grid(CrossSectionSpec::circle(1.0), 2, 1e-2, 32);
  SolverConfig cfg = config(Equation::Heat, 1e-3, 1e-2);
  cfg.forcing = [](double, const Eigen::MatrixXd& u) { return Eigen::MatrixXd::Constant(u.rows(), u.cols(), 2.0); };
  Stepper stepper(g, cfg);
  const ConeField u = run(stepper, ConeField::constant(g, 1.0)).states.back();
  EXPECT_NEAR(u.values.minCoeff(), 1.02, 1e-12);
  EXPECT_NEAR(u.values.maxCoeff(), 1.02, 1e-12);
}

TEST(Heat, FinalStepIsShortenedToHitEndTime) {
  SolverConfig cfg = config(Equation::Heat, 3e-3, 1e-2);
  EXPECT_EQ(step_count(cfg), 4);
  auto g = grid(CrossSectionSpec::circle(1.0), 2, 1e-2, 16);
  const Trajectory traj = run(Stepper(g, cfg), ConeField::constant(g, 1.0));
  EXPECT_DOUBLE_EQ(traj.times.back(), 1e-2);
}

TEST(Pme, ConstantIsStationary) {
  for (auto lin : {Linearization::Newton, Linearization::NewtonOneStep, Linearization::FrozenCoefficient,
                   Linearization::VForm}) {
    auto g = grid(CrossSectionSpec::circle(2.0), 4, 1e-3, 128);
    SolverConfig cfg = config(Equation::Pme, 1e-3, 1e-2);
    cfg.linearization = lin;
    Stepper stepper(g, cfg);
    ConeField u = ConeField::constant(g, 1.7);
    for (int k = 0; k < 10; ++k) {
      const ConeField next = stepper.step(u, k * cfg.dt);
      EXPECT_LT((next.values - u.values).cwiseAbs().maxCoeff(), 1e-13) << to_string(lin);
      u = next;
    }
  }
}

TEST(Pme, MassIsConservedForEveryExponent) {
  for (double m : {0.5, 2.0, 3.0}) {
    auto g = grid(CrossSectionSpec::circle(1.0), 3, 1e-3, 96);
    std::mt19937 rng(21);
    const ConeField u0(g, testing_support::uniform_values(g->nx(), g->ny(), 0.5, 1.5, rng));
    SolverConfig cfg = config(Equation::Pme, 1e-3, 0.2);
    cfg.m = m;
    Stepper s(g, cfg);
    const double m0 = mass(u0);
    int step = 0;
    run(s, u0, 1000, [&](int k, double, const ConeField& u) {
      step = k;
      EXPECT_LE(std::abs(mass(u) - m0), 1e-10 * std::abs(m0) * k) << "m = " << m;
    });
    EXPECT_EQ(step, 200);
  }
}

TEST(Pme, LinearizationsAgreeToFirstOrder) {
  auto g = grid(CrossSectionSpec::circle(1.0), 3, 1e-2, 64);
  const ConeField u0 = smooth_circle_field(g, 1.0, 0.4, 5);
  auto solve = [&](Linearization lin, double dt) {
    SolverConfig cfg = config(Equation::Pme, dt, 0.02);
    cfg.linearization = lin;
    return run(Stepper(g, cfg), u0, 100000).states.back().values;
  };
  // Each variant differs from the fully implicit step by O(dt) or better.
  for (auto lin : {Linearization::NewtonOneStep, Linearization::FrozenCoefficient, Linearization::VForm}) {
    const double coarse = (solve(lin, 1e-3) - solve(Linearization::Newton, 1e-3)).cwiseAbs().maxCoeff();
    const double fine = (solve(lin, 5e-4) - solve(Linearization::Newton, 5e-4)).cwiseAbs().maxCoeff();
    EXPECT_GT(coarse / fine, 1.7) << to_string(lin);
    EXPECT_LT(coarse, 1e-2) << to_string(lin);
  }
}

TEST(Pme, ComparisonAndBounds) {
  auto g = grid(CrossSectionSpec::circle(1.0), 3, 1e-3, 96);
  SolverConfig cfg = config(Equation::Pme, 1e-3, 0.2);
  cfg.inner = InnerBoundary::NeumannTau;
  cfg.cross = CrossDiscretization::SecondDifference;
  Stepper stepper(g, cfg);
  std::mt19937 rng(8);
  const Eigen::MatrixXd base = testing_support::uniform_values(g->nx(), g->ny(), 0.5, 1.5, rng);
  const Eigen::MatrixXd bump = testing_support::uniform_values(g->nx(), g->ny(), 0.0, 0.5, rng);
  const Trajectory u = run(stepper, ConeField(g, base));
  const Trajectory v = run(stepper, ConeField(g, base + bump));
  const ComparisonVerdict verdict = comparison_check(u, v, 1e-8);
  EXPECT_TRUE(verdict.precondition);
  EXPECT_TRUE(verdict.pass) << verdict.message;
  for (const auto& s : u.states) {
    EXPECT_GE(s.values.minCoeff(), base.minCoeff() - 1e-8);
    EXPECT_LE(s.values.maxCoeff(), base.maxCoeff() + 1e-8);
  }
}

TEST(Pme, RejectsNonPositiveData) {
  auto g = grid(CrossSectionSpec::circle(1.0), 2, 1e-2, 16);
  Stepper stepper(g, config(Equation::Pme, 1e-3, 1e-2));
  Eigen::MatrixXd v = Eigen::MatrixXd::Ones(g->nx(), g->ny());
  v(3, 1) = 0.0;
  try {
    run(stepper, ConeField(g, v));
    FAIL() << "expected a positivity error";
  } catch (const ConeError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PositivityLoss);
    EXPECT_NE(std::string(e.what()).find("radial node 3"), std::string::npos);
  }
}

TEST(Fpme, SigmaOneTracksPme) {
  auto g = grid(CrossSectionSpec::circle(1.0), 3, 1e-2, 48);
  const ConeField u0 = smooth_circle_field(g, 1.0, 0.4, 6);
  SolverConfig pme = config(Equation::Pme, 1e-4, 0.01);
  const Eigen::MatrixXd reference = run(Stepper(g, pme), u0, 1000).states.back().values;
  std::vector<double> errors;
  for (double dt : {1e-3, 5e-4}) {
    SolverConfig cfg = config(Equation::Fpme, dt, 0.01);
    cfg.sigma = 1.0;
    errors.push_back((run(Stepper(g, cfg), u0, 1000).states.back().values - reference).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(errors[0], 5e-3);
  EXPECT_LT(errors[1], 0.75 * errors[0]);
}

TEST(Fpme, MassIsConserved) {
  for (double sigma : {0.3, 0.5, 1.0}) {
    auto g = grid(CrossSectionSpec::sphere(2), 3, 1e-3, 64);
    SolverConfig cfg = config(Equation::Fpme, 1e-3, 0.1);
    cfg.sigma = sigma;
    std::mt19937 rng(4);
    const ConeField u0(g, testing_support::uniform_values(g->nx(), g->ny(), 0.5, 1.5, rng));
    const double m0 = mass(u0);
    run(Stepper(g, cfg), u0, 1000, [&](int k, double, const ConeField& u) {
      EXPECT_LE(std::abs(mass(u) - m0), 1e-10 * m0 * k) << sigma;
    });
  }
}

TEST(CahnHilliard, EnergyDecaysAndMassIsKept) {
  auto g = grid(CrossSectionSpec::circle(1.0), 4, 1e-2, 64);
  SolverConfig cfg = config(Equation::CahnHilliard, 1e-3, 0.3);
  Stepper stepper(g, cfg);
  std::mt19937 rng(17);
  Eigen::MatrixXd v = testing_support::uniform_values(g->nx(), g->ny(), -0.5, 0.5, rng);
  v.array() += 0.3;
  const ConeField u0(g, v);
  double previous = energy_phi(stepper.laplacian(), u0);
  const double m0 = mass(u0);
  run(stepper, u0, 1000, [&](int k, double, const ConeField& u) {
    const double e = energy_phi(stepper.laplacian(), u);
    EXPECT_LE(e, previous + 1e-8) << "step " << k;
    previous = e;
    EXPECT_LE(std::abs(mass(u) - m0), 1e-10 * std::abs(m0) * k);
  });
}

TEST(Yamabe, ScalarFlatConeIsStationary) {
  for (int n : {2, 3}) {
    auto g = grid(CrossSectionSpec::sphere(n), 3, 1e-3, 64);
    Stepper stepper(g, config(Equation::Yamabe, 1e-3, 1e-2));
    ConeField u = ConeField::constant(g, 1.0);
    for (int k = 0; k < 5; ++k) {
      const ConeField next = stepper.step(u, k * 1e-3);
      EXPECT_LT((next.values - u.values).cwiseAbs().maxCoeff(), 1e-13);
      u = next;
    }
  }
}

TEST(Yamabe, ConstantCurvatureSourceMatchesOde) {
  // Uniform R and uniform u: u' = -(n-1)/4 u^{(n-5)/(n-1)} R, integrated by explicit
  // Euler in the source, exactly as the scheme does for constant data.
  const int n = 3;
  auto g = grid(CrossSectionSpec::sphere(n), 2, 1e-2, 32);
  SolverConfig cfg = config(Equation::Yamabe, 1e-3, 1e-2);
  cfg.yamabe_curvature = Eigen::MatrixXd::Constant(g->nx(), g->ny(), 0.6);
  Stepper stepper(g, cfg);
  double expected = 1.0;
  for (int k = 0; k < 10; ++k) expected -= 1e-3 * 0.5 * std::pow(expected, -1.0) * 0.6;
  const ConeField u = run(stepper, ConeField::constant(g, 1.0)).states.back();
  EXPECT_NEAR(u.values.minCoeff(), expected, 1e-12);
  EXPECT_NEAR(u.values.maxCoeff(), expected, 1e-12);
}

TEST(Yamabe, RequiresDimensionTwo) {
  auto g = grid(CrossSectionSpec::circle(1.0), 2, 1e-2, 16);
  EXPECT_THROW(Stepper(g, config(Equation::Yamabe, 1e-3, 1e-2)), ConeError);
}

TEST(Solver, CustomSpectraAreLinearOnly) {
  auto s = std::make_shared<const CrossSectionSpectrum>(
      build_cross_section(CrossSectionSpec::custom(1, {0.0, -2.0, -5.0}, true), 3));
  auto g = std::make_shared<const ConeGrid>(s, 1e-2, 32);
  EXPECT_NO_THROW(Stepper(g, config(Equation::Heat, 1e-3, 1e-2)));
  try {
    Stepper(g, config(Equation::Pme, 1e-3, 1e-2));
    FAIL();
  } catch (const ConeError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Unsupported);
  }
}

TEST(Solver, BlowupIsDetected) {
  auto g = grid(CrossSectionSpec::circle(1.0), 2, 1e-2, 16);
  SolverConfig cfg = config(Equation::Heat, 1e-3, 1e-2);
  cfg.forcing = [](double, const Eigen::MatrixXd& u) { return 1e16 * u; };
  try {
    run(Stepper(g, cfg), ConeField::constant(g, 1.0));
    FAIL();
  } catch (const ConeError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Blowup);
  }
}

TEST(Solver, InvalidConfigurations) {
  auto g = grid(CrossSectionSpec::circle(1.0), 2, 1e-2, 16);
  EXPECT_THROW(Stepper(g, config(Equation::Heat, 0.0, 1.0)), ConeError);
  SolverConfig bad = config(Equation::Fpme, 1e-3, 1e-2);
  bad.sigma = 1.5;
  EXPECT_THROW(Stepper(g, bad), ConeError);
  bad = config(Equation::Pme, 1e-3, 1e-2);
  bad.m = -1.0;
  EXPECT_THROW(Stepper(g, bad), ConeError);
  EXPECT_THROW(grid(CrossSectionSpec::circle(1.0, 4), 3, 1e-2, 16), ConeError);
}

TEST(Solver, ThreadCountDoesNotChangeResults) {
  auto g = grid(CrossSectionSpec::circle(1.0), 4, 1e-2, 48);
  const ConeField u0 = smooth_circle_field(g, 0.2, 0.5, 9);
  SolverConfig cfg = config(Equation::CahnHilliard, 1e-3, 1e-2);
  setenv("CONETOOL_THREADS", "1", 1);
  const Eigen::MatrixXd serial = run(Stepper(g, cfg), u0, 100).states.back().values;
  setenv("CONETOOL_THREADS", "3", 1);
  const Eigen::MatrixXd threaded = run(Stepper(g, cfg), u0, 100).states.back().values;
  unsetenv("CONETOOL_THREADS");
  EXPECT_EQ((serial - threaded).cwiseAbs().maxCoeff(), 0.0);
}
