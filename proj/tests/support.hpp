#pragma once

// Shared fixtures and reference solutions for the test binaries.

#include <cmath>
#include <memory>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "conetool/diagnostics.hpp"
#include "conetool/grid.hpp"
#include "conetool/solver.hpp"

namespace testing_support {

using namespace conetool;

inline std::shared_ptr<const ConeGrid> grid(const CrossSectionSpec& spec, int modes, double x_min, int nx) {
  auto s = std::make_shared<const CrossSectionSpectrum>(build_cross_section(spec, modes));
  return std::make_shared<const ConeGrid>(s, x_min, nx);
}

/// Smooth field sum_j x^{2 + j} (a_j cos j theta + b_j sin j theta) on a circle grid, plus a constant.
inline ConeField smooth_circle_field(std::shared_ptr<const ConeGrid> g, double base, double amplitude, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const int modes = g->spectrum().mode_count();
  std::vector<double> a(modes), b(modes);
  for (int j = 0; j < modes; ++j) a[j] = dist(rng), b[j] = dist(rng);
  Eigen::MatrixXd v(g->nx(), g->ny());
  for (int i = 0; i < g->nx(); ++i)
    for (int k = 0; k < g->ny(); ++k) {
      const double x = g->x()(i), th = g->spectrum().nodes()(k);
      double s = base;
      for (int j = 0; j < modes; ++j)
        s += amplitude * std::pow(x, 2.0 + j) * (a[j] * std::cos(j * th) + b[j] * std::sin(j * th)) / (1.0 + j);
      v(i, k) = s;
    }
  return ConeField(g, v);
}

/// Independent random field in [lo, hi] at every node.
inline Eigen::MatrixXd uniform_values(int rows, int cols, double lo, double hi, std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) m(i, k) = dist(rng);
  return m;
}

/// Dense reference exp(t L) u0, mode by mode, via scaling and squaring.
inline Eigen::MatrixXd heat_exponential(const ConeLaplacian& op, const Eigen::MatrixXd& u0, double t) {
  ModeCoefficients c = op.to_modes(u0);
  for (int j = 0; j < op.mode_count(); ++j) {
    const Eigen::MatrixXd l = op.assemble(j) * t;
    const Eigen::MatrixXd e = l.exp();
    c[j] = e * c[j];
  }
  return op.from_modes(c);
}

inline double relative_max_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

}  // namespace testing_support
