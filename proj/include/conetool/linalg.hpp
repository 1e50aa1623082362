#pragma once

// Small direct solvers and the per-mode thread pool.

#include <algorithm>
#include <cmath>
#include <exception>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "conetool/errors.hpp"

namespace conetool {

/// Solve a tridiagonal system (sub, diag, super) with the Thomas algorithm.
/// sub[i] couples row i+1 to column i, super[i] couples row i to column i+1.
inline Eigen::VectorXd solve_tridiagonal(const Eigen::VectorXd& sub, const Eigen::VectorXd& diag,
                                         const Eigen::VectorXd& super, const Eigen::VectorXd& rhs) {
  const Eigen::Index n = diag.size();
  require(rhs.size() == n && sub.size() == n - 1 && super.size() == n - 1, ErrorKind::InvalidArgument,
          "tridiagonal system has inconsistent sizes");
  Eigen::VectorXd c(n), d(n);
  double pivot = diag(0);
  require(pivot != 0.0 && std::isfinite(pivot), ErrorKind::LinearSolveFailure, "zero pivot in tridiagonal solve");
  c(0) = n > 1 ? super(0) / pivot : 0.0;
  d(0) = rhs(0) / pivot;
  for (Eigen::Index i = 1; i < n; ++i) {
    pivot = diag(i) - sub(i - 1) * c(i - 1);
    require(pivot != 0.0 && std::isfinite(pivot), ErrorKind::LinearSolveFailure, "zero pivot in tridiagonal solve");
    c(i) = i + 1 < n ? super(i) / pivot : 0.0;
    d(i) = (rhs(i) - sub(i - 1) * d(i - 1)) / pivot;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) d(i) -= c(i) * d(i + 1);
  return d;
}

/// Block tridiagonal system with square blocks of equal size.
struct BlockTridiagonal {
  std::vector<Eigen::MatrixXd> sub;    // sub[i] multiplies x[i] in row i+1
  std::vector<Eigen::MatrixXd> diag;   // diag[i] multiplies x[i] in row i
  std::vector<Eigen::MatrixXd> super;  // super[i] multiplies x[i+1] in row i

  /// Block Thomas elimination with pivoted LU of the diagonal blocks.
  /// `rhs` has one row per block row and one column per block component.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const {
    const std::size_t n = diag.size();
    require(rhs.rows() == static_cast<Eigen::Index>(n), ErrorKind::InvalidArgument, "block rhs has wrong size");
    std::vector<Eigen::MatrixXd> c(n);
    Eigen::MatrixXd d(rhs.rows(), rhs.cols());
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    auto factor = [&](const Eigen::MatrixXd& m) { lu.compute(m); };
    factor(diag[0]);
    if (n > 1) c[0] = lu.solve(super[0]);
    d.row(0) = lu.solve(rhs.row(0).transpose()).transpose();
    for (std::size_t i = 1; i < n; ++i) {
      factor(diag[i] - sub[i - 1] * c[i - 1]);
      if (i + 1 < n) c[i] = lu.solve(super[i]);
      d.row(i) = lu.solve((rhs.row(i).transpose() - sub[i - 1] * d.row(i - 1).transpose())).transpose();
    }
    for (std::size_t i = n - 1; i-- > 0;) d.row(i) -= (c[i] * d.row(i + 1).transpose()).transpose();
    require(d.allFinite(), ErrorKind::LinearSolveFailure, "block tridiagonal solve produced non-finite values");
    return d;
  }
};

/// Worker count from CONETOOL_THREADS, defaulting to the hardware concurrency.
inline int thread_budget() {
  int budget = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("CONETOOL_THREADS")) {
    const int requested = std::atoi(env);
    if (requested >= 1) budget = requested;
  }
  return budget;
}

/// Run body(i) for i in [0, count). Every index writes only its own output, so the
/// result does not depend on the schedule.
template <class F>
void parallel_for(int count, F&& body) {
  const int workers = std::min(thread_budget(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace conetool
