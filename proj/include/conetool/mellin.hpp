#pragma once

// Conormal (Mellin) symbol of the cone Laplacian and its square.
//
// On the straight cone the symbol is diagonal in the cross-section eigenbasis:
//   sigma_M(Delta)(z)   = z^2 - (n-1) z + lambda_j          on E_j
//   sigma_M(Delta^2)(z) = sigma_M(Delta)(z+2) sigma_M(Delta)(z)
// so all pole data follow from the indicial roots
//   q_j^{+-} = (n-1)/2 +- sqrt(((n-1)/2)^2 - lambda_j).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "conetool/cross_section.hpp"
#include "conetool/errors.hpp"

namespace conetool {

/// Pole coincidence tolerance.
inline constexpr double kPoleTol = 1e-9;

enum class SymbolOrder { Laplacian = 2, Bilaplacian = 4 };

inline int order_mu(SymbolOrder order) { return static_cast<int>(order); }

enum class RootSign { Minus, Plus, Both };

inline std::string to_string(RootSign s) {
  switch (s) {
    case RootSign::Minus: return "minus";
    case RootSign::Plus: return "plus";
    case RootSign::Both: return "both";
  }
  return "unknown";
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool empty() const { return !(hi > lo); }
  /// Strictly inside, at distance more than `tol` from both ends.
  bool contains_open(double x, double tol = kPoleTol) const { return x > lo + tol && x < hi - tol; }
  bool contains_closed(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
  bool near_endpoint(double x, double tol = kPoleTol) const {
    return std::abs(x - lo) <= tol || std::abs(x - hi) <= tol;
  }
};

/// Indicial roots of one cross-section mode.
struct ModeRoots {
  int j = 0;
  double lambda = 0.0;
  int multiplicity = 1;
  double q_minus = 0.0;
  double q_plus = 0.0;
};

/// One of the (up to four) roots of a mode's symbol that lands on a pole.
struct PoleContribution {
  int mode = 0;
  RootSign sign = RootSign::Minus;
  int shift = 0;  // 2 when the root is q_j^{+-} - 2 (Delta^2 only)
};

struct Pole {
  double q = 0.0;
  int order = 1;
  std::vector<PoleContribution> contributions;

  std::set<int> modes() const {
    std::set<int> m;
    for (const auto& c : contributions) m.insert(c.mode);
    return m;
  }
  RootSign sign() const {
    bool minus = false, plus = false;
    for (const auto& c : contributions) (c.sign == RootSign::Plus ? plus : minus) = true;
    return plus && minus ? RootSign::Both : (plus ? RootSign::Plus : RootSign::Minus);
  }
  /// Number of this mode's roots sitting on the pole (its order in that mode).
  int mode_order(int mode) const {
    int count = 0;
    for (const auto& c : contributions)
      if (c.mode == mode) ++count;
    return count;
  }
};

struct PoleLattice {
  int n = 1;
  SymbolOrder order = SymbolOrder::Laplacian;
  /// Closed interval in which the pole list is complete.
  Interval coverage;
  std::vector<ModeRoots> modes;
  std::vector<Pole> poles;  // ascending

  const Pole* find(double q, double tol = kPoleTol) const {
    for (const auto& p : poles)
      if (std::abs(p.q - q) <= tol) return &p;
    return nullptr;
  }
  /// q_j^- when mode j is resolved, otherwise -infinity (every unresolved
  /// mode has its minus root below the coverage).
  double q_minus(int j) const {
    if (j < static_cast<int>(modes.size())) return modes[j].q_minus;
    return -std::numeric_limits<double>::infinity();
  }
  bool covers(const Interval& window) const {
    return coverage.lo <= window.lo && coverage.hi >= window.hi;
  }
};

inline ModeRoots indicial_roots(int n, int j, double lambda, int multiplicity = 1) {
  require(lambda <= kEigenvalueMergeTol, ErrorKind::InvalidArgument,
          "positive cross-section eigenvalue gives complex indicial roots");
  const double h = 0.5 * (n - 1);
  const double r = std::sqrt(h * h - std::min(lambda, 0.0));
  return ModeRoots{j, lambda, multiplicity, h - r, h + r};
}

class MellinSymbol {
 public:
  MellinSymbol(const CrossSectionSpectrum& spectrum, SymbolOrder order = SymbolOrder::Laplacian)
      : n_(spectrum.dim()),
        order_(order),
        eigenvalues_(spectrum.eigenvalues()),
        multiplicities_(spectrum.multiplicities()),
        exhaustive_(spectrum.exhaustive()) {}

  MellinSymbol squared() const {
    MellinSymbol out = *this;
    out.order_ = SymbolOrder::Bilaplacian;
    return out;
  }

  int n() const { return n_; }
  SymbolOrder order() const { return order_; }
  int mu() const { return order_mu(order_); }
  int mode_count() const { return static_cast<int>(eigenvalues_.size()); }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  bool exhaustive() const { return exhaustive_; }

  ModeRoots roots(int j) const { return indicial_roots(n_, j, eigenvalues_.at(j), multiplicities_.at(j)); }

  /// Per-mode value of the symbol at z.
  std::vector<std::complex<double>> eval(std::complex<double> z) const {
    std::vector<std::complex<double>> out;
    out.reserve(eigenvalues_.size());
    const double b = n_ - 1.0;
    for (double lambda : eigenvalues_) {
      auto quad = [&](std::complex<double> w) { return w * w - b * w + lambda; };
      out.push_back(order_ == SymbolOrder::Laplacian ? quad(z) : quad(z + 2.0) * quad(z));
    }
    return out;
  }

  /// Range of real parts the resolved modes certify: every unresolved pole
  /// lies strictly outside it.
  Interval resolved_range() const {
    if (exhaustive_) return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    const ModeRoots last = roots(mode_count() - 1);
    const double shift = order_ == SymbolOrder::Bilaplacian ? 2.0 : 0.0;
    return {last.q_minus, last.q_plus - shift};
  }

  /// Poles of the inverse symbol in the closed window, ascending and merged.
  PoleLattice poles(const Interval& window) const {
    require(std::isfinite(window.lo) && std::isfinite(window.hi) && window.lo <= window.hi,
            ErrorKind::InvalidArgument, "pole window must be a bounded interval");
    const Interval range = resolved_range();
    if (!(range.lo <= window.lo && range.hi >= window.hi))
      fail(ErrorKind::UnderResolved,
           "resolved modes certify poles only in [" + std::to_string(range.lo) + ", " +
               std::to_string(range.hi) + "]; requested [" + std::to_string(window.lo) + ", " +
               std::to_string(window.hi) + "]");

    struct Candidate {
      double q;
      PoleContribution c;
    };
    std::vector<Candidate> candidates;
    PoleLattice lattice;
    lattice.n = n_;
    lattice.order = order_;
    lattice.coverage = window;
    for (int j = 0; j < mode_count(); ++j) {
      const ModeRoots r = roots(j);
      lattice.modes.push_back(r);
      const double shifts[] = {0.0, 2.0};
      for (double s : shifts) {
        if (s > 0.0 && order_ == SymbolOrder::Laplacian) break;
        const int shift = static_cast<int>(s);
        for (auto [q, sign] : {std::pair{r.q_minus, RootSign::Minus}, std::pair{r.q_plus, RootSign::Plus}}) {
          const double loc = q - s;
          if (loc >= window.lo - kPoleTol && loc <= window.hi + kPoleTol)
            candidates.push_back({loc, PoleContribution{j, sign, shift}});
        }
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.q != b.q) return a.q < b.q;
      return a.c.mode < b.c.mode;
    });
    for (const auto& cand : candidates) {
      if (!lattice.poles.empty() && cand.q - lattice.poles.back().q <= kPoleTol) {
        lattice.poles.back().contributions.push_back(cand.c);
      } else {
        lattice.poles.push_back(Pole{cand.q, 1, {cand.c}});
      }
    }
    // Projections onto distinct eigenspaces cannot cancel, so the order of a merged
    // pole is the largest per-mode root multiplicity.
    for (auto& pole : lattice.poles) {
      int order = 1;
      for (int mode : pole.modes()) order = std::max(order, pole.mode_order(mode));
      pole.order = order;
    }
    return lattice;
  }

 private:
  int n_;
  SymbolOrder order_;
  std::vector<double> eigenvalues_;
  std::vector<int> multiplicities_;
  bool exhaustive_;
};

inline std::vector<std::complex<double>> eval_symbol(const MellinSymbol& sym, std::complex<double> z) {
  return sym.eval(z);
}

inline PoleLattice poles_of_inverse(const MellinSymbol& sym, const Interval& window) { return sym.poles(window); }

struct EllipticityVerdict {
  bool elliptic = true;
  double line = 0.0;                // real part (n+1)/2 - gamma
  std::optional<Pole> witness;      // offending pole when not elliptic
  bool interior_symbol_ok = true;   // principal symbol condition holds for Delta by construction
};

/// Is the symbol invertible on the vertical line Re z = (n+1)/2 - gamma?
inline EllipticityVerdict is_elliptic_on_line(const MellinSymbol& sym, double gamma) {
  EllipticityVerdict verdict;
  verdict.line = 0.5 * (sym.n() + 1) - gamma;
  const PoleLattice lattice = sym.poles({verdict.line, verdict.line});
  if (const Pole* p = lattice.find(verdict.line)) {
    verdict.elliptic = false;
    verdict.witness = *p;
  }
  return verdict;
}

}  // namespace conetool
