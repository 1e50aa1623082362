#pragma once

// Flat key = value run configuration.
//
//   # comment
//   cross_section = sphere
//   dim = 2
//
// Keys are case sensitive; unknown keys, duplicates and malformed values are
// ConfigError with the file name and line number.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "conetool/cross_section.hpp"
#include "conetool/errors.hpp"
#include "conetool/grid.hpp"
#include "conetool/solver.hpp"
#include "conetool/weights.hpp"

namespace conetool {

struct ConfigEntry {
  std::string value;
  int line = 0;
};

/// Parsed key = value pairs with their source lines.
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text, const std::string& source = "<config>") {
    ConfigFile out;
    out.source_ = source;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto hash = raw.find('#');
      std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos) out.error(line, "expected 'key = value', got '" + body + "'");
      const std::string key = trim(body.substr(0, eq));
      const std::string value = trim(body.substr(eq + 1));
      if (key.empty()) out.error(line, "missing key before '='");
      for (char c : key)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
          out.error(line, "invalid character in key '" + key + "'");
      if (value.empty()) out.error(line, "missing value for '" + key + "'");
      if (auto it = out.entries_.find(key); it != out.entries_.end())
        out.error(line, "duplicate key '" + key + "' (first set on line " + std::to_string(it->second.line) + ")");
      out.entries_[key] = {value, line};
    }
    return out;
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorKind::ConfigError, path + ": cannot open config file");
    std::stringstream buffer;
    buffer << f.rdbuf();
    return parse(buffer.str(), path);
  }

  const std::string& source() const { return source_; }
  const std::map<std::string, ConfigEntry>& entries() const { return entries_; }
  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  [[noreturn]] void error(int line, const std::string& msg) const {
    fail(ErrorKind::ConfigError, source_ + ":" + std::to_string(line) + ": " + msg);
  }

  /// Reject keys outside `known`.
  void check_keys(const std::vector<std::string>& known) const {
    for (const auto& [key, entry] : entries_) {
      bool ok = false;
      for (const auto& k : known) ok = ok || k == key;
      if (!ok) error(entry.line, "unknown key '" + key + "'");
    }
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second.value;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    return to_double(it->second);
  }

  int get_int(const std::string& key, int fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const double v = to_double(it->second);
    if (v != std::floor(v) || std::abs(v) > 1e9) error(it->second.line, "'" + key + "' must be an integer");
    return static_cast<int>(v);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::string& v = it->second.value;
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    error(it->second.line, "'" + key + "' must be true or false, got '" + v + "'");
  }

  std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second.value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double({trim(item), it->second.line}));
    return out;
  }

  /// One of `choices`, or a ConfigError naming them.
  std::string get_choice(const std::string& key, const std::string& fallback,
                         const std::vector<std::string>& choices) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    for (const auto& c : choices)
      if (c == it->second.value) return c;
    std::string list;
    for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
    error(it->second.line, "'" + key + "' must be one of {" + list + "}, got '" + it->second.value + "'");
  }

  int line_of(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  double to_double(const ConfigEntry& e) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(e.value, &used);
      if (used != e.value.size()) throw std::invalid_argument("trailing");
      if (!std::isfinite(v)) throw std::invalid_argument("inf");
      return v;
    } catch (const std::logic_error&) {
      error(e.line, "expected a finite number, got '" + e.value + "'");
    }
  }

  std::string source_;
  std::map<std::string, ConfigEntry> entries_;
};

/// Every option of a run, with defaults.
struct RunConfig {
  // cross-section
  std::string cross_section = "circle";
  double scale = 1.0;
  int dim = 1;
  std::vector<double> eigenvalues;
  bool exhaustive = false;
  int modes = 4;
  int grid_points = 0;
  // weights and domain
  std::optional<double> gamma;  // empty: midpoint of the first window_mode interval
  std::string window_mode = "max-asymptotics";
  double s = 0.0;
  double p = 8.0;
  double q = 8.0;
  std::string domain = "constants";
  double epsilon = 1e-3;
  bool h_x_dependent = false;
  // solver
  std::string equation = "pme";
  double m = 2.0;
  double sigma = 1.0;
  double dt = 1e-4;
  double t_end = 0.01;
  double x_min = 1e-3;
  int nx = 256;
  std::string inner_bc = "robin";
  std::string cross_operator = "spectral";
  std::string linearization = "newton";
  double ch_stabilization = 1.0;
  double yamabe_curvature = 0.0;
  // data and output
  std::string initial = "tip";
  double initial_base = 1.0;
  double initial_amplitude = 0.1;
  int initial_mode = 1;
  std::optional<std::pair<double, double>> fit_window;
  std::vector<int> fit_modes{1};
  int save_every = 10;
  bool plot = true;

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k{
        "cross_section", "scale", "dim", "eigenvalues", "exhaustive", "modes", "grid_points", "gamma",
        "window_mode", "s", "p", "q", "domain", "epsilon", "h_x_dependent", "equation", "m", "sigma", "dt",
        "t_end", "x_min", "nx", "inner_bc", "cross_operator", "linearization", "ch_stabilization",
        "yamabe_curvature", "initial", "initial_base", "initial_amplitude", "initial_mode", "fit_window",
        "fit_modes", "save_every", "plot"};
    return k;
  }

  static RunConfig from(const ConfigFile& f) {
    f.check_keys(keys());
    RunConfig c;
    c.cross_section = f.get_choice("cross_section", c.cross_section, {"circle", "sphere", "custom"});
    c.scale = f.get_double("scale", c.scale);
    c.dim = f.get_int("dim", c.cross_section == "sphere" ? 2 : 1);
    c.eigenvalues = f.get_list("eigenvalues", {});
    c.exhaustive = f.get_bool("exhaustive", c.exhaustive);
    c.modes = f.get_int("modes", c.cross_section == "custom" ? distinct_count(c.eigenvalues) : c.modes);
    c.grid_points = f.get_int("grid_points", c.grid_points);
    if (f.has("gamma")) {
      if (f.get_string("gamma", "") == "auto")
        c.gamma.reset();
      else
        c.gamma = f.get_double("gamma", 0.0);
    }
    c.window_mode = f.get_choice("window_mode", c.window_mode,
                                 {"short-time-pme", "max-asymptotics", "tip-asymptotics", "cahn-hilliard"});
    c.s = f.get_double("s", c.s);
    c.p = f.get_double("p", c.p);
    c.q = f.get_double("q", c.q);
    c.domain = f.get_choice("domain", c.domain,
                            {"minimal", "maximal", "constants", "all-decaying", "decaying", "biharmonic"});
    c.epsilon = f.get_double("epsilon", c.epsilon);
    c.h_x_dependent = f.get_bool("h_x_dependent", c.h_x_dependent);
    c.equation = f.get_choice("equation", c.equation, {"heat", "pme", "fpme", "cahn-hilliard", "yamabe"});
    c.m = f.get_double("m", c.m);
    c.sigma = f.get_double("sigma", c.sigma);
    c.dt = f.get_double("dt", c.dt);
    c.t_end = f.get_double("t_end", c.t_end);
    c.x_min = f.get_double("x_min", c.x_min);
    c.nx = f.get_int("nx", c.nx);
    c.inner_bc = f.get_choice("inner_bc", c.inner_bc, {"robin", "neumann"});
    c.cross_operator = f.get_choice("cross_operator", c.cross_operator, {"spectral", "second-difference"});
    c.linearization = f.get_choice("linearization", c.linearization,
                                   {"newton", "newton-one-step", "frozen-coefficient", "v-form"});
    c.ch_stabilization = f.get_double("ch_stabilization", c.ch_stabilization);
    c.yamabe_curvature = f.get_double("yamabe_curvature", c.yamabe_curvature);
    c.initial = f.get_choice("initial", c.default_initial(),
                             {"constant", "random", "random-mean-zero", "tip", "smooth"});
    c.initial_base = f.get_double("initial_base", c.initial == "random-mean-zero" ? 0.0 : c.initial_base);
    c.initial_amplitude = f.get_double("initial_amplitude", c.initial_amplitude);
    c.initial_mode = f.get_int("initial_mode", c.initial_mode);
    if (f.has("fit_window")) {
      const auto w = f.get_list("fit_window", {});
      if (w.size() != 2 || !(w[0] > 0.0 && w[1] > w[0]))
        f.error(f.line_of("fit_window"), "fit_window must be 'lo, hi' with 0 < lo < hi");
      c.fit_window = std::pair{w[0], w[1]};
    }
    if (f.has("fit_modes")) {
      c.fit_modes.clear();
      for (double v : f.get_list("fit_modes", {})) {
        if (v < 0 || v != std::floor(v)) f.error(f.line_of("fit_modes"), "fit_modes must be nonnegative integers");
        c.fit_modes.push_back(static_cast<int>(v));
      }
    }
    c.save_every = f.get_int("save_every", c.save_every);
    c.plot = f.get_bool("plot", c.plot);
    c.validate(f);
    return c;
  }

  /// Snapshot of every resolved option as strings, in key order.
  std::map<std::string, std::string> resolved() const {
    auto num = [](double v) {
      std::ostringstream s;
      s.precision(17);
      s << v;
      return s.str();
    };
    auto list = [&](const auto& v) {
      std::string out;
      for (const auto& x : v) out += (out.empty() ? "" : ",") + num(x);
      return out;
    };
    std::map<std::string, std::string> r;
    r["cross_section"] = cross_section;
    r["scale"] = num(scale);
    r["dim"] = std::to_string(dim);
    r["eigenvalues"] = list(eigenvalues);
    r["exhaustive"] = exhaustive ? "true" : "false";
    r["modes"] = std::to_string(modes);
    r["grid_points"] = std::to_string(grid_points);
    r["gamma"] = gamma ? num(*gamma) : "auto";
    r["window_mode"] = window_mode;
    r["s"] = num(s);
    r["p"] = num(p);
    r["q"] = num(q);
    r["domain"] = domain;
    r["epsilon"] = num(epsilon);
    r["h_x_dependent"] = h_x_dependent ? "true" : "false";
    r["equation"] = equation;
    r["m"] = num(m);
    r["sigma"] = num(sigma);
    r["dt"] = num(dt);
    r["t_end"] = num(t_end);
    r["x_min"] = num(x_min);
    r["nx"] = std::to_string(nx);
    r["inner_bc"] = inner_bc;
    r["cross_operator"] = cross_operator;
    r["linearization"] = linearization;
    r["ch_stabilization"] = num(ch_stabilization);
    r["yamabe_curvature"] = num(yamabe_curvature);
    r["initial"] = initial;
    r["initial_base"] = num(initial_base);
    r["initial_amplitude"] = num(initial_amplitude);
    r["initial_mode"] = std::to_string(initial_mode);
    r["fit_window"] = fit_window ? num(fit_window->first) + "," + num(fit_window->second) : "auto";
    r["fit_modes"] = list(fit_modes);
    r["save_every"] = std::to_string(save_every);
    r["plot"] = plot ? "true" : "false";
    return r;
  }

  CrossSectionSpec spectrum_spec() const {
    if (cross_section == "circle") return CrossSectionSpec::circle(scale, grid_points);
    if (cross_section == "sphere") return CrossSectionSpec::sphere(dim, grid_points);
    return CrossSectionSpec::custom(dim, eigenvalues, exhaustive);
  }

  std::shared_ptr<const CrossSectionSpectrum> spectrum() const {
    return std::make_shared<const CrossSectionSpectrum>(build_cross_section(spectrum_spec(), modes));
  }

  WeightConfig weights(double resolved_gamma) const {
    WeightConfig w;
    w.n = dim;
    w.s = s;
    w.gamma = resolved_gamma;
    w.p = p;
    w.q = q;
    w.h_x_dependent = h_x_dependent;
    return w;
  }

  Equation equation_kind() const {
    if (equation == "heat") return Equation::Heat;
    if (equation == "pme") return Equation::Pme;
    if (equation == "fpme") return Equation::Fpme;
    if (equation == "cahn-hilliard") return Equation::CahnHilliard;
    return Equation::Yamabe;
  }

  SolverConfig solver(const ConeGrid& g) const {
    SolverConfig c;
    c.equation = equation_kind();
    c.m = m;
    c.sigma = sigma;
    c.dt = dt;
    c.t_end = t_end;
    c.inner = inner_bc == "robin" ? InnerBoundary::AsymptoticRobin : InnerBoundary::NeumannTau;
    c.cross = cross_operator == "spectral" ? CrossDiscretization::Spectral : CrossDiscretization::SecondDifference;
    if (linearization == "newton") c.linearization = Linearization::Newton;
    if (linearization == "newton-one-step") c.linearization = Linearization::NewtonOneStep;
    if (linearization == "frozen-coefficient") c.linearization = Linearization::FrozenCoefficient;
    if (linearization == "v-form") c.linearization = Linearization::VForm;
    c.ch_stabilization = ch_stabilization;
    if (c.equation == Equation::Yamabe && yamabe_curvature != 0.0)
      c.yamabe_curvature = Eigen::MatrixXd::Constant(g.nx(), g.ny(), yamabe_curvature);
    return c;
  }

  std::pair<double, double> resolved_fit_window() const {
    if (fit_window) return *fit_window;
    return {3.0 * x_min, std::min(100.0 * x_min, 0.5)};
  }

  /// Initial datum; the seed only matters for the random kinds.
  ConeField initial_field(std::shared_ptr<const ConeGrid> g, unsigned seed) const {
    const auto& sp = g->spectrum();
    Eigen::MatrixXd v = Eigen::MatrixXd::Constant(g->nx(), g->ny(), initial_base);
    if (initial == "constant") return ConeField(g, v);
    if (initial == "random" || initial == "random-mean-zero") {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      for (int i = 0; i < g->nx(); ++i)
        for (int k = 0; k < g->ny(); ++k) v(i, k) += initial_amplitude * dist(rng);
      if (initial == "random-mean-zero") {
        const Eigen::MatrixXd w = g->measure_weights();
        const double mean = (w.array() * v.array()).sum() / w.sum();
        v.array() -= mean - initial_base;
      }
      return ConeField(g, v);
    }
    require(initial_mode >= 0 && initial_mode < sp.mode_count(), ErrorKind::ConfigError,
            "initial_mode " + std::to_string(initial_mode) + " is not a resolved mode");
    const Eigen::VectorXd shape = sp.basis(initial_mode).col(0) / sp.basis(initial_mode).col(0).cwiseAbs().maxCoeff();
    for (int i = 0; i < g->nx(); ++i) {
      const double x = g->x()(i);
      const double radial = initial == "tip" ? std::exp(-1.0 / x) : std::pow(x, 2.0) * std::pow(1.0 - x * x, 2.0);
      v.row(i) += initial_amplitude * radial * shape.transpose();
    }
    return ConeField(g, v);
  }

 private:
  static int distinct_count(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return static_cast<int>(std::unique(v.begin(), v.end()) - v.begin());
  }

  std::string default_initial() const {
    if (equation == "cahn-hilliard") return "random-mean-zero";
    if (equation == "yamabe") return "constant";
    return initial;
  }

  void validate(const ConfigFile& f) const {
    auto bad = [&](const std::string& key, const std::string& msg) { f.error(f.line_of(key), msg); };
    if (!(scale > 0.0)) bad("scale", "scale must be positive");
    if (dim < 1) bad("dim", "dim must be at least 1");
    if (cross_section == "circle" && dim != 1) bad("dim", "a circle cross-section has dim = 1");
    if (cross_section == "sphere" && dim < 2) bad("dim", "sphere cross-sections need dim >= 2");
    if (cross_section == "custom" && eigenvalues.empty()) bad("eigenvalues", "custom cross-sections need eigenvalues");
    if (modes < 1) bad("modes", "modes must be at least 1");
    if (grid_points < 0) bad("grid_points", "grid_points must be nonnegative");
    if (!(dt > 0.0)) bad("dt", "dt must be positive");
    if (!(t_end > 0.0)) bad("t_end", "t_end must be positive");
    if (!(x_min > 0.0 && x_min < 1.0)) bad("x_min", "x_min must lie in (0, 1)");
    if (nx < 3) bad("nx", "nx must be at least 3");
    if (!(m > 0.0)) bad("m", "m must be positive");
    if (!(sigma > 0.0 && sigma <= 1.0)) bad("sigma", "sigma must lie in (0, 1]");
    if (!(p > 1.0)) bad("p", "p must exceed 1");
    if (!(q > 1.0)) bad("q", "q must exceed 1");
    if (!(epsilon > 0.0)) bad("epsilon", "epsilon must be positive");
    if (save_every < 1) bad("save_every", "save_every must be at least 1");
    if (ch_stabilization < 0.0) bad("ch_stabilization", "ch_stabilization must be nonnegative");
  }
};

}  // namespace conetool
