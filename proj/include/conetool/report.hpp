#pragma once

// JSON analysis reports, CSV trajectories and snapshots, SVG plots, run manifests.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "conetool/config.hpp"
#include "conetool/diagnostics.hpp"
#include "conetool/mellin.hpp"
#include "conetool/weights.hpp"

namespace conetool {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

/// Non-finite doubles become strings so serialization round-trips.
inline Json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline Json json_interval(const Interval& iv) { return Json::array({json_number(iv.lo), json_number(iv.hi)}); }

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// ---------------------------------------------------------------------------
// Analysis

inline Json to_json(const PoleLattice& lattice) {
  Json modes = Json::array();
  for (const auto& m : lattice.modes)
    modes.push_back({{"j", m.j}, {"lambda", m.lambda}, {"multiplicity", m.multiplicity},
                     {"q_minus", m.q_minus}, {"q_plus", m.q_plus}});
  Json poles = Json::array();
  Json doubles = Json::array();
  for (const auto& p : lattice.poles) {
    Json contributions = Json::array();
    for (const auto& c : p.contributions)
      contributions.push_back({{"mode", c.mode}, {"sign", to_string(c.sign)}, {"shift", c.shift}});
    poles.push_back({{"q", p.q}, {"order", p.order}, {"contributions", contributions}});
    if (p.order == 2) doubles.push_back(p.q);
  }
  return {{"order", order_mu(lattice.order)}, {"coverage", json_interval(lattice.coverage)},
          {"modes", modes}, {"poles", poles}, {"double_poles", doubles}};
}

inline Json to_json(const GammaWindow& w) {
  Json intervals = Json::array();
  for (const auto& iv : w.intervals) intervals.push_back(json_interval(iv));
  Json excluded = Json::array();
  for (double g : w.excluded) excluded.push_back(g);
  return {{"mode", to_string(w.mode)}, {"k", w.k}, {"base", json_interval(w.base)},
          {"intervals", intervals}, {"excluded", excluded}, {"empty", w.empty}};
}

inline Json to_json(const AsymptoticsSpace& a) {
  return {{"q", a.q_loc}, {"mode", a.mode}, {"log_power", a.log_power}, {"dimension", a.dimension},
          {"sign", to_string(a.sign)}, {"shift", a.shift}};
}

inline Json to_json(const SobolevCore& c) {
  return {{"smoothness", c.smoothness}, {"weight", c.weight}, {"p", json_number(c.p)}};
}

inline Json to_json(const DomainSpec& d) {
  Json selected = Json::array();
  for (const auto& a : d.selected) selected.push_back(to_json(a));
  return {{"flavor", to_string(d.flavor)}, {"preset", to_string(d.preset)}, {"mu", d.mu},
          {"core", to_json(d.core)}, {"selected", selected}, {"constants_slice", d.underline_E0}};
}

inline Json to_json(const HinftyVerdict& v) {
  Json selections = Json::array();
  for (const auto& s : v.selections)
    selections.push_back({{"q", s.q}, {"selection", to_string(s.selection)}, {"double_pole", s.double_pole}});
  Json conditions = Json::array();
  for (const auto& c : v.conditions) conditions.push_back({{"id", c.id}, {"pass", c.pass}, {"details", c.details}});
  return {{"admissible", v.admissible}, {"failure", to_string(v.failure)}, {"message", v.message},
          {"selections", selections}, {"conditions", conditions}};
}

inline Json to_json(const Feasibility& f) {
  Json inequalities = Json::array();
  for (const auto& i : f.inequalities)
    inequalities.push_back({{"expression", i.expression}, {"lhs", json_number(i.lhs)}, {"rhs", json_number(i.rhs)},
                            {"strict", i.strict}, {"pass", i.pass()}});
  return {{"feasible", f.feasible}, {"inequalities", inequalities}};
}

inline Json to_json(const InterpolationDescriptor& d) {
  Json retained = Json::array();
  for (const auto& a : d.retained) retained.push_back(to_json(a));
  return {{"inner_core", to_json(d.inner_core)}, {"outer_core", to_json(d.outer_core)},
          {"epsilon", d.epsilon}, {"threshold", d.threshold}, {"r", d.r},
          {"retained", retained}, {"constants_slice", d.underline_E0}};
}

inline DomainFlavor domain_flavor(const std::string& name) {
  if (name == "minimal") return DomainFlavor::Minimal;
  if (name == "maximal") return DomainFlavor::Maximal;
  return DomainFlavor::Custom;
}

inline DomainPreset domain_preset(const std::string& name) {
  if (name == "constants") return DomainPreset::ConstantsOnly;
  if (name == "all-decaying") return DomainPreset::AllDecaying;
  if (name == "decaying") return DomainPreset::Decaying;
  if (name == "biharmonic") return DomainPreset::Biharmonic;
  return DomainPreset::None;
}

inline WindowMode window_mode(const std::string& name) {
  for (auto m : {WindowMode::ShortTimePme, WindowMode::MaximalAsymptotics, WindowMode::TipAsymptotics,
                 WindowMode::CahnHilliard})
    if (to_string(m) == name) return m;
  fail(ErrorKind::ConfigError, "unknown window mode '" + name + "'");
}

/// Analysis spectrum: circles and spheres get as many modes as it takes for the
/// lattice to cover `needed`; custom spectra are used as given.
inline CrossSectionSpectrum analysis_spectrum(const RunConfig& cfg, const Interval& needed) {
  int modes = cfg.modes;
  CrossSectionSpec spec = cfg.spectrum_spec();
  if (spec.kind != CrossSectionKind::Custom) spec.grid_points = 0;
  for (;;) {
    CrossSectionSpectrum sp = build_cross_section(spec, modes);
    const Interval range = MellinSymbol(sp).resolved_range();
    if (spec.kind == CrossSectionKind::Custom || (range.lo <= needed.lo && range.hi >= needed.hi)) return sp;
    require(modes < 4096, ErrorKind::UnderResolved, "cannot resolve the pole lattice on the analysis window");
    modes *= 2;
  }
}

struct AnalysisResult {
  Json report;
  std::vector<std::string> warnings;
};

/// Pole lattice, weight windows for every mode, the configured domain, its H-infinity
/// verdict, (p, q) feasibility and the interpolation descriptor.
inline AnalysisResult analyze(const RunConfig& cfg) {
  AnalysisResult out;
  Json& r = out.report;
  const double half = 0.5 * (cfg.dim + 1);
  double reach = cfg.gamma ? std::abs(*cfg.gamma) : 0.0;
  const Interval needed{std::min(-4.0, half - reach - 4.0), std::max(4.0, half + reach)};
  const CrossSectionSpectrum sp = analysis_spectrum(cfg, needed);
  const MellinSymbol sym(sp);
  const PoleLattice lattice = sym.poles(needed);

  r["kind"] = "analysis";
  r["cross_section"] = {{"type", cfg.cross_section}, {"n", sp.dim()}, {"scale", cfg.scale},
                        {"eigenvalues", sp.eigenvalues()}, {"multiplicities", sp.multiplicities()},
                        {"exhaustive", sp.exhaustive()}};
  r["poles"] = to_json(lattice);

  Json windows = Json::object();
  std::optional<GammaWindow> chosen;
  for (auto m : {WindowMode::ShortTimePme, WindowMode::MaximalAsymptotics, WindowMode::TipAsymptotics,
                 WindowMode::CahnHilliard}) {
    const GammaWindow w = gamma_window(lattice, sp.dim(), m);
    windows[to_string(m)] = to_json(w);
    if (w.empty) out.warnings.push_back("empty " + to_string(m) + " window (k = " + std::to_string(w.k) + ")");
    if (m == WindowMode::MaximalAsymptotics && w.k == 0)
      out.warnings.push_back("k = 0: no exponent q_j^- in (-2, 0), decaying asymptotics presets are unavailable");
    if (to_string(m) == cfg.window_mode) chosen = w;
  }
  r["windows"] = windows;

  double gamma = 0.0;
  std::string source = "config";
  if (cfg.gamma) {
    gamma = *cfg.gamma;
  } else if (chosen && !chosen->empty) {
    gamma = 0.5 * (chosen->intervals.front().lo + chosen->intervals.front().hi);
    source = "midpoint of the first " + cfg.window_mode + " interval";
  } else {
    source = "default (empty " + cfg.window_mode + " window)";
  }
  const WeightConfig w = [&] {
    WeightConfig c = cfg.weights(gamma);
    c.n = sp.dim();
    return c;
  }();
  r["weights"] = {{"n", w.n}, {"s", w.s}, {"gamma", w.gamma}, {"gamma_source", source}, {"p", w.p},
                  {"q", w.q}, {"line", w.line()}, {"h_x_dependent", w.h_x_dependent}};
  const EllipticityVerdict on_line = is_elliptic_on_line(sym, gamma);
  const EllipticityVerdict on_shift = is_elliptic_on_line(sym, gamma + 2.0);
  r["ellipticity"] = {{"line", on_line.line}, {"elliptic", on_line.elliptic},
                      {"shifted_line", on_shift.line}, {"shifted_elliptic", on_shift.elliptic}};

  Json feas = Json::object();
  feas["pme"] = to_json(pq_feasible(w, FeasibilityMode::Pme));
  feas["fpme"] = to_json(pq_feasible(w, FeasibilityMode::Fpme, cfg.sigma));
  feas["cahn-hilliard"] = to_json(pq_feasible(w, FeasibilityMode::CahnHilliard));
  r["feasibility"] = feas;

  auto section_error = [&](const std::string& key, const ConeError& e) {
    r[key] = {{"error", e.what()}};
    out.warnings.push_back(key + ": " + e.what());
  };
  std::optional<DomainSpec> domain;
  try {
    domain = build_domain(sym, w, domain_flavor(cfg.domain), domain_preset(cfg.domain));
    r["domain"] = to_json(*domain);
  } catch (const ConeError& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    section_error("domain", e);
  }
  if (domain) {
    try {
      r["hinfty"] = to_json(check_hinfty_admissible(*domain, w, lattice));
    } catch (const ConeError& e) {
      section_error("hinfty", e);
    }
    if (domain->mu == 2) {
      try {
        r["interpolation"] = to_json(interpolation_descriptor(w, *domain, lattice, cfg.epsilon));
      } catch (const ConeError& e) {
        section_error("interpolation", e);
      }
    } else {
      r["interpolation"] = {{"error", "interpolation descriptor needs a Laplacian domain"}};
    }
  }
  r["warnings"] = out.warnings;
  return out;
}

// ---------------------------------------------------------------------------
// CSV

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::InvalidArgument, "cannot write " + path.string());
  f << text;
}

inline std::string csv_row(const std::vector<double>& values) {
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) line += (i ? "," : "") + format_double(values[i]);
  return line + "\n";
}

/// tau, x, mode_0, mode_1, ...: per-node mode amplitudes of one state.
inline std::string snapshot_csv(const ConeLaplacian& op, const ConeField& u) {
  const ConeGrid& g = *u.grid;
  std::string text = "tau,x";
  for (int j = 0; j < op.mode_count(); ++j) text += ",mode_" + std::to_string(j);
  text += "\n";
  std::vector<Eigen::VectorXd> amp;
  for (int j = 0; j < op.mode_count(); ++j) amp.push_back(mode_amplitude(op, u, j));
  for (int i = 0; i < g.nx(); ++i) {
    std::vector<double> row{g.tau()(i), g.x()(i)};
    for (const auto& a : amp) row.push_back(a(i));
    text += csv_row(row);
  }
  return text;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
  Eigen::VectorXd values(int col) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) v(static_cast<Eigen::Index>(i)) = rows[i].at(col);
    return v;
  }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorKind::ConfigError, "missing file " + path.string());
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
  };
  require(static_cast<bool>(std::getline(f, line)), ErrorKind::ConfigError, path.string() + " is empty");
  t.header = split(line);
  int number = 1;
  while (std::getline(f, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split(line)) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      require(end && *end == '\0' && !cell.empty(), ErrorKind::ConfigError,
              path.string() + ":" + std::to_string(number) + ": bad number '" + cell + "'");
      row.push_back(v);
    }
    require(row.size() == t.header.size(), ErrorKind::ConfigError,
            path.string() + ":" + std::to_string(number) + ": wrong column count");
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------
// SVG

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
};

/// Line plot; log axes drop nonpositive points.
inline std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                            const std::vector<PlotSeries>& series, bool log_x, bool log_y) {
  const double width = 640, height = 420, left = 70, right = 20, top = 40, bottom = 50;
  auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!log_x || x > 0) && (!log_y || y > 0);
  };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (usable(s.x[i], s.y[i])) {
        x0 = std::min(x0, tx(s.x[i]));
        x1 = std::max(x1, tx(s.x[i]));
        y0 = std::min(y0, ty(s.y[i]));
        y1 = std::max(y1, ty(s.y[i]));
      }
  if (!std::isfinite(x0)) {
    x0 = y0 = 0.0;
    x1 = y1 = 1.0;
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * (width - left - right); };
  auto py = [&](double v) { return height - bottom - (ty(v) - y0) / (y1 - y0) * (height - top - bottom); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right << "\" height=\""
    << height - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  auto label = [&](double v, bool log) {
    std::ostringstream s;
    s.precision(3);
    if (log) s << "1e" << v; else s << v;
    return s.str();
  };
  o << "<text x=\"" << left << "\" y=\"" << height - bottom + 18 << "\" font-size=\"11\">" << label(x0, log_x)
    << "</text>\n";
  o << "<text x=\"" << width - right << "\" y=\"" << height - bottom + 18
    << "\" font-size=\"11\" text-anchor=\"end\">" << label(x1, log_x) << "</text>\n";
  o << "<text x=\"" << left - 4 << "\" y=\"" << height - bottom << "\" font-size=\"11\" text-anchor=\"end\">"
    << label(y0, log_y) << "</text>\n";
  o << "<text x=\"" << left - 4 << "\" y=\"" << top + 10 << "\" font-size=\"11\" text-anchor=\"end\">"
    << label(y1, log_y) << "</text>\n";
  o << "<text x=\"" << width / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << xlabel << "</text>\n";
  o << "<text x=\"16\" y=\"" << height / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 " << height / 2
    << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    o << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << colors[k % 6] << "\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (usable(s.x[i], s.y[i])) o << px(s.x[i]) << "," << py(s.y[i]) << " ";
    o << "\"/>\n";
    o << "<text x=\"" << width - right - 8 << "\" y=\"" << top + 16 + 14 * k << "\" font-size=\"11\" fill=\""
      << colors[k % 6] << "\" text-anchor=\"end\">" << s.name << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Manifest

struct Manifest {
  std::string command;
  std::string config_path;
  std::map<std::string, std::string> config;
  unsigned seed = 42;
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;
  std::string status = "pass";
  int exit_code = 0;
  Json summary = Json::object();

  Json to_json() const {
    Json cfg = Json::object();
    for (const auto& [k, v] : config) cfg[k] = v;
    return {{"command", command},
            {"config_path", config_path},
            {"config", cfg},
            {"seed", seed},
            {"versions",
             {{"conetool", kToolVersion},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"compiler", __VERSION__},
              {"cxx_standard", __cplusplus}}},
            {"outputs", outputs},
            {"wall_seconds", wall_seconds},
            {"status", status},
            {"exit_code", exit_code},
            {"summary", summary}};
  }
};

}  // namespace conetool
