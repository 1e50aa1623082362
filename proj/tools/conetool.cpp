// conetool: analysis reports, solver runs, verification suites and tip-exponent studies.
//
// Exit codes: 0 success, 1 verification failure, 2 config error, 3 numerical abort.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "conetool/config.hpp"
#include "conetool/diagnostics.hpp"
#include "conetool/report.hpp"
#include "conetool/solver.hpp"
#include "conetool/verify.hpp"

namespace fs = std::filesystem;
using namespace conetool;

namespace {

enum Exit { kSuccess = 0, kVerificationFailure = 1, kConfigError = 2, kNumericalAbort = 3 };

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::LinearSolveFailure:
    case ErrorKind::PositivityLoss:
    case ErrorKind::Blowup:
    case ErrorKind::NoSignal:
      return kNumericalAbort;
    default:
      return kConfigError;
  }
}

struct Options {
  std::string config;
  std::string out = "conetool-out";
  bool force = false;
  unsigned seed = 42;
  int save_every = 0;  // 0: take it from the config
  std::string suite;
};

class Session {
 public:
  Session(std::string command, const Options& opt) : opt_(opt), start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    manifest_.config_path = opt.config;
    manifest_.seed = opt.seed;
    fs::create_directories(opt.out);
  }

  fs::path path(const std::string& name) const { return fs::path(opt_.out) / name; }

  void write(const std::string& name, const std::string& text) {
    write_text(path(name), text);
    manifest_.outputs.push_back(path(name).string());
  }

  Manifest& manifest() { return manifest_; }

  int finish(int code, const std::string& status) {
    manifest_.exit_code = code;
    manifest_.status = status;
    manifest_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    manifest_.outputs.push_back(path("manifest.json").string());
    write_text(path("manifest.json"), manifest_.to_json().dump(2) + "\n");
    return code;
  }

 private:
  Options opt_;
  std::chrono::steady_clock::time_point start_;
  Manifest manifest_;
};

RunConfig load(const Options& opt, Session& s) {
  if (opt.config.empty()) fail(ErrorKind::ConfigError, "--config is required");
  RunConfig cfg = RunConfig::from(ConfigFile::load(opt.config));
  if (opt.save_every > 0) cfg.save_every = opt.save_every;
  s.manifest().config = cfg.resolved();
  return cfg;
}

/// Runs a command body and turns library errors into exit codes; the manifest is
/// written whatever happens.
template <class Body>
int guarded(const std::string& name, const Options& opt, Body&& body) {
  std::optional<Session> session;
  try {
    session.emplace(name, opt);
    return body(*session);
  } catch (const ConeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    const int code = exit_code_for(e.kind());
    if (!session) return code;
    session->manifest().summary["error"] = e.what();
    return session->finish(code, code == kNumericalAbort ? "aborted" : "config-error");
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

// ---------------------------------------------------------------------------

int cmd_analyze(const Options& opt) {
  return guarded("analyze", opt, [&](Session& s) {
    const RunConfig cfg = load(opt, s);
    const AnalysisResult result = analyze(cfg);
    const std::string text = result.report.dump(2);
    if (Json::parse(text) != result.report) fail(ErrorKind::Degenerate, "analysis report does not round-trip");
    s.write("analysis.json", text + "\n");

    const Json& r = result.report;
    std::cout << "cross-section: " << cfg.cross_section << ", n = " << r["cross_section"]["n"] << "\n";
    std::cout << "poles in [" << r["poles"]["coverage"][0] << ", " << r["poles"]["coverage"][1]
              << "]: " << r["poles"]["poles"].size() << ", double poles: " << r["poles"]["double_poles"].dump() << "\n";
    for (const auto& [mode, w] : r["windows"].items()) {
      std::cout << "  gamma window " << mode << " (k = " << w["k"] << "): ";
      if (w["empty"].get<bool>()) std::cout << "empty";
      for (const auto& iv : w["intervals"]) std::cout << "(" << iv[0] << ", " << iv[1] << ") ";
      std::cout << "\n";
    }
    std::cout << "gamma = " << r["weights"]["gamma"] << " (" << r["weights"]["gamma_source"].get<std::string>() << ")\n";
    if (r["domain"].contains("error"))
      std::cout << "domain: " << r["domain"]["error"].get<std::string>() << "\n";
    else
      std::cout << "domain: " << r["domain"]["flavor"].get<std::string>() << "/" << r["domain"]["preset"].get<std::string>()
                << ", " << r["domain"]["selected"].size() << " asymptotics spaces\n";
    if (r.contains("hinfty") && !r["hinfty"].contains("error"))
      std::cout << "H-infinity admissible: " << (r["hinfty"]["admissible"].get<bool>() ? "yes" : "no") << "\n";
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    s.manifest().summary = {{"warnings", result.warnings}};
    return s.finish(kSuccess, "pass");
  });
}

std::optional<FeasibilityMode> gate_mode(Equation e) {
  if (e == Equation::Pme) return FeasibilityMode::Pme;
  if (e == Equation::Fpme) return FeasibilityMode::Fpme;
  if (e == Equation::CahnHilliard) return FeasibilityMode::CahnHilliard;
  return std::nullopt;
}

int cmd_solve(const Options& opt) {
  return guarded("solve", opt, [&](Session& s) {
    const RunConfig cfg = load(opt, s);
    auto spectrum = cfg.spectrum();
    auto grid = std::make_shared<const ConeGrid>(spectrum, cfg.x_min, cfg.nx);
    const SolverConfig scfg = cfg.solver(*grid);

    if (const auto mode = gate_mode(scfg.equation)) {
      const double gamma = analyze(cfg).report["weights"]["gamma"].get<double>();
      const Feasibility f = pq_feasible(cfg.weights(gamma), *mode, cfg.sigma);
      s.manifest().summary["pq_feasible"] = f.feasible;
      if (const Inequality* bad = f.first_violation()) {
        std::cerr << (opt.force ? "warning" : "error") << ": (p, q) constraint violated: " << bad->expression
                  << " fails with lhs = " << format_double(bad->lhs) << ", rhs = " << format_double(bad->rhs)
                  << " (p = " << cfg.p << ", q = " << cfg.q << ", gamma = " << gamma << ")\n";
        if (!opt.force) {
          s.manifest().summary["violated"] = bad->expression;
          return s.finish(kConfigError, "infeasible");
        }
      }
    }

    Stepper stepper(grid, scfg);
    const ConeLaplacian& op = stepper.laplacian();
    const ConeField u0 = cfg.initial_field(grid, opt.seed);
    const auto [fit_lo, fit_hi] = cfg.resolved_fit_window();
    for (int j : cfg.fit_modes)
      if (j >= op.mode_count()) fail(ErrorKind::ConfigError, "fit mode " + std::to_string(j) + " is not resolved");

    std::string header = "t,mass,energy_phi,min,max,dudt";
    for (int j : cfg.fit_modes) header += ",slope_mode_" + std::to_string(j);
    std::string rows;
    std::vector<PlotSeries> plot{{"min", {}, {}}, {"max", {}, {}}};
    const double mass0 = mass(u0);
    double energy_first = 0.0, energy_last = 0.0;
    auto record = [&](double t, const ConeField& u, double dudt) {
      std::vector<double> row{t, mass(u), energy_phi(op, u), u.min(), u.max(), dudt};
      for (int j : cfg.fit_modes) {
        try {
          row.push_back(fit_tip_exponent(op, u, j, fit_lo, fit_hi).slope);
        } catch (const ConeError& e) {
          if (e.kind() != ErrorKind::NoSignal && e.kind() != ErrorKind::UnderResolved) throw;
          row.push_back(std::numeric_limits<double>::quiet_NaN());
        }
      }
      if (rows.empty()) energy_first = row[2];
      energy_last = row[2];
      rows += csv_row(row);
      plot[0].x.push_back(t), plot[0].y.push_back(row[3]);
      plot[1].x.push_back(t), plot[1].y.push_back(row[4]);
    };

    s.write("snapshot_initial.csv", snapshot_csv(op, u0));
    record(0.0, u0, 0.0);
    const int steps = step_count(scfg);
    const Eigen::MatrixXd& w = grid->measure_weights();
    Eigen::MatrixXd previous = u0.values;
    double previous_t = 0.0;
    auto observer = [&](int k, double t, const ConeField& u) {
      if (k % cfg.save_every == 0 || k == steps) {
        const double rate = std::sqrt((w.array() * (u.values - previous).array().square()).sum()) / (t - previous_t);
        record(t, u, rate);
      }
      previous = u.values;
      previous_t = t;
    };
    Trajectory traj;
    try {
      traj = run(stepper, u0, steps + 1, observer);
    } catch (const ConeError& e) {
      if (exit_code_for(e.kind()) != kNumericalAbort) throw;
      s.write("trajectory.csv", header + "\n" + rows);
      throw;
    }
    s.write("trajectory.csv", header + "\n" + rows);
    const ConeField& last = traj.states.back();
    s.write("snapshot_final.csv", snapshot_csv(op, last));
    if (cfg.plot) s.write("trajectory.svg", svg_plot("min / max of u", "t", "u", plot, false, false));

    // Relative to the mass of |u0| so mean-zero data get a meaningful scale.
    const double scale = (grid->measure_weights().array() * u0.values.array().abs()).sum();
    const double drift = std::abs(mass(last) - mass0) / (scale > 0.0 ? scale : 1.0);
    std::cout << "equation " << cfg.equation << ": " << steps << " steps to t = " << cfg.t_end << "\n";
    std::cout << "relative mass drift " << format_double(drift) << ", energy " << format_double(energy_first) << " -> "
              << format_double(energy_last) << "\n";
    s.manifest().summary = {{"steps", steps},         {"t_end", cfg.t_end},
                            {"mass_initial", mass0},  {"mass_final", mass(last)},
                            {"mass_drift", drift},    {"energy_initial", energy_first},
                            {"energy_final", energy_last}, {"forced", opt.force}};
    return s.finish(kSuccess, "pass");
  });
}

int cmd_asymptotics(const Options& opt) {
  return guarded("asymptotics", opt, [&](Session& s) {
    const RunConfig cfg = load(opt, s);
    const fs::path snap = s.path("snapshot_final.csv");
    if (!fs::exists(snap))
      fail(ErrorKind::ConfigError, "missing snapshots: " + snap.string() + " not found (run `conetool solve` first)");
    const CsvTable table = read_csv(snap);
    const int xcol = table.column("x");
    if (xcol < 0) fail(ErrorKind::ConfigError, snap.string() + " has no x column");
    const Eigen::VectorXd x = table.values(xcol);
    if (std::abs(x.minCoeff() - cfg.x_min) > 1e-9 * cfg.x_min)
      std::cerr << "warning: snapshot starts at x = " << x.minCoeff() << ", config has x_min = " << cfg.x_min << "\n";
    const auto spectrum = cfg.spectrum();
    const auto [lo, hi] = cfg.resolved_fit_window();

    std::string csv = "mode,predicted,fitted,standard_error,points,relative_error,status\n";
    std::vector<PlotSeries> plot;
    std::printf("%-5s %-10s %-10s %-10s %s\n", "mode", "predicted", "fitted", "rel.err", "status");
    for (int j : cfg.fit_modes) {
      const int col = table.column("mode_" + std::to_string(j));
      if (col < 0 || j >= spectrum->mode_count())
        fail(ErrorKind::ConfigError, "snapshot has no column for mode " + std::to_string(j));
      const double predicted = 0.0 - indicial_roots(spectrum->dim(), j, spectrum->eigenvalue(j)).q_minus;
      const Eigen::VectorXd amp = table.values(col);
      plot.push_back({"mode " + std::to_string(j), std::vector<double>(x.data(), x.data() + x.size()),
                      std::vector<double>(amp.data(), amp.data() + amp.size())});
      try {
        TipFit fit = fit_log_slope(x, amp, lo, hi);
        fit.mode = j;
        fit.predicted = predicted;
        csv += std::to_string(j) + "," + format_double(predicted) + "," + format_double(fit.slope) + "," +
               format_double(fit.standard_error) + "," + std::to_string(fit.points) + "," +
               format_double(fit.relative_error()) + ",ok\n";
        std::printf("%-5d %-10.6g %-10.6g %-10.3g ok\n", j, predicted, fit.slope, fit.relative_error());
      } catch (const ConeError& e) {
        if (e.kind() != ErrorKind::NoSignal && e.kind() != ErrorKind::UnderResolved) throw;
        const std::string status = e.kind() == ErrorKind::NoSignal ? "no signal" : "under-resolved";
        csv += std::to_string(j) + "," + format_double(predicted) + ",nan,nan,0,nan," + status + "\n";
        std::printf("%-5d %-10.6g %-10s %-10s %s\n", j, predicted, "-", "-", status.c_str());
      }
    }
    s.write("slopes.csv", csv);
    if (cfg.plot) s.write("asymptotics.svg", svg_plot("mode amplitudes near the tip", "x", "|u_j(x)|", plot, true, true));
    return s.finish(kSuccess, "pass");
  });
}

int cmd_verify(const Options& opt) {
  return guarded("verify", opt, [&](Session& s) {
    std::vector<std::pair<std::string, Suite>> chosen;
    for (const auto& suite : verify_suites())
      if (opt.suite == "all" || opt.suite == suite.first) chosen.push_back(suite);
    if (chosen.empty()) {
      std::string names;
      for (const auto& suite : verify_suites()) names += " " + suite.first;
      fail(ErrorKind::ConfigError, "unknown suite '" + opt.suite + "'; choose one of:" + names + " all");
    }
    if (!opt.config.empty()) load(opt, s);
    Json table = Json::array();
    int failures = 0;
    std::string csv = "suite,check,pass,value,threshold,detail\n";
    for (const auto& [name, suite] : chosen) {
      for (const Check& c : suite(opt.seed)) {
        failures += !c.pass;
        std::printf("%s  %-13s %s: %.3g (threshold %.3g)%s%s\n", c.pass ? "PASS" : "FAIL", name.c_str(), c.name.c_str(),
                    c.value, c.threshold, c.detail.empty() ? "" : "; ", c.detail.c_str());
        table.push_back({{"suite", name}, {"check", c.name}, {"pass", c.pass}, {"value", json_number(c.value)},
                         {"threshold", json_number(c.threshold)}, {"detail", c.detail}});
        std::string detail = c.detail;
        std::replace(detail.begin(), detail.end(), ',', ';');
        std::string check = c.name;
        std::replace(check.begin(), check.end(), ',', ';');
        csv += name + "," + check + "," + (c.pass ? "pass" : "fail") + "," + format_double(c.value) + "," +
               format_double(c.threshold) + "," + detail + "\n";
      }
    }
    s.write("verify.csv", csv);
    s.manifest().summary = {{"suite", opt.suite}, {"checks", table.size()}, {"failures", failures}, {"table", table}};
    std::printf("%d of %zu checks passed\n", static_cast<int>(table.size()) - failures, table.size());
    return s.finish(failures ? kVerificationFailure : kSuccess, failures ? "fail" : "pass");
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conetool: evolution equations on a straight cone and their weight calculus"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opt.config, "flat key = value run configuration");
    if (needs_config) c->required();
    sub->add_option("--out", opt.out, "output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "seed for random initial data")->capture_default_str();
  };
  auto* analyze = app.add_subcommand("analyze", "pole lattice, weight windows, domain and admissibility report");
  add_common(analyze, true);
  auto* solve = app.add_subcommand("solve", "evolve the configured equation and write diagnostics");
  add_common(solve, true);
  solve->add_flag("--force", opt.force, "run even when the (p, q) constraints fail");
  solve->add_option("--save-every", opt.save_every, "diagnostics interval in steps (overrides the config)")
      ->check(CLI::PositiveNumber);
  auto* verify = app.add_subcommand("verify", "run a property suite");
  add_common(verify, false);
  verify->add_option("suite", opt.suite,
                     "poles, windows, hinfty, conservation, comparison, exponents, fractional, weakform or all")
      ->required();
  auto* asymptotics = app.add_subcommand("asymptotics", "fit tip exponents from a completed solve");
  add_common(asymptotics, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kConfigError;
  }
  if (analyze->parsed()) return cmd_analyze(opt);
  if (solve->parsed()) return cmd_solve(opt);
  if (verify->parsed()) return cmd_verify(opt);
  return cmd_asymptotics(opt);
}
