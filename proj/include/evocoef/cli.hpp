#pragma once

// Command-line front end. run_cli is the whole program minus process setup so
// tests can drive it in-process.
//
// Exit codes: 0 success, 1 internal error, 2 configuration or validation
// error, 3 the h2 != 0 hypothesis fails (empty valid set, or h2 changes sign).

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "evocoef/config.hpp"
#include "evocoef/harness.hpp"
#include "evocoef/selftest.hpp"

namespace evocoef::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string traces_csv(const Trace& h1, const Trace& h2) {
  std::string s = "t,h1,h2\n";
  const TimeGrid& g = h1.grid();
  for (std::size_t k = 0; k < g.size(); ++k)
    s += format_double(g.node(k)) + "," + format_double(h1[k]) + "," + format_double(h2[k]) + "\n";
  return s;
}

inline std::string recovery_csv(const CoefficientFn& truth, const RecoveryResult& r) {
  std::string s = "t,coef_true,coef_rec,abs_err,valid\n";
  const TimeGrid& g = truth.grid();
  for (std::size_t k = 0; k < g.size(); ++k) {
    double rec = r.coefficient[k];
    s += format_double(g.node(k)) + "," + format_double(truth[k]) + "," + format_double(rec) + "," +
         format_double(std::abs(rec - truth[k])) + "," + (r.diagnostics.valid[k] ? "1" : "0") + "\n";
  }
  return s;
}

/// Reads `t,h1,h2` rows and checks them against the configured time grid.
inline std::pair<Trace, Trace> read_traces_csv(const std::filesystem::path& path, const TimeGrid& tg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("recovery.traces", "cannot open traces file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "t,h1,h2")
    throw ConfigError("recovery.traces", "traces file must start with the header t,h1,h2");
  std::vector<double> h1, h2;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double vals[3];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int c = 0; c < 3; ++c) {
      auto res = std::from_chars(p, end, vals[c]);
      if (res.ec != std::errc() || (c < 2 && (res.ptr == end || *res.ptr != ',')) || (c == 2 && res.ptr != end))
        throw ConfigError("recovery.traces", "malformed row " + std::to_string(row + 1));
      p = res.ptr + 1;
    }
    if (row >= tg.size() || std::abs(vals[0] - tg.node(row)) > 1e-12 * tg.t_end())
      throw ConfigError("recovery.traces", "row " + std::to_string(row + 1) + " does not match the time grid");
    h1.push_back(vals[1]);
    h2.push_back(vals[2]);
    ++row;
  }
  if (row != tg.size())
    throw ConfigError("recovery.traces", "expected " + std::to_string(tg.size()) + " rows, found " + std::to_string(row));
  return {Trace(tg, std::move(h1), TraceLabel::h1), Trace(tg, std::move(h2), TraceLabel::h2)};
}

inline Json diagnostics_json(const RecoveryResult& r, const DiagnosticsReport& rep) {
  const auto& d = r.diagnostics;
  Json j;
  j["h2_floor"] = d.h2_floor;
  j["c_min"] = d.c_min;
  j["min_abs_h2"] = d.min_abs_h2;
  j["positivity_bound"] = d.positivity_bound;
  j["positivity_node"] = d.positivity_node;
  j["positivity_warning"] = d.positivity_warning;
  j["lipschitz_estimate"] = d.lipschitz_estimate;
  j["valid_count"] = d.valid_count();
  j["flagged"] = d.flagged;
  j["sign_changes"] = d.sign_changes;
  j["theorem"] = to_string(rep.theorem);
  j["all_passed"] = rep.all_passed();
  Json items = Json::array();
  for (const auto& it : rep.items)
    items.push_back({{"name", it.name}, {"passed", it.passed}, {"value", it.value}, {"witnesses", it.witnesses},
                     {"note", it.note}});
  j["items"] = items;
  return j;
}

inline Json base_report(const AppConfig& app, const std::string& command) {
  Json j;
  j["command"] = command;
  j["config"] = to_json(app);
  j["seed"] = app.experiment.noise.seed;
  j["version"] = kVersion;
  return j;
}

/// Raised when the data make the ratio formula meaningless: no valid node,
/// or h2 provably crosses zero.
class HardFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void check_hard_failure(const RecoveryResult& r) {
  const auto& d = r.diagnostics;
  if (!d.sign_changes.empty()) {
    std::string nodes;
    for (std::size_t i = 0; i < d.flagged.size(); ++i) nodes += (i ? " " : "") + std::to_string(d.flagged[i]);
    throw HardFailure("hypothesis h2 != 0 violated: h2 changes sign; flagged nodes: " + nodes);
  }
}

struct Invocation {
  std::string subcommand;
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  int verbosity = 1;  ///< 0 quiet, 1 normal, 2 verbose
};

namespace detail {

struct Files {
  std::map<std::string, std::string> content;  ///< file name -> bytes
};

inline void write_files(const std::filesystem::path& dir, const Files& files) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, bytes] : files.content) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << bytes;
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline Files forward(const AppConfig& app, const std::string& cmd) {
  const ExperimentConfig& c = app.experiment;
  bool ok = (cmd == "forward-heat" && c.problem == ProblemType::heat) ||
            (cmd == "forward-wave" && c.problem == ProblemType::wave) ||
            (cmd == "forward-general" &&
             (c.problem == ProblemType::general_first || c.problem == ProblemType::general_second));
  if (!ok) throw ConfigError("problem.type", std::string("'") + to_string(c.problem) + "' does not match " + cmd);
  TimeGrid tg = c.time_grid();
  ObservationPoint q = make_observation(c);
  CoefficientFn truth = CoefficientFn::from_closed_form(c.coefficient, tg, c.coefficient_kind());
  auto [h1, h2] = forward_traces(c, build_pair(c), truth, q);
  Trace n1 = add_noise(h1, c.noise.sigma_rel, c.noise.seed, 1);
  Trace n2 = add_noise(h2, c.noise.sigma_rel, c.noise.seed, 2);
  Json rep = base_report(app, cmd);
  rep["traces"] = {{"h1_max_abs", n1.max_abs()}, {"h2_max_abs", n2.max_abs()}, {"rows", tg.size()}};
  Files f;
  f.content["traces.csv"] = traces_csv(n1, n2);
  f.content["report.json"] = dump(rep);
  return f;
}

inline Files recover_from_file(const AppConfig& app, const std::filesystem::path& config_path) {
  const ExperimentConfig& c = app.experiment;
  if (app.traces.empty()) throw ConfigError("recovery.traces", "recover needs a traces file");
  std::filesystem::path p(app.traces);
  if (p.is_relative()) p = config_path.parent_path() / p;
  TimeGrid tg = c.time_grid();
  auto [h1, h2] = read_traces_csv(p, tg);
  DifferentiationSpec diff = c.diff;
  diff.order = c.recovery_order();
  RecoveryResult r = recover(h1, h2, c.recovery_order(), diff, c.thresholds, c.recovery_mode());
  check_hard_failure(r);
  CoefficientFn truth = CoefficientFn::from_closed_form(c.coefficient, tg, c.coefficient_kind());
  DiagnosticsReport hyp = validate_hypotheses(r, c.theorem());
  ErrorMetrics m = error_metrics(r.coefficient, truth, r.diagnostics.valid);
  Json rep = base_report(app, "recover");
  rep["metrics"] = {{"max_rel", m.max_rel}, {"l2_rel", m.l2_rel}};
  rep["diagnostics"] = diagnostics_json(r, hyp);
  Files f;
  f.content["recovery.csv"] = recovery_csv(truth, r);
  f.content["report.json"] = dump(rep);
  return f;
}

inline Files experiment(const AppConfig& app) {
  ExperimentReport r = run_experiment(app.experiment);
  check_hard_failure(r.recovery);
  Json rep = base_report(app, "experiment");
  rep["metrics"] = {{"max_rel", r.metrics.max_rel}, {"l2_rel", r.metrics.l2_rel}};
  rep["diagnostics"] = diagnostics_json(r.recovery, r.hypotheses);
  Files f;
  f.content["traces.csv"] = traces_csv(r.h1, r.h2);
  f.content["recovery.csv"] = recovery_csv(r.truth, r.recovery);
  f.content["report.json"] = dump(rep);
  return f;
}

inline Files converge(const AppConfig& app) {
  const ExperimentConfig& c = app.experiment;
  std::vector<int> levels = c.levels;
  if (levels.empty()) levels = {c.n_steps, 2 * c.n_steps, 4 * c.n_steps};
  auto rows = convergence_study(c, levels);
  Json table = Json::array();
  std::string csv = "n_steps,dt,error,observed_order\n";
  for (const auto& r : rows) {
    Json row = {{"n_steps", r.n_steps}, {"dt", r.dt}, {"error", r.error}};
    row["observed_order"] = r.observed_order ? Json(*r.observed_order) : Json(nullptr);
    table.push_back(row);
    csv += std::to_string(r.n_steps) + "," + format_double(r.dt) + "," + format_double(r.error) + "," +
           (r.observed_order ? format_double(*r.observed_order) : std::string("n/a")) + "\n";
  }
  Json rep = base_report(app, "converge");
  rep["convergence"] = table;
  Files f;
  f.content["convergence.csv"] = csv;
  f.content["report.json"] = dump(rep);
  return f;
}

}  // namespace detail

inline int run_selftest(std::ostream& out, int verbosity) {
  auto results = selftest::run_all();
  std::size_t pass = 0;
  for (const auto& r : results) {
    if (r.passed) ++pass;
    if (verbosity >= 1 || !r.passed)
      out << (r.passed ? "PASS " : "FAIL ") << r.module << ": " << r.name
          << (r.error.empty() ? "" : " (" + r.error + ")") << "\n";
  }
  out << "selftest: " << pass << " passed, " << results.size() - pass << " failed\n";
  return pass == results.size() ? 0 : 1;
}

inline int execute(const Invocation& inv, std::ostream& out, std::ostream& err) {
  if (inv.subcommand == "selftest") return run_selftest(out, inv.verbosity);
  try {
    if (inv.config_path.empty()) throw ConfigError("--config", "a config file is required for " + inv.subcommand);
    std::filesystem::path cfg_path(inv.config_path);
    if (!std::filesystem::is_regular_file(cfg_path))
      throw ConfigError("--config", "config file not found: " + cfg_path.string());
    AppConfig app = load_config(cfg_path, inv.overrides);
    if (!inv.out_dir.empty()) app.out_dir = inv.out_dir;
    auto started = std::chrono::steady_clock::now();
    if (inv.verbosity >= 2) err << "[evocoef] " << inv.subcommand << " with " << cfg_path.string() << "\n";

    detail::Files files;
    const std::string& cmd = inv.subcommand;
    if (cmd == "forward-heat" || cmd == "forward-wave" || cmd == "forward-general") files = detail::forward(app, cmd);
    else if (cmd == "recover") files = detail::recover_from_file(app, cfg_path);
    else if (cmd == "experiment") files = detail::experiment(app);
    else if (cmd == "converge") files = detail::converge(app);
    else throw ConfigError("subcommand", "unknown subcommand " + cmd);

    detail::write_files(app.out_dir, files);
    if (inv.verbosity >= 2) {
      auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
      err << "[evocoef] finished in " << ms.count() << " ms\n";
    }
    if (inv.verbosity >= 1) {
      out << "wrote";
      for (const auto& [name, bytes] : files.content) out << " " << (std::filesystem::path(app.out_dir) / name).string();
      out << "\n";
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const HypothesisViolation& e) {
    err << "hypothesis failure: " << e.what() << "\n";
    return 3;
  } catch (const HardFailure& e) {
    err << "hypothesis failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

/// Parses argv (without the program name) and runs the subcommand.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-dependent coefficient recovery from point traces", "evocoef"};
  Invocation inv;
  bool quiet = false, verbose = false;
  app.add_option("--config", inv.config_path, "experiment configuration (JSON)");
  app.add_option("--out", inv.out_dir, "output directory (overrides output.dir)");
  app.add_option("--set", inv.overrides, "override a config value, e.g. grids.n_steps=512")->take_all();
  app.add_flag("--quiet", quiet, "print nothing on success");
  app.add_flag("--verbose", verbose, "log progress to stderr");
  app.require_subcommand(1, 1);
  const std::pair<const char*, const char*> commands[] = {
      {"forward-heat", "solve the paired heat problems and write traces.csv"},
      {"forward-wave", "solve the paired wave problems and write traces.csv"},
      {"forward-general", "solve the paired general-operator problems and write traces.csv"},
      {"recover", "recover the coefficient from recovery.traces"},
      {"experiment", "forward solve, noise, recovery and scoring in one run"},
      {"converge", "dt-refinement study over grids.levels"},
      {"selftest", "run the built-in quick checks"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  }
  if (quiet && verbose) {
    err << "usage error: --quiet and --verbose are exclusive\n";
    return 2;
  }
  inv.verbosity = quiet ? 0 : verbose ? 2 : 1;
  inv.subcommand = app.get_subcommands().front()->get_name();
  return execute(inv, out, err);
}

}  // namespace evocoef::cli
