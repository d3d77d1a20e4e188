#pragma once

// JSON experiment configuration.
//
// Sections and defaults (every key is optional unless marked required):
//
//   problem:     type (required: heat | wave | general_first | general_second),
//                m = 1 (heat), symbol = "laplacian" (general problems),
//                c_min = 1e-6, stability_threshold = 0.5 (second-order solvers)
//   grids:       dim = 1, half_width = 8, points_per_dim = 64, t_end = 1,
//                n_steps = 256, levels = [] (converge; empty means n, 2n, 4n)
//   datum:       kind = "bump" (bump | gaussian | modes), center (required),
//                radius = 1, amplitude = 1, width = 1, margin = -1 (L/4),
//                modes = [{amplitude, wavenumber}], observation (defaults to center)
//   coefficient: family (required: constant | affine | sinusoidal | exponential),
//                a = 0, b = 0, rate = 0, phase = 0
//   noise:       sigma_rel = 0, seed = 0
//   recovery:    method = "central" (central | local_poly), window = 0,
//                degree = 0, h2_floor = 0 (auto), c_min = 0,
//                traces = "" (input CSV for the recover subcommand)
//   output:      dir = "out"
//
// Unknown keys anywhere are errors. Overrides ("grids.n_steps=512") are
// applied to the parsed document before validation.

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

#include "evocoef/error.hpp"
#include "evocoef/harness.hpp"

namespace evocoef {

using Json = nlohmann::json;

struct AppConfig {
  ExperimentConfig experiment;
  std::string traces;  ///< recover input; relative paths resolve against the config file
  std::string out_dir = "out";

  bool operator==(const AppConfig&) const = default;
};

namespace detail {

class SectionReader {
 public:
  SectionReader(const Json& doc, std::string name, std::set<std::string> allowed)
      : name_(std::move(name)), allowed_(std::move(allowed)) {
    if (!doc.contains(name_)) return;
    const Json& s = doc.at(name_);
    if (!s.is_object()) throw ConfigError(name_, "section must be an object");
    for (auto it = s.begin(); it != s.end(); ++it)
      if (!allowed_.count(it.key())) throw ConfigError(name_ + "." + it.key(), "unknown key '" + it.key() + "'");
    section_ = &s;
  }

  bool present() const { return section_ != nullptr; }
  bool has(const std::string& key) const { return section_ && section_->contains(key); }
  std::string path(const std::string& key) const { return name_ + "." + key; }

  template <class T>
  T get(const std::string& key, T fallback) const {
    if (!has(key)) return fallback;
    try {
      return section_->at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path(key), "wrong value type");
    }
  }

  template <class T>
  T require(const std::string& key) const {
    if (!has(key)) throw ConfigError(path(key), "required key missing");
    return get<T>(key, T{});
  }

  const Json& raw(const std::string& key) const { return section_->at(key); }

 private:
  std::string name_;
  std::set<std::string> allowed_;
  const Json* section_ = nullptr;
};

inline ProblemType parse_problem(const std::string& s, const std::string& field) {
  if (s == "heat") return ProblemType::heat;
  if (s == "wave") return ProblemType::wave;
  if (s == "general_first") return ProblemType::general_first;
  if (s == "general_second") return ProblemType::general_second;
  throw ConfigError(field, "unknown problem type '" + s + "'");
}

inline const char* to_string(DatumConfig::Kind k) {
  switch (k) {
    case DatumConfig::Kind::bump: return "bump";
    case DatumConfig::Kind::gaussian: return "gaussian";
    case DatumConfig::Kind::modes: return "modes";
  }
  return "?";
}

inline const char* to_string(ClosedForm::Family f) {
  switch (f) {
    case ClosedForm::Family::constant: return "constant";
    case ClosedForm::Family::affine: return "affine";
    case ClosedForm::Family::sinusoidal: return "sinusoidal";
    case ClosedForm::Family::exponential: return "exponential";
  }
  return "?";
}

// Runs `fn`, turning library precondition errors into field-level ones.
template <class Fn>
void check_field(const std::string& field, Fn&& fn) {
  try {
    fn();
  } catch (const InvalidInput& e) {
    throw ConfigError(field, e.what());
  }
}

}  // namespace detail

/// Field-level invariant checks that do not need a forward solve.
inline void validate(const AppConfig& app) {
  const ExperimentConfig& c = app.experiment;
  if (c.n_steps <= 0) throw ConfigError("grids.n_steps", "n_steps must be positive");
  if (!(c.t_end > 0.0)) throw ConfigError("grids.t_end", "t_end must be positive");
  if (c.dim < 1 || c.dim > 3) throw ConfigError("grids.dim", "dim must be 1, 2 or 3");
  if (!(c.half_width > 0.0)) throw ConfigError("grids.half_width", "half_width must be positive");
  if (c.points_per_dim <= 0 || c.points_per_dim % 2 != 0)
    throw ConfigError("grids.points_per_dim", "points_per_dim must be even and positive");
  if (!c.levels.empty()) {
    if (c.levels.size() < 3) throw ConfigError("grids.levels", "at least 3 levels are required");
    for (std::size_t i = 1; i < c.levels.size(); ++i)
      if (c.levels[i] != 2 * c.levels[i - 1]) throw ConfigError("grids.levels", "each level must double the previous");
    if (c.levels.front() <= 0) throw ConfigError("grids.levels", "levels must be positive");
  }
  if (c.problem == ProblemType::heat && c.m < 1) throw ConfigError("problem.m", "m must be a positive integer");
  detail::check_field("problem.symbol", [&] { (void)c.multiplier(); });
  if (!(c.second_order.c_min > 0.0)) throw ConfigError("problem.c_min", "c_min must be positive");
  if (!(c.second_order.stability_threshold > 0.0))
    throw ConfigError("problem.stability_threshold", "stability_threshold must be positive");
  if (!(c.noise.sigma_rel >= 0.0 && c.noise.sigma_rel < 0.1))
    throw ConfigError("noise.sigma_rel", "sigma_rel must satisfy 0 <= sigma_rel < 0.1");
  detail::check_field("recovery", [&] {
    DifferentiationSpec d = c.diff;
    d.order = c.recovery_order();
    d.validate(c.n_steps);
  });
  if (static_cast<int>(c.datum.center.size()) != c.dim)
    throw ConfigError("datum.center", "center must have dim entries");
  if (c.datum.observation && static_cast<int>(c.datum.observation->size()) != c.dim)
    throw ConfigError("datum.observation", "observation must have dim entries");
  detail::check_field("datum", [&] { (void)make_datum(c); });
  detail::check_field("datum.observation", [&] { (void)make_observation(c); });
  detail::check_field("coefficient", [&] {
    TimeGrid tg = c.time_grid();
    CoefficientFn f = CoefficientFn::from_closed_form(c.coefficient, tg, c.coefficient_kind());
    if (c.coefficient_kind() == CoefficientKind::alpha) (void)antiderivative(f);
  });
}

/// Parses a document and applies documented defaults, then validates.
inline AppConfig parse_config(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("", "configuration must be a JSON object");
  static const std::set<std::string> sections = {"problem", "grids", "datum", "coefficient",
                                                 "noise",   "recovery", "output"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!sections.count(it.key())) throw ConfigError(it.key(), "unknown key '" + it.key() + "'");

  AppConfig app;
  ExperimentConfig& c = app.experiment;

  detail::SectionReader problem(doc, "problem", {"type", "m", "symbol", "c_min", "stability_threshold"});
  c.problem = detail::parse_problem(problem.require<std::string>("type"), "problem.type");
  c.m = problem.get<int>("m", c.m);
  c.symbol = problem.get<std::string>("symbol", c.symbol);
  c.second_order.c_min = problem.get<double>("c_min", c.second_order.c_min);
  c.second_order.stability_threshold = problem.get<double>("stability_threshold", c.second_order.stability_threshold);

  detail::SectionReader grids(doc, "grids", {"dim", "half_width", "points_per_dim", "t_end", "n_steps", "levels"});
  if (!grids.present()) throw ConfigError("grids", "required section missing");
  c.dim = grids.get<int>("dim", c.dim);
  c.half_width = grids.get<double>("half_width", c.half_width);
  c.points_per_dim = grids.get<int>("points_per_dim", c.points_per_dim);
  c.t_end = grids.get<double>("t_end", c.t_end);
  c.n_steps = grids.get<int>("n_steps", c.n_steps);
  c.levels = grids.get<std::vector<int>>("levels", {});

  detail::SectionReader datum(
      doc, "datum", {"kind", "center", "radius", "amplitude", "width", "margin", "modes", "observation"});
  if (!datum.present()) throw ConfigError("datum", "required section missing");
  const std::string kind = datum.get<std::string>("kind", "bump");
  if (kind == "bump") c.datum.kind = DatumConfig::Kind::bump;
  else if (kind == "gaussian") c.datum.kind = DatumConfig::Kind::gaussian;
  else if (kind == "modes") c.datum.kind = DatumConfig::Kind::modes;
  else throw ConfigError("datum.kind", "unknown datum kind '" + kind + "'");
  c.datum.center = datum.require<std::vector<double>>("center");
  c.datum.radius = datum.get<double>("radius", c.datum.radius);
  c.datum.amplitude = datum.get<double>("amplitude", c.datum.amplitude);
  c.datum.width = datum.get<double>("width", c.datum.width);
  c.datum.margin = datum.get<double>("margin", c.datum.margin);
  if (datum.has("observation")) c.datum.observation = datum.get<std::vector<double>>("observation", {});
  if (datum.has("modes")) {
    const Json& modes = datum.raw("modes");
    if (!modes.is_array()) throw ConfigError("datum.modes", "modes must be an array");
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const std::string where = "datum.modes[" + std::to_string(i) + "]";
      const Json& mj = modes[i];
      if (!mj.is_object()) throw ConfigError(where, "mode must be an object");
      ModeTerm t;
      for (auto it = mj.begin(); it != mj.end(); ++it) {
        try {
          if (it.key() == "amplitude") t.amplitude = it.value().get<double>();
          else if (it.key() == "wavenumber") t.wavenumber = it.value().get<std::vector<int>>();
          else throw ConfigError(where + "." + it.key(), "unknown key '" + it.key() + "'");
        } catch (const nlohmann::json::exception&) {
          throw ConfigError(where + "." + it.key(), "wrong value type");
        }
      }
      c.datum.modes.push_back(std::move(t));
    }
  }

  detail::SectionReader coef(doc, "coefficient", {"family", "a", "b", "rate", "phase"});
  if (!coef.present()) throw ConfigError("coefficient", "required section missing");
  const std::string family = coef.require<std::string>("family");
  const double a = coef.get<double>("a", 0.0), b = coef.get<double>("b", 0.0);
  const double rate = coef.get<double>("rate", 0.0), phase = coef.get<double>("phase", 0.0);
  if (family == "constant") c.coefficient = ClosedForm::constant(a);
  else if (family == "affine") c.coefficient = ClosedForm::affine(a, b);
  else if (family == "sinusoidal") c.coefficient = ClosedForm::sinusoidal(a, b, rate, phase);
  else if (family == "exponential") c.coefficient = ClosedForm::exponential(a, b, rate);
  else throw ConfigError("coefficient.family", "unknown family '" + family + "'");
  // Parameters unused by the family still round-trip.
  c.coefficient.b = b;
  c.coefficient.rate = rate;
  c.coefficient.phase = phase;

  detail::SectionReader noise(doc, "noise", {"sigma_rel", "seed"});
  c.noise.sigma_rel = noise.get<double>("sigma_rel", 0.0);
  c.noise.seed = noise.get<std::uint64_t>("seed", 0);

  detail::SectionReader rec(doc, "recovery", {"method", "window", "degree", "h2_floor", "c_min", "traces"});
  const std::string method = rec.get<std::string>("method", "central");
  const int order = c.recovery_order();
  const int window = rec.get<int>("window", 0), degree = rec.get<int>("degree", 0);
  if (method == "central") c.diff = DifferentiationSpec::central(order);
  else if (method == "local_poly") c.diff = DifferentiationSpec::local_poly(order, window, degree);
  else throw ConfigError("recovery.method", "unknown method '" + method + "'");
  c.diff.window = window;
  c.diff.degree = degree;
  c.thresholds.h2_floor = rec.get<double>("h2_floor", 0.0);
  c.thresholds.c_min = rec.get<double>("c_min", 0.0);
  app.traces = rec.get<std::string>("traces", "");

  detail::SectionReader out(doc, "output", {"dir"});
  app.out_dir = out.get<std::string>("dir", app.out_dir);

  validate(app);
  return app;
}

/// The effective configuration, every key spelled out.
inline Json to_json(const AppConfig& app) {
  const ExperimentConfig& c = app.experiment;
  Json j;
  j["problem"] = {{"type", to_string(c.problem)},
                  {"m", c.m},
                  {"symbol", c.symbol},
                  {"c_min", c.second_order.c_min},
                  {"stability_threshold", c.second_order.stability_threshold}};
  j["grids"] = {{"dim", c.dim},         {"half_width", c.half_width}, {"points_per_dim", c.points_per_dim},
                {"t_end", c.t_end},     {"n_steps", c.n_steps},       {"levels", c.levels}};
  Json modes = Json::array();
  for (const auto& t : c.datum.modes) modes.push_back({{"amplitude", t.amplitude}, {"wavenumber", t.wavenumber}});
  j["datum"] = {{"kind", detail::to_string(c.datum.kind)},
                {"center", c.datum.center},
                {"radius", c.datum.radius},
                {"amplitude", c.datum.amplitude},
                {"width", c.datum.width},
                {"margin", c.datum.margin},
                {"modes", modes}};
  if (c.datum.observation) j["datum"]["observation"] = *c.datum.observation;
  j["coefficient"] = {{"family", detail::to_string(c.coefficient.family)},
                      {"a", c.coefficient.a},
                      {"b", c.coefficient.b},
                      {"rate", c.coefficient.rate},
                      {"phase", c.coefficient.phase}};
  j["noise"] = {{"sigma_rel", c.noise.sigma_rel}, {"seed", c.noise.seed}};
  j["recovery"] = {{"method", c.diff.method == DifferentiationSpec::Method::central ? "central" : "local_poly"},
                   {"window", c.diff.window},
                   {"degree", c.diff.degree},
                   {"h2_floor", c.thresholds.h2_floor},
                   {"c_min", c.thresholds.c_min},
                   {"traces", app.traces}};
  j["output"] = {{"dir", app.out_dir}};
  return j;
}

/// Applies "a.b.c=value". The value is read as JSON when it parses, otherwise
/// as a plain string.
inline void apply_override(Json& doc, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json* node = &doc;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].empty()) throw ConfigError(key, "empty path component in override");
    if (!node->is_object()) throw ConfigError(key, "override path crosses a non-object value");
    node = &(*node)[parts[i]];
  }
  *node = std::move(value);
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file '" + path.string() + "'");
  Json doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError(path.string(), "malformed JSON in '" + path.string() + "'");
  return doc;
}

inline AppConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
  Json doc = read_json_file(path);
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(doc);
}

}  // namespace evocoef
