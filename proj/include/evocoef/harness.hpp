#pragma once

// Manufactured-truth experiments: build the paired Cauchy problems, solve
// them with a known coefficient, observe at q, optionally add noise, recover
// and score.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evocoef/core.hpp"
#include "evocoef/fourier.hpp"
#include "evocoef/recovery.hpp"
#include "evocoef/spectral_forward.hpp"

namespace evocoef {

enum class ProblemType { heat, wave, general_first, general_second };

inline const char* to_string(ProblemType p) {
  switch (p) {
    case ProblemType::heat: return "heat";
    case ProblemType::wave: return "wave";
    case ProblemType::general_first: return "general_first";
    case ProblemType::general_second: return "general_second";
  }
  return "?";
}

struct ModeTerm {
  double amplitude = 1.0;
  std::vector<int> wavenumber;  ///< integer k; frequency k * pi / L

  bool operator==(const ModeTerm&) const = default;
};

struct DatumConfig {
  /// bump: the smooth compactly supported bump. modes: a finite sum of
  /// cosines about the center. gaussian: amplitude * exp(-r^2 / (2 width^2))
  /// cut to zero for r >= radius, where it is below 1e-16 of its peak.
  enum class Kind { bump, gaussian, modes };
  Kind kind = Kind::bump;
  std::vector<double> center;
  double radius = 1.0;
  double amplitude = 1.0;
  double width = 1.0;    ///< gaussian only
  double margin = -1.0;  ///< box safety margin; negative means L/4
  std::vector<ModeTerm> modes;
  std::optional<std::vector<double>> observation;  ///< defaults to center

  bool operator==(const DatumConfig&) const = default;
};

struct NoiseConfig {
  double sigma_rel = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const NoiseConfig&) const = default;
};

struct ExperimentConfig {
  ProblemType problem = ProblemType::heat;
  int m = 1;                       ///< heat only
  std::string symbol = "laplacian";  ///< general problems only
  int dim = 1;
  double t_end = 1.0;
  int n_steps = 256;
  double half_width = 8.0;
  int points_per_dim = 64;
  std::vector<int> levels;         ///< n_steps levels for convergence studies
  SecondOrderOptions second_order{};
  DatumConfig datum;
  ClosedForm coefficient = ClosedForm::constant(1.0);
  NoiseConfig noise;
  DifferentiationSpec diff = DifferentiationSpec::central(1);
  RecoveryThresholds thresholds;

  bool operator==(const ExperimentConfig&) const = default;

  SpaceGrid space_grid() const { return SpaceGrid(dim, half_width, points_per_dim); }
  TimeGrid time_grid() const { return TimeGrid(t_end, n_steps); }
  int recovery_order() const {
    return problem == ProblemType::heat || problem == ProblemType::general_first ? 1 : 2;
  }
  CoefficientKind coefficient_kind() const {
    switch (problem) {
      case ProblemType::heat: return CoefficientKind::alpha;
      case ProblemType::wave: return CoefficientKind::phi;
      case ProblemType::general_first: return CoefficientKind::psi;
      case ProblemType::general_second: return CoefficientKind::lambda;
    }
    return CoefficientKind::alpha;
  }
  RecoveryMode recovery_mode() const {
    switch (problem) {
      case ProblemType::heat: return RecoveryMode::heat_alpha;
      case ProblemType::wave: return RecoveryMode::wave_phi;
      case ProblemType::general_first: return RecoveryMode::general_psi;
      case ProblemType::general_second: return RecoveryMode::general_lambda;
    }
    return RecoveryMode::heat_alpha;
  }
  Theorem theorem() const {
    switch (problem) {
      case ProblemType::heat: return Theorem::heat_polyharmonic;
      case ProblemType::wave: return Theorem::wave;
      default: return Theorem::general;
    }
  }
  MultiplierSymbol multiplier() const {
    switch (problem) {
      case ProblemType::heat: return MultiplierSymbol::neg_polyharmonic(m);
      case ProblemType::wave: return MultiplierSymbol::laplacian();
      default: return MultiplierSymbol::by_id(symbol);
    }
  }
};

/// Initial data of one Cauchy problem (position, velocity). First-order
/// problems ignore the velocity.
struct CauchyData {
  Field position;
  Field velocity;
};

struct ProblemPair {
  CauchyData first;
  CauchyData second;
};

/// Gaussian of standard deviation `width`, set to zero from `radius` on; the
/// cut must sit where the Gaussian is already below 1e-16 of its peak.
inline Field truncated_gaussian(const SpaceGrid& g, std::span<const double> center, double width, double radius,
                                double amplitude, double margin) {
  if (static_cast<int>(center.size()) != g.dim()) throw InvalidInput("datum center has wrong dimension");
  if (!(width > 0.0)) throw InvalidInput("gaussian width must be positive");
  if (radius * radius / (2.0 * width * width) < 16.0 * std::log(10.0))
    throw InvalidInput("gaussian cut radius must leave a tail below 1e-16");
  for (int d = 0; d < g.dim(); ++d)
    if (center[d] - radius - margin < -g.half_width() || center[d] + radius + margin > g.half_width())
      throw InvalidInput("datum support plus margin touches the box boundary");
  const double r2max = radius * radius;
  return Field::sample(g, [&](const std::vector<double>& x) {
    double r2 = 0.0;
    for (int d = 0; d < g.dim(); ++d) r2 += (x[d] - center[d]) * (x[d] - center[d]);
    return r2 >= r2max ? 0.0 : amplitude * std::exp(-r2 / (2.0 * width * width));
  });
}

/// The datum field described by cfg.datum (u0 for first-order problems, u1
/// for second-order ones).
inline Field make_datum(const ExperimentConfig& cfg) {
  SpaceGrid g = cfg.space_grid();
  const auto& d = cfg.datum;
  if (static_cast<int>(d.center.size()) != cfg.dim) throw InvalidInput("datum center has wrong dimension");
  if (d.kind == DatumConfig::Kind::bump) {
    double margin = d.margin < 0.0 ? 0.25 * cfg.half_width : d.margin;
    return bump_datum(g, d.center, d.radius, d.amplitude, margin);
  }
  if (d.kind == DatumConfig::Kind::gaussian) {
    double margin = d.margin < 0.0 ? 0.25 * cfg.half_width : d.margin;
    return truncated_gaussian(g, d.center, d.width, d.radius, d.amplitude, margin);
  }
  if (d.modes.empty()) throw InvalidInput("modes datum needs at least one mode");
  for (const auto& t : d.modes)
    if (static_cast<int>(t.wavenumber.size()) != cfg.dim) throw InvalidInput("mode wavenumber has wrong dimension");
  const double base = M_PI / cfg.half_width;
  return Field::sample(g, [&](const std::vector<double>& x) {
    double s = 0.0;
    for (const auto& t : d.modes) {
      double ph = 0.0;
      for (int i = 0; i < cfg.dim; ++i) ph += t.wavenumber[i] * base * (x[i] - d.center[i]);
      s += t.amplitude * std::cos(ph);
    }
    return s;
  });
}

inline ObservationPoint make_observation(const ExperimentConfig& cfg) {
  SpaceGrid g = cfg.space_grid();
  const auto& d = cfg.datum;
  std::vector<double> q = d.observation.value_or(d.center);
  ObservationPoint op = ObservationPoint::on(g, q);
  if (d.kind != DatumConfig::Kind::modes) {
    double r2 = 0.0;
    for (int i = 0; i < cfg.dim; ++i) r2 += (q[i] - d.center[i]) * (q[i] - d.center[i]);
    if (r2 >= d.radius * d.radius) throw InvalidInput("observation point lies outside the datum support");
  }
  return op;
}

/// The paired problems with the sign conventions
///   heat            second position = -(-Laplacian)^m u0
///   wave            both positions 0, second velocity = Laplacian u1
///   general first   second position = L_x[u0]
///   general second  both positions 0, second velocity = L_x[u1]
inline ProblemPair build_pair(const ExperimentConfig& cfg) {
  Field datum = make_datum(cfg);
  Field zero(datum.grid());
  switch (cfg.problem) {
    case ProblemType::heat: {
      Field lap = apply_polyharmonic(datum, cfg.m);
      Field second = linear_combination(-1.0, lap, 0.0, zero);
      return {{datum, zero}, {second, zero}};
    }
    case ProblemType::wave:
      return {{zero, datum}, {zero, apply_symbol(datum, MultiplierSymbol::laplacian())}};
    case ProblemType::general_first:
      return {{datum, zero}, {apply_symbol(datum, cfg.multiplier()), zero}};
    case ProblemType::general_second:
      return {{zero, datum}, {zero, apply_symbol(datum, cfg.multiplier())}};
  }
  throw InvalidInput("unknown problem type");
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based standard normal keyed by (seed, stream, index).
inline double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t key = splitmix64(seed ^ splitmix64(stream * 0x632be59bd9b4e019ULL + 1));
  std::uint64_t a = splitmix64(key ^ splitmix64(2 * index));
  std::uint64_t b = splitmix64(key ^ splitmix64(2 * index + 1));
  double u1 = 1.0 - static_cast<double>(a >> 11) * 0x1.0p-53;  // (0, 1]
  double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;        // [0, 1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace detail

/// h + sigma_rel * max|h| * g_k with g_k standard normal from a counter-based
/// generator keyed by (seed, stream, k). sigma_rel = 0 returns h unchanged.
inline Trace add_noise(const Trace& h, double sigma_rel, std::uint64_t seed, std::uint64_t stream = 0) {
  if (!(sigma_rel >= 0.0)) throw InvalidInput("noise level must be nonnegative");
  if (sigma_rel == 0.0) return h;
  const double amp = sigma_rel * h.max_abs();
  std::vector<double> v(h.values().begin(), h.values().end());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] += amp * detail::counter_normal(seed, stream, k);
  return Trace(h.grid(), std::move(v), h.label());
}

struct ErrorMetrics {
  double max_rel = 0.0;
  double l2_rel = 0.0;
};

/// max_rel = max|r - t| / max(max|t|, eps), l2_rel = sqrt(sum (r - t)^2 / sum t^2),
/// both over the valid nodes.
inline ErrorMetrics error_metrics(const CoefficientFn& recovered, const CoefficientFn& truth,
                                  const std::vector<bool>& valid) {
  if (!(recovered.grid() == truth.grid())) throw InvalidInput("coefficients live on different grids");
  if (valid.size() != truth.grid().size()) throw InvalidInput("valid mask has wrong length");
  double max_err = 0.0, max_t = 0.0, num = 0.0, den = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < valid.size(); ++k) {
    if (!valid[k]) continue;
    ++count;
    double e = recovered[k] - truth[k];
    max_err = std::max(max_err, std::abs(e));
    max_t = std::max(max_t, std::abs(truth[k]));
    num += e * e;
    den += truth[k] * truth[k];
  }
  if (count == 0) throw InvalidInput("error metrics need a nonempty valid range");
  const double eps = std::numeric_limits<double>::epsilon();
  return {max_err / std::max(max_t, eps), std::sqrt(num / std::max(den, eps * eps))};
}

struct ExperimentReport {
  TimeGrid time_grid;
  Trace h1;  ///< as observed (noise included)
  Trace h2;
  CoefficientFn truth;
  RecoveryResult recovery;
  ErrorMetrics metrics;
  DiagnosticsReport hypotheses;
  std::uint64_t seed = 0;
};

/// Clean traces of both problems at q under the true coefficient.
inline std::pair<Trace, Trace> forward_traces(const ExperimentConfig& cfg, const ProblemPair& pair,
                                              const CoefficientFn& truth, const ObservationPoint& q) {
  TimeGrid tg = cfg.time_grid();
  auto solve = [&](const CauchyData& data) {
    switch (cfg.problem) {
      case ProblemType::heat: return solve_heat(data.position, truth, cfg.m, tg);
      case ProblemType::wave: return solve_wave(data.position, data.velocity, truth, tg, cfg.second_order);
      case ProblemType::general_first: return solve_general_first(data.position, truth, cfg.multiplier(), tg);
      case ProblemType::general_second:
        return solve_general_second(data.velocity, truth, cfg.multiplier(), tg, cfg.second_order);
    }
    throw InvalidInput("unknown problem type");
  };
  Trace h1 = trace_at(solve(pair.first), q, TraceLabel::h1);
  Trace h2 = trace_at(solve(pair.second), q, TraceLabel::h2);
  return {std::move(h1), std::move(h2)};
}

/// Forward-solve both problems with the true coefficient, observe, add noise,
/// recover, score and check hypotheses. Deterministic in (cfg, seed).
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (!(cfg.noise.sigma_rel >= 0.0 && cfg.noise.sigma_rel < 0.1))
    throw InvalidInput("noise level must satisfy 0 <= sigma_rel < 0.1");
  TimeGrid tg = cfg.time_grid();
  ObservationPoint q = make_observation(cfg);
  ProblemPair pair = build_pair(cfg);
  CoefficientFn truth = CoefficientFn::from_closed_form(cfg.coefficient, tg, cfg.coefficient_kind());
  auto [clean1, clean2] = forward_traces(cfg, pair, truth, q);
  Trace h1 = add_noise(clean1, cfg.noise.sigma_rel, cfg.noise.seed, 1);
  Trace h2 = add_noise(clean2, cfg.noise.sigma_rel, cfg.noise.seed, 2);
  DifferentiationSpec diff = cfg.diff;
  diff.order = cfg.recovery_order();
  RecoveryResult rec = recover(h1, h2, cfg.recovery_order(), diff, cfg.thresholds, cfg.recovery_mode());
  ErrorMetrics metrics = error_metrics(rec.coefficient, truth, rec.diagnostics.valid);
  DiagnosticsReport hyp = validate_hypotheses(rec, cfg.theorem());
  return ExperimentReport{tg, std::move(h1), std::move(h2), std::move(truth), std::move(rec), metrics,
                          std::move(hyp), cfg.noise.seed};
}

struct ConvergenceRow {
  int n_steps = 0;
  double dt = 0.0;
  double error = 0.0;
  std::optional<double> observed_order;  ///< empty on the first row or below the 1e-12 floor
};

/// log2(coarse / fine) for a halved step; not applicable when either error is
/// below the 1e-12 floor.
inline std::optional<double> observed_order(double coarse, double fine) {
  if (coarse < 1e-12 || fine < 1e-12) return std::nullopt;
  return std::log2(coarse / fine);
}

/// Clean-data, central-difference refinement study; each level must double
/// the previous one.
inline std::vector<ConvergenceRow> convergence_study(const ExperimentConfig& cfg, const std::vector<int>& levels) {
  if (levels.size() < 3) throw InvalidInput("convergence study needs at least 3 levels");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] != 2 * levels[i - 1]) throw InvalidInput("convergence levels must double");
  std::vector<ConvergenceRow> rows;
  for (int n : levels) {
    ExperimentConfig c = cfg;
    c.n_steps = n;
    c.noise.sigma_rel = 0.0;
    c.diff = DifferentiationSpec::central(cfg.recovery_order());
    ExperimentReport r = run_experiment(c);
    ConvergenceRow row{n, r.time_grid.dt(), r.metrics.max_rel, std::nullopt};
    if (!rows.empty()) row.observed_order = observed_order(rows.back().error, row.error);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace evocoef
