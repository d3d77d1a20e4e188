#pragma once

// Ratio recovery of the time coefficient from two point traces:
//   order 1:  coef = h1' / h2      (heat alpha, general psi)
//   order 2:  coef = h1'' / h2     (wave phi, general lambda)
// plus the hypothesis checks that make the ratio meaningful.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "evocoef/core.hpp"

namespace evocoef {

struct DifferentiationSpec {
  enum class Method { central, local_poly };

  Method method = Method::central;
  int order = 1;
  int window = 0;  ///< local_poly only, odd
  int degree = 0;  ///< local_poly only, 2..4

  static DifferentiationSpec central(int order) { return {Method::central, order, 0, 0}; }
  static DifferentiationSpec local_poly(int order, int window, int degree) {
    return {Method::local_poly, order, window, degree};
  }

  void validate(int n_steps) const {
    if (order != 1 && order != 2) throw InvalidInput("derivative order must be 1 or 2");
    if (method == Method::central) {
      if (n_steps + 1 < (order == 2 ? 5 : 3)) throw InvalidInput("trace too short for central differences");
      return;
    }
    if (degree < 2 || degree > 4) throw InvalidInput("local_poly degree must be in [2, 4]");
    if (window % 2 == 0) throw InvalidInput("local_poly window must be odd");
    if (window < degree + 2) throw InvalidInput("local_poly window must be at least degree + 2");
    if (window > n_steps / 4) throw InvalidInput("local_poly window must not exceed n_steps / 4");
    if (n_steps + 1 < 2 * window + 1) throw InvalidInput("trace too short for the local_poly window");
  }

  bool operator==(const DifferentiationSpec&) const = default;
};

namespace detail {

// Least-squares derivative weights for every position of a node inside a
// window of w samples (unit spacing): weights[off][i] gives the derivative at
// sample `off` as sum_i weights[off][i] f_i.
inline std::vector<std::vector<double>> local_poly_weights(int window, int degree, int order) {
  std::vector<std::vector<double>> out(window, std::vector<double>(window));
  const double fact = order == 2 ? 2.0 : 1.0;
  for (int off = 0; off < window; ++off) {
    Eigen::MatrixXd V(window, degree + 1);
    for (int i = 0; i < window; ++i) {
      double tau = i - off;
      double p = 1.0;
      for (int j = 0; j <= degree; ++j) {
        V(i, j) = p;
        p *= tau;
      }
    }
    Eigen::MatrixXd pinv = V.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(window, window));
    for (int i = 0; i < window; ++i) out[off][i] = fact * pinv(order, i);
  }
  return out;
}

}  // namespace detail

/// Numerical derivative of a trace at every node.
///
/// central: second-order centered stencils inside, second-order one-sided
/// stencils at the two end nodes. local_poly: derivative of the least-squares
/// polynomial fit over a window (shifted inward near the ends); exact for
/// polynomials up to the fit degree.
inline Trace differentiate(const Trace& h, const DifferentiationSpec& spec) {
  const TimeGrid& g = h.grid();
  spec.validate(g.n_steps());
  const std::size_t n = static_cast<std::size_t>(g.n_steps());
  const double dt = g.dt();
  std::vector<double> d(n + 1);
  auto f = h.values();
  if (spec.method == DifferentiationSpec::Method::central) {
    if (spec.order == 1) {
      for (std::size_t k = 1; k < n; ++k) d[k] = (f[k + 1] - f[k - 1]) / (2.0 * dt);
      d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt);
      d[n] = (3.0 * f[n] - 4.0 * f[n - 1] + f[n - 2]) / (2.0 * dt);
    } else {
      const double dt2 = dt * dt;
      for (std::size_t k = 1; k < n; ++k) d[k] = (f[k + 1] - 2.0 * f[k] + f[k - 1]) / dt2;
      d[0] = (35.0 * f[0] - 104.0 * f[1] + 114.0 * f[2] - 56.0 * f[3] + 11.0 * f[4]) / (12.0 * dt2);
      d[n] = (35.0 * f[n] - 104.0 * f[n - 1] + 114.0 * f[n - 2] - 56.0 * f[n - 3] + 11.0 * f[n - 4]) / (12.0 * dt2);
    }
  } else {
    const int w = spec.window;
    const auto weights = detail::local_poly_weights(w, spec.degree, spec.order);
    const double scale = spec.order == 1 ? 1.0 / dt : 1.0 / (dt * dt);
    const long last_start = static_cast<long>(n) + 1 - w;
    for (std::size_t k = 0; k <= n; ++k) {
      long start = std::clamp(static_cast<long>(k) - w / 2, 0L, last_start);
      const auto& wk = weights[static_cast<long>(k) - start];
      double s = 0.0;
      for (int i = 0; i < w; ++i) s += wk[i] * f[start + i];
      d[k] = s * scale;
    }
  }
  return Trace(g, std::move(d), TraceLabel::derived);
}

enum class RecoveryMode { heat_alpha, wave_phi, general_psi, general_lambda };

inline const char* to_string(RecoveryMode m) {
  switch (m) {
    case RecoveryMode::heat_alpha: return "heat_alpha";
    case RecoveryMode::wave_phi: return "wave_phi";
    case RecoveryMode::general_psi: return "general_psi";
    case RecoveryMode::general_lambda: return "general_lambda";
  }
  return "?";
}

struct RecoveryThresholds {
  double h2_floor = 0.0;  ///< delta; <= 0 selects 1e-8 * max|h2|
  double c_min = 0.0;

  bool operator==(const RecoveryThresholds&) const = default;
};

struct RecoveryDiagnostics {
  double h2_floor = 0.0;           ///< delta actually used
  double c_min = 0.0;
  double min_abs_h2 = 0.0;         ///< over valid nodes
  double positivity_bound = 0.0;   ///< min recovered value over valid nodes
  std::size_t positivity_node = 0;
  double lipschitz_estimate = 0.0; ///< max |d coef / dt| over adjacent valid nodes
  std::vector<bool> valid;         ///< per node
  std::vector<std::size_t> flagged;       ///< nodes witnessing h2 = 0 (below floor or bracketing a sign change)
  std::vector<std::size_t> sign_changes;  ///< k such that h2 changes sign strictly between t_k and t_{k+1}
  bool positivity_warning = false;

  std::size_t valid_count() const { return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true)); }
};

struct RecoveryResult {
  CoefficientFn coefficient;
  RecoveryDiagnostics diagnostics;
  RecoveryMode mode;
  int order;
};

/// coef(t_k) = D^order h1(t_k) / h2(t_k).
///
/// Nodes with |h2| < delta are left out of the valid set and flagged; sign
/// changes of h2 between nodes flag both bracketing nodes. Order 2 excludes
/// t = 0 from the valid set and from the hypothesis domain. An empty valid
/// set is a HypothesisViolation.
inline RecoveryResult recover(const Trace& h1, const Trace& h2, int order, const DifferentiationSpec& diff,
                              const RecoveryThresholds& thresholds = {},
                              std::optional<RecoveryMode> mode = std::nullopt) {
  if (!(h1.grid() == h2.grid())) throw InvalidInput("traces live on different time grids");
  if (order != 1 && order != 2) throw InvalidInput("recovery order must be 1 or 2");
  if (diff.order != order) throw InvalidInput("differentiation order does not match recovery order");
  const TimeGrid& g = h1.grid();
  const std::size_t n = g.size();
  Trace d1 = differentiate(h1, diff);

  RecoveryDiagnostics diag;
  diag.c_min = thresholds.c_min;
  diag.h2_floor = thresholds.h2_floor > 0.0 ? thresholds.h2_floor : 1e-8 * h2.max_abs();
  const double delta = diag.h2_floor;
  const std::size_t first = order == 2 ? 1 : 0;

  std::vector<double> coef(n, 0.0);
  diag.valid.assign(n, false);
  std::vector<bool> flag(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    double ratio = h2[k] != 0.0 ? d1[k] / h2[k] : 0.0;
    coef[k] = std::isfinite(ratio) ? ratio : 0.0;
    if (k < first) continue;
    if (std::abs(h2[k]) >= delta && std::isfinite(ratio) && delta > 0.0) {
      diag.valid[k] = true;
    } else {
      flag[k] = true;
    }
  }
  for (std::size_t k = first; k + 1 < n; ++k) {
    if (h2[k] * h2[k + 1] < 0.0) {
      diag.sign_changes.push_back(k);
      flag[k] = flag[k + 1] = true;
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    if (flag[k]) diag.flagged.push_back(k);

  if (diag.valid_count() == 0) throw HypothesisViolation("hypothesis h2 != 0 violated everywhere");

  diag.min_abs_h2 = std::numeric_limits<double>::infinity();
  diag.positivity_bound = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> prev;
  for (std::size_t k = 0; k < n; ++k) {
    if (!diag.valid[k]) {
      prev.reset();
      continue;
    }
    diag.min_abs_h2 = std::min(diag.min_abs_h2, std::abs(h2[k]));
    if (coef[k] < diag.positivity_bound) {
      diag.positivity_bound = coef[k];
      diag.positivity_node = k;
    }
    if (prev) {
      double slope = std::abs(coef[k] - coef[*prev]) / (g.node(k) - g.node(*prev));
      diag.lipschitz_estimate = std::max(diag.lipschitz_estimate, slope);
    }
    prev = k;
  }
  diag.positivity_warning = diag.positivity_bound < thresholds.c_min;

  RecoveryMode m = mode.value_or(order == 1 ? RecoveryMode::heat_alpha : RecoveryMode::wave_phi);
  CoefficientKind kind = CoefficientKind::alpha;
  switch (m) {
    case RecoveryMode::heat_alpha: kind = CoefficientKind::alpha; break;
    case RecoveryMode::wave_phi: kind = CoefficientKind::phi; break;
    case RecoveryMode::general_psi: kind = CoefficientKind::psi; break;
    case RecoveryMode::general_lambda: kind = CoefficientKind::lambda; break;
  }
  return RecoveryResult{CoefficientFn::from_samples(std::move(coef), g, kind), std::move(diag), m, order};
}

enum class Theorem { heat_polyharmonic, wave, general };

inline const char* to_string(Theorem t) {
  switch (t) {
    case Theorem::heat_polyharmonic: return "heat_polyharmonic";
    case Theorem::wave: return "wave";
    case Theorem::general: return "general";
  }
  return "?";
}

struct HypothesisItem {
  std::string name;
  bool passed = true;
  double value = 0.0;                   ///< the reported constant (min |h2|, C, Lipschitz estimate)
  std::vector<std::size_t> witnesses;  ///< failing nodes, empty when passed
  std::string note;
};

struct DiagnosticsReport {
  Theorem theorem;
  std::vector<HypothesisItem> items;

  bool all_passed() const {
    return std::all_of(items.begin(), items.end(), [](const HypothesisItem& i) { return i.passed; });
  }
  const HypothesisItem* find(const std::string& name) const {
    for (const auto& i : items)
      if (i.name == name) return &i;
    return nullptr;
  }
};

namespace detail {

inline HypothesisItem positivity_item(const RecoveryResult& r, std::string name, std::string note) {
  const auto& d = r.diagnostics;
  HypothesisItem it{std::move(name), true, d.positivity_bound, {}, std::move(note)};
  auto s = r.coefficient.samples();
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (!d.valid[k]) continue;
    if (!(s[k] > 0.0) || s[k] < d.c_min) it.witnesses.push_back(k);
  }
  it.passed = it.witnesses.empty();
  return it;
}

}  // namespace detail

/// Report-only check of the hypotheses behind the ratio formula for the chosen
/// theorem family. Never throws on failing data.
inline DiagnosticsReport validate_hypotheses(const RecoveryResult& r, Theorem theorem) {
  const auto& d = r.diagnostics;
  DiagnosticsReport rep{theorem, {}};

  HypothesisItem nonvanishing{"h2_nonvanishing", d.flagged.empty(), d.min_abs_h2, d.flagged, ""};
  nonvanishing.note = r.order == 2 ? "checked on (0, T]" : "checked on [0, T]";
  rep.items.push_back(std::move(nonvanishing));

  switch (theorem) {
    case Theorem::heat_polyharmonic:
      rep.items.push_back(detail::positivity_item(
          r, "petrovskii_parabolicity",
          "interpreted as alpha(t) >= c_min > 0 for the symbol (-Laplacian)^m"));
      break;
    case Theorem::wave: {
      rep.items.push_back(detail::positivity_item(r, "coefficient_positive", "h1''/h2 >= C > 0; value is C"));
      HypothesisItem lip{"lipschitz_estimate", std::isfinite(d.lipschitz_estimate), d.lipschitz_estimate, {},
                         "finite-difference estimate; reported, not proven"};
      rep.items.push_back(std::move(lip));
      break;
    }
    case Theorem::general: {
      HypothesisItem fin{"coefficient_finite", true, 0.0, {}, "ratio finite on the valid nodes"};
      auto s = r.coefficient.samples();
      for (std::size_t k = 0; k < s.size(); ++k)
        if (d.valid[k] && !std::isfinite(s[k])) fin.witnesses.push_back(k);
      fin.passed = fin.witnesses.empty();
      rep.items.push_back(std::move(fin));
      break;
    }
  }
  return rep;
}

}  // namespace evocoef
