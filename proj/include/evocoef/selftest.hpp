#pragma once

// Quick built-in checks run by `evocoef selftest`: the cheap, closed-form
// cases of every module.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "evocoef/config.hpp"
#include "evocoef/green_kernel.hpp"
#include "evocoef/harness.hpp"
#include "evocoef/recovery.hpp"
#include "evocoef/spectral_forward.hpp"

namespace evocoef::selftest {

struct Check {
  std::string module;
  std::string name;
  std::function<bool()> run;
};

struct Outcome {
  std::string module;
  std::string name;
  bool passed = false;
  std::string error;
};

namespace detail {

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline Field cos_mode(const SpaceGrid& g, int k) {
  const double xi = k * M_PI / g.half_width();
  return Field::sample(g, [&](const std::vector<double>& x) { return std::cos(xi * x[0]); });
}

inline ExperimentConfig small_heat_config() {
  ExperimentConfig c;
  c.problem = ProblemType::heat;
  c.dim = 1;
  c.half_width = 8.0;
  c.points_per_dim = 64;
  c.n_steps = 64;
  c.datum.center = {0.0};
  c.datum.radius = 2.0;
  c.coefficient = ClosedForm::constant(1.0);
  return c;
}

}  // namespace detail

inline std::vector<Check> checks() {
  using detail::max_abs_diff;
  std::vector<Check> c;

  // core
  c.push_back({"core", "antiderivative of 1 is t", [] {
                 TimeGrid tg(1.0, 16);
                 auto a = CoefficientFn::from_samples(std::vector<double>(17, 1.0), tg, CoefficientKind::alpha);
                 auto a1 = antiderivative(a);
                 for (std::size_t k = 0; k < tg.size(); ++k)
                   if (std::abs(a1[k] - tg.node(k)) > 1e-15) return false;
                 return a1[0] == 0.0;
               }});
  c.push_back({"core", "antiderivative of cos is sin", [] {
                 TimeGrid tg(1.0, 16);
                 auto f = CoefficientFn::from_closed_form(ClosedForm::sinusoidal(0.0, 1.0, 1.0, M_PI / 2), tg,
                                                          CoefficientKind::psi);
                 auto f1 = antiderivative(f);
                 for (std::size_t k = 0; k < tg.size(); ++k)
                   if (std::abs(f1[k] - std::sin(tg.node(k))) > 1e-15) return false;
                 return true;
               }});
  c.push_back({"core", "polyharmonic eigenfunction", [] {
                 SpaceGrid g(1, M_PI, 32);
                 Field f = Field::sample(g, [](const std::vector<double>& x) { return std::sin(3.0 * x[0]); });
                 Field r = apply_polyharmonic(f, 2);
                 for (std::size_t i = 0; i < f.size(); ++i)
                   if (std::abs(r[i] - 81.0 * f[i]) > 1e-10) return false;
                 return true;
               }});
  c.push_back({"core", "polyharmonic annihilates constants", [] {
                 SpaceGrid g(2, 4.0, 16);
                 Field f = Field::sample(g, [](const std::vector<double>&) { return 2.5; });
                 return apply_polyharmonic(f, 1).max_abs() < 1e-13;
               }});
  c.push_back({"core", "bilaplacian of sin(x1)cos(x2) is 4f", [] {
                 SpaceGrid g(2, M_PI, 32);
                 Field f = Field::sample(g, [](const std::vector<double>& x) { return std::sin(x[0]) * std::cos(x[1]); });
                 Field r = apply_polyharmonic(f, 2);
                 for (std::size_t i = 0; i < f.size(); ++i)
                   if (std::abs(r[i] - 4.0 * f[i]) > 1e-9) return false;
                 return true;
               }});
  c.push_back({"core", "trace of spatially constant solution", [] {
                 SpaceGrid g(1, 4.0, 16);
                 TimeGrid tg(1.0, 8);
                 Field u0 = Field::sample(g, [](const std::vector<double>&) { return 3.0; });
                 auto sol = solve_heat(u0, CoefficientFn::from_closed_form(ClosedForm::constant(1.0), tg,
                                                                           CoefficientKind::alpha), 1, tg);
                 Trace h = trace_at(sol, ObservationPoint::on(g, std::vector<double>{0.0}));
                 for (std::size_t k = 0; k < h.size(); ++k)
                   if (std::abs(h[k] - 3.0) > 1e-14) return false;
                 return true;
               }});
  c.push_back({"core", "trace of zero solution", [] {
                 SpaceGrid g(1, 4.0, 16);
                 TimeGrid tg(1.0, 32);
                 auto sol = solve_wave(Field(g), Field(g),
                                       CoefficientFn::from_closed_form(ClosedForm::constant(1.0), tg,
                                                                       CoefficientKind::phi), tg);
                 return trace_at(sol, ObservationPoint::on(g, std::vector<double>{0.0})).max_abs() == 0.0;
               }});
  c.push_back({"core", "bump center and support", [] {
                 SpaceGrid g(1, 8.0, 64);
                 Field b = bump_datum(g, std::vector<double>{0.0}, 2.0, 1.5);
                 ObservationPoint q = ObservationPoint::on(g, std::vector<double>{0.0});
                 if (b[q.flat_index()] != 1.5) return false;
                 for (std::size_t i = 0; i < b.size(); ++i)
                   if (std::abs(g.coordinate(static_cast<int>(i))) >= 2.0 && b[i] != 0.0) return false;
                 return true;
               }});

  // spectral_forward
  c.push_back({"spectral_forward", "single heat mode decays as exp(-xi^2 t)", [] {
                 SpaceGrid g(1, M_PI, 16);
                 TimeGrid tg(1.0, 8);
                 Field u0 = detail::cos_mode(g, 2);
                 auto sol = solve_heat(u0, CoefficientFn::from_closed_form(ClosedForm::constant(1.0), tg,
                                                                           CoefficientKind::alpha), 1, tg);
                 Field s = sol.slice(8);
                 for (std::size_t i = 0; i < s.size(); ++i)
                   if (std::abs(s[i] - std::exp(-4.0) * u0[i]) > 1e-14) return false;
                 return true;
               }});
  c.push_back({"spectral_forward", "zero mode conserved for m=2", [] {
                 SpaceGrid g(1, 8.0, 64);
                 TimeGrid tg(1.0, 8);
                 Field u0 = bump_datum(g, std::vector<double>{0.0}, 2.0, 1.0);
                 auto sol = solve_heat(u0, CoefficientFn::from_closed_form(ClosedForm::sinusoidal(2, 1, 1), tg,
                                                                           CoefficientKind::alpha), 2, tg);
                 auto z0 = fourier::forward(u0)[0];
                 for (std::size_t k = 0; k < tg.size(); ++k)
                   if (sol.mode(k, 0) != z0) return false;
                 return true;
               }});
  c.push_back({"spectral_forward", "zero data give zero wave", [] {
                 SpaceGrid g(1, 4.0, 16);
                 TimeGrid tg(1.0, 16);
                 auto sol = solve_wave(Field(g), Field(g),
                                       CoefficientFn::from_closed_form(ClosedForm::constant(1.0), tg,
                                                                       CoefficientKind::phi), tg);
                 for (std::size_t k = 0; k < tg.size(); ++k)
                   if (sol.slice(k).max_abs() != 0.0) return false;
                 return true;
               }});
  c.push_back({"spectral_forward", "general symbol -|xi|^2m equals heat", [] {
                 SpaceGrid g(1, 8.0, 32);
                 TimeGrid tg(1.0, 16);
                 Field u0 = bump_datum(g, std::vector<double>{0.0}, 2.0, 1.0);
                 auto a = CoefficientFn::from_closed_form(ClosedForm::sinusoidal(2, 1, 1), tg, CoefficientKind::alpha);
                 auto h = solve_heat(u0, a, 2, tg);
                 auto p = solve_general_first_integrated(u0, antiderivative(a), MultiplierSymbol::neg_polyharmonic(2));
                 for (std::size_t k = 0; k < tg.size(); ++k) {
                   Field x = h.slice(k), y = p.slice(k);
                   if (x.values().size() != y.values().size()) return false;
                   for (std::size_t i = 0; i < x.size(); ++i)
                     if (x[i] != y[i]) return false;
                 }
                 return true;
               }});
  c.push_back({"spectral_forward", "zero symbol is the identity", [] {
                 SpaceGrid g(1, 8.0, 32);
                 TimeGrid tg(1.0, 8);
                 Field u0 = bump_datum(g, std::vector<double>{0.0}, 2.0, 1.0);
                 auto sol = solve_general_first(
                     u0, CoefficientFn::from_closed_form(ClosedForm::constant(1.0), tg, CoefficientKind::psi),
                     MultiplierSymbol::zero(), tg);
                 return max_abs_diff(sol.slice(8).values(), u0.values()) < 1e-15;
               }});
  c.push_back({"spectral_forward", "general second with zero velocity is zero", [] {
                 SpaceGrid g(1, 4.0, 16);
                 TimeGrid tg(1.0, 32);
                 auto sol = solve_general_second(
                     Field(g), CoefficientFn::from_closed_form(ClosedForm::constant(2.0), tg, CoefficientKind::lambda),
                     MultiplierSymbol::laplacian(), tg);
                 return sol.slice(32).max_abs() == 0.0;
               }});
  c.push_back({"spectral_forward", "gaussian widens to variance sigma + t", [] {
                 SpaceGrid g(1, 20.0, 256);
                 TimeGrid tg(1.0, 4);
                 const double s = 0.5;
                 Field u0 = Field::sample(g, [&](const std::vector<double>& x) { return std::exp(-x[0] * x[0] / (4 * s)); });
                 auto sol = solve_heat(u0, CoefficientFn::from_closed_form(ClosedForm::constant(1.0), tg,
                                                                           CoefficientKind::alpha), 1, tg);
                 Field u = sol.slice(4);
                 for (std::size_t i = 0; i < u.size(); ++i) {
                   double x = g.coordinate(static_cast<int>(i));
                   if (std::abs(x) > 10.0) continue;
                   double ref = std::sqrt(s / (s + 1.0)) * std::exp(-x * x / (4 * (s + 1.0)));
                   if (std::abs(u[i] - ref) > 1e-8 * ref) return false;
                 }
                 return true;
               }});
  c.push_back({"spectral_forward", "unit-speed oscillator gives cos", [] {
                 SpaceGrid g(1, M_PI, 8);
                 TimeGrid tg(1.0, 4096);
                 Field u0 = detail::cos_mode(g, 2);
                 auto sol = solve_wave(u0, Field(g),
                                       CoefficientFn::from_closed_form(ClosedForm::constant(1.0), tg,
                                                                       CoefficientKind::phi), tg);
                 const double n = static_cast<double>(g.size());
                 for (std::size_t k = 0; k < tg.size(); k += 64)
                   if (std::abs(sol.mode(k, 2).real() / (0.5 * n) - std::cos(2.0 * tg.node(k))) > 1e-8) return false;
                 return true;
               }});
  c.push_back({"spectral_forward", "mixed symbol single mode", [] {
                 SpaceGrid g(1, M_PI, 16);
                 TimeGrid tg(0.25, 8);
                 Field u0 = detail::cos_mode(g, 1);
                 auto sol = solve_general_first(
                     u0, CoefficientFn::from_closed_form(ClosedForm::constant(1.0), tg, CoefficientKind::psi),
                     MultiplierSymbol::laplacian_minus_bilaplacian(), tg);
                 Field s = sol.slice(8);
                 for (std::size_t i = 0; i < s.size(); ++i)
                   if (std::abs(s[i] - std::exp(-2.0 * 0.25) * u0[i]) > 1e-14) return false;
                 return true;
               }});
  c.push_back({"spectral_forward", "zero symbol drifts as t u1", [] {
                 SpaceGrid g(1, 4.0, 16);
                 TimeGrid tg(1.0, 8);
                 Field u1 = bump_datum(g, std::vector<double>{0.0}, 1.0, 1.0);
                 auto sol = solve_general_second(
                     u1, CoefficientFn::from_closed_form(ClosedForm::constant(1.0), tg, CoefficientKind::lambda),
                     MultiplierSymbol::zero(), tg);
                 for (std::size_t k = 0; k < tg.size(); ++k) {
                   Field s = sol.slice(k);
                   for (std::size_t i = 0; i < s.size(); ++i)
                     if (std::abs(s[i] - tg.node(k) * u1[i]) > 1e-14) return false;
                 }
                 return true;
               }});

  // green_kernel
  c.push_back({"green_kernel", "J0(0) = 1", [] { return bessel_j(0.0, 0.0) == 1.0; }});
  c.push_back({"green_kernel", "J_1/2(pi) = 0", [] { return std::abs(bessel_j(0.5, M_PI)) < 1e-15; }});
  c.push_back({"green_kernel", "m=1 n=1 kernel is the Gaussian", [] {
                 KernelQuery q{0.5, {0.7}, 0.5, 1, 1};
                 double e = eval_kernel(q, QuadratureSpec::for_order(1));
                 double ref = std::exp(-0.49 / 2.0) / std::sqrt(2.0 * M_PI);
                 return std::abs(e - ref) <= 1e-8 * ref;
               }});
  c.push_back({"green_kernel", "zero datum gives zero trace", [] {
                 SpaceGrid g(1, 8.0, 32);
                 TimeGrid tg(1.0, 4);
                 Trace h = poisson_solve(Field(g), ObservationPoint::on(g, std::vector<double>{0.0}),
                                         CoefficientFn::from_closed_form(ClosedForm::constant(1.0), tg,
                                                                         CoefficientKind::alpha), 1, tg);
                 return h.max_abs() == 0.0;
               }});

  // recovery
  c.push_back({"recovery", "central derivative exact on t^2", [] {
                 TimeGrid tg(1.0, 16);
                 std::vector<double> v(tg.size());
                 for (std::size_t k = 0; k < v.size(); ++k) v[k] = tg.node(k) * tg.node(k);
                 Trace h(tg, v);
                 Trace d1 = differentiate(h, DifferentiationSpec::central(1));
                 Trace d2 = differentiate(h, DifferentiationSpec::central(2));
                 for (std::size_t k = 1; k + 1 < tg.size(); ++k)
                   if (std::abs(d1[k] - 2.0 * tg.node(k)) > 1e-13) return false;
                 for (std::size_t k = 0; k < tg.size(); ++k)
                   if (std::abs(d2[k] - 2.0) > 1e-10) return false;
                 return true;
               }});
  c.push_back({"recovery", "sin/cos ratio recovers 1", [] {
                 TimeGrid tg(1.0, 1000);
                 std::vector<double> s(tg.size()), co(tg.size());
                 for (std::size_t k = 0; k < s.size(); ++k) {
                   s[k] = std::sin(tg.node(k));
                   co[k] = std::cos(tg.node(k));
                 }
                 RecoveryThresholds th;
                 th.h2_floor = 0.1;
                 auto r = recover(Trace(tg, s), Trace(tg, co), 1, DifferentiationSpec::central(1), th);
                 for (std::size_t k = 0; k < tg.size(); ++k)
                   if (std::abs(r.coefficient[k] - 1.0) > 1e-5) return false;
                 return true;
               }});
  c.push_back({"recovery", "h2 = 0 is a hard error", [] {
                 TimeGrid tg(1.0, 16);
                 Trace z(tg, std::vector<double>(tg.size(), 0.0));
                 try {
                   recover(z, z, 1, DifferentiationSpec::central(1));
                 } catch (const HypothesisViolation&) {
                   return true;
                 }
                 return false;
               }});
  c.push_back({"recovery", "hypotheses pass for coefficient 1", [] {
                 TimeGrid tg(1.0, 32);
                 std::vector<double> h1(tg.size()), h2(tg.size(), 1.0);
                 for (std::size_t k = 0; k < h1.size(); ++k) h1[k] = tg.node(k);
                 auto r = recover(Trace(tg, h1), Trace(tg, h2), 1, DifferentiationSpec::central(1));
                 auto rep = validate_hypotheses(r, Theorem::heat_polyharmonic);
                 auto* pos = rep.find("petrovskii_parabolicity");
                 return rep.all_passed() && pos && std::abs(pos->value - 1.0) < 1e-12;
               }});
  c.push_back({"recovery", "negative dip is witnessed", [] {
                 TimeGrid tg(1.0, 32);
                 std::vector<double> h1(tg.size()), h2(tg.size(), 1.0);
                 for (std::size_t k = 0; k < h1.size(); ++k) h1[k] = tg.node(k);
                 auto r = recover(Trace(tg, h1), Trace(tg, h2), 1, DifferentiationSpec::central(1));
                 std::vector<double> s(r.coefficient.samples().begin(), r.coefficient.samples().end());
                 s[10] = -0.1;
                 r.coefficient = CoefficientFn::from_samples(s, tg, CoefficientKind::alpha);
                 auto rep = validate_hypotheses(r, Theorem::heat_polyharmonic);
                 auto* pos = rep.find("petrovskii_parabolicity");
                 return pos && !pos->passed && pos->witnesses == std::vector<std::size_t>{10};
               }});

  // harness
  c.push_back({"harness", "heat m=1 second datum is the Laplacian", [] {
                 auto cfg = detail::small_heat_config();
                 auto pair = build_pair(cfg);
                 Field lap = apply_symbol(pair.first.position, MultiplierSymbol::laplacian());
                 return max_abs_diff(pair.second.position.values(), lap.values()) < 1e-12;
               }});
  c.push_back({"harness", "wave pair has zero positions", [] {
                 auto cfg = detail::small_heat_config();
                 cfg.problem = ProblemType::wave;
                 auto pair = build_pair(cfg);
                 return pair.first.position.max_abs() == 0.0 && pair.second.position.max_abs() == 0.0;
               }});
  c.push_back({"harness", "general laplacian pair matches heat m=1", [] {
                 auto cfg = detail::small_heat_config();
                 auto heat = build_pair(cfg);
                 cfg.problem = ProblemType::general_first;
                 cfg.symbol = "laplacian";
                 auto gen = build_pair(cfg);
                 return max_abs_diff(heat.second.position.values(), gen.second.position.values()) < 1e-15;
               }});
  c.push_back({"harness", "zero noise is the identity", [] {
                 TimeGrid tg(1.0, 8);
                 Trace h(tg, {1, 2, 3, 4, 5, 6, 7, 8, 9});
                 Trace n = add_noise(h, 0.0, 7);
                 return max_abs_diff(h.values(), n.values()) == 0.0;
               }});
  c.push_back({"harness", "noise is deterministic", [] {
                 TimeGrid tg(1.0, 8);
                 Trace h(tg, {1, 2, 3, 4, 5, 6, 7, 8, 9});
                 return max_abs_diff(add_noise(h, 0.01, 7).values(), add_noise(h, 0.01, 7).values()) == 0.0;
               }});
  c.push_back({"harness", "alpha = 1 refinement and the order floor", [] {
                 auto cfg = detail::small_heat_config();
                 cfg.datum.kind = DatumConfig::Kind::modes;
                 cfg.datum.modes = {{1.0, {1}}};
                 auto rows = convergence_study(cfg, {32, 64, 128});
                 for (const auto& r : rows)
                   if (r.error > 1e-4) return false;
                 if (rows[0].observed_order || std::abs(*rows[2].observed_order - 2.0) > 0.3) return false;
                 return !observed_order(1e-13, 1e-14) && !observed_order(1e-3, 1e-13) && observed_order(4e-3, 1e-3);
               }});
  c.push_back({"harness", "error metrics of exact and scaled", [] {
                 TimeGrid tg(1.0, 4);
                 auto t = CoefficientFn::from_samples({1, 2, 3, 2, 1}, tg, CoefficientKind::alpha);
                 auto s = CoefficientFn::from_samples({1.1, 2.2, 3.3, 2.2, 1.1}, tg, CoefficientKind::alpha);
                 auto spike = CoefficientFn::from_samples({1, 2, 3, 5, 1}, tg, CoefficientKind::alpha);
                 std::vector<bool> all(5, true);
                 auto e0 = error_metrics(t, t, all);
                 auto e1 = error_metrics(s, t, all);
                 auto e2 = error_metrics(spike, t, all);
                 return e0.max_rel == 0.0 && e0.l2_rel == 0.0 && std::abs(e1.max_rel - 0.1) < 1e-12 &&
                        std::abs(e1.l2_rel - 0.1) < 1e-12 && std::abs(e2.max_rel - 1.0) < 1e-12;
               }});

  // cli configuration
  c.push_back({"cli", "minimal config gets defaults", [] {
                 Json doc = Json::parse(R"({"problem":{"type":"heat"},"grids":{},"datum":{"center":[0]},
                                            "coefficient":{"family":"constant","a":1}})");
                 AppConfig app = parse_config(doc);
                 return app.experiment.n_steps == 256 && app.experiment.points_per_dim == 64 &&
                        app.experiment.noise.sigma_rel == 0.0 && app.out_dir == "out";
               }});
  c.push_back({"cli", "unknown key is named", [] {
                 Json doc = Json::parse(R"({"problem":{"type":"heat"},"grids":{},"datum":{"center":[0]},
                                            "coefficient":{"family":"constant","a":1,"alpha_typo":3}})");
                 try {
                   parse_config(doc);
                 } catch (const ConfigError& e) {
                   return std::string(e.what()).find("alpha_typo") != std::string::npos;
                 }
                 return false;
               }});
  c.push_back({"cli", "n_steps = 0 is rejected", [] {
                 Json doc = Json::parse(R"({"problem":{"type":"heat"},"grids":{"n_steps":0},"datum":{"center":[0]},
                                            "coefficient":{"family":"constant","a":1}})");
                 try {
                   parse_config(doc);
                 } catch (const ConfigError& e) {
                   return std::string(e.what()).find("n_steps must be positive") != std::string::npos;
                 }
                 return false;
               }});
  return c;
}

inline std::vector<Outcome> run_all() {
  std::vector<Outcome> out;
  for (const auto& c : checks()) {
    Outcome o{c.module, c.name, false, ""};
    try {
      o.passed = c.run();
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace evocoef::selftest
