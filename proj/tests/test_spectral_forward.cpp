#include <gtest/gtest.h>

#include <cmath>

#include "evocoef/spectral_forward.hpp"

using namespace evocoef;

namespace {

CoefficientFn closed(ClosedForm cf, const TimeGrid& tg, CoefficientKind kind) {
  return CoefficientFn::from_closed_form(cf, tg, kind);
}

Field cos_mode(const SpaceGrid& g, int k) {
  const double xi = k * M_PI / g.half_width();
  return Field::sample(g, [&](const std::vector<double>& x) { return std::cos(xi * x[0]); });
}

void expect_bitwise_equal(const SpacetimeSolution& a, const SpacetimeSolution& b) {
  ASSERT_EQ(a.time_grid().size(), b.time_grid().size());
  for (std::size_t k = 0; k < a.time_grid().size(); ++k) {
    Field x = a.slice(k), y = b.slice(k);
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_EQ(x[i], y[i]) << "slice " << k << " node " << i;
  }
}

}  // namespace

TEST(Symbols, ValuesAndLookup) {
  double xi[2] = {1.0, 2.0};
  std::span<const double> s(xi, 2);
  EXPECT_EQ(MultiplierSymbol::laplacian()(s), -5.0);
  EXPECT_EQ(MultiplierSymbol::neg_polyharmonic(2)(s), -25.0);
  EXPECT_EQ(MultiplierSymbol::laplacian_minus_bilaplacian()(s), -30.0);
  EXPECT_EQ(MultiplierSymbol::by_id("neg_polyharmonic_3")(s), -125.0);
  EXPECT_THROW(MultiplierSymbol::by_id("nope"), InvalidInput);
}

TEST(Heat, SingleModeDecay) {
  SpaceGrid g(1, M_PI, 16);
  TimeGrid tg(1.0, 10);
  Field u0 = cos_mode(g, 3);
  auto sol = solve_heat(u0, closed(ClosedForm::constant(1.0), tg, CoefficientKind::alpha), 1, tg);
  for (std::size_t k = 0; k < tg.size(); ++k) {
    Field s = sol.slice(k);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s[i], std::exp(-9.0 * tg.node(k)) * u0[i], 1e-14);
  }
}

TEST(Heat, GaussianWidening) {
  for (int dim : {1, 2}) {
    SpaceGrid g(dim, 20.0, dim == 1 ? 256 : 128);
    TimeGrid tg(1.0, 4);
    const double s = 0.5;
    auto gauss = [&](const std::vector<double>& x, double v) {
      double r2 = 0.0;
      for (double c : x) r2 += c * c;
      return std::pow(s / v, 0.5 * dim) * std::exp(-r2 / (4 * v));
    };
    Field u0 = Field::sample(g, [&](const std::vector<double>& x) { return gauss(x, s); });
    auto sol = solve_heat(u0, closed(ClosedForm::constant(1.0), tg, CoefficientKind::alpha), 1, tg);
    Field u = sol.slice(4);
    for (std::size_t i = 0; i < u.size(); ++i) {
      auto x = g.point(i);
      double r = 0.0;
      for (double c : x) r = std::max(r, std::abs(c));
      if (r > 8.0) continue;
      double ref = gauss(x, s + 1.0);
      ASSERT_NEAR(u[i], ref, 1e-8 * ref);
    }
  }
}

TEST(Heat, ZeroModeConservedExactly) {
  SpaceGrid g(2, 8.0, 32);
  TimeGrid tg(1.0, 16);
  Field u0 = bump_datum(g, std::vector<double>{0.0, 0.0}, 2.0, 1.0);
  auto sol = solve_heat(u0, closed(ClosedForm::sinusoidal(2, 1, 1), tg, CoefficientKind::alpha), 2, tg);
  auto z0 = fourier::forward(u0)[0];
  for (std::size_t k = 0; k < tg.size(); ++k) EXPECT_EQ(sol.mode(k, 0), z0);
}

TEST(Heat, SemigroupProperty) {
  SpaceGrid g(1, 8.0, 64);
  Field u0 = bump_datum(g, std::vector<double>{0.0}, 2.0, 1.0);
  ClosedForm a = ClosedForm::constant(1.5);
  TimeGrid full(1.0, 10), half(0.5, 5);
  auto direct = solve_heat(u0, closed(a, full, CoefficientKind::alpha), 1, full);
  auto first = solve_heat(u0, closed(a, half, CoefficientKind::alpha), 1, half);
  auto second = solve_heat(first.slice(5), closed(a, half, CoefficientKind::alpha), 1, half);
  Field x = direct.slice(10), y = second.slice(5);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-10 * x.max_abs());
}

TEST(Heat, Linearity) {
  SpaceGrid g(1, 8.0, 64);
  TimeGrid tg(1.0, 8);
  auto alpha = closed(ClosedForm::sinusoidal(2, 1, 1), tg, CoefficientKind::alpha);
  Field u = bump_datum(g, std::vector<double>{0.0}, 2.0, 1.0);
  Field w = bump_datum(g, std::vector<double>{1.0}, 1.5, 2.0);
  auto su = solve_heat(u, alpha, 1, tg), sw = solve_heat(w, alpha, 1, tg);
  auto sc = solve_heat(linear_combination(2.0, u, -3.0, w), alpha, 1, tg);
  for (std::size_t k = 0; k < tg.size(); ++k) {
    Field a = sc.slice(k), b = su.slice(k), c = sw.slice(k);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], 2.0 * b[i] - 3.0 * c[i], 1e-13);
  }
}

TEST(Heat, TimeSeriesMatchesSlices) {
  SpaceGrid g(2, 8.0, 16);
  TimeGrid tg(0.5, 8);
  Field u0 = bump_datum(g, std::vector<double>{0.0, 0.0}, 2.0, 1.0);
  auto sol = solve_heat(u0, closed(ClosedForm::constant(1.0), tg, CoefficientKind::alpha), 1, tg);
  std::size_t flat = g.flat_index(std::vector<int>{7, 9});
  auto series = sol.time_series(flat);
  for (std::size_t k = 0; k < tg.size(); ++k) EXPECT_NEAR(series[k], sol.slice(k)[flat], 1e-15);
}

TEST(GeneralFirst, PolyharmonicSymbolIsHeatBitForBit) {
  SpaceGrid g(2, 8.0, 16);
  TimeGrid tg(1.0, 16);
  Field u0 = bump_datum(g, std::vector<double>{0.0, 0.0}, 2.0, 1.0);
  auto alpha = closed(ClosedForm::sinusoidal(2, 1, 1), tg, CoefficientKind::alpha);
  for (int m : {1, 2}) {
    expect_bitwise_equal(solve_heat(u0, alpha, m, tg),
                         solve_general_first_integrated(u0, antiderivative(alpha), MultiplierSymbol::neg_polyharmonic(m)));
  }
}

TEST(GeneralFirst, MixedSymbolSingleMode) {
  SpaceGrid g(1, M_PI, 16);
  TimeGrid tg(0.2, 8);
  Field u0 = cos_mode(g, 2);
  auto sol = solve_general_first(u0, closed(ClosedForm::constant(1.0), tg, CoefficientKind::psi),
                                 MultiplierSymbol::laplacian_minus_bilaplacian(), tg);
  for (std::size_t k = 0; k < tg.size(); ++k) {
    Field s = sol.slice(k);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s[i], std::exp(-20.0 * tg.node(k)) * u0[i], 1e-14);
  }
}

TEST(GeneralFirst, ZeroSymbolIsIdentity) {
  SpaceGrid g(1, 8.0, 32);
  TimeGrid tg(1.0, 8);
  Field u0 = bump_datum(g, std::vector<double>{0.0}, 2.0, 1.0);
  auto sol = solve_general_first(u0, closed(ClosedForm::constant(3.0), tg, CoefficientKind::psi),
                                 MultiplierSymbol::zero(), tg);
  for (std::size_t k = 0; k < tg.size(); ++k) {
    Field s = sol.slice(k);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s[i], u0[i], 1e-15);
  }
}

TEST(GeneralFirst, OverflowGuard) {
  SpaceGrid g(1, M_PI, 16);
  TimeGrid tg(1.0, 8);
  auto psi = closed(ClosedForm::constant(-1.0), tg, CoefficientKind::psi);
  EXPECT_THROW(solve_general_first(cos_mode(g, 1), psi, MultiplierSymbol::laplacian(), tg), InvalidInput);
}

TEST(Wave, ZeroDataZeroSolution) {
  SpaceGrid g(2, 4.0, 16);
  TimeGrid tg(1.0, 64);
  auto sol = solve_wave(Field(g), Field(g), closed(ClosedForm::constant(1.0), tg, CoefficientKind::phi), tg);
  for (std::size_t k = 0; k < tg.size(); ++k) EXPECT_EQ(sol.slice(k).max_abs(), 0.0);
}

TEST(Wave, ConstantSpeedOscillator) {
  SpaceGrid g(1, M_PI, 8);
  TimeGrid tg(1.0, 4096);
  Field u0 = cos_mode(g, 3);
  auto sol = solve_wave(u0, Field(g), closed(ClosedForm::constant(1.0), tg, CoefficientKind::phi), tg);
  const auto c0 = sol.mode(0, 3);
  double err = 0.0;
  for (std::size_t k = 0; k < tg.size(); ++k)
    err = std::max(err, std::abs(sol.mode(k, 3) / c0 - std::cos(3.0 * tg.node(k))));
  EXPECT_LE(err, 1e-8);
}

TEST(Wave, FourthOrderSelfConvergence) {
  SpaceGrid g(1, 8.0, 32);
  Field u1 = bump_datum(g, std::vector<double>{0.0}, 2.0, 1.0);
  ClosedForm phi = ClosedForm::exponential(1.0, 0.5, 1.0);
  ObservationPoint q = ObservationPoint::on(g, std::vector<double>{0.0});
  auto trace = [&](int n) {
    TimeGrid tg(1.0, n);
    return trace_at(solve_wave(Field(g), u1, closed(phi, tg, CoefficientKind::phi), tg), q);
  };
  Trace ref = trace(4 * 256);
  auto err = [&](int n) {
    Trace h = trace(n);
    double e = 0.0;
    int stride = 1024 / n;
    for (std::size_t k = 0; k < h.size(); ++k) e = std::max(e, std::abs(h[k] - ref[k * stride]));
    return e;
  };
  double order = std::log2(err(64) / err(128));
  EXPECT_NEAR(order, 4.0, 0.3);
}

TEST(Wave, ZeroModeLaw) {
  SpaceGrid g(1, 8.0, 32);
  TimeGrid tg(1.0, 128);
  Field u0 = bump_datum(g, std::vector<double>{0.0}, 2.0, 1.0);
  Field u1 = bump_datum(g, std::vector<double>{1.0}, 1.0, 0.5);
  auto sol = solve_wave(u0, u1, closed(ClosedForm::exponential(1.0, 0.5, 1.0), tg, CoefficientKind::phi), tg);
  auto a = fourier::forward(u0)[0], b = fourier::forward(u1)[0];
  for (std::size_t k = 0; k < tg.size(); ++k)
    EXPECT_NEAR(std::abs(sol.mode(k, 0) - (a + tg.node(k) * b)), 0.0, 1e-12 * std::abs(a));
}

TEST(Wave, EnergyDriftConstantSpeed) {
  SpaceGrid g(1, 8.0, 64);
  TimeGrid tg(1.0, 4096);
  Field u1 = bump_datum(g, std::vector<double>{0.0}, 2.0, 1.0);
  const double phi = 1.3;
  auto sol = solve_wave(bump_datum(g, std::vector<double>{0.5}, 1.5, 0.7), u1,
                        closed(ClosedForm::constant(phi), tg, CoefficientKind::phi), tg);
  auto energy = [&](std::size_t k) {
    double e = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      e += std::norm(sol.mode_velocity(k, i)) + phi * g.frequency_norm2(i) * std::norm(sol.mode(k, i));
    return e;
  };
  double e0 = energy(0), drift = 0.0;
  for (std::size_t k = 0; k < tg.size(); k += 128) drift = std::max(drift, std::abs(energy(k) - e0) / e0);
  drift = std::max(drift, std::abs(energy(tg.n_steps()) - e0) / e0);
  EXPECT_LE(drift, 1e-8);
}

TEST(Wave, Guards) {
  SpaceGrid g(1, M_PI, 64);
  TimeGrid coarse(1.0, 8), fine(1.0, 1024);
  Field u1 = cos_mode(g, 1);
  EXPECT_THROW(solve_wave(Field(g), u1, closed(ClosedForm::constant(1.0), coarse, CoefficientKind::phi), coarse),
               InvalidInput);
  EXPECT_THROW(solve_wave(Field(g), u1, closed(ClosedForm::constant(0.0), fine, CoefficientKind::phi), fine),
               InvalidInput);
  EXPECT_THROW(solve_general_second(u1, closed(ClosedForm::constant(1.0), fine, CoefficientKind::lambda),
                                    MultiplierSymbol("positive", [](std::span<const double>) { return 1.0; },
                                                     MultiplierSymbol::Stability::oscillatory),
                                    fine),
               InvalidInput);
}

TEST(GeneralSecond, LaplacianIsWaveBitForBit) {
  SpaceGrid g(2, 8.0, 16);
  TimeGrid tg(1.0, 64);
  Field u1 = bump_datum(g, std::vector<double>{0.0, 0.0}, 2.0, 1.0);
  auto lam = closed(ClosedForm::sinusoidal(2.0, 1.0, 1.0), tg, CoefficientKind::lambda);
  expect_bitwise_equal(solve_wave(Field(g), u1, lam, tg),
                       solve_general_second(u1, lam, MultiplierSymbol::laplacian(), tg));
}

TEST(GeneralSecond, ZeroVelocityAndFreeDrift) {
  SpaceGrid g(1, 4.0, 16);
  TimeGrid tg(1.0, 32);
  auto lam = closed(ClosedForm::constant(1.0), tg, CoefficientKind::lambda);
  EXPECT_EQ(solve_general_second(Field(g), lam, MultiplierSymbol::laplacian(), tg).slice(32).max_abs(), 0.0);
  Field u1 = bump_datum(g, std::vector<double>{0.0}, 1.0, 1.0);
  auto sol = solve_general_second(u1, lam, MultiplierSymbol::zero(), tg);
  for (std::size_t k = 0; k < tg.size(); ++k) {
    Field s = sol.slice(k);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s[i], tg.node(k) * u1[i], 1e-14);
  }
}

TEST(Parallel, ThreadCountDoesNotChangeResults) {
  SpaceGrid g(2, 8.0, 32);
  TimeGrid tg(1.0, 256);
  Field u1 = bump_datum(g, std::vector<double>{0.0, 0.0}, 2.0, 1.0);
  auto phi = closed(ClosedForm::exponential(1.0, 0.5, 1.0), tg, CoefficientKind::phi);
  setenv("EVOCOEF_THREADS", "1", 1);
  auto a = solve_wave(Field(g), u1, phi, tg);
  setenv("EVOCOEF_THREADS", "4", 1);
  auto b = solve_wave(Field(g), u1, phi, tg);
  unsetenv("EVOCOEF_THREADS");
  expect_bitwise_equal(a, b);
}
