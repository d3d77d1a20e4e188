#include <gtest/gtest.h>

#include <cmath>

#include "evocoef/green_kernel.hpp"
#include "evocoef/spectral_forward.hpp"
#include "oracles.hpp"

using namespace evocoef;

namespace {

double kernel(double a1, std::vector<double> x, int m) {
  KernelQuery q{1.0, std::move(x), a1, m, 0};
  q.n = static_cast<int>(q.x.size());
  return eval_kernel(q, QuadratureSpec::for_order(m));
}

// Signed mass of the radial kernel over the ball of radius R (composite Simpson in r).
double mass(int m, int n, double a1, double R) {
  const int panels = 4000;
  const double h = R / panels;
  const double sphere = n == 1 ? 2.0 : n == 2 ? 2.0 * M_PI : 4.0 * M_PI;
  double s = 0.0;
  for (int i = 0; i <= panels; ++i) {
    double r = i * h;
    double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    std::vector<double> x(n, 0.0);
    x[0] = r;
    s += w * kernel(a1, x, m) * std::pow(r, n - 1);
  }
  return sphere * s * h / 3.0;
}

}  // namespace

TEST(Bessel, MatchesStandardLibrary) {
  double err = 0.0;
  for (double z = 0.0; z <= 80.0; z += 0.0137) err = std::max(err, std::abs(bessel_j(0.0, z) - std::cyl_bessel_j(0.0, z)));
  EXPECT_LE(err, 1e-12);
  for (double z : {0.1, 1.0, 7.5, 30.0}) {
    EXPECT_NEAR(bessel_j(0.5, z), std::cyl_bessel_j(0.5, z), 1e-14);
    EXPECT_NEAR(bessel_j(-0.5, z), std::sqrt(2.0 / (M_PI * z)) * std::cos(z), 1e-14);
  }
}

TEST(Bessel, SpecialValues) {
  EXPECT_EQ(bessel_j(0.0, 0.0), 1.0);
  EXPECT_NEAR(bessel_j(0.5, M_PI), 0.0, 1e-16);
  EXPECT_NEAR(bessel_j(0.0, 2.4048255576957), 0.0, 1e-10);
  EXPECT_THROW(bessel_j(1.0, 1.0), InvalidInput);
  EXPECT_THROW(bessel_j(-0.5, 0.0), InvalidInput);
  EXPECT_THROW(bessel_j(0.0, -1.0), InvalidInput);
}

TEST(Bessel, SeriesAndAsymptoticAgreeAtSwitch) {
  EXPECT_NEAR(detail::bessel_j0_series(12.0), detail::bessel_j0_asymptotic(12.0), 1e-12);
}

TEST(Kernel, HeatKernelIsGaussian) {
  for (int n : {1, 2, 3})
    for (double a1 : {0.05, 0.7, 3.0})
      for (double s : {0.0, 0.3, 1.1, 2.5}) {
        // below |x| ~ 6 sqrt(a1) the Gaussian stays above the cancellation floor of the oscillatory integral
        const double r = s * std::sqrt(4.0 * a1);
        std::vector<double> x(n, 0.0);
        x[0] = r;
        if (n > 1) x[1] = -0.5 * r;
        double ref = oracle::gaussian_kernel(x, a1);
        EXPECT_NEAR(kernel(a1, x, 1), ref, 1e-8 * ref) << "n=" << n << " a1=" << a1 << " r=" << r;
      }
}

TEST(Kernel, OriginClosedForm) {
  for (int m : {1, 2, 3})
    for (int n : {1, 2, 3}) {
      double ref = kernel_at_origin(m, n, 0.8);
      EXPECT_NEAR(kernel(0.8, std::vector<double>(n, 0.0), m), ref, 1e-10 * ref);
    }
  EXPECT_NEAR(kernel_at_origin(2, 2, 1.0), oracle::kernel_fourier({0.0, 0.0}, 1.0, 2), 1e-9);
}

TEST(Kernel, BiharmonicThreeDimensionalOracle) {
  const double a1 = 1.0;
  std::vector<double> x = {1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)};
  EXPECT_NEAR(kernel(a1, x, 2), oracle::kernel_fourier(x, a1, 2, 0.06), 1e-6);
}

TEST(Kernel, EvenAndRadial) {
  for (int m : {1, 2})
    for (int n : {1, 2, 3}) {
      std::vector<double> x(n), y(n);
      for (int d = 0; d < n; ++d) {
        x[d] = 0.4 + 0.3 * d;
        y[d] = -x[d];
      }
      EXPECT_EQ(kernel(0.6, x, m), kernel(0.6, y, m));
    }
}

TEST(Kernel, ScalingSelfSimilarity) {
  for (int m : {1, 2, 3})
    for (int n : {1, 2, 3})
      for (double c : {0.5, 2.0}) {
        std::vector<double> x(n, 0.0), cx(n, 0.0);
        x[0] = 0.9;
        cx[0] = c * 0.9;
        double lhs = kernel(0.7, x, m);
        double rhs = std::pow(c, n) * kernel(0.7 * std::pow(c, 2 * m), cx, m);
        EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
      }
}

TEST(Kernel, MassNormalization) {
  for (int n : {1, 2, 3}) {
    EXPECT_GE(mass(1, n, 0.5, 12.0), 1.0 - 1e-9) << n;
    EXPECT_NEAR(mass(2, n, 0.5, 12.0), 1.0, 5e-3) << n;
  }
}

TEST(Kernel, PositivityAndSignChange) {
  bool negative = false;
  for (double r = 0.0; r <= 8.0; r += 0.05) {
    EXPECT_GE(kernel(1.0, {r}, 1), -1e-12);
    if (kernel(1.0, {r}, 2) < 0.0) negative = true;
  }
  EXPECT_TRUE(negative);
}

TEST(Kernel, RejectsBadQueries) {
  QuadratureSpec spec = QuadratureSpec::for_order(1);
  EXPECT_THROW(eval_kernel({0.0, {0.1}, 1.0, 1, 1}, spec), InvalidInput);
  EXPECT_THROW(eval_kernel({1.0, {0.1}, 0.0, 1, 1}, spec), InvalidInput);
  EXPECT_THROW(eval_kernel({1.0, {0.1, 0.2}, 1.0, 1, 1}, spec), InvalidInput);
  EXPECT_THROW(eval_kernel({1.0, {0.1, 0.2, 0.3, 0.4}, 1.0, 1, 4}, spec), InvalidInput);
  QuadratureSpec few = spec;
  few.panels_per_half_period = 4;
  EXPECT_THROW(eval_kernel({1.0, {0.1}, 1.0, 1, 1}, few), InvalidInput);
}

TEST(Kernel, TruncationTooShortIsReported) {
  QuadratureSpec spec = QuadratureSpec::for_order(1);
  spec.radius = 2.0;
  EXPECT_THROW(eval_kernel({1.0, {0.1}, 1.0, 1, 1}, spec), ToleranceError);
}

TEST(Poisson, ZeroDatum) {
  SpaceGrid g(1, 8.0, 32);
  TimeGrid tg(1.0, 4);
  auto alpha = CoefficientFn::from_closed_form(ClosedForm::constant(1.0), tg, CoefficientKind::alpha);
  Trace h = poisson_solve(Field(g), ObservationPoint::on(g, std::vector<double>{0.0}), alpha, 1, tg);
  EXPECT_EQ(h.max_abs(), 0.0);
}

TEST(Poisson, AgreesWithSpectralHeat) {
  SpaceGrid g(1, 16.0, 128);
  TimeGrid tg(1.0, 20);
  auto alpha = CoefficientFn::from_closed_form(ClosedForm::sinusoidal(2, 1, 1), tg, CoefficientKind::alpha);
  Field u0 = bump_datum(g, std::vector<double>{0.0}, 4.0, 1.0);
  ObservationPoint q = ObservationPoint::on(g, std::vector<double>{0.0});
  for (int m : {1, 2}) {
    Trace p = poisson_solve(u0, q, alpha, m, tg);
    Trace s = trace_at(solve_heat(u0, alpha, m, tg), q);
    EXPECT_EQ(p[0], s[0]);
    for (std::size_t k = 1; k < tg.size(); ++k) EXPECT_NEAR(p[k], s[k], 1e-4) << "m=" << m << " k=" << k;
  }
}

TEST(Poisson, ApproximateIdentity) {
  SpaceGrid g(1, 8.0, 512);
  TimeGrid tg(1e-3, 1);
  auto alpha = CoefficientFn::from_closed_form(ClosedForm::constant(1.0), tg, CoefficientKind::alpha);
  Field u0 = bump_datum(g, std::vector<double>{0.0}, 2.0, 1.0);
  ObservationPoint q = ObservationPoint::on(g, std::vector<double>{0.0});
  Trace h = poisson_solve(u0, q, alpha, 1, tg);
  EXPECT_NEAR(h[1], u0[q.flat_index()], 1e-2);
}

TEST(Poisson, EnforcesMargin) {
  SpaceGrid g(1, 8.0, 64);
  TimeGrid tg(1.0, 4);
  auto alpha = CoefficientFn::from_closed_form(ClosedForm::constant(1.0), tg, CoefficientKind::alpha);
  Field u0 = bump_datum(g, std::vector<double>{4.0}, 2.0, 1.0, 0.0);
  ObservationPoint q = ObservationPoint::on(g, std::vector<double>{4.0});
  EXPECT_NO_THROW(poisson_solve(u0, q, alpha, 1, tg));
  EXPECT_THROW(poisson_solve(u0, q, alpha, 1, tg, 3.0), InvalidInput);
}
