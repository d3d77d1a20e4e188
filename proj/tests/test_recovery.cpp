#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "evocoef/harness.hpp"
#include "evocoef/recovery.hpp"

using namespace evocoef;

namespace {

Trace sampled(const TimeGrid& g, const std::function<double(double)>& f, TraceLabel label = TraceLabel::derived) {
  std::vector<double> v(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) v[k] = f(g.node(k));
  return Trace(g, std::move(v), label);
}

double max_err(const Trace& d, const std::function<double(double)>& f) {
  double e = 0.0;
  for (std::size_t k = 0; k < d.grid().size(); ++k) e = std::max(e, std::abs(d[k] - f(d.grid().node(k))));
  return e;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST(Differentiate, CentralExactOnQuadratics) {
  TimeGrid g(2.0, 40);
  Trace h = sampled(g, [](double t) { return 3.0 * t * t - t + 0.5; });
  EXPECT_LE(max_err(differentiate(h, DifferentiationSpec::central(1)), [](double t) { return 6.0 * t - 1.0; }), 1e-10);
  EXPECT_LE(max_err(differentiate(h, DifferentiationSpec::central(2)), [](double) { return 6.0; }), 1e-8);
}

TEST(Differentiate, CentralSecondOrder) {
  auto err = [](int n, int order) {
    TimeGrid g(1.0, n);
    Trace h = sampled(g, [](double t) { return std::sin(3.0 * t); });
    std::function<double(double)> ref = order == 1 ? std::function<double(double)>([](double t) { return 3.0 * std::cos(3.0 * t); })
                                                   : std::function<double(double)>([](double t) { return -9.0 * std::sin(3.0 * t); });
    return max_err(differentiate(h, DifferentiationSpec::central(order)), ref);
  };
  EXPECT_LE(err(512, 1), 1e-4);
  for (int order : {1, 2}) {
    double ratio = err(256, order) / err(512, order);
    EXPECT_NEAR(std::log2(ratio), 2.0, 0.2) << "order " << order;
  }
}

TEST(Differentiate, LocalPolyExactOnPolynomials) {
  TimeGrid g(1.0, 100);
  for (int degree : {2, 3, 4}) {
    auto p = [degree](double t) { return std::pow(t - 0.3, degree) + 2.0 * t; };
    auto dp = [degree](double t) { return degree * std::pow(t - 0.3, degree - 1) + 2.0; };
    auto ddp = [degree](double t) { return degree * (degree - 1) * std::pow(t - 0.3, degree - 2); };
    Trace h = sampled(g, p);
    EXPECT_LE(max_err(differentiate(h, DifferentiationSpec::local_poly(1, 9, degree)), dp), 1e-8) << degree;
    EXPECT_LE(max_err(differentiate(h, DifferentiationSpec::local_poly(2, 9, degree)), ddp), 1e-5) << degree;
  }
}

TEST(Differentiate, ValidatesSpec) {
  EXPECT_THROW(DifferentiationSpec::central(3).validate(100), InvalidInput);
  EXPECT_THROW(DifferentiationSpec::central(2).validate(3), InvalidInput);
  EXPECT_NO_THROW(DifferentiationSpec::central(2).validate(4));
  EXPECT_THROW(DifferentiationSpec::local_poly(1, 9, 5).validate(100), InvalidInput);
  EXPECT_THROW(DifferentiationSpec::local_poly(1, 8, 3).validate(100), InvalidInput);
  EXPECT_THROW(DifferentiationSpec::local_poly(1, 3, 3).validate(100), InvalidInput);
  EXPECT_THROW(DifferentiationSpec::local_poly(1, 27, 3).validate(100), InvalidInput);
  EXPECT_NO_THROW(DifferentiationSpec::local_poly(1, 25, 3).validate(100));
}

TEST(Recover, FirstOrderRatio) {
  TimeGrid g(1.0, 1024);
  Trace h1 = sampled(g, [](double t) { return std::sin(t); }, TraceLabel::h1);
  Trace h2 = sampled(g, [](double t) { return 1.0 + 0.5 * t; }, TraceLabel::h2);
  RecoveryResult r = recover(h1, h2, 1, DifferentiationSpec::central(1), {0.1, 0.0});
  EXPECT_EQ(r.diagnostics.valid_count(), g.size());
  EXPECT_TRUE(r.diagnostics.flagged.empty());
  for (std::size_t k = 0; k < g.size(); ++k) {
    double t = g.node(k);
    EXPECT_NEAR(r.coefficient[k], std::cos(t) / (1.0 + 0.5 * t), 1e-6);
  }
}

TEST(Recover, ZeroDenominatorEverywhereIsViolation) {
  TimeGrid g(1.0, 64);
  Trace h1 = sampled(g, [](double t) { return t; });
  Trace h2(g, std::vector<double>(g.size(), 0.0));
  EXPECT_THROW(recover(h1, h2, 1, DifferentiationSpec::central(1)), HypothesisViolation);
  EXPECT_THROW(recover(h1, h2, 1, DifferentiationSpec::central(1), {0.5, 0.0}), HypothesisViolation);
}

TEST(Recover, ScaleInvariant) {
  TimeGrid g(1.0, 128);
  Trace h1 = sampled(g, [](double t) { return std::exp(-t) + t * t; });
  Trace h2 = sampled(g, [](double t) { return 2.0 + std::cos(t); });
  RecoveryResult a = recover(h1, h2, 1, DifferentiationSpec::central(1));
  RecoveryResult b = recover(h1.scaled(4.0), h2.scaled(4.0), 1, DifferentiationSpec::central(1));
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(a.coefficient[k], b.coefficient[k]);
  EXPECT_EQ(a.diagnostics.valid, b.diagnostics.valid);
}

TEST(Recover, ExcludesSmallDenominators) {
  TimeGrid g(1.0, 100);
  Trace h1 = sampled(g, [](double t) { return t; });
  Trace h2 = sampled(g, [](double t) { return t * t; });
  RecoveryResult r = recover(h1, h2, 1, DifferentiationSpec::central(1), {0.04, 0.0});
  for (std::size_t k = 0; k < g.size(); ++k) {
    bool expect = g.node(k) * g.node(k) >= 0.04;
    EXPECT_EQ(r.diagnostics.valid[k], expect) << k;
  }
  EXPECT_EQ(r.diagnostics.flagged.size(), 20u);
  EXPECT_TRUE(r.diagnostics.sign_changes.empty());
  EXPECT_DOUBLE_EQ(r.diagnostics.h2_floor, 0.04);
}

TEST(Recover, DefaultFloorIsRelative) {
  TimeGrid g(1.0, 16);
  Trace h1 = sampled(g, [](double t) { return t; });
  Trace h2 = sampled(g, [](double) { return 3.0; });
  EXPECT_DOUBLE_EQ(recover(h1, h2, 1, DifferentiationSpec::central(1)).diagnostics.h2_floor, 3e-8);
}

TEST(Recover, SecondOrderExcludesInitialNode) {
  TimeGrid g(1.5, 400);
  Trace h1 = sampled(g, [](double t) { return std::cos(t); });
  Trace h2 = sampled(g, [](double t) { return -std::cos(t) / (2.0 + t); });
  RecoveryResult r = recover(h1, h2, 2, DifferentiationSpec::central(2), {1e-3, 0.0});
  EXPECT_FALSE(r.diagnostics.valid[0]);
  EXPECT_EQ(r.diagnostics.valid_count(), g.size() - 1);
  EXPECT_EQ(r.mode, RecoveryMode::wave_phi);
  for (std::size_t k = 1; k < g.size(); ++k) EXPECT_NEAR(r.coefficient[k], 2.0 + g.node(k), 1e-4);
}

TEST(Recover, FlagsSignChange) {
  TimeGrid g(1.0, 101);
  Trace h1 = sampled(g, [](double t) { return t; });
  Trace h2 = sampled(g, [](double t) { return t - 0.5; });
  RecoveryResult r = recover(h1, h2, 1, DifferentiationSpec::central(1), {1e-6, 0.0});
  ASSERT_EQ(r.diagnostics.sign_changes.size(), 1u);
  std::size_t k = r.diagnostics.sign_changes[0];
  EXPECT_LT(g.node(k), 0.5);
  EXPECT_GT(g.node(k + 1), 0.5);
  EXPECT_EQ(r.diagnostics.flagged, (std::vector<std::size_t>{k, k + 1}));
  EXPECT_TRUE(r.diagnostics.valid[k]);
}

TEST(Recover, RejectsMismatchedInputs) {
  TimeGrid g(1.0, 32), h(1.0, 64);
  Trace a = sampled(g, [](double t) { return t; });
  Trace b = sampled(h, [](double t) { return t; });
  EXPECT_THROW(recover(a, b, 1, DifferentiationSpec::central(1)), InvalidInput);
  EXPECT_THROW(recover(a, a, 2, DifferentiationSpec::central(1)), InvalidInput);
  EXPECT_THROW(recover(a, a, 3, DifferentiationSpec::central(1)), InvalidInput);
}

TEST(Hypotheses, CleanCasePasses) {
  TimeGrid g(1.0, 200);
  Trace h1 = sampled(g, [](double t) { return t + 0.5 * t * t; });
  Trace h2 = sampled(g, [](double) { return 1.0; });
  RecoveryResult r = recover(h1, h2, 1, DifferentiationSpec::central(1), {0.0, 0.5});
  DiagnosticsReport rep = validate_hypotheses(r, Theorem::heat_polyharmonic);
  EXPECT_TRUE(rep.all_passed());
  ASSERT_NE(rep.find("petrovskii_parabolicity"), nullptr);
  EXPECT_NEAR(rep.find("petrovskii_parabolicity")->value, 1.0, 1e-9);
  EXPECT_DOUBLE_EQ(rep.find("h2_nonvanishing")->value, 1.0);
}

TEST(Hypotheses, NegativeDipIsWitnessed) {
  TimeGrid g(1.0, 100);
  // coef = 1 - 1.1 exp(-((t - 0.5) / 0.05)^2), dipping to -0.1 at t = 0.5
  auto coef = [](double t) { return 1.0 - 1.1 * std::exp(-std::pow((t - 0.5) / 0.05, 2)); };
  std::vector<double> v(g.size(), 0.0);
  for (std::size_t k = 1; k < g.size(); ++k) {
    double a = g.node(k - 1), b = g.node(k), m = 0.5 * (a + b);
    v[k] = v[k - 1] + (b - a) / 6.0 * (coef(a) + 4.0 * coef(m) + coef(b));
  }
  Trace h1(g, v);
  Trace h2 = sampled(g, [](double) { return 1.0; });
  RecoveryResult r = recover(h1, h2, 1, DifferentiationSpec::central(1));
  DiagnosticsReport rep = validate_hypotheses(r, Theorem::heat_polyharmonic);
  EXPECT_FALSE(rep.all_passed());
  const HypothesisItem* p = rep.find("petrovskii_parabolicity");
  ASSERT_NE(p, nullptr);
  EXPECT_FALSE(p->passed);
  EXPECT_TRUE(std::find(p->witnesses.begin(), p->witnesses.end(), 50u) != p->witnesses.end());
  EXPECT_LT(p->value, -0.05);
  EXPECT_TRUE(rep.find("h2_nonvanishing")->passed);
}

TEST(Hypotheses, WaveAndGeneralItems) {
  TimeGrid g(1.0, 100);
  Trace h1 = sampled(g, [](double t) { return t * t; });
  Trace h2 = sampled(g, [](double) { return 1.0; });
  RecoveryResult r = recover(h1, h2, 2, DifferentiationSpec::central(2));
  DiagnosticsReport w = validate_hypotheses(r, Theorem::wave);
  EXPECT_TRUE(w.all_passed());
  EXPECT_NE(w.find("coefficient_positive"), nullptr);
  ASSERT_NE(w.find("lipschitz_estimate"), nullptr);
  EXPECT_LE(w.find("lipschitz_estimate")->value, 1e-6);
  DiagnosticsReport gen = validate_hypotheses(r, Theorem::general);
  EXPECT_NE(gen.find("coefficient_finite"), nullptr);
  EXPECT_EQ(gen.find("petrovskii_parabolicity"), nullptr);
}

TEST(Recover, WiderWindowsSuppressNoise) {
  TimeGrid g(1.0, 256);
  Trace h1 = sampled(g, [](double t) { return std::sin(t); });
  Trace h2 = sampled(g, [](double) { return 1.0; });
  std::vector<double> med;
  for (int w : {5, 9, 17}) {
    std::vector<double> errs;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Trace noisy = add_noise(h1, 1e-3, seed, 1);
      RecoveryResult r = recover(noisy, h2, 1, DifferentiationSpec::local_poly(1, w, 3));
      double e = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) e = std::max(e, std::abs(r.coefficient[k] - std::cos(g.node(k))));
      errs.push_back(e);
    }
    med.push_back(median(errs));
  }
  EXPECT_GT(med[0], med[1]);
  EXPECT_GT(med[1], med[2]);
}
