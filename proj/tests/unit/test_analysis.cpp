#include <gtest/gtest.h>

#include <cmath>

#include "mixdyn/analysis.hpp"
#include "mixdyn/errors.hpp"
#include "support.hpp"

namespace mixdyn {
namespace {

using test::rel_err;
using test::vec;

SystemState fixture_state() { return {vec({1, 1, -1}), vec({1}), vec({-1, -1, 1})}; }

CoefficientSchedule unregularized() {
  return CoefficientSchedule(1.0 / 12, DampingFamily::power_quotient(13), ScalingFamily::power(1),
                             TikhonovFamily::zero(), 1.0);
}

Trajectory run_toy(const CoefficientSchedule& s, double tf, int samples = 200) {
  const ProblemInstance p = test::toy_problem();
  const PrimalDualField field({p, s, true});
  const Field f = [&](double t, const VectorXd& y, VectorXd& dy) { field(t, y, dy); };
  IntegratorSettings settings;
  settings.rtol = 1e-8;
  settings.atol = 1e-11;
  return integrate(f, s.t0(), tf, pack(fixture_state()), settings, log_spaced(s.t0(), tf, samples));
}

TEST(Lyapunov, FixtureMatchesTermByTermOracle) {
  const ProblemInstance p = test::toy_problem();
  const CoefficientSchedule s = test::fixture_schedule();
  const SaddlePoint origin{vec({0, 0, 0}), vec({0}), false};
  const SaddlePoint alt{vec({1, 0, -1}), vec({0}), false};
  const SystemState y = fixture_state();
  EXPECT_LE(rel_err(lyapunov_G(1.0, y, p, s, origin), 16.125000000000004), 1e-12);
  EXPECT_LE(rel_err(lyapunov_G(2.0, y, p, s, alt), 7.399549487305213), 1e-12);
  EXPECT_LE(rel_err(lyapunov_Gtilde(1.0, y, p, s, origin), 193.49999999999997), 1e-12);
  EXPECT_LE(rel_err(lyapunov_Gtilde(2.0, y, p, s, alt), 22.198648461915628), 1e-12);
  EXPECT_LE(rel_err(lyapunov_Ghat(1.0, y, p, s, origin.primal, origin.dual), 193.49999999999997),
            1e-12);
  EXPECT_LE(rel_err(lyapunov_Ghat(2.0, y, p, s, alt.primal, alt.dual), 19.399549487305208), 1e-12);
}

TEST(Lyapunov, VanishAtSaddleAtRest) {
  const ProblemInstance p = test::random_qp(2, 3, 6, 6);
  const SaddlePoint sp = kkt_saddle_point(p);
  const SystemState y{sp.primal, sp.dual, VectorXd::Zero(6)};
  const CoefficientSchedule s = unregularized();
  for (double t : {1.0, 4.0, 30.0}) {
    EXPECT_NEAR(lyapunov_G(t, y, p, s, sp), 0.0, 1e-12);
    EXPECT_NEAR(lyapunov_Gtilde(t, y, p, s, sp), 0.0, 1e-12);
    EXPECT_NEAR(lyapunov_Ghat(t, y, p, s, sp.primal, sp.dual), 0.0, 1e-12);
  }
}

TEST(Lyapunov, OnlyDualTermSurvives) {
  const ProblemInstance p = test::toy_problem();
  const SaddlePoint sp{vec({0, 0, 0}), vec({0}), false};
  const SystemState y{sp.primal, vec({2.5}), vec({0, 0, 0})};
  for (double theta : {0.05, 1.0 / 12, 0.3}) {
    const CoefficientSchedule s(theta, DampingFamily::power_quotient(13), ScalingFamily::power(1),
                                TikhonovFamily::power_decay(3, 1.1), 1.0);
    EXPECT_EQ(lyapunov_G(3.0, y, p, s, sp), 0.5 * 2.5 * 2.5);
  }
}

TEST(Lyapunov, DampingBoundaryDropsDistanceTerm) {
  // theta t gamma = theta + 1, so the last term of Gtilde is zero.
  const ProblemInstance p = test::toy_problem();
  const CoefficientSchedule s = test::fixture_schedule();
  const SaddlePoint sp{vec({1, 0, -1}), vec({0}), false};
  const SystemState y = fixture_state();
  const double t = 3.0;
  const double theta = 1.0 / 12;
  const double eps = 3.0 / std::pow(t, 1.1);
  const double first =
      t * (lagrangian_gap(p, y.x, sp) + 0.5 * eps * y.x.squaredNorm());
  const double second = 0.5 * ((y.x - sp.primal) / (theta * t) + y.v).squaredNorm();
  const double third = 0.5 / (theta * t * t) * (y.lam - sp.dual).squaredNorm();
  EXPECT_NEAR(lyapunov_Gtilde(t, y, p, s, sp), first + second + third, 1e-12);
}

TEST(Lyapunov, GhatNegativeInsideMinimalNormBall) {
  // x_hat = (1, 0, -1) treated as reference; x = 0 is shorter.
  const ProblemInstance p = test::toy_problem();
  const CoefficientSchedule s = test::fixture_schedule();
  const VectorXd x_hat = vec({1, 0, -1});
  const double t = 2.0;
  const VectorXd x = vec({0, 0, 0});
  const SystemState y{x, vec({0}), VectorXd(-(x - x_hat) / (t / 12.0))};
  EXPECT_LT(lyapunov_Ghat(t, y, p, s, x_hat, vec({0})), 0.0);
}

TEST(DecayAudit, SaddleAtRestNeverViolates) {
  const ProblemInstance p = test::random_qp(4, 2, 5, 5);
  const SaddlePoint sp = kkt_saddle_point(p);
  Trajectory tr;
  for (double t : log_spaced(1.0, 100.0, 50)) {
    tr.times.push_back(t);
    tr.states.push_back(pack({sp.primal, sp.dual, VectorXd::Zero(5)}));
  }
  const DecayAudit a = audit_decay_inequality(tr, p, unregularized(), sp);
  EXPECT_LE(a.worst_violation, 0.0 + 1e-12);
  EXPECT_TRUE(a.certified);
}

TEST(DecayAudit, RefusesCertificationForViolatingSchedule) {
  const CoefficientSchedule bad(1.0, DampingFamily::power_quotient(2), ScalingFamily::power(1),
                                TikhonovFamily::power_decay(3, 1.1), 1.0);
  Trajectory tr;
  tr.times = {1.0, 2.0};
  tr.states = {pack(fixture_state()), pack(fixture_state())};
  const SaddlePoint sp{vec({0, 0, 0}), vec({0}), false};
  EXPECT_FALSE(audit_decay_inequality(tr, test::toy_problem(), bad, sp).certified);
}

TEST(DecayAudit, CompliantToyRunHoldsInequality) {
  const CoefficientSchedule s = test::fixture_schedule();
  const Trajectory tr = run_toy(s, 12.0);
  const SaddlePoint sp{vec({0, 0, 0}), vec({0}), false};
  const DecayAudit a = audit_decay_inequality(tr, test::toy_problem(), s, sp);
  EXPECT_TRUE(a.certified);
  EXPECT_LE(a.worst_violation, 1e-4);
  for (const LyapunovSample& ls : a.samples) EXPECT_GE(ls.G, -1e-9);
}

TEST(DecayAudit, NonzeroReferenceUsesIntegralTerm) {
  // With x* = (1, 0, -1) the bound grows with the accumulated integral.
  const CoefficientSchedule s = test::fixture_schedule();
  const Trajectory tr = run_toy(s, 6.0, 100);
  const SaddlePoint sp{vec({1, 0, -1}), vec({0}), false};
  const DecayAudit a = audit_decay_inequality(tr, test::toy_problem(), s, sp);
  EXPECT_GT(a.samples.back().bound23, a.samples.front().bound23);
  EXPECT_LE(a.worst_violation, 1e-4);
}

TEST(Metrics, ZeroAtSaddle) {
  const ProblemInstance p = test::random_qp(6, 2, 4, 4);
  const SaddlePoint sp = kkt_saddle_point(p);
  Trajectory tr;
  tr.times = {1.0, 2.0};
  tr.states = {pack({sp.primal, sp.dual, VectorXd::Zero(4)}),
               pack({sp.primal, sp.dual, VectorXd::Zero(4)})};
  for (const MetricSample& m : compute_metrics(tr, p, unregularized(), sp, sp.primal)) {
    EXPECT_NEAR(m.lag_gap, 0.0, 1e-14);
    EXPECT_NEAR(m.f_gap_abs, 0.0, 1e-12);
    EXPECT_LE(m.feas, 1e-12);
    EXPECT_EQ(m.grad_err, 0.0);
    EXPECT_EQ(m.dist_min_norm, 0.0);
    EXPECT_EQ(m.scaled_speed, 0.0);
    EXPECT_EQ(m.drift, 0.0);
  }
}

TEST(Metrics, ToyFixtureFirstSample) {
  Trajectory tr;
  tr.times = {1.0};
  tr.states = {pack(fixture_state())};
  const SaddlePoint sp{vec({0, 0, 0}), vec({0}), false};
  const auto ms = compute_metrics(tr, test::toy_problem(), test::fixture_schedule(), sp, sp.primal);
  ASSERT_EQ(ms.size(), 1u);
  EXPECT_DOUBLE_EQ(ms[0].lag_gap, 1.5);
  EXPECT_DOUBLE_EQ(ms[0].f_gap_abs, 1.0);
  EXPECT_DOUBLE_EQ(ms[0].feas, 1.0);
  EXPECT_DOUBLE_EQ(ms[0].grad_err, 2.0 * std::sqrt(3.0));
  EXPECT_DOUBLE_EQ(ms[0].dist_min_norm, std::sqrt(3.0));
  EXPECT_DOUBLE_EQ(ms[0].scaled_speed, std::sqrt(3.0));
  EXPECT_DOUBLE_EQ(ms[0].drift, 11.0 * std::sqrt(3.0));
}

TEST(FitRate, ExactPowerLaw) {
  const auto t = log_spaced(1.0, 1000.0, 100);
  std::vector<double> v;
  for (double x : t) v.push_back(std::pow(x, -3.0));
  const RateFit f = fit_rate(t, v, {1.0, 1000.0});
  EXPECT_NEAR(f.slope, -3.0, 1e-10);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_EQ(f.n_points, 100u);
}

TEST(FitRate, PerturbedPowerLaw) {
  const auto t = log_spaced(1.0, 1000.0, 400);
  std::vector<double> v;
  for (double x : t) v.push_back(5.0 * std::pow(x, -2.0) * (1.0 + 0.01 * std::sin(x)));
  const RateFit f = fit_rate(t, v, {50.0, 900.0});
  EXPECT_GE(f.slope, -2.05);
  EXPECT_LE(f.slope, -1.95);
}

TEST(FitRate, ConstantSeries) {
  const auto t = log_spaced(1.0, 100.0, 30);
  const RateFit f = fit_rate(t, std::vector<double>(30, 4.2), {1.0, 100.0});
  EXPECT_NEAR(f.slope, 0.0, 1e-14);
  EXPECT_GE(f.r_squared, 0.0);
  EXPECT_LE(f.r_squared, 1.0);
}

TEST(FitRate, DropsNonpositiveAndNeedsEightPoints) {
  const auto t = log_spaced(1.0, 100.0, 12);
  std::vector<double> v(12, 1.0);
  for (int i = 0; i < 5; ++i) v[static_cast<std::size_t>(i)] = 0.0;
  EXPECT_THROW(fit_rate(t, v, {1.0, 100.0}), FitError);
  v[0] = 1.0;
  EXPECT_EQ(fit_rate(t, v, {1.0, 100.0}).n_points, 8u);
}

TEST(TikhonovPoint, ToyOriginForEveryWeight) {
  for (double eps : {1.0, 1e-3, 1e-8}) {
    EXPECT_LE(tikhonov_point(test::toy_problem(), vec({0}), eps).norm(), 1e-15);
  }
}

TEST(TikhonovPoint, PathStaysInsideAndConverges) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ProblemInstance p = test::random_qp(seed, 2, 8, 3);
    const SaddlePoint sp = kkt_saddle_point(p);
    const MinimalNormSolution mn = minimal_norm_solution(p, sp);
    double prev = 1e300;
    for (int k = 1; k <= 8; ++k) {
      const VectorXd x = tikhonov_point(p, mn.dual, std::pow(10.0, -k));
      EXPECT_LE(x.norm(), mn.primal.norm() + 1e-9);
      const double d = (x - mn.primal).norm();
      // Below about 1e-6 the distance is set by round-off amplified by 1/eps.
      EXPECT_LE(d, prev + 1e-6);
      prev = d;
    }
    EXPECT_LE(prev, 1e-6) << "seed " << seed;
  }
}

TEST(AdaptiveSimpson, SmoothIntegrands) {
  EXPECT_NEAR(adaptive_simpson([](double x) { return std::sin(x); }, 0.0, M_PI), 2.0, 1e-10);
  EXPECT_NEAR(adaptive_simpson([](double x) { return 1.0 / x; }, 1.0, 1e4), std::log(1e4),
              1e-9 * std::log(1e4));
}

TEST(FastIntegral, CustomFamilyUsesQuadrature) {
  const CoefficientSchedule s(
      1.0 / 12, DampingFamily::power_quotient(13), ScalingFamily::power(1),
      TikhonovFamily::custom([](double t) { return std::pow(t, -4.0); },
                             [](double t) { return -4.0 * std::pow(t, -5.0); }),
      1.0);
  EXPECT_NEAR(fast_integral(s, 10.0), 0.9, 1e-10);
}

}  // namespace
}  // namespace mixdyn
