// Acceptance harness: one PASS/FAIL line per criterion.
//
// Long runs are held to a wall-clock budget (the runtime limit where the
// criterion states one). MIXDYN_ACCEPTANCE_UNBOUNDED=1 removes the budgets.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mixdyn/analysis.hpp"
#include "mixdyn/dynamics.hpp"
#include "mixdyn/errors.hpp"
#include "mixdyn/experiments.hpp"
#include "mixdyn/integrator.hpp"
#include "mixdyn/keyvalue.hpp"
#include "mixdyn/problem.hpp"
#include "mixdyn/schedule.hpp"

namespace {

using namespace mixdyn;
using Eigen::VectorXd;

int g_failures = 0;

void verdict(int id, bool pass, const std::string& name, const std::string& detail) {
  if (!pass) ++g_failures;
  std::printf("[%s] criterion %d: %s | %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
}

void note(const std::string& text) {
  std::printf("       %s\n", text.c_str());
  std::fflush(stdout);
}

void supplementary(const std::string& text) {
  std::printf("       supplementary (reduced horizon, not a criterion): %s\n", text.c_str());
  std::fflush(stdout);
}

bool unbounded() {
  const char* v = std::getenv("MIXDYN_ACCEPTANCE_UNBOUNDED");
  return v != nullptr && std::string(v) == "1";
}

double budget(double seconds) { return unbounded() ? 0.0 : seconds; }

// Long runs are limited by wall time only.
void limit_by_time(IntegratorSettings& s, double seconds) {
  s.max_wall_seconds = budget(seconds);
  s.max_steps = std::numeric_limits<long long>::max();
}

std::string fmt(double x) { return format_real(x); }

std::optional<RateFit> fit_of(const RunReport& r, const std::string& name) {
  for (const NamedFit& f : r.fits) {
    if (f.quantity == name) return f.fit;
  }
  return std::nullopt;
}

std::string slope_text(const RunReport& r, const std::string& name) {
  const auto f = fit_of(r, name);
  return f ? fmt(f->slope) : std::string("n/a");
}

bool slope_at_most(const RunReport& r, const std::string& name, double limit) {
  const auto f = fit_of(r, name);
  return f.has_value() && f->slope <= limit;
}

std::string run_status(const RunReport& r) {
  std::ostringstream os;
  os << (r.failed ? "aborted at t = " + fmt(r.t_reached) + " (" + r.failure + ")" : "completed")
     << ", " << r.trajectory.accepted << " accepted steps, "
     << fmt(std::round(r.elapsed_seconds * 100.0) / 100.0) << " s";
  return os.str();
}

const MetricSample& nearest(const RunReport& r, double t) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < r.metrics.size(); ++i) {
    if (std::abs(std::log(r.metrics[i].t / t)) < std::abs(std::log(r.metrics[best].t / t))) {
      best = i;
    }
  }
  return r.metrics[best];
}

ExperimentSpec toy_fast(double tf, double rtol, double atol) {
  ExperimentSpec s;
  s.alpha = 13.0;
  s.beta_exp = 1.0;
  s.theta = 1.0 / 12.0;
  s.eps_c = 3.0;
  s.eps_r = 4.0;
  s.sigma = 1.0;
  s.tf = tf;
  s.integrator.rtol = rtol;
  s.integrator.atol = atol;
  s.fit_window = FitWindow{50.0, 900.0};
  if (tf < 1000.0) s.fit_window = FitWindow{0.05 * tf, 0.9 * tf};
  return s;
}

// Rational damping 2 alpha/t - 1/t^2 with alpha = 4, theta = 1/6, beta = t,
// eps = t^-4: the regularized damping condition holds with equality.
ExperimentSpec rational_schedule(double tf, double rtol, double atol) {
  ExperimentSpec s = toy_fast(tf, rtol, atol);
  s.gamma_kind = DampingFamily::Kind::kRationalA;
  s.alpha = 4.0;
  s.theta = 1.0 / 6.0;
  s.t0 = 1.5;
  s.eps_c = 1.0;
  s.eps_r = 4.0;
  return s;
}

ExperimentSpec toy_slow(double tf, double rtol, double atol, bool ablation) {
  ExperimentSpec s;
  s.eps_c = 3.0;
  s.eps_r = 1.1;
  s.tf = tf;
  s.integrator.rtol = rtol;
  s.integrator.atol = atol;
  s.ablation = ablation;
  if (tf < 1000.0) s.fit_window = FitWindow{0.05 * tf, 0.9 * tf};
  return s;
}

struct TolPair {
  double rtol;
  double atol;
};
constexpr TolPair kTolPairs[] = {{1e-6, 1e-9}, {1e-8, 1e-11}};

std::string tol_text(TolPair p) { return "rtol " + fmt(p.rtol) + ", atol " + fmt(p.atol); }

void rates_supplement(double tf, TolPair tol) {
  ExperimentSpec s = toy_fast(tf, tol.rtol, tol.atol);
  limit_by_time(s.integrator, 120.0);
  const RunReport r = run_experiment(s);
  supplementary("toy fast regime to tf = " + fmt(tf) + " (" + tol_text(tol) +
                "): " + run_status(r) + "; slopes over [" + fmt(s.fit_window->lo) + ", " +
                fmt(s.fit_window->hi) + "] lag_gap " + slope_text(r, "lag_gap") + ", feas " +
                slope_text(r, "feas") + ", scaled_speed " + slope_text(r, "scaled_speed") +
                "; decay violation " + (r.decay ? fmt(r.decay->worst_violation) : "n/a"));
}

// Criteria 1-3 share the first run.
void criteria_fast_regime() {
  ExperimentSpec s = toy_fast(1000.0, 1e-8, 1e-11);
  limit_by_time(s.integrator, 30.0);
  const RunReport r = run_experiment(s);
  const bool ran = !r.failed;
  const bool c1 = ran && r.elapsed_seconds < 30.0 && slope_at_most(r, "lag_gap", -2.6) &&
                  slope_at_most(r, "feas", -2.6);
  verdict(1, c1, "toy fast-regime rates, slopes of lag_gap and feas <= -2.6 within 30 s",
          run_status(r) + "; lag_gap slope " + slope_text(r, "lag_gap") + ", feas slope " +
              slope_text(r, "feas"));
  if (!ran) {
    note("the dual coefficient grows like t^2, so an explicit embedded pair needs O(t^3) steps "
         "to reach t = 1000; see the reduced-horizon lines for the observed rates");
  }

  const bool c2 = ran && slope_at_most(r, "scaled_speed", 0.1);
  verdict(2, c2, "scaled speed t ||v|| slope <= 0.1 on the first run",
          (ran ? std::string("completed") : "first run did not reach tf") +
              "; scaled_speed slope " + slope_text(r, "scaled_speed"));

  ExperimentSpec s25 = rational_schedule(1000.0, 1e-8, 1e-11);
  limit_by_time(s25.integrator, 60.0);
  const RunReport r25 = run_experiment(s25);
  const double v1 = r.decay ? r.decay->worst_violation : std::numeric_limits<double>::infinity();
  const double v2 =
      r25.decay ? r25.decay->worst_violation : std::numeric_limits<double>::infinity();
  const bool c3 = ran && !r25.failed && r.decay && r.decay->certified && r25.decay &&
                  r25.decay->certified && v1 <= 1e-3 && v2 <= 1e-3;
  verdict(3, c3, "decay certificate, normalized violation <= 1e-3 on both runs",
          "first run " + std::string(ran ? "completed" : "incomplete") + ", violation over " +
              std::to_string(r.metrics.size()) + " samples " + fmt(v1) +
              "; rational-damping run " + run_status(r25) + ", violation over " +
              std::to_string(r25.metrics.size()) + " samples " + fmt(v2));

  for (TolPair tol : kTolPairs) {
    for (double tf : {20.0, 40.0}) rates_supplement(tf, tol);
    ExperimentSpec sr = rational_schedule(40.0, tol.rtol, tol.atol);
    limit_by_time(sr.integrator, 120.0);
    const RunReport rr = run_experiment(sr);
    supplementary("rational damping to tf = 40 (" + tol_text(tol) + "): " + run_status(rr) +
                  "; decay violation " + (rr.decay ? fmt(rr.decay->worst_violation) : "n/a"));
  }
}

void criterion_strong_convergence() {
  bool pass = true;
  std::ostringstream detail;
  for (TolPair tol : kTolPairs) {
    ExperimentSpec reg = toy_slow(1000.0, tol.rtol, tol.atol, false);
    ExperimentSpec abl = toy_slow(1000.0, tol.rtol, tol.atol, true);
    limit_by_time(reg.integrator, 60.0);
    limit_by_time(abl.integrator, 60.0);
    const RunReport rr = run_experiment(reg);
    const RunReport ra = run_experiment(abl);
    const double d10 = nearest(rr, 10.0).dist_min_norm;
    const double dreg = rr.metrics.back().dist_min_norm;
    const double dabl = ra.metrics.back().dist_min_norm;
    const bool ok = !rr.failed && !ra.failed && dreg <= d10 / 10.0 && dabl >= 2.0 * dreg;
    pass = pass && ok;
    detail << "[" << tol_text(tol) << "] regularized " << run_status(rr) << ", dist(10) "
           << fmt(d10) << ", dist(last) " << fmt(dreg) << "; ablated " << run_status(ra)
           << ", dist(last) " << fmt(dabl) << " ";
  }
  verdict(4, pass, "strong convergence to the minimal-norm point, ablation at least 2x worse",
          detail.str());
  for (TolPair tol : kTolPairs) {
    const RunReport rr = run_experiment(toy_slow(60.0, tol.rtol, tol.atol, false));
    const RunReport ra = run_experiment(toy_slow(60.0, tol.rtol, tol.atol, true));
    supplementary("toy slow regime to tf = 60 (" + tol_text(tol) + "): dist(6) " +
                  fmt(nearest(rr, 6.0).dist_min_norm) + ", dist(60) " +
                  fmt(rr.metrics.back().dist_min_norm) + ", ablated dist(60) " +
                  fmt(ra.metrics.back().dist_min_norm));
  }
}

void criterion_tikhonov_path() {
  double worst_norm_excess = -std::numeric_limits<double>::infinity();
  double worst_final = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ProblemSetup s = build_random_qp(5, 8, seed);
    const double ref = s.min_norm.primal.norm();
    for (int k = 1; k <= 8; ++k) {
      const VectorXd x = tikhonov_point(s.problem, s.min_norm.dual, std::pow(10.0, -k));
      worst_norm_excess = std::max(worst_norm_excess, x.norm() - ref);
      if (k == 8) worst_final = std::max(worst_final, (x - s.min_norm.primal).norm());
    }
  }
  verdict(5, worst_norm_excess <= 1e-9 && worst_final <= 1e-4,
          "Tikhonov path inside the minimal-norm ball and converging",
          "max(||x_eps|| - ||x_hat||) " + fmt(worst_norm_excess) + ", max ||x_1e-8 - x_hat|| " +
              fmt(worst_final) + " over 10 seeds");
}

void criterion_closed_forms() {
  double worst_rel = 0.0;
  for (double p : {0.0, 0.5, 1.0, 2.0, 3.0}) {
    for (double t0 : {1.0, 1.5, 4.0}) {
      const CoefficientSchedule s(0.01, DampingFamily::power_quotient(200.0),
                                  ScalingFamily::power(p),
                                  TikhonovFamily::power_decay(1.0, p + 3.0), t0);
      const auto v = closed_form_fast_integral(s);
      const double rel = v ? std::abs(*v - 1.0 / t0) * t0 : 1.0;
      worst_rel = std::max(worst_rel, rel);
    }
  }
  const CoefficientSchedule rational(1.0 / 6.0, DampingFamily::rational_a(4.0),
                                     ScalingFamily::power(1.0),
                                     TikhonovFamily::power_decay(1.0, 4.0), 1.5);
  const ConditionReport cr = audit_conditions(rational);
  bool cond8_zero = true;
  std::string cond8_text;
  for (double alpha : {3.0, 7.0, 13.0}) {
    const CoefficientSchedule s(1.0 / (alpha - 1.0), DampingFamily::power_quotient(alpha),
                                ScalingFamily::power(1.0), TikhonovFamily::power_decay(3.0, 4.0),
                                1.0);
    const ConditionReport c = audit_conditions(s);
    cond8_zero = cond8_zero && c.cond8_exact && *c.cond8_exact == 0.0 && c.cond8_margin == 0.0;
    cond8_text += " " + (c.cond8_exact ? fmt(*c.cond8_exact) : std::string("n/a"));
  }
  const bool cond7_zero = cr.cond7_exact && *cr.cond7_exact == 0.0 && cr.cond7_margin == 0.0;
  verdict(6, worst_rel <= 1e-12 && cond7_zero && cond8_zero,
          "closed-form integral 1/t0 and exact zero margins",
          "max rel err of integral " + fmt(worst_rel) + "; rational cond7 exact " +
              (cr.cond7_exact ? fmt(*cr.cond7_exact) : std::string("n/a")) + ", grid " +
              fmt(cr.cond7_margin) + "; cond8 exact at theta = 1/(alpha-1):" + cond8_text);
}

void criterion_integrator_order() {
  const Field decay = [](double, const VectorXd& y, VectorXd& dy) { dy = -y; };
  const VectorXd y0 = VectorXd::Constant(1, 1.0);
  const VectorXd exact = VectorXd::Constant(1, std::exp(-1.0));
  const double e1 = fixed_step_order_probe(decay, 0.0, 1.0, y0, 1.0 / 20.0, exact);
  const double e2 = fixed_step_order_probe(decay, 0.0, 1.0, y0, 1.0 / 40.0, exact);
  const double e3 = fixed_step_order_probe(decay, 0.0, 1.0, y0, 1.0 / 80.0, exact);
  const double order = std::min(std::log2(e1 / e2), std::log2(e2 / e3));
  bool adaptive_ok = true;
  std::string adaptive_text;
  for (TolPair tol : kTolPairs) {
    IntegratorSettings st;
    st.rtol = tol.rtol;
    st.atol = tol.atol;
    const Trajectory tr = integrate(decay, 0.0, 1.0, y0, st);
    const double err = std::abs(tr.states.back()[0] - exact[0]);
    adaptive_ok = adaptive_ok && err <= 100.0 * tol.rtol;
    adaptive_text += " [" + tol_text(tol) + "] error " + fmt(err);
  }
  verdict(7, order >= 2.7 && adaptive_ok, "integrator order >= 2.7 and adaptive accuracy",
          "observed order " + fmt(order) + ";" + adaptive_text);
}

void criterion_equilibrium() {
  // Checked at t0; later times are reported only, since the t beta factor
  // scales the round-off of the field evaluation itself.
  double worst_eq = 0.0;
  std::map<double, double> late_eq;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ProblemSetup s = build_random_qp(4, 9, seed);
    const CoefficientSchedule sched(1.0 / 12.0, DampingFamily::power_quotient(13.0),
                                    ScalingFamily::power(1.0), TikhonovFamily::zero(), 1.0);
    const PrimalDualField field({s.problem, sched, true});
    const SystemState y{s.saddle.primal, s.saddle.dual, VectorXd::Zero(9)};
    worst_eq = std::max(worst_eq, pack(field(sched.t0(), y)).norm());
    for (double t : {10.0, 100.0}) {
      late_eq[t] = std::max(late_eq[t], pack(field(t, y)).norm());
    }
  }

  // Toy fixture against values produced by an independent term-by-term script.
  const ProblemSetup toy = build_toy(1.0, 1.0, 1.0);
  const CoefficientSchedule fixture(1.0 / 12.0, DampingFamily::power_quotient(13.0),
                                    ScalingFamily::power(1.0),
                                    TikhonovFamily::power_decay(3.0, 1.1), 1.0);
  const PrimalDualField field({toy.problem, fixture, true});
  const SystemState y{VectorXd::Map(std::vector<double>{1, 1, -1}.data(), 3),
                      VectorXd::Constant(1, 1.0),
                      VectorXd::Map(std::vector<double>{-1, -1, 1}.data(), 3)};
  VectorXd want1(7);
  want1 << -1, -1, 1, -0.9166666666666666, 8, 8, -12;
  VectorXd want25(7);
  want25 << -1, -1, 1, -4.947916666666667, -2.5373306096664416, -2.5373306096664416,
      -7.4626693903335575;
  double worst_oracle = 0.0;
  for (const auto& [t, want] : {std::pair{1.0, want1}, std::pair{2.5, want25}}) {
    const VectorXd got = pack(field(t, y));
    for (Eigen::Index i = 0; i < 7; ++i) {
      worst_oracle = std::max(worst_oracle, std::abs(got[i] - want[i]) / std::abs(want[i]));
    }
  }

  double worst_fd = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ProblemSetup s = build_random_qp(3, 6, seed);
    const VectorXd x = VectorXd::LinSpaced(6, -1.0, 1.5);
    const VectorXd lam = VectorXd::LinSpaced(3, 0.5, -0.5);
    const VectorXd g = grad_x_lagrangian(s.problem, x, lam);
    for (Eigen::Index i = 0; i < 6; ++i) {
      const double h = 1e-6;
      VectorXd xp = x;
      VectorXd xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (augmented_lagrangian(s.problem, xp, lam) -
                         augmented_lagrangian(s.problem, xm, lam)) /
                        (2.0 * h);
      worst_fd = std::max(worst_fd, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
    }
  }
  verdict(8, worst_eq <= 1e-12 && worst_oracle <= 1e-12 && worst_fd <= 1e-5,
          "equilibrium, oracle agreement and gradient check",
          "max ||rhs|| at the saddle at t0 " + fmt(worst_eq) + " (t = 10: " + fmt(late_eq[10.0]) +
              ", t = 100: " + fmt(late_eq[100.0]) + "), max rel err vs oracle " +
              fmt(worst_oracle) + ", max gradient FD error " + fmt(worst_fd));
}

ExperimentSpec qp_spec(double tf, double rtol, double atol) {
  ExperimentSpec s;
  s.scenario = Scenario::kRandomQp;
  s.mdim = 30;
  s.ndim = 50;
  s.seed = 1;
  s.alpha = 13.0;
  s.beta_exp = 1.0;
  s.eps_r = 4.0;
  s.tf = tf;
  s.integrator.rtol = rtol;
  s.integrator.atol = atol;
  if (tf < 1000.0) s.fit_window = FitWindow{0.05 * tf, 0.9 * tf};
  return s;
}

void criterion_qp() {
  ExperimentSpec s = qp_spec(1000.0, 1e-6, 1e-9);
  limit_by_time(s.integrator, 60.0);
  const RunReport r = run_experiment(s);
  bool nonneg = true;
  for (const MetricSample& m : r.metrics) nonneg = nonneg && m.lag_gap >= 0.0;
  verdict(9,
          !r.failed && r.elapsed_seconds < 60.0 && slope_at_most(r, "feas", -2.5) && nonneg,
          "random QP (30 x 50) within 60 s, feas slope <= -2.5, lag_gap >= 0",
          run_status(r) + "; feas slope " + slope_text(r, "feas") + ", lag_gap nonnegative on " +
              std::to_string(r.metrics.size()) + " samples: " + (nonneg ? "yes" : "no"));
  for (TolPair tol : kTolPairs) {
    ExperimentSpec sr = qp_spec(20.0, tol.rtol, tol.atol);
    limit_by_time(sr.integrator, 120.0);
    const RunReport rr = run_experiment(sr);
    bool nn = true;
    for (const MetricSample& m : rr.metrics) nn = nn && m.lag_gap >= 0.0;
    supplementary("random QP to tf = 20 (" + tol_text(tol) + "): " + run_status(rr) +
                  "; feas slope " + slope_text(rr, "feas") + ", lag_gap nonnegative " +
                  (nn ? "yes" : "no"));
  }
}

std::string metrics_bytes(const ExperimentSpec& s) {
  const RunReport r = run_experiment(s);
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "mixdyn_acceptance_determinism";
  std::filesystem::remove_all(dir);
  write_report(r, dir);
  std::ifstream in(dir / "metrics.csv", std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  std::filesystem::remove_all(dir);
  return ss.str();
}

void criterion_determinism() {
  // A step budget rather than a wall-clock budget keeps the truncation point
  // itself reproducible.
  std::vector<std::pair<std::string, ExperimentSpec>> runs;
  ExperimentSpec fast = toy_fast(1000.0, 1e-8, 1e-11);
  fast.integrator.max_steps = 200000;
  runs.emplace_back("first run, step-capped", fast);
  runs.emplace_back("toy fast regime to tf = 20", toy_fast(20.0, 1e-8, 1e-11));
  runs.emplace_back("rational damping to tf = 20", rational_schedule(20.0, 1e-8, 1e-11));
  runs.emplace_back("toy slow regime to tf = 20", toy_slow(20.0, 1e-6, 1e-9, false));
  runs.emplace_back("random QP to tf = 10", qp_spec(10.0, 1e-6, 1e-9));
  bool all = true;
  std::string detail;
  for (const auto& [name, spec] : runs) {
    const bool same = metrics_bytes(spec) == metrics_bytes(spec);
    all = all && same;
    detail += name + (same ? " identical; " : " DIFFERS; ");
  }
  verdict(10, all, "byte-identical metrics.csv on repeat", detail);
}

}  // namespace

int main() {
  const auto started = std::chrono::steady_clock::now();
  std::printf("acceptance harness (%s)\n",
              unbounded() ? "unbounded" : "wall-clock budgets active");
  try {
    criteria_fast_regime();
    criterion_strong_convergence();
    criterion_tikhonov_path();
    criterion_closed_forms();
    criterion_integrator_order();
    criterion_equilibrium();
    criterion_qp();
    criterion_determinism();
  } catch (const std::exception& e) {
    std::printf("[FAIL] harness error: %s\n", e.what());
    return 1;
  }
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::printf("%d criteria failed, total %.1f s\n", g_failures, total);
  return g_failures == 0 ? 0 : 1;
}
