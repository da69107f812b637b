#include "mixdyn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixdyn/errors.hpp"

namespace mixdyn {

namespace {

double regularized_gap(const ProblemInstance& p, const SystemState& y, const SaddlePoint& sp,
                       double eps) {
  return lagrangian_gap(p, y.x, sp) + 0.5 * eps * y.x.squaredNorm();
}

}  // namespace

double lyapunov_G(double t, const SystemState& y, const ProblemInstance& p,
                  const CoefficientSchedule& s, const SaddlePoint& sp) {
  const ScheduleValues c = eval_schedule(s, t);
  const double theta = s.theta();
  const double sq = std::sqrt(theta);
  const VectorXd dx = y.x - sp.primal;
  const double cc = t * c.gamma - (1.0 + theta) / theta;
  return theta * t * t * c.beta * regularized_gap(p, y, sp, c.eps) + 0.5 * cc * dx.squaredNorm() +
         0.5 * (dx / sq + (sq * t) * y.v).squaredNorm() + 0.5 * (y.lam - sp.dual).squaredNorm();
}

double lyapunov_Gtilde(double t, const SystemState& y, const ProblemInstance& p,
                       const CoefficientSchedule& s, const SaddlePoint& sp) {
  const ScheduleValues c = eval_schedule(s, t);
  const double theta = s.theta();
  const VectorXd dx = y.x - sp.primal;
  const double d = (theta * t * c.gamma - theta - 1.0) / (theta * theta * t * t);
  return c.beta * regularized_gap(p, y, sp, c.eps) +
         0.5 * (dx / (theta * t) + y.v).squaredNorm() +
         0.5 / (theta * t * t) * (y.lam - sp.dual).squaredNorm() + 0.5 * d * dx.squaredNorm();
}

double lyapunov_Ghat(double t, const SystemState& y, const ProblemInstance& p,
                     const CoefficientSchedule& s, const VectorXd& x_hat, const VectorXd& lam_hat) {
  const ScheduleValues c = eval_schedule(s, t);
  const double theta = s.theta();
  const SaddlePoint ref{x_hat, lam_hat, false};
  const VectorXd dx = y.x - x_hat;
  const double d = (theta * t * c.gamma - theta - 1.0) / (theta * theta * t * t);
  const double gap = lagrangian_gap(p, y.x, ref) +
                     0.5 * c.eps * (y.x.squaredNorm() - x_hat.squaredNorm());
  return c.beta * gap + 0.5 * (dx / (theta * t) + y.v).squaredNorm() +
         0.5 * d * dx.squaredNorm() + 0.5 / (theta * t * t) * (y.lam - lam_hat).squaredNorm();
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, int max_depth) {
  if (a == b) return 0.0;
  struct Local {
    const std::function<double(double)>& f;
    double scale_tol;

    double recurse(double a, double b, double fa, double fm, double fb, double whole,
                   int depth) const {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m);
      const double rm = 0.5 * (m + b);
      const double flm = f(lm);
      const double frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      const double delta = left + right - whole;
      if (depth <= 0 || std::abs(delta) <= 15.0 * scale_tol * (b - a)) {
        return left + right + delta / 15.0;
      }
      return recurse(a, m, fa, flm, fm, left, depth - 1) +
             recurse(m, b, fm, frm, fb, right, depth - 1);
    }
  };
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  // Tolerance per unit length, relative to a magnitude estimate that is
  // refined until it is not much larger than the result itself.
  double magnitude = std::max({std::abs(whole), std::abs(fa) * std::abs(b - a),
                               std::numeric_limits<double>::min()});
  double result = 0.0;
  for (int pass = 0; pass < 4; ++pass) {
    const Local local{f, rel_tol * magnitude / std::abs(b - a)};
    result = local.recurse(a, b, fa, fm, fb, whole, max_depth);
    if (std::abs(result) >= 0.5 * magnitude || result == 0.0) break;
    magnitude = std::abs(result);
  }
  return result;
}

double fast_integral(const CoefficientSchedule& s, double t) {
  if (const auto v = closed_form_fast_integral(s, t)) return *v;
  return adaptive_simpson(
      [&](double u) { return u * s.beta().value(u) * s.eps().value(u); }, s.t0(), t);
}

DecayAudit audit_decay_inequality(const Trajectory& traj, const ProblemInstance& p,
                                  const CoefficientSchedule& s, const SaddlePoint& sp,
                                  const std::optional<MinimalNormSolution>& min_norm) {
  if (traj.times.empty()) throw ArgumentError("empty trajectory");
  if (traj.times.front() != s.t0()) throw ArgumentError("trajectory must start at t0");
  const Index n = p.dim_primal();
  const Index m = p.dim_dual();
  const bool closed = closed_form_fast_integral(s, s.t0()).has_value();
  const double weight = sp.primal.squaredNorm() / (2.0 * s.theta());

  DecayAudit out;
  out.certified = audit_conditions(s).all_pass();
  out.samples.reserve(traj.times.size());
  const double t0 = s.t0();
  const double base = t0 * t0 * lyapunov_Gtilde(t0, unpack(traj.states.front(), n, m), p, s, sp);
  const double norm = 1.0 + std::abs(base);
  out.worst_violation = -std::numeric_limits<double>::infinity();

  double integral = 0.0;
  double previous = t0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    const SystemState y = unpack(traj.states[i], n, m);
    if (closed) {
      integral = *closed_form_fast_integral(s, t);
    } else {
      integral += adaptive_simpson(
          [&](double u) { return u * s.beta().value(u) * s.eps().value(u); }, previous, t);
    }
    previous = t;
    LyapunovSample ls;
    ls.t = t;
    ls.G = lyapunov_G(t, y, p, s, sp);
    ls.Gtilde = lyapunov_Gtilde(t, y, p, s, sp);
    if (min_norm) ls.Ghat = lyapunov_Ghat(t, y, p, s, min_norm->primal, min_norm->dual);
    ls.bound23 = base + weight * integral;
    const double violation = (t * t * ls.Gtilde - ls.bound23) / norm;
    if (violation > out.worst_violation) {
      out.worst_violation = violation;
      out.worst_time = t;
    }
    out.samples.push_back(ls);
  }
  return out;
}

std::vector<MetricSample> compute_metrics(const Trajectory& traj, const ProblemInstance& p,
                                          const CoefficientSchedule& s, const SaddlePoint& sp,
                                          const VectorXd& x_hat) {
  const Index n = p.dim_primal();
  const Index m = p.dim_dual();
  const double f_star = p.objective_value(sp.primal);
  const VectorXd g_star = p.objective_gradient(sp.primal);
  const double theta = s.theta();
  std::vector<MetricSample> out;
  out.reserve(traj.times.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    const SystemState y = unpack(traj.states[i], n, m);
    MetricSample ms;
    ms.t = t;
    ms.lag_gap = lagrangian_gap(p, y.x, sp);
    ms.f_gap_abs = std::abs(p.objective_value(y.x) - f_star);
    ms.feas = (p.constraint_matrix() * y.x - p.constraint_rhs()).norm();
    ms.grad_err = (p.objective_gradient(y.x) - g_star).norm();
    ms.dist_min_norm = (y.x - x_hat).norm();
    ms.scaled_speed = t * y.v.norm();
    ms.drift = ((y.x - sp.primal) / (theta * t) + y.v).norm();
    ms.G = lyapunov_G(t, y, p, s, sp);
    ms.Gtilde = lyapunov_Gtilde(t, y, p, s, sp);
    out.push_back(ms);
  }
  return out;
}

RateFit fit_rate(const std::vector<double>& times, const std::vector<double>& values,
                 FitWindow window) {
  if (times.size() != values.size()) throw ArgumentError("times and values differ in length");
  if (!(window.lo < window.hi)) throw ArgumentError("fit window needs lo < hi");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    const double v = values[i];
    if (t < window.lo || t > window.hi || !(t > 0.0)) continue;
    if (!(v > 1e-300) || !std::isfinite(v)) continue;
    lx.push_back(std::log(t));
    ly.push_back(std::log(v));
  }
  if (lx.size() < 8) {
    throw FitError("rate fit needs at least 8 positive points in [" + std::to_string(window.lo) +
                   ", " + std::to_string(window.hi) + "], got " + std::to_string(lx.size()));
  }
  const double k = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double dx = lx[i] - mx;
    const double dy = ly[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw FitError("rate fit needs distinct times");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.window = window;
  fit.n_points = lx.size();
  return fit;
}

VectorXd tikhonov_point(const ProblemInstance& p, const VectorXd& lam_hat, double eps) {
  RegularizedSolve r = solve_regularized(p, lam_hat, eps);
  if (!r.converged) {
    throw SolverError("regularized minimization did not converge after " +
                      std::to_string(r.iterations) + " iterations");
  }
  return std::move(r.x);
}

}  // namespace mixdyn
