#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mixdyn/dynamics.hpp"
#include "mixdyn/integrator.hpp"
#include "mixdyn/problem.hpp"
#include "mixdyn/schedule.hpp"

namespace mixdyn {

/// theta t^2 beta (gap + eps/2 ||x||^2) + c/2 ||x - x*||^2
///   + 1/2 ||(x - x*)/sqrt(theta) + sqrt(theta) t v||^2 + 1/2 ||lam - lam*||^2
/// with gap = L(x, lam*) - L(x*, lam*) and c = t gamma - (1 + theta)/theta.
double lyapunov_G(double t, const SystemState& y, const ProblemInstance& p,
                  const CoefficientSchedule& s, const SaddlePoint& sp);

/// beta (gap + eps/2 ||x||^2) + 1/2 ||(x - x*)/(theta t) + v||^2
///   + 1/(2 theta t^2) ||lam - lam*||^2 + d/2 ||x - x*||^2
/// with d = (theta t gamma - theta - 1) / (theta^2 t^2).
double lyapunov_Gtilde(double t, const SystemState& y, const ProblemInstance& p,
                       const CoefficientSchedule& s, const SaddlePoint& sp);

/// Same shape as lyapunov_Gtilde around the minimal-norm pair, with the
/// regularizer measured relative to ||x_hat||^2. Can be negative when
/// ||x|| < ||x_hat||.
double lyapunov_Ghat(double t, const SystemState& y, const ProblemInstance& p,
                     const CoefficientSchedule& s, const VectorXd& x_hat, const VectorXd& lam_hat);

struct LyapunovSample {
  double t;
  double G;
  double Gtilde;
  std::optional<double> Ghat;
  /// t0^2 Gtilde(t0) + ||x*||^2 / (2 theta) int_{t0}^t s beta eps ds
  double bound23;
};

struct DecayAudit {
  std::vector<LyapunovSample> samples;
  /// max over samples of (t^2 Gtilde(t) - bound23(t)) / (1 + t0^2 Gtilde(t0)).
  double worst_violation = 0.0;
  double worst_time = 0.0;
  /// False when the schedule fails the condition audit; the inequality is
  /// then informational only.
  bool certified = false;
};

/// int_{t0}^t s beta(s) eps(s) ds: closed form for built-in families,
/// adaptive Simpson otherwise.
double fast_integral(const CoefficientSchedule& s, double t);

/// Samples must start at the schedule's t0.
DecayAudit audit_decay_inequality(const Trajectory& traj, const ProblemInstance& p,
                                  const CoefficientSchedule& s, const SaddlePoint& sp,
                                  const std::optional<MinimalNormSolution>& min_norm = std::nullopt);

struct MetricSample {
  double t;
  double lag_gap;        // L(x, lam*) - L(x*, lam*)
  double f_gap_abs;      // |f(x) - f(x*)|
  double feas;           // ||Ax - b||
  double grad_err;       // ||grad f(x) - grad f(x*)||
  double dist_min_norm;  // ||x - x_hat||
  double scaled_speed;   // t ||v||
  double drift;          // ||(x - x*)/(theta t) + v||
  double G;
  double Gtilde;
};

std::vector<MetricSample> compute_metrics(const Trajectory& traj, const ProblemInstance& p,
                                          const CoefficientSchedule& s, const SaddlePoint& sp,
                                          const VectorXd& x_hat);

struct FitWindow {
  double lo;
  double hi;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  FitWindow window{0.0, 0.0};
  std::size_t n_points = 0;
};

/// Least squares of log(value) on log(t) over points with t in the window.
/// Nonpositive values are dropped. Throws FitError with fewer than 8 points.
RateFit fit_rate(const std::vector<double>& times, const std::vector<double>& values,
                 FitWindow window);

/// Minimizer x_eps of L(., lam_hat) + eps/2 ||.||^2. Throws SolverError if the
/// iterative path for non-quadratic objectives does not reach tolerance.
VectorXd tikhonov_point(const ProblemInstance& p, const VectorXd& lam_hat, double eps);

/// Adaptive Simpson quadrature to relative tolerance rel_tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-10, int max_depth = 50);

}  // namespace mixdyn
