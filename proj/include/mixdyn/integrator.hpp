#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mixdyn/errors.hpp"

namespace mixdyn {

/// dy = F(t, y). Implementations may resize dy.
using Field = std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct IntegratorSettings {
  double rtol = 1e-6;
  double atol = 1e-9;
  /// Default: 1e-2 (tf - t0) / max(1, ||F(t0, y0)||), clamped to [h_min, h_max].
  std::optional<double> h_init;
  double h_min = 1e-12;
  /// Default: tf - t0.
  std::optional<double> h_max;
  /// Budget on attempted steps (accepted + rejected).
  long long max_steps = 10'000'000;
  double safety = 0.9;
  /// Abort once this much wall time has elapsed; 0 disables the limit.
  double max_wall_seconds = 0.0;
  /// Keep per-step Hermite data so that Trajectory::interpolate works.
  bool store_segments = false;

  /// Throws ArgumentError on inconsistent values.
  void validate() const;
};

/// One accepted step with endpoint values and slopes.
struct StepSegment {
  double t0;
  double t1;
  Eigen::VectorXd y0;
  Eigen::VectorXd y1;
  Eigen::VectorXd f0;
  Eigen::VectorXd f1;

  /// Cubic Hermite interpolant; exact at both endpoints.
  Eigen::VectorXd eval(double t) const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  long long accepted = 0;
  long long rejected = 0;
  long long evaluations = 0;
  std::vector<StepSegment> segments;

  /// Dense output at any t covered by the stored segments.
  Eigen::VectorXd interpolate(double t) const;
};

struct IntegrationResult {
  /// Holds the samples produced before any failure.
  Trajectory trajectory;
  std::optional<IntegrationError> failure;
  double t_reached = 0.0;

  bool ok() const noexcept { return !failure.has_value(); }
};

/// Bogacki-Shampine 3(2) pair, first-same-as-last:
///
///   0   |
///   1/2 | 1/2
///   3/4 | 0     3/4
///   1   | 2/9   1/3   4/9
///   ----+-----------------------
///       | 2/9   1/3   4/9   0        (order 3, propagated)
///       | 7/24  1/4   1/3   1/8      (order 2, error estimate)
///
/// The step is accepted when the max-norm of err / (atol + rtol max(|y|, |y_new|))
/// is at most 1; the next step is h * clamp(safety * err^(-1/3), 0.2, 5).
/// Output at `samples` (t0 and tf are always included) uses the cubic Hermite
/// interpolant of the step that covers each sample; step selection never
/// depends on the sample grid. Never throws for integration failures.
IntegrationResult solve(const Field& field, double t0, double tf, const Eigen::VectorXd& y0,
                        const IntegratorSettings& settings, std::vector<double> samples = {});

/// As solve, but throws IntegrationError on failure.
Trajectory integrate(const Field& field, double t0, double tf, const Eigen::VectorXd& y0,
                     const IntegratorSettings& settings, std::vector<double> samples = {});

/// Runs the third-order member with constant step h and returns the 2-norm
/// distance of the terminal state from `reference`. (tf - t0) / h must be an
/// integer.
double fixed_step_order_probe(const Field& field, double t0, double tf, const Eigen::VectorXd& y0,
                              double h, const Eigen::VectorXd& reference);

/// n points log-spaced on [t0, t1] with exact endpoints.
std::vector<double> log_spaced(double t0, double t1, int n);

}  // namespace mixdyn
