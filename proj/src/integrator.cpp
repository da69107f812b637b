#include "mixdyn/integrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "mixdyn/keyvalue.hpp"

namespace mixdyn {

using Eigen::VectorXd;

const char* to_string(IntegrationFailureKind kind) noexcept {
  switch (kind) {
    case IntegrationFailureKind::kStepUnderflow:
      return "step size underflow";
    case IntegrationFailureKind::kStepBudget:
      return "step budget exhausted";
    case IntegrationFailureKind::kNonFinite:
      return "non-finite value";
    case IntegrationFailureKind::kWallClock:
      return "wall-clock budget exhausted";
  }
  return "unknown";
}

namespace {

// Third-order weights and the difference to the embedded second-order weights.
constexpr double kB1 = 2.0 / 9.0;
constexpr double kB2 = 1.0 / 3.0;
constexpr double kB3 = 4.0 / 9.0;
constexpr double kE1 = -5.0 / 72.0;
constexpr double kE2 = 1.0 / 12.0;
constexpr double kE3 = 1.0 / 9.0;
constexpr double kE4 = -1.0 / 8.0;

void hermite(double t0, double t1, const VectorXd& y0, const VectorXd& y1, const VectorXd& f0,
             const VectorXd& f1, double t, VectorXd& out) {
  if (t == t1) {
    out = y1;
    return;
  }
  if (t == t0) {
    out = y0;
    return;
  }
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  out = h00 * y0 + (h10 * h) * f0 + h01 * y1 + (h11 * h) * f1;
}

}  // namespace

VectorXd StepSegment::eval(double t) const {
  VectorXd out;
  hermite(t0, t1, y0, y1, f0, f1, t, out);
  return out;
}

VectorXd Trajectory::interpolate(double t) const {
  if (segments.empty()) {
    throw ArgumentError("trajectory has no stored segments; set store_segments");
  }
  if (t < segments.front().t0 || t > segments.back().t1) {
    throw ArgumentError("interpolation time " + format_real(t) + " outside the trajectory");
  }
  auto it = std::lower_bound(segments.begin(), segments.end(), t,
                             [](const StepSegment& s, double v) { return s.t1 < v; });
  if (it == segments.end()) --it;
  return it->eval(t);
}

void IntegratorSettings::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0)) throw ArgumentError("rtol and atol must be > 0");
  if (!(h_min > 0.0)) throw ArgumentError("h_min must be > 0");
  if (h_max && !(*h_max >= h_min)) throw ArgumentError("h_max must be >= h_min");
  if (h_init && !(*h_init > 0.0)) throw ArgumentError("h_init must be > 0");
  if (max_steps <= 0) throw ArgumentError("max_steps must be > 0");
  if (!(safety > 0.0 && safety <= 1.0)) throw ArgumentError("safety must lie in (0, 1]");
  if (!(max_wall_seconds >= 0.0)) throw ArgumentError("max_wall_seconds must be >= 0");
}

IntegrationResult solve(const Field& field, double t0, double tf, const VectorXd& y0,
                        const IntegratorSettings& settings, std::vector<double> samples) {
  settings.validate();
  if (!(tf > t0) || !std::isfinite(t0) || !std::isfinite(tf)) {
    throw ArgumentError("need finite t0 < tf");
  }
  if (!y0.allFinite()) throw ArgumentError("initial state has non-finite entries");
  for (double s : samples) {
    if (!(s >= t0 && s <= tf)) {
      throw ArgumentError("sample time " + format_real(s) + " outside [t0, tf]");
    }
  }
  samples.push_back(t0);
  samples.push_back(tf);
  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end()), samples.end());

  IntegrationResult result;
  Trajectory& traj = result.trajectory;
  traj.times.reserve(samples.size());
  traj.states.reserve(samples.size());

  const Eigen::Index dim = y0.size();
  VectorXd y = y0;
  VectorXd k1(dim), k2(dim), k3(dim), k4(dim), stage(dim), y_new(dim), dense(dim);
  double t = t0;
  result.t_reached = t0;

  const double h_max = settings.h_max.value_or(tf - t0);
  const auto started = std::chrono::steady_clock::now();

  try {
    field(t, y, k1);
    ++traj.evaluations;
    double h = settings.h_init.value_or(1e-2 * (tf - t0) / std::max(1.0, k1.norm()));
    h = std::clamp(h, settings.h_min, std::max(settings.h_min, h_max));

    traj.times.push_back(t0);
    traj.states.push_back(y);
    std::size_t next_sample = 1;
    long long attempts = 0;

    while (t < tf) {
      if (attempts >= settings.max_steps) {
        throw IntegrationError(IntegrationFailureKind::kStepBudget, t,
                               "step budget of " + std::to_string(settings.max_steps) +
                                   " exhausted at t = " + format_real(t));
      }
      if (settings.max_wall_seconds > 0.0 && attempts % 4096 == 0) {
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
        if (elapsed.count() > settings.max_wall_seconds) {
          throw IntegrationError(IntegrationFailureKind::kWallClock, t,
                                 "wall-clock budget exhausted at t = " + format_real(t));
        }
      }
      bool last = false;
      double t_new = t + h;
      if (t_new >= tf || tf - t_new < settings.h_min) {
        h = tf - t;
        t_new = tf;
        last = true;
      }

      stage = y + (0.5 * h) * k1;
      field(t + 0.5 * h, stage, k2);
      stage = y + (0.75 * h) * k2;
      field(t + 0.75 * h, stage, k3);
      y_new = y + h * (kB1 * k1 + kB2 * k2 + kB3 * k3);
      field(t_new, y_new, k4);
      traj.evaluations += 3;
      ++attempts;

      double err = 0.0;
      for (Eigen::Index i = 0; i < dim; ++i) {
        const double e = h * (kE1 * k1[i] + kE2 * k2[i] + kE3 * k3[i] + kE4 * k4[i]);
        const double sc =
            settings.atol + settings.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        err = std::max(err, std::abs(e) / sc);
      }
      // std::max drops NaN, so the stage values are checked directly.
      if (!std::isfinite(err) || !y_new.allFinite() || !k4.allFinite()) {
        throw IntegrationError(IntegrationFailureKind::kNonFinite, t,
                               "non-finite error estimate at t = " + format_real(t));
      }

      if (err <= 1.0) {
        while (next_sample < samples.size() && samples[next_sample] <= t_new) {
          hermite(t, t_new, y, y_new, k1, k4, samples[next_sample], dense);
          traj.times.push_back(samples[next_sample]);
          traj.states.push_back(dense);
          ++next_sample;
        }
        if (settings.store_segments) traj.segments.push_back({t, t_new, y, y_new, k1, k4});
        t = last ? tf : t_new;
        y.swap(y_new);
        k1.swap(k4);
        ++traj.accepted;
        result.t_reached = t;
        const double factor =
            err == 0.0 ? 5.0 : std::clamp(settings.safety * std::cbrt(1.0 / err), 0.2, 5.0);
        h = std::min(h * factor, h_max);
      } else {
        ++traj.rejected;
        h *= std::clamp(settings.safety * std::cbrt(1.0 / err), 0.2, 1.0);
        if (h < settings.h_min) {
          throw IntegrationError(IntegrationFailureKind::kStepUnderflow, t,
                                 "step size fell below h_min at t = " + format_real(t));
        }
      }
    }
  } catch (const IntegrationError& e) {
    result.failure = e;
  } catch (const DomainError& e) {
    result.failure = IntegrationError(IntegrationFailureKind::kNonFinite, e.time(), e.what());
  }
  return result;
}

Trajectory integrate(const Field& field, double t0, double tf, const VectorXd& y0,
                     const IntegratorSettings& settings, std::vector<double> samples) {
  IntegrationResult r = solve(field, t0, tf, y0, settings, std::move(samples));
  if (r.failure) throw *r.failure;
  return std::move(r.trajectory);
}

double fixed_step_order_probe(const Field& field, double t0, double tf, const VectorXd& y0,
                              double h, const VectorXd& reference) {
  if (!(h > 0.0) || !(tf > t0)) throw ArgumentError("need h > 0 and tf > t0");
  const double steps_real = (tf - t0) / h;
  const long long steps = std::llround(steps_real);
  if (steps < 1 || std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * steps_real) {
    throw ArgumentError("(tf - t0) / h must be an integer");
  }
  if (reference.size() != y0.size()) throw ArgumentError("reference has the wrong length");
  const Eigen::Index dim = y0.size();
  VectorXd y = y0;
  VectorXd k1(dim), k2(dim), k3(dim), stage(dim);
  for (long long i = 0; i < steps; ++i) {
    const double t = t0 + static_cast<double>(i) * h;
    field(t, y, k1);
    stage = y + (0.5 * h) * k1;
    field(t + 0.5 * h, stage, k2);
    stage = y + (0.75 * h) * k2;
    field(t + 0.75 * h, stage, k3);
    y += h * (kB1 * k1 + kB2 * k2 + kB3 * k3);
  }
  return (y - reference).norm();
}

std::vector<double> log_spaced(double t0, double t1, int n) {
  if (!(t0 > 0.0) || !(t1 > t0) || n < 2) {
    throw ArgumentError("log_spaced needs 0 < t0 < t1 and n >= 2");
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  const double l0 = std::log(t0);
  const double l1 = std::log(t1);
  for (int i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = std::exp(l0 + (l1 - l0) * i / (n - 1));
  }
  out.front() = t0;
  out.back() = t1;
  return out;
}

}  // namespace mixdyn
