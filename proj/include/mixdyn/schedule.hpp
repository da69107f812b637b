#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mixdyn {

/// Finite sum of monomials c * t^e on t > 0. Terms with equal exponents are
/// merged; a merged coefficient whose magnitude is within a few ulps of the
/// summed term magnitudes is snapped to exactly zero, so identities such as
/// alpha/t + t * (-alpha/t^2) vanish exactly.
class PowerSum {
 public:
  struct Term {
    double coef;
    double exponent;
  };

  PowerSum() = default;
  explicit PowerSum(std::vector<Term> terms);
  static PowerSum monomial(double coef, double exponent);
  static PowerSum constant(double value) { return monomial(value, 0.0); }

  double operator()(double t) const;
  PowerSum derivative() const;

  PowerSum operator+(const PowerSum& other) const;
  PowerSum operator-(const PowerSum& other) const;
  PowerSum operator*(const PowerSum& other) const;
  PowerSum operator*(double scale) const;

  const std::vector<Term>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }

  /// Limit as t -> infinity (+-inf when it diverges).
  double limit_at_infinity() const;
  /// sup / inf over [t0, inf). Available for at most two monomials; the value
  /// may be +-inf.
  std::optional<double> sup_from(double t0) const;
  std::optional<double> inf_from(double t0) const;
  /// Integral over [t0, t1].
  double integral(double t0, double t1) const;
  /// Integral over [t0, inf); +inf when any term is not integrable.
  double integral_to_infinity(double t0) const;

 private:
  std::vector<Term> terms_;  // sorted by decreasing exponent, nonzero coefs
};

/// gamma(t).
class DampingFamily {
 public:
  enum class Kind { kPowerQuotient, kRationalA, kRationalB, kCustom };

  /// alpha / t
  static DampingFamily power_quotient(double alpha);
  /// (2 alpha t - 1) / t^2
  static DampingFamily rational_a(double alpha);
  /// (1 + alpha t) / t^2
  static DampingFamily rational_b(double alpha);
  static DampingFamily custom(std::function<double(double)> value,
                              std::function<double(double)> derivative);

  Kind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }
  double value(double t) const;
  double derivative(double t) const;
  /// Monomial form for the built-in kinds.
  const std::optional<PowerSum>& closed_form() const noexcept { return form_; }

 private:
  Kind kind_ = Kind::kPowerQuotient;
  double alpha_ = 0.0;
  std::optional<PowerSum> form_;
  std::optional<PowerSum> form_derivative_;
  std::function<double(double)> value_;
  std::function<double(double)> derivative_;
};

/// beta(t).
class ScalingFamily {
 public:
  enum class Kind { kPower, kConstant, kCustom };

  /// t^exponent, exponent >= 0
  static ScalingFamily power(double exponent);
  /// constant level > 0
  static ScalingFamily constant(double level = 1.0);
  static ScalingFamily custom(std::function<double(double)> value,
                              std::function<double(double)> derivative);

  Kind kind() const noexcept { return kind_; }
  /// Growth exponent for power families (0 for constant).
  double exponent() const noexcept { return exponent_; }
  double value(double t) const;
  double derivative(double t) const;
  const std::optional<PowerSum>& closed_form() const noexcept { return form_; }

 private:
  Kind kind_ = Kind::kPower;
  double exponent_ = 0.0;
  std::optional<PowerSum> form_;
  std::optional<PowerSum> form_derivative_;
  std::function<double(double)> value_;
  std::function<double(double)> derivative_;
};

/// epsilon(t).
class TikhonovFamily {
 public:
  enum class Kind { kPowerDecay, kZero, kCustom };

  /// c / t^r, c >= 0, r > 0
  static TikhonovFamily power_decay(double c, double r);
  static TikhonovFamily zero();
  static TikhonovFamily custom(std::function<double(double)> value,
                               std::function<double(double)> derivative);

  Kind kind() const noexcept { return kind_; }
  double coefficient() const noexcept { return c_; }
  double decay() const noexcept { return r_; }
  double value(double t) const;
  double derivative(double t) const;
  const std::optional<PowerSum>& closed_form() const noexcept { return form_; }

 private:
  Kind kind_ = Kind::kZero;
  double c_ = 0.0;
  double r_ = 0.0;
  std::optional<PowerSum> form_;
  std::optional<PowerSum> form_derivative_;
  std::function<double(double)> value_;
  std::function<double(double)> derivative_;
};

struct ScheduleValues {
  double gamma;
  double dgamma;
  double beta;
  double dbeta;
  double eps;
  double deps;
};

/// theta together with (gamma, beta, eps) on [t0, inf). Immutable.
class CoefficientSchedule {
 public:
  /// Throws ArgumentError unless theta > 0, t0 > 0, gamma and beta are
  /// positive on [t0, inf) and eps is nonnegative there.
  CoefficientSchedule(double theta, DampingFamily gamma, ScalingFamily beta, TikhonovFamily eps,
                      double t0);

  double theta() const noexcept { return theta_; }
  double t0() const noexcept { return t0_; }
  const DampingFamily& gamma() const noexcept { return gamma_; }
  const ScalingFamily& beta() const noexcept { return beta_; }
  const TikhonovFamily& eps() const noexcept { return eps_; }

  /// Same schedule with a different regularization family.
  CoefficientSchedule with_eps(TikhonovFamily eps) const;

 private:
  double theta_;
  DampingFamily gamma_;
  ScalingFamily beta_;
  TikhonovFamily eps_;
  double t0_;
};

/// Throws DomainError for t < t0.
ScheduleValues eval_schedule(const CoefficientSchedule& s, double t);

/// theta on the boundary of the damping condition: 1/(alpha-1) for alpha/t and
/// (1+alpha t)/t^2, 1/(2 alpha - 2) for (2 alpha t - 1)/t^2.
double default_theta(const DampingFamily& gamma);

enum class Integrability { kFinite, kInfinite, kUnknown };
const char* to_string(Integrability value) noexcept;

struct ConditionReport {
  // Worst values on the audit grid: max for the first two, min for the third.
  double cond6_margin = 0.0;  // (2 theta - 1) beta + theta t beta'   <= 0
  double cond7_margin = 0.0;  // gamma + t gamma' - t beta eps        <= 0
  double cond8_margin = 0.0;  // theta t gamma - theta - 1            >= 0
  // sup / inf over [t0, inf) when a closed form is available.
  std::optional<double> cond6_exact;
  std::optional<double> cond7_exact;
  std::optional<double> cond8_exact;
  bool cond6_pass = false;
  bool cond7_pass = false;
  bool cond8_pass = false;
  bool eps_nonincreasing = false;
  Integrability fast_regime = Integrability::kUnknown;  // int t beta eps
  Integrability slow_regime = Integrability::kUnknown;  // int beta eps / t
  std::optional<double> fast_integral;
  std::optional<double> slow_integral;
  std::optional<bool> scaled_eps_unbounded;  // t^2 beta eps -> inf
  std::optional<bool> beta_bounded_below;    // liminf beta > 0
  std::size_t grid_points = 0;
  double grid_lo = 0.0;
  double grid_hi = 0.0;

  bool all_pass() const noexcept {
    return cond6_pass && cond7_pass && cond8_pass && eps_nonincreasing;
  }
};

/// 256 log-spaced points on [t0, 1e6].
std::vector<double> default_audit_grid(double t0);

/// `grid` must lie in [t0, inf), be log-spaced and hold at least 64 points.
ConditionReport audit_conditions(const CoefficientSchedule& s, const std::vector<double>& grid);
ConditionReport audit_conditions(const CoefficientSchedule& s);

/// int_{t0}^inf t beta eps dt for built-in families (+inf when divergent).
std::optional<double> closed_form_fast_integral(const CoefficientSchedule& s);

/// int_{t0}^t s beta(s) eps(s) ds for built-in families.
std::optional<double> closed_form_fast_integral(const CoefficientSchedule& s, double t);

/// Multi-line human-readable summary.
std::string format_condition_report(const ConditionReport& r);

}  // namespace mixdyn
