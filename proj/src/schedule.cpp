#include "mixdyn/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mixdyn/errors.hpp"
#include "mixdyn/keyvalue.hpp"

namespace mixdyn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kExponentTol = 1e-12;

bool same_exponent(double a, double b) {
  return std::abs(a - b) <= kExponentTol * std::max(1.0, std::abs(a));
}

double power(double t, double e) {
  if (e == 0.0) return 1.0;
  if (e == 1.0) return t;
  if (e == -1.0) return 1.0 / t;
  if (e == 2.0) return t * t;
  return std::pow(t, e);
}

bool finite(double v) { return std::isfinite(v); }

std::optional<double> interior_critical_point(const PowerSum& p, double t0) {
  if (p.terms().size() != 2) return std::nullopt;
  const auto& a = p.terms()[0];
  const auto& b = p.terms()[1];
  const double ka = a.coef * a.exponent;
  const double kb = b.coef * b.exponent;
  if (ka == 0.0 || kb == 0.0) return std::nullopt;
  const double ratio = -kb / ka;
  if (!(ratio > 0.0)) return std::nullopt;
  const double tc = std::pow(ratio, 1.0 / (a.exponent - b.exponent));
  if (!std::isfinite(tc) || !(tc > t0)) return std::nullopt;
  return tc;
}

// Strictly positive on [t0, inf), for sums of at most two monomials. The
// infimum may be an unattained limit of 0.
std::optional<bool> positive_from(const PowerSum& p, double t0) {
  if (p.is_zero()) return false;
  if (p.terms().size() > 2) return std::nullopt;
  if (!(p(t0) > 0.0) || p.limit_at_infinity() < 0.0) return false;
  if (const auto tc = interior_critical_point(p, t0)) return p(*tc) > 0.0;
  return true;
}

}  // namespace

PowerSum::PowerSum(std::vector<Term> terms) {
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return a.exponent > b.exponent; });
  std::size_t i = 0;
  while (i < terms.size()) {
    const double e = terms[i].exponent;
    double sum = 0.0;
    double magnitude = 0.0;
    std::size_t j = i;
    for (; j < terms.size() && same_exponent(terms[j].exponent, e); ++j) {
      sum += terms[j].coef;
      magnitude += std::abs(terms[j].coef);
    }
    if (sum != 0.0 && std::abs(sum) > 8.0 * std::numeric_limits<double>::epsilon() * magnitude) {
      terms_.push_back({sum, e});
    }
    i = j;
  }
}

PowerSum PowerSum::monomial(double coef, double exponent) {
  return PowerSum({{coef, exponent}});
}

double PowerSum::operator()(double t) const {
  double v = 0.0;
  for (const Term& term : terms_) v += term.coef * power(t, term.exponent);
  return v;
}

PowerSum PowerSum::derivative() const {
  std::vector<Term> out;
  for (const Term& term : terms_) {
    if (term.exponent != 0.0) out.push_back({term.coef * term.exponent, term.exponent - 1.0});
  }
  return PowerSum(std::move(out));
}

PowerSum PowerSum::operator+(const PowerSum& other) const {
  std::vector<Term> all = terms_;
  all.insert(all.end(), other.terms_.begin(), other.terms_.end());
  return PowerSum(std::move(all));
}

PowerSum PowerSum::operator-(const PowerSum& other) const { return *this + other * -1.0; }

PowerSum PowerSum::operator*(const PowerSum& other) const {
  std::vector<Term> out;
  for (const Term& a : terms_) {
    for (const Term& b : other.terms_) out.push_back({a.coef * b.coef, a.exponent + b.exponent});
  }
  return PowerSum(std::move(out));
}

PowerSum PowerSum::operator*(double scale) const {
  std::vector<Term> out = terms_;
  for (Term& t : out) t.coef *= scale;
  return PowerSum(std::move(out));
}

double PowerSum::limit_at_infinity() const {
  if (terms_.empty()) return 0.0;
  const Term& lead = terms_.front();
  if (lead.exponent > 0.0) return lead.coef > 0.0 ? kInf : -kInf;
  if (lead.exponent == 0.0) return lead.coef;
  return 0.0;
}

namespace {

template <typename Better>
std::optional<double> extremum(const PowerSum& p, double t0, Better better) {
  if (p.is_zero()) return 0.0;
  if (p.terms().size() > 2) return std::nullopt;
  double best = p(t0);
  const double lim = p.limit_at_infinity();
  if (better(lim, best)) best = lim;
  if (const auto tc = interior_critical_point(p, t0)) {
    const double v = p(*tc);
    if (better(v, best)) best = v;
  }
  return best;
}

}  // namespace

std::optional<double> PowerSum::sup_from(double t0) const {
  return extremum(*this, t0, [](double a, double b) { return a > b; });
}

std::optional<double> PowerSum::inf_from(double t0) const {
  return extremum(*this, t0, [](double a, double b) { return a < b; });
}

double PowerSum::integral(double t0, double t1) const {
  double v = 0.0;
  for (const Term& term : terms_) {
    const double e1 = term.exponent + 1.0;
    if (std::abs(e1) <= kExponentTol) {
      v += term.coef * std::log(t1 / t0);
    } else {
      v += term.coef / e1 * (power(t1, e1) - power(t0, e1));
    }
  }
  return v;
}

double PowerSum::integral_to_infinity(double t0) const {
  double v = 0.0;
  for (const Term& term : terms_) {
    const double e1 = term.exponent + 1.0;
    if (e1 >= -kExponentTol) return term.coef > 0.0 ? kInf : -kInf;
    v += -term.coef / e1 * power(t0, e1);
  }
  return v;
}

// ---- families ------------------------------------------------------------

DampingFamily DampingFamily::power_quotient(double alpha) {
  if (!(alpha > 0.0) || !finite(alpha)) throw ArgumentError("gamma: alpha must be > 0");
  DampingFamily f;
  f.kind_ = Kind::kPowerQuotient;
  f.alpha_ = alpha;
  f.form_ = PowerSum::monomial(alpha, -1.0);
  f.form_derivative_ = f.form_->derivative();
  return f;
}

DampingFamily DampingFamily::rational_a(double alpha) {
  if (!(alpha > 0.0) || !finite(alpha)) throw ArgumentError("gamma: alpha must be > 0");
  DampingFamily f;
  f.kind_ = Kind::kRationalA;
  f.alpha_ = alpha;
  f.form_ = PowerSum({{2.0 * alpha, -1.0}, {-1.0, -2.0}});
  f.form_derivative_ = f.form_->derivative();
  return f;
}

DampingFamily DampingFamily::rational_b(double alpha) {
  if (!(alpha >= 0.0) || !finite(alpha)) throw ArgumentError("gamma: alpha must be >= 0");
  DampingFamily f;
  f.kind_ = Kind::kRationalB;
  f.alpha_ = alpha;
  f.form_ = PowerSum({{alpha, -1.0}, {1.0, -2.0}});
  f.form_derivative_ = f.form_->derivative();
  return f;
}

DampingFamily DampingFamily::custom(std::function<double(double)> value,
                                    std::function<double(double)> derivative) {
  if (!value || !derivative) throw ArgumentError("gamma: custom family needs value and derivative");
  DampingFamily f;
  f.kind_ = Kind::kCustom;
  f.value_ = std::move(value);
  f.derivative_ = std::move(derivative);
  return f;
}

double DampingFamily::value(double t) const { return form_ ? (*form_)(t) : value_(t); }
double DampingFamily::derivative(double t) const {
  return form_derivative_ ? (*form_derivative_)(t) : derivative_(t);
}

ScalingFamily ScalingFamily::power(double exponent) {
  if (!(exponent >= 0.0) || !finite(exponent)) throw ArgumentError("beta: exponent must be >= 0");
  ScalingFamily f;
  f.kind_ = Kind::kPower;
  f.exponent_ = exponent;
  f.form_ = PowerSum::monomial(1.0, exponent);
  f.form_derivative_ = f.form_->derivative();
  return f;
}

ScalingFamily ScalingFamily::constant(double level) {
  if (!(level > 0.0) || !finite(level)) throw ArgumentError("beta: constant level must be > 0");
  ScalingFamily f;
  f.kind_ = Kind::kConstant;
  f.exponent_ = 0.0;
  f.form_ = PowerSum::constant(level);
  f.form_derivative_ = PowerSum();
  return f;
}

ScalingFamily ScalingFamily::custom(std::function<double(double)> value,
                                    std::function<double(double)> derivative) {
  if (!value || !derivative) throw ArgumentError("beta: custom family needs value and derivative");
  ScalingFamily f;
  f.kind_ = Kind::kCustom;
  f.value_ = std::move(value);
  f.derivative_ = std::move(derivative);
  return f;
}

double ScalingFamily::value(double t) const { return form_ ? (*form_)(t) : value_(t); }
double ScalingFamily::derivative(double t) const {
  return form_derivative_ ? (*form_derivative_)(t) : derivative_(t);
}

TikhonovFamily TikhonovFamily::power_decay(double c, double r) {
  if (!(c >= 0.0) || !finite(c)) throw ArgumentError("eps: coefficient must be >= 0");
  if (!(r > 0.0) || !finite(r)) throw ArgumentError("eps: decay exponent r must be > 0");
  TikhonovFamily f;
  f.kind_ = Kind::kPowerDecay;
  f.c_ = c;
  f.r_ = r;
  f.form_ = c == 0.0 ? PowerSum() : PowerSum::monomial(c, -r);
  f.form_derivative_ = f.form_->derivative();
  return f;
}

TikhonovFamily TikhonovFamily::zero() {
  TikhonovFamily f;
  f.kind_ = Kind::kZero;
  f.form_ = PowerSum();
  f.form_derivative_ = PowerSum();
  return f;
}

TikhonovFamily TikhonovFamily::custom(std::function<double(double)> value,
                                      std::function<double(double)> derivative) {
  if (!value || !derivative) throw ArgumentError("eps: custom family needs value and derivative");
  TikhonovFamily f;
  f.kind_ = Kind::kCustom;
  f.value_ = std::move(value);
  f.derivative_ = std::move(derivative);
  return f;
}

double TikhonovFamily::value(double t) const { return form_ ? (*form_)(t) : value_(t); }
double TikhonovFamily::derivative(double t) const {
  return form_derivative_ ? (*form_derivative_)(t) : derivative_(t);
}

// ---- schedule -------------------------------------------------------------

CoefficientSchedule::CoefficientSchedule(double theta, DampingFamily gamma, ScalingFamily beta,
                                         TikhonovFamily eps, double t0)
    : theta_(theta), gamma_(std::move(gamma)), beta_(std::move(beta)), eps_(std::move(eps)), t0_(t0) {
  if (!(theta_ > 0.0) || !finite(theta_)) throw ArgumentError("theta must be > 0");
  if (!(t0_ > 0.0) || !finite(t0_)) throw ArgumentError("t0 must be > 0");

  std::vector<double> grid;
  auto check_grid = [&](auto&& fn, const char* what) {
    if (grid.empty()) grid = default_audit_grid(t0_);
    for (double t : grid) {
      if (!fn(t)) throw ArgumentError(std::string(what) + " fails at t = " + format_real(t));
    }
  };

  if (const auto& g = gamma_.closed_form()) {
    const auto ok = positive_from(*g, t0_);
    if (ok.has_value() && !*ok) throw ArgumentError("gamma must be positive on [t0, inf)");
  } else {
    check_grid([&](double t) { return gamma_.value(t) > 0.0; }, "gamma > 0");
  }
  if (const auto& b = beta_.closed_form()) {
    const auto ok = positive_from(*b, t0_);
    if (ok.has_value() && !*ok) throw ArgumentError("beta must be positive on [t0, inf)");
  } else {
    check_grid([&](double t) { return beta_.value(t) > 0.0; }, "beta > 0");
  }
  if (const auto& e = eps_.closed_form()) {
    const auto lo = e->inf_from(t0_);
    if (lo && *lo < 0.0) throw ArgumentError("eps must be nonnegative on [t0, inf)");
  } else {
    check_grid([&](double t) { return eps_.value(t) >= 0.0; }, "eps >= 0");
  }
}

CoefficientSchedule CoefficientSchedule::with_eps(TikhonovFamily eps) const {
  return CoefficientSchedule(theta_, gamma_, beta_, std::move(eps), t0_);
}

ScheduleValues eval_schedule(const CoefficientSchedule& s, double t) {
  if (!(t >= s.t0()) || !finite(t)) {
    throw DomainError("schedule evaluated at t = " + format_real(t) + " below t0 = " +
                          format_real(s.t0()),
                      t);
  }
  return {s.gamma().value(t), s.gamma().derivative(t), s.beta().value(t),
          s.beta().derivative(t), s.eps().value(t),    s.eps().derivative(t)};
}

double default_theta(const DampingFamily& gamma) {
  switch (gamma.kind()) {
    case DampingFamily::Kind::kPowerQuotient:
    case DampingFamily::Kind::kRationalB:
      if (!(gamma.alpha() > 1.0)) throw ArgumentError("default theta needs alpha > 1");
      return 1.0 / (gamma.alpha() - 1.0);
    case DampingFamily::Kind::kRationalA:
      if (!(gamma.alpha() > 1.0)) throw ArgumentError("default theta needs alpha > 1");
      return 1.0 / (2.0 * gamma.alpha() - 2.0);
    case DampingFamily::Kind::kCustom:
      break;
  }
  throw ArgumentError("no default theta for a custom damping family");
}

const char* to_string(Integrability value) noexcept {
  switch (value) {
    case Integrability::kFinite:
      return "finite";
    case Integrability::kInfinite:
      return "infinite";
    case Integrability::kUnknown:
      return "unknown";
  }
  return "unknown";
}

std::vector<double> default_audit_grid(double t0) {
  constexpr int kPoints = 256;
  const double hi = std::max(1e6, 10.0 * t0);
  std::vector<double> grid(kPoints);
  const double l0 = std::log(t0);
  const double l1 = std::log(hi);
  for (int i = 0; i < kPoints; ++i) {
    grid[static_cast<std::size_t>(i)] = std::exp(l0 + (l1 - l0) * i / (kPoints - 1));
  }
  grid.front() = t0;
  grid.back() = hi;
  return grid;
}

namespace {

void validate_grid(const CoefficientSchedule& s, const std::vector<double>& grid) {
  if (grid.size() < 64) throw ArgumentError("audit grid needs at least 64 points");
  if (grid.front() < s.t0()) throw ArgumentError("audit grid starts below t0");
  const double ratio = grid[1] / grid[0];
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (!(grid[i + 1] > grid[i])) throw ArgumentError("audit grid must be strictly increasing");
    const double r = grid[i + 1] / grid[i];
    if (std::abs(r - ratio) > 1e-6 * ratio) throw ArgumentError("audit grid must be log-spaced");
  }
}

struct Forms {
  PowerSum gamma, dgamma, beta, dbeta, eps, deps;
};

std::optional<Forms> forms_of(const CoefficientSchedule& s) {
  const auto& g = s.gamma().closed_form();
  const auto& b = s.beta().closed_form();
  const auto& e = s.eps().closed_form();
  if (!g || !b || !e) return std::nullopt;
  return Forms{*g, g->derivative(), *b, b->derivative(), *e, e->derivative()};
}

}  // namespace

ConditionReport audit_conditions(const CoefficientSchedule& s, const std::vector<double>& grid) {
  validate_grid(s, grid);
  const double theta = s.theta();
  ConditionReport r;
  r.grid_points = grid.size();
  r.grid_lo = grid.front();
  r.grid_hi = grid.back();

  const PowerSum t_ = PowerSum::monomial(1.0, 1.0);
  const std::optional<Forms> f = forms_of(s);
  std::optional<PowerSum> c6, c7, c8;
  if (f) {
    c6 = f->beta * (2.0 * theta - 1.0) + t_ * f->dbeta * theta;
    c7 = f->gamma + t_ * f->dgamma - t_ * f->beta * f->eps;
    c8 = t_ * f->gamma * theta + PowerSum::constant(-theta - 1.0);
    r.cond6_exact = c6->sup_from(s.t0());
    r.cond7_exact = c7->sup_from(s.t0());
    r.cond8_exact = c8->inf_from(s.t0());
  }

  r.cond6_margin = -kInf;
  r.cond7_margin = -kInf;
  r.cond8_margin = kInf;
  bool eps_down = true;
  for (double t : grid) {
    double m6, m7, m8;
    if (f) {
      m6 = (*c6)(t);
      m7 = (*c7)(t);
      m8 = (*c8)(t);
    } else {
      const ScheduleValues v = eval_schedule(s, t);
      m6 = (2.0 * theta - 1.0) * v.beta + theta * t * v.dbeta;
      m7 = v.gamma + t * v.dgamma - t * v.beta * v.eps;
      m8 = theta * t * v.gamma - theta - 1.0;
    }
    r.cond6_margin = std::max(r.cond6_margin, m6);
    r.cond7_margin = std::max(r.cond7_margin, m7);
    r.cond8_margin = std::min(r.cond8_margin, m8);
    if (s.eps().derivative(t) > 0.0) eps_down = false;
  }

  r.cond6_pass = r.cond6_exact ? *r.cond6_exact <= 0.0 : r.cond6_margin <= 0.0;
  r.cond7_pass = r.cond7_exact ? *r.cond7_exact <= 0.0 : r.cond7_margin <= 0.0;
  r.cond8_pass = r.cond8_exact ? *r.cond8_exact >= 0.0 : r.cond8_margin >= 0.0;

  if (const auto& e = s.eps().closed_form()) {
    const auto hi = e->derivative().sup_from(s.t0());
    r.eps_nonincreasing = hi ? *hi <= 0.0 : eps_down;
  } else {
    r.eps_nonincreasing = eps_down;
  }

  if (f) {
    const PowerSum fast = t_ * f->beta * f->eps;
    const PowerSum slow = f->beta * f->eps * PowerSum::monomial(1.0, -1.0);
    const double fi = fast.integral_to_infinity(s.t0());
    const double si = slow.integral_to_infinity(s.t0());
    r.fast_regime = finite(fi) ? Integrability::kFinite : Integrability::kInfinite;
    r.slow_regime = finite(si) ? Integrability::kFinite : Integrability::kInfinite;
    r.fast_integral = fi;
    r.slow_integral = si;
    r.scaled_eps_unbounded = (t_ * t_ * f->beta * f->eps).limit_at_infinity() == kInf;
    r.beta_bounded_below = f->beta.limit_at_infinity() > 0.0;
  }
  return r;
}

ConditionReport audit_conditions(const CoefficientSchedule& s) {
  return audit_conditions(s, default_audit_grid(s.t0()));
}

std::optional<double> closed_form_fast_integral(const CoefficientSchedule& s) {
  const auto f = forms_of(s);
  if (!f) return std::nullopt;
  return (PowerSum::monomial(1.0, 1.0) * f->beta * f->eps).integral_to_infinity(s.t0());
}

std::optional<double> closed_form_fast_integral(const CoefficientSchedule& s, double t) {
  const auto f = forms_of(s);
  if (!f) return std::nullopt;
  if (t < s.t0()) throw DomainError("integral upper limit below t0", t);
  return (PowerSum::monomial(1.0, 1.0) * f->beta * f->eps).integral(s.t0(), t);
}

std::string format_condition_report(const ConditionReport& r) {
  std::ostringstream os;
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string("n/a"); };
  auto flag = [](bool b) { return b ? "pass" : "FAIL"; };
  auto tri = [](const std::optional<bool>& b) { return b ? (*b ? "yes" : "no") : "unknown"; };
  os << "grid = " << r.grid_points << " log-spaced points on [" << format_real(r.grid_lo) << ", "
     << format_real(r.grid_hi) << "]\n";
  os << "cond6 (2*theta-1)*beta + theta*t*beta' <= 0: grid_max = " << format_real(r.cond6_margin)
     << ", exact_sup = " << opt(r.cond6_exact) << ", " << flag(r.cond6_pass) << "\n";
  os << "cond7 gamma + t*gamma' - t*beta*eps <= 0: grid_max = " << format_real(r.cond7_margin)
     << ", exact_sup = " << opt(r.cond7_exact) << ", " << flag(r.cond7_pass) << "\n";
  os << "cond8 theta*t*gamma - theta - 1 >= 0: grid_min = " << format_real(r.cond8_margin)
     << ", exact_inf = " << opt(r.cond8_exact) << ", " << flag(r.cond8_pass) << "\n";
  os << "eps non-increasing: " << (r.eps_nonincreasing ? "yes" : "no") << "\n";
  os << "int t*beta*eps: " << to_string(r.fast_regime) << ", value = " << opt(r.fast_integral)
     << "\n";
  os << "int beta*eps/t: " << to_string(r.slow_regime) << ", value = " << opt(r.slow_integral)
     << "\n";
  os << "t^2*beta*eps -> inf: " << tri(r.scaled_eps_unbounded) << "\n";
  os << "liminf beta > 0: " << tri(r.beta_bounded_below) << "\n";
  os << "all conditions: " << (r.all_pass() ? "pass" : "FAIL") << "\n";
  return os.str();
}

}  // namespace mixdyn
