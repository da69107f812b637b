#include "mixdyn/dynamics.hpp"

#include <string>

#include "mixdyn/errors.hpp"
#include "mixdyn/keyvalue.hpp"
#include "mixdyn/linalg.hpp"

namespace mixdyn {

VectorXd pack(const SystemState& y) {
  VectorXd flat(y.x.size() + y.lam.size() + y.v.size());
  flat << y.x, y.lam, y.v;
  return flat;
}

SystemState unpack(const VectorXd& flat, Index n, Index m) {
  if (flat.size() != 2 * n + m) {
    throw ArgumentError("state vector has length " + std::to_string(flat.size()) + ", expected " +
                        std::to_string(2 * n + m));
  }
  if (!flat.allFinite()) throw ArgumentError("state vector has non-finite entries");
  return {flat.head(n), flat.segment(n, m), flat.tail(n)};
}

PrimalDualField::PrimalDualField(DynamicsConfig cfg)
    : cfg_(std::move(cfg)),
      n_(cfg_.problem.dim_primal()),
      m_(cfg_.problem.dim_dual()),
      a_norm_(0.0),
      ata_norm_(0.0),
      quadratic_(cfg_.problem.is_quadratic()) {
  const MatrixXd& a = cfg_.problem.constraint_matrix();
  if (a.size() > 0) {
    ata_norm_ = largest_eigenvalue_psd(a.transpose() * a);
    a_norm_ = std::sqrt(ata_norm_);
  }
  const double sigma = cfg_.problem.penalty();
  if (quadratic_) {
    const QuadraticObjective& q = cfg_.problem.quadratic();
    h_ = q.hessian() + sigma * a.transpose() * a;
    offset_ = q.linear() - sigma * a.transpose() * cfg_.problem.constraint_rhs();
  }
}

void PrimalDualField::operator()(double t, const VectorXd& y, VectorXd& dy) const {
  if (y.size() != dim_state()) {
    throw ArgumentError("state vector has length " + std::to_string(y.size()) + ", expected " +
                        std::to_string(dim_state()));
  }
  if (!y.allFinite()) {
    throw IntegrationError(IntegrationFailureKind::kNonFinite, t,
                           "non-finite state at t = " + format_real(t));
  }
  const ScheduleValues c = eval_schedule(cfg_.schedule, t);
  const double theta = cfg_.schedule.theta();
  const MatrixXd& a = cfg_.problem.constraint_matrix();
  const auto x = y.head(n_);
  const auto lam = y.segment(n_, m_);
  const auto v = y.tail(n_);

  dy.resize(dim_state());
  auto dx = dy.head(n_);
  auto dlam = dy.segment(n_, m_);
  auto dv = dy.tail(n_);

  dx = v;

  dlam.noalias() = a * x;
  dlam.noalias() += (theta * t) * (a * v);
  dlam -= cfg_.problem.constraint_rhs();
  dlam *= t * c.beta;

  if (quadratic_) {
    dv.noalias() = h_ * x;
    dv += offset_;
  } else {
    const VectorXd xv = x;
    dv = cfg_.problem.objective_gradient(xv);
    const VectorXd r = a * xv - cfg_.problem.constraint_rhs();
    dv.noalias() += cfg_.problem.penalty() * (a.transpose() * r);
  }
  dv.noalias() += a.transpose() * lam;
  if (cfg_.tikhonov_enabled) dv += c.eps * x;
  dv *= -c.beta;
  dv -= c.gamma * v;

  if (!dy.allFinite()) {
    throw IntegrationError(IntegrationFailureKind::kNonFinite, t,
                           "non-finite field value at t = " + format_real(t));
  }
}

SystemState PrimalDualField::operator()(double t, const SystemState& y) const {
  VectorXd dy;
  (*this)(t, pack(y), dy);
  return unpack(dy, n_, m_);
}

double PrimalDualField::local_lipschitz_bound(double t) const {
  const ScheduleValues c = eval_schedule(cfg_.schedule, t);
  const double theta = cfg_.schedule.theta();
  const double big_c =
      cfg_.problem.lipschitz() + cfg_.problem.penalty() * ata_norm_ + a_norm_;
  const double eps = cfg_.tikhonov_enabled ? c.eps : 0.0;
  return 1.0 + big_c * c.beta + c.gamma + a_norm_ * theta * t * t * c.beta +
         a_norm_ * t * c.beta + c.beta * eps;
}

}  // namespace mixdyn
