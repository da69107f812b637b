#pragma once

#include <Eigen/Dense>

#include "mixdyn/problem.hpp"
#include "mixdyn/schedule.hpp"

namespace mixdyn {

/// Phase-space point (x, lambda, v) with v = dx/dt.
struct SystemState {
  VectorXd x;
  VectorXd lam;
  VectorXd v;
};

/// Concatenation (x, lambda, v).
VectorXd pack(const SystemState& y);
/// Inverse of pack. Throws ArgumentError on a length other than 2n + m or on
/// non-finite entries.
SystemState unpack(const VectorXd& flat, Index n, Index m);

struct DynamicsConfig {
  ProblemInstance problem;
  CoefficientSchedule schedule;
  /// When false the eps(t) x term is dropped from the primal equation.
  bool tikhonov_enabled = true;
};

/// First-order form of the mixed-order primal-dual system:
///   x'      = v
///   lambda' = t beta (A (x + theta t v) - b)
///   v'      = -gamma v - beta (grad f(x) + A^T lambda + sigma A^T (A x - b) + eps x)
/// Evaluation is const and reentrant. For quadratic objectives it does not
/// allocate once `dy` has the right size.
class PrimalDualField {
 public:
  explicit PrimalDualField(DynamicsConfig cfg);

  /// Throws IntegrationError(kNonFinite) if the input or output is not finite,
  /// DomainError for t < t0.
  void operator()(double t, const VectorXd& y, VectorXd& dy) const;
  SystemState operator()(double t, const SystemState& y) const;

  /// 1 + C beta + gamma + ||A|| theta t^2 beta + ||A|| t beta + beta eps with
  /// C = L + sigma ||A^T A|| + ||A||. Bounds the Lipschitz constant of the
  /// field in Y at time t.
  double local_lipschitz_bound(double t) const;

  const DynamicsConfig& config() const noexcept { return cfg_; }
  Index dim_primal() const noexcept { return n_; }
  Index dim_dual() const noexcept { return m_; }
  Index dim_state() const noexcept { return 2 * n_ + m_; }
  double constraint_norm() const noexcept { return a_norm_; }
  double gram_norm() const noexcept { return ata_norm_; }

 private:
  DynamicsConfig cfg_;
  Index n_;
  Index m_;
  double a_norm_;
  double ata_norm_;
  bool quadratic_;
  MatrixXd h_;       // M + sigma A^T A
  VectorXd offset_;  // q - sigma A^T b
};

}  // namespace mixdyn
