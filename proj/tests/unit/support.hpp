#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "mixdyn/problem.hpp"
#include "mixdyn/rng.hpp"
#include "mixdyn/schedule.hpp"

namespace mixdyn::test {

// f(x) = (x1 + x2 + x3)^2, A = (1, -1, 1), b = 0.
inline ProblemInstance toy_problem(double sigma = 1.0) {
  const Eigen::Vector3d u(1.0, 1.0, 1.0);
  Eigen::MatrixXd a(1, 3);
  a << 1.0, -1.0, 1.0;
  return ProblemInstance(QuadraticObjective(2.0 * u * u.transpose(), Eigen::VectorXd::Zero(3)), a,
                         Eigen::VectorXd::Zero(1), sigma);
}

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Eigen::VectorXd random_vector(SplitMix64& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

inline Eigen::MatrixXd random_matrix(SplitMix64& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  }
  return m;
}

// Convex QP whose Hessian has rank `hess_rank`; feasible because b = A x0.
inline ProblemInstance random_qp(std::uint64_t seed, Eigen::Index m, Eigen::Index n,
                                 Eigen::Index hess_rank, double sigma = 1.0) {
  SplitMix64 rng(seed);
  const Eigen::MatrixXd r = random_matrix(rng, hess_rank, n);
  const Eigen::VectorXd q = r.transpose() * random_vector(rng, hess_rank);
  const Eigen::MatrixXd a = random_matrix(rng, m, n);
  const Eigen::VectorXd b = a * random_vector(rng, n);
  Eigen::MatrixXd hess = r.transpose() * r;
  hess = 0.5 * (hess + hess.transpose()).eval();
  return ProblemInstance(QuadraticObjective(hess, q), a, b, sigma);
}

// gamma = 13/t, beta = t, eps = 3/t^1.1, theta = 1/12, t0 = 1.
inline CoefficientSchedule fixture_schedule() {
  return CoefficientSchedule(1.0 / 12.0, DampingFamily::power_quotient(13.0),
                             ScalingFamily::power(1.0), TikhonovFamily::power_decay(3.0, 1.1),
                             1.0);
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace mixdyn::test
