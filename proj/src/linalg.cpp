#include "mixdyn/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "mixdyn/errors.hpp"

namespace mixdyn {

namespace {

// Fixed, non-symmetric start vector so results do not depend on any RNG and
// the start is not orthogonal to the dominant eigenvector of structured inputs.
Eigen::VectorXd start_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = 1.0 + 0.5 * std::sin(1.0 + 3.7 * static_cast<double>(i));
  }
  return v.normalized();
}

}  // namespace

double largest_eigenvalue_psd(const Eigen::MatrixXd& m, const PowerIterationOptions& opts) {
  if (m.rows() != m.cols()) {
    throw ArgumentError("largest_eigenvalue_psd: matrix must be square");
  }
  const Eigen::Index n = m.rows();
  if (n == 0 || m.lpNorm<Eigen::Infinity>() == 0.0) {
    return 0.0;
  }

  Eigen::VectorXd v = start_vector(n);
  Eigen::VectorXd w(n);
  double rayleigh = 0.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    w.noalias() = m * v;
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) {
      // v landed in the null space; the start vector has a component along
      // the dominant direction, so this only happens for M = 0.
      return 0.0;
    }
    v = w / norm;
    if (it > 0 && std::abs(next - rayleigh) <= opts.rel_tol * std::abs(next)) {
      return next;
    }
    rayleigh = next;
  }
  throw ConvergenceError("power iteration did not converge", rayleigh);
}

double spectral_norm(const Eigen::MatrixXd& a, const PowerIterationOptions& opts) {
  if (a.size() == 0) {
    return 0.0;
  }
  const Eigen::MatrixXd gram = a.transpose() * a;
  return std::sqrt(std::max(0.0, largest_eigenvalue_psd(gram, opts)));
}

Eigen::MatrixXd null_space_basis(const Eigen::MatrixXd& a, double rel_tol) {
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) {
    return Eigen::MatrixXd::Identity(n, n);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() > 0 ? s[0] : 0.0;
  const double cut = rel_tol * static_cast<double>(std::max(a.rows(), a.cols())) * smax;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > cut) ++rank;
  }
  return svd.matrixV().rightCols(n - rank);
}

Eigen::Index numerical_rank(const Eigen::MatrixXd& a, double rel_tol) {
  return a.cols() - null_space_basis(a, rel_tol).cols();
}

}  // namespace mixdyn
