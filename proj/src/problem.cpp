#include "mixdyn/problem.hpp"

#include <cmath>
#include <set>
#include <string>

#include <Eigen/Eigenvalues>

#include "mixdyn/errors.hpp"
#include "mixdyn/keyvalue.hpp"
#include "mixdyn/linalg.hpp"

namespace mixdyn {

namespace {

void require_size(Index actual, Index expected, const char* what) {
  if (actual != expected) {
    throw ArgumentError(std::string(what) + ": expected length " + std::to_string(expected) +
                        ", got " + std::to_string(actual));
  }
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

QuadraticObjective::QuadraticObjective(MatrixXd hessian, VectorXd linear)
    : hessian_(std::move(hessian)), linear_(std::move(linear)) {
  if (hessian_.rows() != hessian_.cols()) {
    throw ArgumentError("hessian must be square");
  }
  require_size(linear_.size(), hessian_.rows(), "linear term");
  if (!hessian_.allFinite() || !linear_.allFinite()) {
    throw ArgumentError("quadratic objective has non-finite entries");
  }
  const double scale = hessian_.cwiseAbs().maxCoeff();
  if (hessian_.size() > 0 &&
      (hessian_ - hessian_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ArgumentError("hessian is not symmetric");
  }
  if (hessian_.size() > 0 && scale > 0.0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(hessian_, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double norm = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (lo < -1e-8 * norm) {
      throw ArgumentError("hessian is not positive semi-definite (smallest eigenvalue " +
                          std::to_string(lo) + ")");
    }
  }
}

double QuadraticObjective::value(const VectorXd& x) const {
  require_size(x.size(), dim(), "x");
  return 0.5 * x.dot(hessian_ * x) + linear_.dot(x);
}

VectorXd QuadraticObjective::gradient(const VectorXd& x) const {
  require_size(x.size(), dim(), "x");
  return hessian_ * x + linear_;
}

ProblemInstance::ProblemInstance(Objective objective, MatrixXd constraint_matrix,
                                 VectorXd constraint_rhs, double penalty)
    : objective_(std::move(objective)),
      a_(std::move(constraint_matrix)),
      b_(std::move(constraint_rhs)),
      sigma_(penalty),
      lipschitz_(0.0) {
  if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) {
    throw ArgumentError("penalty sigma must be a finite value >= 0");
  }
  require_size(b_.size(), a_.rows(), "constraint rhs");
  if (!a_.allFinite() || !b_.allFinite()) {
    throw ArgumentError("constraint data has non-finite entries");
  }
  std::visit(Overloaded{[&](const QuadraticObjective& q) {
                          require_size(q.dim(), a_.cols(), "objective dimension");
                          lipschitz_ = lipschitz_constant(q);
                        },
                        [&](const SmoothObjective& s) {
                          require_size(s.dim, a_.cols(), "objective dimension");
                          if (!s.value || !s.gradient) {
                            throw ArgumentError("smooth objective needs value and gradient");
                          }
                          if (!(s.lipschitz > 0.0) || !std::isfinite(s.lipschitz)) {
                            throw ArgumentError("smooth objective needs a Lipschitz estimate > 0");
                          }
                          lipschitz_ = s.lipschitz;
                        }},
             objective_);
  if (a_.rows() > 0) {
    const VectorXd x = a_.completeOrthogonalDecomposition().solve(b_);
    const double residual = (a_ * x - b_).norm();
    if (residual > 1e-8 * (1.0 + b_.norm())) {
      throw ArgumentError("constraints Ax = b are infeasible (least-squares residual " +
                          std::to_string(residual) + ")");
    }
  }
}

bool ProblemInstance::is_quadratic() const noexcept {
  return std::holds_alternative<QuadraticObjective>(objective_);
}

const QuadraticObjective& ProblemInstance::quadratic() const {
  if (const auto* q = std::get_if<QuadraticObjective>(&objective_)) return *q;
  throw ArgumentError("problem objective is not quadratic");
}

double ProblemInstance::objective_value(const VectorXd& x) const {
  require_size(x.size(), dim_primal(), "x");
  return std::visit(Overloaded{[&](const QuadraticObjective& q) { return q.value(x); },
                               [&](const SmoothObjective& s) { return s.value(x); }},
                    objective_);
}

VectorXd ProblemInstance::objective_gradient(const VectorXd& x) const {
  require_size(x.size(), dim_primal(), "x");
  return std::visit(Overloaded{[&](const QuadraticObjective& q) { return q.gradient(x); },
                               [&](const SmoothObjective& s) { return VectorXd(s.gradient(x)); }},
                    objective_);
}

double augmented_lagrangian(const ProblemInstance& p, const VectorXd& x, const VectorXd& lam) {
  require_size(x.size(), p.dim_primal(), "x");
  require_size(lam.size(), p.dim_dual(), "lambda");
  const VectorXd r = p.constraint_matrix() * x - p.constraint_rhs();
  return p.objective_value(x) + lam.dot(r) + 0.5 * p.penalty() * r.squaredNorm();
}

VectorXd grad_x_lagrangian(const ProblemInstance& p, const VectorXd& x, const VectorXd& lam) {
  require_size(x.size(), p.dim_primal(), "x");
  require_size(lam.size(), p.dim_dual(), "lambda");
  const MatrixXd& a = p.constraint_matrix();
  const VectorXd r = a * x - p.constraint_rhs();
  return p.objective_gradient(x) + a.transpose() * (lam + p.penalty() * r);
}

double lagrangian_gap(const ProblemInstance& p, const VectorXd& x, const SaddlePoint& sp) {
  require_size(x.size(), p.dim_primal(), "x");
  if (!p.is_quadratic()) {
    return augmented_lagrangian(p, x, sp.dual) - augmented_lagrangian(p, sp.primal, sp.dual);
  }
  const QuadraticObjective& q = p.quadratic();
  const MatrixXd& a = p.constraint_matrix();
  const VectorXd d = x - sp.primal;
  const VectorXd ad = a * d;
  const VectorXd r_star = a * sp.primal - p.constraint_rhs();
  const VectorXd g_star = q.gradient(sp.primal) + a.transpose() * sp.dual;
  return g_star.dot(d) + 0.5 * d.dot(q.hessian() * d) +
         0.5 * p.penalty() * (ad.squaredNorm() + 2.0 * r_star.dot(ad));
}

SaddlePoint kkt_saddle_point(const QuadraticObjective& q, const MatrixXd& a, const VectorXd& b) {
  const Index n = q.dim();
  const Index m = a.rows();
  require_size(a.cols(), n, "constraint matrix columns");
  require_size(b.size(), m, "constraint rhs");

  MatrixXd kkt = MatrixXd::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = q.hessian();
  kkt.topRightCorner(n, m) = a.transpose();
  kkt.bottomLeftCorner(m, n) = a;
  VectorXd rhs(n + m);
  rhs << -q.linear(), b;

  SaddlePoint sp;
  VectorXd z;
  Eigen::FullPivLU<MatrixXd> lu(kkt);
  if (lu.isInvertible()) {
    z = lu.solve(rhs);
    // Two rounds of iterative refinement.
    for (int k = 0; k < 2; ++k) z += lu.solve(rhs - kkt * z);
  } else {
    const Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(kkt);
    z = cod.solve(rhs);
    for (int k = 0; k < 2; ++k) z += cod.solve(rhs - kkt * z);
    sp.from_least_squares = true;
  }
  const double scale = 1.0 + q.linear().norm() + b.norm();
  const double residual = (kkt * z - rhs).norm();
  if (!z.allFinite() || residual > kKktTolerance * scale) {
    throw SolverError("KKT system is singular and inconsistent: rank " +
                      std::to_string(lu.rank()) + " of " + std::to_string(n + m) +
                      ", residual " + std::to_string(residual));
  }
  sp.primal = z.head(n);
  sp.dual = z.tail(m);
  return sp;
}

SaddlePoint kkt_saddle_point(const ProblemInstance& p) {
  return kkt_saddle_point(p.quadratic(), p.constraint_matrix(), p.constraint_rhs());
}

MinimalNormSolution minimal_norm_solution(const ProblemInstance& p, const SaddlePoint& hint) {
  require_size(hint.primal.size(), p.dim_primal(), "hint primal");
  require_size(hint.dual.size(), p.dim_dual(), "hint dual");
  const MatrixXd& a = p.constraint_matrix();
  MinimalNormSolution out;

  if (p.is_quadratic()) {
    const QuadraticObjective& q = p.quadratic();
    MatrixXd stacked(q.dim() + a.rows(), q.dim());
    stacked << q.hessian(), a;
    const MatrixXd basis = null_space_basis(stacked);
    out.primal = hint.primal - basis * (basis.transpose() * hint.primal);
    const VectorXd target = -q.gradient(out.primal);
    if (a.rows() > 0) {
      out.dual = a.transpose().completeOrthogonalDecomposition().solve(target);
    } else {
      out.dual = VectorXd::Zero(0);
    }
    out.dual_residual = (a.transpose() * out.dual - target).norm();
    return out;
  }

  std::optional<VectorXd> start = hint.primal;
  VectorXd x = hint.primal;
  for (int k = 1; k <= 8; ++k) {
    const RegularizedSolve step = solve_regularized(p, hint.dual, std::pow(10.0, -k), start);
    x = step.x;
    start = x;
  }
  out.primal = x;
  out.dual = hint.dual;
  out.dual_residual = (p.objective_gradient(x) + a.transpose() * hint.dual).norm();
  out.approximate = true;
  return out;
}

double lipschitz_constant(const QuadraticObjective& q) {
  return largest_eigenvalue_psd(q.hessian());
}

RegularizedSolve solve_regularized(const ProblemInstance& p, const VectorXd& lam, double eps,
                                   const std::optional<VectorXd>& start, double tol,
                                   long max_iterations) {
  if (!(eps > 0.0)) {
    throw ArgumentError("regularization weight must be > 0");
  }
  require_size(lam.size(), p.dim_dual(), "lambda");
  const MatrixXd& a = p.constraint_matrix();
  const double sigma = p.penalty();
  const Index n = p.dim_primal();
  RegularizedSolve out;

  if (p.is_quadratic()) {
    const QuadraticObjective& q = p.quadratic();
    MatrixXd h = q.hessian() + sigma * a.transpose() * a;
    const VectorXd rhs = -q.linear() - a.transpose() * lam + sigma * a.transpose() * p.constraint_rhs();
    // Spectral solve: accurate in the range of h even when eps is far below
    // its smallest nonzero eigenvalue, where a factorization of h + eps I
    // loses digits.
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(h);
    const VectorXd coef = eig.eigenvectors().transpose() * rhs;
    const VectorXd shifted = eig.eigenvalues().cwiseMax(0.0).array() + eps;
    out.x = eig.eigenvectors() * coef.cwiseQuotient(shifted);
    h.diagonal().array() += eps;
    const double residual = (h * out.x - rhs).norm();
    out.converged = out.x.allFinite() && residual <= tol * (1.0 + rhs.norm());
    out.iterations = 1;
    if (!out.converged) {
      throw SolverError("regularized solve residual " + std::to_string(residual));
    }
    return out;
  }

  const double ata = largest_eigenvalue_psd(a.transpose() * a);
  const double step = 1.0 / (p.lipschitz() + sigma * ata + eps);
  VectorXd x = start.value_or(VectorXd::Zero(n));
  require_size(x.size(), n, "start");
  for (long it = 0; it < max_iterations; ++it) {
    const VectorXd g = grad_x_lagrangian(p, x, lam) + eps * x;
    if (g.norm() <= tol) {
      out.converged = true;
      out.iterations = it;
      break;
    }
    x -= step * g;
    out.iterations = it + 1;
  }
  out.x = std::move(x);
  return out;
}

ProblemInstance read_problem_file(const std::filesystem::path& path) {
  const KeyValueMap kv = read_key_value_file(path);
  static const std::set<std::string> known{"n", "m", "M", "q", "A", "b", "sigma"};
  for (const auto& [key, value] : kv) {
    if (!known.count(key)) throw ConfigError(key, "unknown key in problem file");
  }
  auto require = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError(key, "missing from problem file");
    return it->second;
  };
  const std::int64_t n = parse_integer("n", require("n"));
  const std::int64_t m = parse_integer("m", require("m"));
  if (n <= 0 || m < 0) throw ConfigError("n", "dimensions must satisfy n > 0, m >= 0");

  auto read_matrix = [&](const std::string& key, std::int64_t rows, std::int64_t cols) {
    const std::vector<double> v = parse_real_list(key, require(key));
    if (static_cast<std::int64_t>(v.size()) != rows * cols) {
      throw ConfigError(key, "expected " + std::to_string(rows * cols) + " entries, got " +
                                 std::to_string(v.size()));
    }
    MatrixXd out(rows, cols);
    for (std::int64_t i = 0; i < rows; ++i) {
      for (std::int64_t j = 0; j < cols; ++j) out(i, j) = v[static_cast<std::size_t>(i * cols + j)];
    }
    return out;
  };
  const MatrixXd hess = read_matrix("M", n, n);
  const VectorXd lin = read_matrix("q", n, 1);
  const MatrixXd a = m > 0 ? read_matrix("A", m, n) : MatrixXd(0, n);
  const VectorXd b = m > 0 ? VectorXd(read_matrix("b", m, 1)) : VectorXd(0);
  double sigma = 1.0;
  if (const auto it = kv.find("sigma"); it != kv.end()) sigma = parse_real("sigma", it->second);
  try {
    return ProblemInstance(QuadraticObjective(hess, lin), a, b, sigma);
  } catch (const ArgumentError& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
}

}  // namespace mixdyn
