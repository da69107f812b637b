#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <variant>

#include <Eigen/Dense>

namespace mixdyn {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// f(x) = 1/2 x^T M x + q^T x with M symmetric positive semi-definite.
class QuadraticObjective {
 public:
  /// Throws ArgumentError if M is not square, not symmetric to 1e-12
  /// relative, has an eigenvalue below -1e-8 * ||M||, or q has the wrong length.
  QuadraticObjective(MatrixXd hessian, VectorXd linear);

  const MatrixXd& hessian() const noexcept { return hessian_; }
  const VectorXd& linear() const noexcept { return linear_; }
  Index dim() const noexcept { return linear_.size(); }

  double value(const VectorXd& x) const;
  VectorXd gradient(const VectorXd& x) const;

 private:
  MatrixXd hessian_;
  VectorXd linear_;
};

/// User-supplied convex objective. The gradient must be Lipschitz with the
/// declared constant.
struct SmoothObjective {
  Index dim = 0;
  std::function<double(const VectorXd&)> value;
  std::function<VectorXd(const VectorXd&)> gradient;
  double lipschitz = 0.0;
};

using Objective = std::variant<QuadraticObjective, SmoothObjective>;

/// min f(x) subject to Ax = b, with penalty sigma for the augmented Lagrangian.
/// Immutable after construction.
class ProblemInstance {
 public:
  /// Throws ArgumentError on shape mismatch, sigma < 0, or an infeasible
  /// constraint pair (least-squares residual above 1e-8 * (1 + ||b||)).
  ProblemInstance(Objective objective, MatrixXd constraint_matrix, VectorXd constraint_rhs,
                  double penalty);

  Index dim_primal() const noexcept { return a_.cols(); }
  Index dim_dual() const noexcept { return a_.rows(); }
  const MatrixXd& constraint_matrix() const noexcept { return a_; }
  const VectorXd& constraint_rhs() const noexcept { return b_; }
  double penalty() const noexcept { return sigma_; }
  const Objective& objective() const noexcept { return objective_; }

  bool is_quadratic() const noexcept;
  /// Throws ArgumentError for non-quadratic objectives.
  const QuadraticObjective& quadratic() const;

  double objective_value(const VectorXd& x) const;
  VectorXd objective_gradient(const VectorXd& x) const;
  /// Lipschitz constant of the objective gradient (largest eigenvalue of M for
  /// quadratics, the declared value otherwise).
  double lipschitz() const noexcept { return lipschitz_; }

 private:
  Objective objective_;
  MatrixXd a_;
  VectorXd b_;
  double sigma_;
  double lipschitz_;
};

struct SaddlePoint {
  VectorXd primal;
  VectorXd dual;
  /// The KKT matrix was singular and the minimum-norm least-squares solution
  /// was used instead.
  bool from_least_squares = false;
};

struct MinimalNormSolution {
  VectorXd primal;
  VectorXd dual;
  /// ||A^T dual + grad f(primal)||, the residual of the dual least-squares fit.
  double dual_residual = 0.0;
  /// True when obtained by continuation along the regularized path.
  bool approximate = false;
};

inline constexpr double kKktTolerance = 1e-8;

/// f(x) + <lam, Ax - b> + sigma/2 ||Ax - b||^2.
double augmented_lagrangian(const ProblemInstance& p, const VectorXd& x, const VectorXd& lam);

/// grad f(x) + A^T lam + sigma A^T (Ax - b).
VectorXd grad_x_lagrangian(const ProblemInstance& p, const VectorXd& x, const VectorXd& lam);

/// L(x, lam*) - L(x*, lam*). Quadratics use an expansion around x* that does
/// not cancel two large numbers.
double lagrangian_gap(const ProblemInstance& p, const VectorXd& x, const SaddlePoint& sp);

/// Solves M x + q + A^T lam = 0, A x = b. A singular KKT matrix falls back to
/// the minimum-norm least-squares solution; an inconsistent one throws
/// SolverError naming the rank defect.
SaddlePoint kkt_saddle_point(const QuadraticObjective& q, const MatrixXd& a, const VectorXd& b);
SaddlePoint kkt_saddle_point(const ProblemInstance& p);

/// Element of minimal norm in the primal solution set. For quadratics the set
/// is x* + null([M; A]) and the answer is exact; otherwise it is approximated
/// by continuation along the regularized path.
MinimalNormSolution minimal_norm_solution(const ProblemInstance& p, const SaddlePoint& hint);

/// Largest eigenvalue of M by power iteration.
double lipschitz_constant(const QuadraticObjective& q);

struct RegularizedSolve {
  VectorXd x;
  bool converged = false;
  long iterations = 0;
};

/// Minimizer of L(., lam) + eps/2 ||.||^2. Direct LDLT solve for quadratics;
/// gradient descent with step 1/(L + sigma ||A^T A|| + eps) otherwise.
RegularizedSolve solve_regularized(const ProblemInstance& p, const VectorXd& lam, double eps,
                                   const std::optional<VectorXd>& start = std::nullopt,
                                   double tol = 1e-10, long max_iterations = 200000);

/// Reads a quadratic problem from a `key = value` file with keys
/// n, m, M (row-major), q, A (row-major), b, sigma.
ProblemInstance read_problem_file(const std::filesystem::path& path);

}  // namespace mixdyn
