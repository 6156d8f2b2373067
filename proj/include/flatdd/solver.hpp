#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace flatdd::solver {

/// min ||A alpha - b||^2 + lambda ||alpha||^2.
struct RidgeProblem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  double lambda = 0.0;
};

/// Solves (A^T A + lambda I) alpha = A^T b.
///
/// lambda == 0 requires A^T A to be numerically invertible; otherwise a
/// SingularError suggests lambda > 0.
Eigen::VectorXd ridge_solve(const RidgeProblem& prob);

/// Eigen-decomposed (G + lambda I) for repeated solves with a fixed Gram
/// matrix G = A^T A.
class RidgeFactorization {
 public:
  RidgeFactorization(const Eigen::MatrixXd& gram, double lambda);

  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  [[nodiscard]] double condition_number() const { return condition_; }
  [[nodiscard]] Eigen::Index size() const { return eigenvalues_.size(); }

 private:
  Eigen::MatrixXd eigenvectors_;
  Eigen::VectorXd eigenvalues_;
  double condition_ = 1.0;
};

/// Condition numbers above this are reported by the iterative solver.
inline constexpr double kConditionWarning = 1e12;

struct SolverControls {
  int max_iter = 500;
  double rel_tol = 1e-8;
  double damping = 1.0;
};

/// rho(alpha) = A alpha - b(alpha): a fixed data block times alpha minus a
/// right-hand side that may depend on alpha.
struct NonlinearResidualProblem {
  Eigen::MatrixXd block;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> rhs;
  double lambda = 0.0;
  SolverControls controls;
};

/// The same kind of problem expressed only through inner products, for
/// residuals that live in a feature space too large to materialize.
///
/// gram is A^T A, projected_rhs(alpha) returns A^T b(alpha), and objective
/// evaluates ||A alpha - b(alpha)||^2 + lambda ||alpha||^2.
struct GramProblem {
  Eigen::MatrixXd gram;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> projected_rhs;
  std::function<double(const Eigen::VectorXd&)> objective;
  double lambda = 0.0;
  SolverControls controls;
};

enum class StopReason {
  converged,     // relative change below rel_tol
  max_iter,      // iteration budget exhausted
  guard_limit,   // 20 damping halvings failed to decrease the objective
};

std::string stop_reason_name(StopReason r);

struct NonlinearResult {
  Eigen::VectorXd alpha;
  double objective = 0.0;
  double initial_objective = 0.0;
  int iterations = 0;
  bool converged = false;
  StopReason reason = StopReason::max_iter;
  double condition_number = 1.0;
};

double objective(const NonlinearResidualProblem& prob, const Eigen::VectorXd& alpha);

/// Damped frozen-point iteration.
///
/// At alpha_t the alpha-dependent right-hand side is frozen, the resulting
/// ridge problem is solved for alpha*, and alpha_{t+1} = alpha_t +
/// damping (alpha* - alpha_t). A step that increases the objective is retried
/// with the damping halved, at most 20 times. The returned objective never
/// exceeds the objective at alpha0.
///
/// The residual overload freezes b to first order (value plus a
/// central-difference Jacobian), so its fixed points are stationary points of
/// the objective; for a constant b both reduce to one ridge solve. The Gram
/// overload freezes the projected right-hand side by value only.
NonlinearResult nonlinear_solve(const NonlinearResidualProblem& prob, const Eigen::VectorXd& alpha0);
NonlinearResult nonlinear_solve(const GramProblem& prob, const Eigen::VectorXd& alpha0);

}  // namespace flatdd::solver
