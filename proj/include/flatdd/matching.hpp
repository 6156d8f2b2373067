#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flatdd/modes.hpp"
#include "flatdd/signals.hpp"
#include "flatdd/solver.hpp"

namespace flatdd::matching {

/// Find the input that makes the unknown system follow a reference output.
struct MatchProblem {
  IoTrajectory data;
  int horizon = 0;
  /// Reference y_bar of length L; the first n samples are initial conditions.
  Signal reference;
  /// Explicit mode needs a basis with identity_index; kernel mode needs a
  /// kernel with an identity feature.
  Mode mode;
  double lambda = 0.1;
  solver::SolverControls controls{};
  std::optional<Eigen::VectorXd> alpha0;
};

struct MatchResult {
  /// H_{L-n}(u) alpha, length L - n.
  Signal input;
  Eigen::VectorXd alpha;
  double objective = 0.0;
  double initial_objective = 0.0;
  int iterations = 0;
  bool converged = false;
  solver::StopReason reason = solver::StopReason::converged;
  /// True when the affine-in-u shortcut replaced the iterative solve.
  bool used_linear_path = false;
  std::vector<std::string> warnings;
};

MatchResult dd_match(const MatchProblem& prob);

double matching_objective(const MatchProblem& prob, const Eigen::VectorXd& alpha);

/// Explicit-mode residual with u_bar = H_{L-n}(u) alpha substituted inside Psi.
solver::NonlinearResidualProblem matching_residual(const MatchProblem& prob);

/// For bases affine in u: the same residual folded into A_eff alpha - c with
/// constant c.
solver::RidgeProblem matching_linear_problem(const MatchProblem& prob);

}  // namespace flatdd::matching
