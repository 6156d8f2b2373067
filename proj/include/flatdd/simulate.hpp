#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flatdd/modes.hpp"
#include "flatdd/signals.hpp"
#include "flatdd/solver.hpp"

namespace flatdd::simulate {

/// Predict the response of the unknown system to a new input from recorded
/// data alone.
struct SimProblem {
  IoTrajectory data;
  int horizon = 0;
  /// New input u_bar, length L - n.
  Signal input;
  /// y_bar_0 ... y_bar_{n-1}, fixing the initial state.
  Signal initial_outputs;
  Mode mode;
  double lambda = 0.1;
  solver::SolverControls controls{};
  /// Overrides the default start (ridge fit of the alpha-independent rows).
  std::optional<Eigen::VectorXd> alpha0;
};

struct SimResult {
  /// H_L(y) alpha, length L.
  Signal y;
  Eigen::VectorXd alpha;
  double objective = 0.0;
  double initial_objective = 0.0;
  int iterations = 0;
  bool converged = false;
  solver::StopReason reason = solver::StopReason::converged;
  std::vector<std::string> warnings;
};

SimResult dd_simulate(const SimProblem& prob);

/// ||[H_{L-n}(Psi); H_n(y)] alpha - [Psi(u_bar, H_L(y) alpha); y_init]||^2 + lambda ||alpha||^2,
/// evaluated explicitly or through the kernel depending on the mode.
double simulation_objective(const SimProblem& prob, const Eigen::VectorXd& alpha);

/// Explicit-mode residual before any affine folding. Throws ConfigError in
/// kernel mode.
solver::NonlinearResidualProblem simulation_residual(const SimProblem& prob);

}  // namespace flatdd::simulate
