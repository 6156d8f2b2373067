#include "flatdd/simulate.hpp"

#include <string>
#include <variant>

#include "assembly.hpp"
#include "flatdd/errors.hpp"
#include "flatdd/repr.hpp"

namespace flatdd::simulate {

namespace {

void validate(const SimProblem& prob) {
  const int n = prob.data.order();
  if (prob.horizon <= n) throw DimensionError("horizon L must exceed the order n");
  if (prob.input.dim() != 1 || prob.input.size() != prob.horizon - n) {
    throw DimensionError("new input must be scalar with length L - n = " +
                         std::to_string(prob.horizon - n));
  }
  if (prob.initial_outputs.dim() != 1 || prob.initial_outputs.size() != n) {
    throw DimensionError("initial outputs must be scalar with length n = " + std::to_string(n));
  }
  if (!(prob.lambda > 0.0)) throw ConfigError("simulation requires lambda > 0");
}

// Candidate output windows y_bar_[k, k+n-1] of H_L(y) alpha.
std::vector<basis::KernelPoint> unknown_points(const SimProblem& prob, const detail::DataBlocks& b,
                                               const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd ybar = b.y_hankel * alpha;
  std::vector<basis::KernelPoint> pts;
  pts.reserve(static_cast<std::size_t>(prob.input.size()));
  for (int k = 0; k < prob.input.size(); ++k) pts.push_back({prob.input[k], ybar.segment(k, b.order)});
  return pts;
}

struct ExplicitSystem {
  detail::DataBlocks blocks;
  Eigen::MatrixXd psi_hankel;  // H_{L-n}(Psi_hat(u, y))
};

ExplicitSystem explicit_system(const SimProblem& prob, const basis::BasisSet& basis) {
  detail::require_arity(basis, prob.data.order());
  ExplicitSystem s{detail::data_blocks(prob.data, prob.horizon), {}};
  s.psi_hankel = basis::build_psi_hankel(basis, prob.data, prob.horizon).entries;
  return s;
}

solver::NonlinearResidualProblem residual_problem(const SimProblem& prob, const basis::BasisSet& basis,
                                                  const ExplicitSystem& s) {
  const int n = s.blocks.order;
  const auto rows = s.psi_hankel.rows();
  solver::NonlinearResidualProblem r;
  r.block.resize(rows + n, s.blocks.cols);
  r.block << s.psi_hankel, s.blocks.y_hankel.topRows(n);
  r.lambda = prob.lambda;
  r.controls = prob.controls;
  const Eigen::MatrixXd y_hankel = s.blocks.y_hankel;
  const Signal input = prob.input;
  const Eigen::VectorXd y_init = prob.initial_outputs.stacked();
  r.rhs = [basis, y_hankel, input, y_init, n, rows](const Eigen::VectorXd& alpha) {
    const Eigen::VectorXd ybar = y_hankel * alpha;
    const int r_dim = basis.size();
    Eigen::VectorXd b(rows + n);
    for (int k = 0; k < input.size(); ++k) {
      b.segment(static_cast<Eigen::Index>(k) * r_dim, r_dim) =
          basis::eval_psi_hat(basis, input[k], ybar.segment(k, n));
    }
    b.tail(n) = y_init;
    return b;
  };
  return r;
}

// Rows that do not involve the unknown outputs: the initial-output block and,
// when the basis contains the identity, the rows H_{L-n}(u) alpha = u_bar.
Eigen::VectorXd default_alpha0(const SimProblem& prob, const detail::DataBlocks& b,
                               const basis::BasisSet* basis) {
  const int n = b.order;
  const bool with_identity = basis != nullptr && basis->identity_index.has_value();
  const int extra = with_identity ? prob.input.size() : 0;
  solver::RidgeProblem rp;
  rp.A.resize(n + extra, b.cols);
  rp.b.resize(n + extra);
  rp.A.topRows(n) = b.y_hankel.topRows(n);
  rp.b.head(n) = prob.initial_outputs.stacked();
  if (with_identity) {
    rp.A.bottomRows(extra) = b.u_hankel;
    rp.b.tail(extra) = prob.input.stacked();
  }
  rp.lambda = prob.lambda;
  return solver::ridge_solve(rp);
}

SimResult finish(const detail::DataBlocks& b, const solver::NonlinearResult& nr) {
  SimResult out{Signal(Eigen::VectorXd(b.y_hankel * nr.alpha)), nr.alpha, nr.objective,
                nr.initial_objective, nr.iterations, nr.converged, nr.reason, {}};
  if (nr.condition_number > solver::kConditionWarning) {
    out.warnings.push_back("normal equations ill-conditioned (condition number " +
                           std::to_string(nr.condition_number) + ")");
  }
  if (!nr.converged) out.warnings.push_back("solver stopped: " + solver::stop_reason_name(nr.reason));
  return out;
}

void add_hypothesis_warnings(const SimProblem& prob, const basis::BasisSet& basis, SimResult& out) {
  const auto len = repr::data_length_check(prob.data.length(), prob.horizon, prob.data.order(), basis.size());
  if (!len.feasible) {
    out.warnings.push_back("data length " + std::to_string(prob.data.length()) + " below required " +
                           std::to_string(len.required_length));
    return;
  }
  const auto pe = pe_check(basis::psi_sequence(basis, prob.data), prob.horizon);
  if (!pe.order_satisfied) out.warnings.push_back("Psi_hat not PE of order L: " + pe.diagnostic);
}

SimResult simulate_explicit(const SimProblem& prob, const basis::BasisSet& basis) {
  const ExplicitSystem s = explicit_system(prob, basis);
  const Eigen::VectorXd alpha0 = prob.alpha0.value_or(default_alpha0(prob, s.blocks, &basis));
  solver::NonlinearResult nr;
  const auto residual = residual_problem(prob, basis, s);

  if (basis.affine_in_xi) {
    // Psi(u_k, xi) = c(u_k) + J(u_k) xi and xi = H_n(y_[k, ...]) alpha, so the
    // residual is linear in alpha: fold J into the block.
    const int n = s.blocks.order;
    const int r_dim = basis.size();
    solver::RidgeProblem rp;
    rp.A = residual.block;
    rp.b.resize(rp.A.rows());
    for (int k = 0; k < prob.input.size(); ++k) {
      const auto parts = detail::xi_affine_parts(basis, prob.input[k]);
      rp.A.middleRows(static_cast<Eigen::Index>(k) * r_dim, r_dim) -=
          parts.slope * s.blocks.y_hankel.middleRows(k, n);
      rp.b.segment(static_cast<Eigen::Index>(k) * r_dim, r_dim) = parts.offset;
    }
    rp.b.tail(n) = prob.initial_outputs.stacked();
    rp.lambda = prob.lambda;
    nr.alpha = solver::ridge_solve(rp);
    nr.objective = solver::objective(residual, nr.alpha);
    nr.initial_objective = solver::objective(residual, alpha0);
    nr.iterations = 1;
    nr.converged = true;
    nr.reason = solver::StopReason::converged;
  } else {
    nr = solver::nonlinear_solve(residual, alpha0);
  }
  SimResult out = finish(s.blocks, nr);
  add_hypothesis_warnings(prob, basis, out);
  return out;
}

struct KernelSystem {
  detail::DataBlocks blocks;
  std::vector<basis::KernelPoint> points;
  Eigen::MatrixXd feature_gram;  // H_{L-n}(Psi)^T H_{L-n}(Psi)
};

KernelSystem kernel_system(const SimProblem& prob, const basis::Kernel& kernel) {
  KernelSystem s{detail::data_blocks(prob.data, prob.horizon), basis::kernel_points(prob.data), {}};
  const Eigen::MatrixXd g = basis::gram_matrix(kernel, s.points);
  s.feature_gram = detail::shifted_gram_sum(g, prob.horizon - s.blocks.order, s.blocks.cols);
  return s;
}

double kernel_objective(const SimProblem& prob, const basis::Kernel& kernel, const KernelSystem& s,
                        const Eigen::VectorXd& alpha) {
  const auto terms = detail::kernel_terms(kernel.eval, s.points, unknown_points(prob, s.blocks, alpha),
                                          s.blocks.cols);
  const Eigen::VectorXd init_res =
      s.blocks.y_hankel.topRows(s.blocks.order) * alpha - prob.initial_outputs.stacked();
  return alpha.dot(s.feature_gram * alpha) - 2.0 * alpha.dot(terms.cross) + terms.self +
         init_res.squaredNorm() + prob.lambda * alpha.squaredNorm();
}

SimResult simulate_kernel(const SimProblem& prob, const basis::Kernel& kernel) {
  const KernelSystem s = kernel_system(prob, kernel);
  const int n = s.blocks.order;
  const Eigen::MatrixXd y_init_rows = s.blocks.y_hankel.topRows(n);
  const Eigen::VectorXd y_init_proj = y_init_rows.transpose() * prob.initial_outputs.stacked();

  solver::GramProblem gp;
  gp.gram = s.feature_gram + y_init_rows.transpose() * y_init_rows;
  gp.lambda = prob.lambda;
  gp.controls = prob.controls;
  gp.projected_rhs = [&](const Eigen::VectorXd& alpha) -> Eigen::VectorXd {
    return detail::kernel_terms(kernel.eval, s.points, unknown_points(prob, s.blocks, alpha), s.blocks.cols)
               .cross +
           y_init_proj;
  };
  gp.objective = [&](const Eigen::VectorXd& alpha) { return kernel_objective(prob, kernel, s, alpha); };

  const Eigen::VectorXd alpha0 = prob.alpha0.value_or(default_alpha0(prob, s.blocks, nullptr));
  return finish(s.blocks, solver::nonlinear_solve(gp, alpha0));
}

}  // namespace

solver::NonlinearResidualProblem simulation_residual(const SimProblem& prob) {
  validate(prob);
  const auto* mode = std::get_if<ExplicitMode>(&prob.mode);
  if (mode == nullptr) throw ConfigError("simulation_residual requires explicit mode");
  return residual_problem(prob, mode->basis, explicit_system(prob, mode->basis));
}

double simulation_objective(const SimProblem& prob, const Eigen::VectorXd& alpha) {
  validate(prob);
  if (const auto* e = std::get_if<ExplicitMode>(&prob.mode)) {
    return solver::objective(residual_problem(prob, e->basis, explicit_system(prob, e->basis)), alpha);
  }
  const auto& k = std::get<KernelMode>(prob.mode).kernel;
  return kernel_objective(prob, k, kernel_system(prob, k), alpha);
}

SimResult dd_simulate(const SimProblem& prob) {
  validate(prob);
  if (const auto* e = std::get_if<ExplicitMode>(&prob.mode)) return simulate_explicit(prob, e->basis);
  return simulate_kernel(prob, std::get<KernelMode>(prob.mode).kernel);
}

}  // namespace flatdd::simulate
