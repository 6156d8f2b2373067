#include "flatdd/matching.hpp"

#include <string>
#include <variant>

#include "assembly.hpp"
#include "flatdd/errors.hpp"
#include "flatdd/repr.hpp"

namespace flatdd::matching {

namespace {

void validate(const MatchProblem& prob) {
  const int n = prob.data.order();
  if (prob.horizon <= n) throw DimensionError("horizon L must exceed the order n");
  if (prob.reference.dim() != 1 || prob.reference.size() != prob.horizon) {
    throw DimensionError("reference must be scalar with length L = " + std::to_string(prob.horizon));
  }
  if (!(prob.lambda > 0.0)) throw ConfigError("output matching requires lambda > 0");
  if (const auto* e = std::get_if<ExplicitMode>(&prob.mode)) {
    if (!e->basis.identity_index) {
      throw ConfigError("explicit output matching needs a basis containing psi(u, xi) = u; '" +
                        e->basis.name + "' has none");
    }
    detail::require_arity(e->basis, n);
  } else if (!std::get<KernelMode>(prob.mode).kernel.has_identity_feature) {
    throw ConfigError(
        "kernel output matching needs a kernel with a linear u*u' term (gaussian_plus_linear); "
        "the input is unrecoverable otherwise");
  }
}

struct ExplicitSystem {
  detail::DataBlocks blocks;
  Eigen::MatrixXd psi_hankel;
};

ExplicitSystem explicit_system(const MatchProblem& prob, const basis::BasisSet& basis) {
  ExplicitSystem s{detail::data_blocks(prob.data, prob.horizon), {}};
  s.psi_hankel = basis::build_psi_hankel(basis, prob.data, prob.horizon).entries;
  return s;
}

solver::NonlinearResidualProblem residual_problem(const MatchProblem& prob, const basis::BasisSet& basis,
                                                  const ExplicitSystem& s) {
  const int n = s.blocks.order;
  const int L = s.blocks.horizon;
  const auto rows = s.psi_hankel.rows();
  solver::NonlinearResidualProblem r;
  r.block.resize(rows + L, s.blocks.cols);
  r.block << s.psi_hankel, s.blocks.y_hankel;
  r.lambda = prob.lambda;
  r.controls = prob.controls;
  const Eigen::MatrixXd u_hankel = s.blocks.u_hankel;
  const Eigen::VectorXd ref = prob.reference.stacked();
  r.rhs = [basis, u_hankel, ref, n, rows](const Eigen::VectorXd& alpha) {
    const Eigen::VectorXd ubar = u_hankel * alpha;
    const int r_dim = basis.size();
    Eigen::VectorXd b(rows + ref.size());
    for (Eigen::Index k = 0; k < ubar.size(); ++k) {
      b.segment(k * r_dim, r_dim) = basis::eval_psi_hat(basis, ubar(k), ref.segment(k, n));
    }
    b.tail(ref.size()) = ref;
    return b;
  };
  return r;
}

solver::RidgeProblem linear_problem(const MatchProblem& prob, const basis::BasisSet& basis,
                                    const ExplicitSystem& s) {
  const int n = s.blocks.order;
  const int L = s.blocks.horizon;
  const int r_dim = basis.size();
  const Eigen::VectorXd ref = prob.reference.stacked();
  solver::RidgeProblem rp;
  rp.A.resize(s.psi_hankel.rows() + L, s.blocks.cols);
  rp.A << s.psi_hankel, s.blocks.y_hankel;
  rp.b.resize(rp.A.rows());
  for (int k = 0; k < L - n; ++k) {
    // Psi(h_k(u) alpha, xi_k) = offset + slope * (h_k(u) alpha)
    const auto parts = detail::u_affine_parts(basis, ref.segment(k, n));
    rp.A.middleRows(static_cast<Eigen::Index>(k) * r_dim, r_dim) -= parts.slope * s.blocks.u_hankel.row(k);
    rp.b.segment(static_cast<Eigen::Index>(k) * r_dim, r_dim) = parts.offset;
  }
  rp.b.tail(L) = ref;
  rp.lambda = prob.lambda;
  return rp;
}

Eigen::VectorXd default_alpha0(const MatchProblem& prob, const detail::DataBlocks& b) {
  return solver::ridge_solve({b.y_hankel, prob.reference.stacked(), prob.lambda});
}

MatchResult finish(const detail::DataBlocks& b, const solver::NonlinearResult& nr) {
  MatchResult out{Signal(Eigen::VectorXd(b.u_hankel * nr.alpha)), nr.alpha, nr.objective,
                  nr.initial_objective, nr.iterations, nr.converged, nr.reason, false, {}};
  if (nr.condition_number > solver::kConditionWarning) {
    out.warnings.push_back("normal equations ill-conditioned (condition number " +
                           std::to_string(nr.condition_number) + ")");
  }
  if (!nr.converged) out.warnings.push_back("solver stopped: " + solver::stop_reason_name(nr.reason));
  return out;
}

MatchResult match_explicit(const MatchProblem& prob, const basis::BasisSet& basis) {
  const ExplicitSystem s = explicit_system(prob, basis);
  const auto residual = residual_problem(prob, basis, s);
  const Eigen::VectorXd alpha0 = prob.alpha0.value_or(default_alpha0(prob, s.blocks));

  solver::NonlinearResult nr;
  bool linear = false;
  if (basis.affine_in_u) {
    nr.alpha = solver::ridge_solve(linear_problem(prob, basis, s));
    nr.objective = solver::objective(residual, nr.alpha);
    nr.initial_objective = solver::objective(residual, alpha0);
    nr.iterations = 1;
    nr.converged = true;
    nr.reason = solver::StopReason::converged;
    linear = true;
  } else {
    nr = solver::nonlinear_solve(residual, alpha0);
  }
  MatchResult out = finish(s.blocks, nr);
  out.used_linear_path = linear;

  const auto len = repr::data_length_check(prob.data.length(), prob.horizon, prob.data.order(), basis.size());
  if (!len.feasible) {
    out.warnings.push_back("data length " + std::to_string(prob.data.length()) + " below required " +
                           std::to_string(len.required_length));
  } else {
    const auto pe = pe_check(basis::psi_sequence(basis, prob.data), prob.horizon);
    if (!pe.order_satisfied) out.warnings.push_back("Psi_hat not PE of order L: " + pe.diagnostic);
  }
  return out;
}

// The identity feature's residual h_k(u) alpha - u_bar_k vanishes once
// u_bar = H_{L-n}(u) alpha is substituted, so only the kernel remainder
// K(a, b) - a.u b.u enters the objective.
struct KernelSystem {
  detail::DataBlocks blocks;
  std::vector<basis::KernelPoint> points;
  detail::KernelFn remainder;
  Eigen::MatrixXd feature_gram;
};

KernelSystem kernel_system(const MatchProblem& prob, const basis::Kernel& kernel) {
  KernelSystem s{detail::data_blocks(prob.data, prob.horizon), basis::kernel_points(prob.data), {}, {}};
  s.remainder = [eval = kernel.eval](const basis::KernelPoint& a, const basis::KernelPoint& b) {
    return eval(a, b) - a.u * b.u;
  };
  const Eigen::MatrixXd g = basis::gram_matrix(basis::Kernel{s.remainder, false}, s.points);
  s.feature_gram = detail::shifted_gram_sum(g, prob.horizon - s.blocks.order, s.blocks.cols);
  return s;
}

std::vector<basis::KernelPoint> unknown_points(const MatchProblem& prob, const detail::DataBlocks& b,
                                               const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd ubar = b.u_hankel * alpha;
  const Eigen::VectorXd ref = prob.reference.stacked();
  std::vector<basis::KernelPoint> pts;
  pts.reserve(static_cast<std::size_t>(ubar.size()));
  for (Eigen::Index k = 0; k < ubar.size(); ++k) pts.push_back({ubar(k), ref.segment(k, b.order)});
  return pts;
}

double kernel_objective(const MatchProblem& prob, const KernelSystem& s, const Eigen::VectorXd& alpha) {
  const auto terms =
      detail::kernel_terms(s.remainder, s.points, unknown_points(prob, s.blocks, alpha), s.blocks.cols);
  const Eigen::VectorXd y_res = s.blocks.y_hankel * alpha - prob.reference.stacked();
  return alpha.dot(s.feature_gram * alpha) - 2.0 * alpha.dot(terms.cross) + terms.self +
         y_res.squaredNorm() + prob.lambda * alpha.squaredNorm();
}

MatchResult match_kernel(const MatchProblem& prob, const basis::Kernel& kernel) {
  const KernelSystem s = kernel_system(prob, kernel);
  const Eigen::VectorXd y_proj = s.blocks.y_hankel.transpose() * prob.reference.stacked();

  solver::GramProblem gp;
  gp.gram = s.feature_gram + s.blocks.y_hankel.transpose() * s.blocks.y_hankel;
  gp.lambda = prob.lambda;
  gp.controls = prob.controls;
  gp.projected_rhs = [&](const Eigen::VectorXd& alpha) -> Eigen::VectorXd {
    return detail::kernel_terms(s.remainder, s.points, unknown_points(prob, s.blocks, alpha), s.blocks.cols)
               .cross +
           y_proj;
  };
  gp.objective = [&](const Eigen::VectorXd& alpha) { return kernel_objective(prob, s, alpha); };
  const Eigen::VectorXd alpha0 = prob.alpha0.value_or(default_alpha0(prob, s.blocks));
  return finish(s.blocks, solver::nonlinear_solve(gp, alpha0));
}

}  // namespace

solver::NonlinearResidualProblem matching_residual(const MatchProblem& prob) {
  validate(prob);
  const auto* e = std::get_if<ExplicitMode>(&prob.mode);
  if (e == nullptr) throw ConfigError("matching_residual requires explicit mode");
  return residual_problem(prob, e->basis, explicit_system(prob, e->basis));
}

solver::RidgeProblem matching_linear_problem(const MatchProblem& prob) {
  validate(prob);
  const auto* e = std::get_if<ExplicitMode>(&prob.mode);
  if (e == nullptr) throw ConfigError("matching_linear_problem requires explicit mode");
  if (!e->basis.affine_in_u) throw ConfigError("basis '" + e->basis.name + "' is not affine in u");
  return linear_problem(prob, e->basis, explicit_system(prob, e->basis));
}

double matching_objective(const MatchProblem& prob, const Eigen::VectorXd& alpha) {
  validate(prob);
  if (const auto* e = std::get_if<ExplicitMode>(&prob.mode)) {
    return solver::objective(residual_problem(prob, e->basis, explicit_system(prob, e->basis)), alpha);
  }
  return kernel_objective(prob, kernel_system(prob, std::get<KernelMode>(prob.mode).kernel), alpha);
}

MatchResult dd_match(const MatchProblem& prob) {
  validate(prob);
  if (const auto* e = std::get_if<ExplicitMode>(&prob.mode)) return match_explicit(prob, e->basis);
  return match_kernel(prob, std::get<KernelMode>(prob.mode).kernel);
}

}  // namespace flatdd::matching
