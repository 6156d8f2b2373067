#include "flatdd/solver.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "flatdd/errors.hpp"

namespace flatdd::solver {

namespace {

constexpr int kMaxHalvings = 20;

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("regularization lambda must be finite and >= 0");
  }
}

void check_controls(const SolverControls& c) {
  if (c.max_iter < 1 || !(c.rel_tol > 0.0) || !(c.damping > 0.0)) {
    throw ConfigError("solver controls must be positive");
  }
}

using StepTarget = std::function<Eigen::VectorXd(const Eigen::VectorXd&, int)>;
using Objective = std::function<double(const Eigen::VectorXd&)>;

double checked(double value, int iteration) {
  if (!std::isfinite(value)) {
    throw DivergenceError("non-finite objective at iteration " + std::to_string(iteration));
  }
  return value;
}

NonlinearResult iterate(const RidgeFactorization& fact, const StepTarget& step_target, const Objective& objective,
                        const SolverControls& controls, const Eigen::VectorXd& alpha0) {
  if (!alpha0.allFinite()) throw DivergenceError("initial alpha is not finite");
  if (alpha0.size() != fact.size()) {
    throw DimensionError("alpha0 has length " + std::to_string(alpha0.size()) + ", expected " +
                         std::to_string(fact.size()));
  }
  NonlinearResult out;
  out.condition_number = fact.condition_number();
  out.alpha = alpha0;
  out.objective = checked(objective(alpha0), 0);
  out.initial_objective = out.objective;

  for (int it = 0; it < controls.max_iter; ++it) {
    const Eigen::VectorXd target = step_target(out.alpha, it);
    const Eigen::VectorXd step = target - out.alpha;
    const double scale = std::max(out.alpha.norm(), target.norm());
    if (step.norm() <= controls.rel_tol * scale || scale == 0.0) {
      out.converged = true;
      out.reason = StopReason::converged;
      return out;
    }

    double damping = controls.damping;
    bool accepted = false;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      Eigen::VectorXd candidate = out.alpha + damping * step;
      const double obj = checked(objective(candidate), it + 1);
      if (obj <= out.objective) {
        out.alpha = std::move(candidate);
        out.objective = obj;
        accepted = true;
        break;
      }
      damping *= 0.5;
    }
    if (!accepted) {
      out.reason = StopReason::guard_limit;
      return out;
    }
    ++out.iterations;
  }
  out.reason = StopReason::max_iter;
  return out;
}

Eigen::VectorXd checked_rhs(const NonlinearResidualProblem& prob, const Eigen::VectorXd& alpha, int it) {
  Eigen::VectorXd b = prob.rhs(alpha);
  if (b.size() != prob.block.rows()) throw DimensionError("rhs length does not match the block");
  if (!b.allFinite()) throw DivergenceError("non-finite residual at iteration " + std::to_string(it));
  return b;
}

// Central-difference Jacobian of the right-hand side.
Eigen::MatrixXd rhs_jacobian(const NonlinearResidualProblem& prob, const Eigen::VectorXd& alpha, int it) {
  const double rel = std::cbrt(std::numeric_limits<double>::epsilon());
  Eigen::MatrixXd jac(prob.block.rows(), alpha.size());
  Eigen::VectorXd probe = alpha;
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    const double h = rel * (1.0 + std::abs(alpha(j)));
    probe(j) = alpha(j) + h;
    const Eigen::VectorXd plus = checked_rhs(prob, probe, it);
    probe(j) = alpha(j) - h;
    jac.col(j) = (plus - checked_rhs(prob, probe, it)) / (2.0 * h);
    probe(j) = alpha(j);
  }
  return jac;
}

// argmin ||M x - r||^2 + lambda ||x||^2, through whichever normal equations are smaller.
Eigen::VectorXd small_side_ridge(const Eigen::MatrixXd& m, const Eigen::VectorXd& r, double lambda) {
  if (lambda == 0.0) return ridge_solve({m, r, 0.0});
  if (m.rows() < m.cols()) {
    Eigen::MatrixXd outer = m * m.transpose();
    outer.diagonal().array() += lambda;
    return m.transpose() * outer.ldlt().solve(r);
  }
  Eigen::MatrixXd inner = m.transpose() * m;
  inner.diagonal().array() += lambda;
  return inner.ldlt().solve(m.transpose() * r);
}

}  // namespace

RidgeFactorization::RidgeFactorization(const Eigen::MatrixXd& gram, double lambda) {
  check_lambda(lambda);
  if (gram.rows() != gram.cols()) throw DimensionError("Gram matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw SingularError("eigendecomposition of the Gram matrix failed");
  eigenvectors_ = eig.eigenvectors();
  eigenvalues_ = eig.eigenvalues().array() + lambda;

  const double largest = eigenvalues_.size() > 0 ? eigenvalues_.maxCoeff() : 0.0;
  const double smallest = eigenvalues_.size() > 0 ? eigenvalues_.minCoeff() : 0.0;
  const double floor = static_cast<double>(gram.rows()) * std::numeric_limits<double>::epsilon() *
                       std::max(largest, 0.0);
  if (lambda == 0.0 && !(smallest > floor)) {
    throw SingularError("normal equations are numerically singular (smallest eigenvalue " +
                        std::to_string(smallest) + "); use lambda > 0");
  }
  condition_ = largest / smallest;
}

Eigen::VectorXd RidgeFactorization::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != eigenvalues_.size()) throw DimensionError("right-hand side length mismatch");
  Eigen::VectorXd coeffs = eigenvectors_.transpose() * rhs;
  coeffs.array() /= eigenvalues_.array();
  return eigenvectors_ * coeffs;
}

Eigen::VectorXd ridge_solve(const RidgeProblem& prob) {
  check_lambda(prob.lambda);
  if (prob.A.rows() != prob.b.size()) {
    throw DimensionError("A has " + std::to_string(prob.A.rows()) + " rows but b has length " +
                         std::to_string(prob.b.size()));
  }
  if (prob.lambda == 0.0) {
    // Solve the least-squares problem on A itself; squaring the condition
    // number through A^T A is unnecessary without regularization.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(prob.A);
    if (qr.rank() < prob.A.cols()) {
      throw SingularError("A has rank " + std::to_string(qr.rank()) + " < " +
                          std::to_string(prob.A.cols()) + " columns; use lambda > 0");
    }
    return qr.solve(prob.b);
  }
  const Eigen::MatrixXd gram = prob.A.transpose() * prob.A;
  return RidgeFactorization(gram, prob.lambda).solve(prob.A.transpose() * prob.b);
}

double objective(const NonlinearResidualProblem& prob, const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd r = prob.block * alpha - prob.rhs(alpha);
  return r.squaredNorm() + prob.lambda * alpha.squaredNorm();
}

NonlinearResult nonlinear_solve(const NonlinearResidualProblem& prob, const Eigen::VectorXd& alpha0) {
  check_controls(prob.controls);
  check_lambda(prob.lambda);
  const RidgeFactorization fact(prob.block.transpose() * prob.block, prob.lambda);
  // The right-hand side is frozen to first order at each iterate:
  // b(alpha) ~ b(alpha_t) + J_t (alpha - alpha_t). With J_t = 0 this is the
  // plain frozen-value step and reuses the fixed factorization.
  const StepTarget target = [&prob, &fact](const Eigen::VectorXd& a, int it) -> Eigen::VectorXd {
    const Eigen::VectorXd b = checked_rhs(prob, a, it);
    const Eigen::MatrixXd jac = rhs_jacobian(prob, a, it);
    if (jac.isZero(0.0)) return fact.solve(prob.block.transpose() * b);
    return small_side_ridge(prob.block - jac, b - jac * a, prob.lambda);
  };
  const Objective obj = [&prob](const Eigen::VectorXd& a) { return objective(prob, a); };
  return iterate(fact, target, obj, prob.controls, alpha0);
}

NonlinearResult nonlinear_solve(const GramProblem& prob, const Eigen::VectorXd& alpha0) {
  check_controls(prob.controls);
  const RidgeFactorization fact(prob.gram, prob.lambda);
  const StepTarget target = [&prob, &fact](const Eigen::VectorXd& a, int it) -> Eigen::VectorXd {
    const Eigen::VectorXd rhs = prob.projected_rhs(a);
    if (rhs.size() != fact.size()) throw DimensionError("projected rhs length does not match the Gram matrix");
    if (!rhs.allFinite()) throw DivergenceError("non-finite residual at iteration " + std::to_string(it));
    return fact.solve(rhs);
  };
  return iterate(fact, target, prob.objective, prob.controls, alpha0);
}

std::string stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::converged: return "converged";
    case StopReason::max_iter: return "max_iter";
    case StopReason::guard_limit: return "guard_limit";
  }
  return "unknown";
}

}  // namespace flatdd::solver
