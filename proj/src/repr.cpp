#include "flatdd/repr.hpp"

#include <string>
#include <utility>

#include "flatdd/errors.hpp"

namespace flatdd::repr {

namespace {

MembershipVerdict verdict_for(const Eigen::MatrixXd& stacked, const Eigen::VectorXd& rhs,
                              std::optional<double> tol) {
  MembershipVerdict v;
  v.alpha = min_norm_solve(stacked, rhs);
  v.residual = (stacked * v.alpha - rhs).norm();
  v.tolerance = tol.value_or(1e-6 * (1.0 + rhs.norm()));
  v.is_member = v.residual <= v.tolerance;
  return v;
}

}  // namespace

Eigen::VectorXd min_norm_solve(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs) {
  if (m.rows() != rhs.size()) throw DimensionError("stacked matrix and right-hand side disagree");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.solve(rhs);
}

MembershipVerdict lti_membership(const Signal& u, const Signal& y, int order, int horizon,
                                 const Signal& u_bar, const Signal& y_bar, std::optional<double> tol) {
  if (u.dim() != 1 || y.dim() != 1 || u_bar.dim() != 1 || y_bar.dim() != 1) {
    throw DimensionError("LTI membership expects scalar signals");
  }
  if (u.size() != y.size()) throw DimensionError("identification u and y must have equal length");
  if (u_bar.size() != horizon || y_bar.size() != horizon) {
    throw DimensionError("candidate must have length L = " + std::to_string(horizon));
  }
  if (horizon < 1 || horizon > u.size()) throw DimensionError("horizon L out of range for the data");

  const auto hu = build_hankel(u, horizon);
  const auto hy = build_hankel(y, horizon);
  Eigen::MatrixXd stacked(2 * horizon, hu.cols());
  stacked << hu.entries, hy.entries;
  Eigen::VectorXd rhs(2 * horizon);
  rhs << u_bar.stacked(), y_bar.stacked();

  auto v = verdict_for(stacked, rhs, tol);
  if (horizon + order <= u.size()) {
    const auto pe = pe_check(u, horizon + order);
    v.pe_satisfied = pe.order_satisfied;
    if (!pe.order_satisfied) v.warnings.push_back("input not PE of order L+n: " + pe.diagnostic);
  } else {
    v.warnings.push_back("data too short to check PE of order L+n");
  }
  return v;
}

FlatRepresentation::FlatRepresentation(const IoTrajectory& traj, basis::BasisSet basis, int horizon)
    : basis_(std::move(basis)), horizon_(horizon), order_(traj.order()) {
  const int n = order_;
  if (basis_.xi_dim != n) {
    throw DimensionError("basis '" + basis_.name + "' has arity " + std::to_string(basis_.xi_dim) +
                         " but the system order is " + std::to_string(n));
  }
  if (horizon <= n) throw DimensionError("horizon L must exceed the order n");
  if (horizon > traj.length()) throw DimensionError("horizon L exceeds the data length");

  const Signal psi = basis::psi_sequence(basis_, traj);
  const auto hpsi = build_hankel(psi, horizon - n);
  const auto hy = build_hankel(traj.y(), horizon);
  stacked_.resize(hpsi.entries.rows() + horizon, hy.cols());
  stacked_ << hpsi.entries, hy.entries;
  svd_.compute(stacked_, Eigen::ComputeThinU | Eigen::ComputeThinV);

  if (horizon <= psi.size()) {
    const auto pe = pe_check(psi, horizon);
    pe_satisfied_ = pe.order_satisfied;
    if (!pe.order_satisfied) warnings_.push_back("Psi_hat not PE of order L: " + pe.diagnostic);
  } else {
    warnings_.push_back("data too short to check PE of order L");
  }
}

MembershipVerdict FlatRepresentation::check(const Signal& u_bar, const Signal& y_bar,
                                            std::optional<double> tol) const {
  const int n = order_;
  if (u_bar.size() != horizon_ - n || y_bar.size() != horizon_) {
    throw DimensionError("candidate needs length(u_bar) = L - n = " + std::to_string(horizon_ - n) +
                         " and length(y_bar) = L = " + std::to_string(horizon_));
  }
  const Signal psi_bar = basis::psi_sequence(basis_, u_bar, y_bar);
  Eigen::VectorXd rhs(stacked_.rows());
  rhs << psi_bar.stacked(), y_bar.stacked();

  MembershipVerdict v;
  v.alpha = svd_.solve(rhs);
  v.residual = (stacked_ * v.alpha - rhs).norm();
  v.tolerance = tol.value_or(1e-6 * (1.0 + rhs.norm()));
  v.is_member = v.residual <= v.tolerance;
  v.pe_satisfied = pe_satisfied_;
  v.warnings = warnings_;
  return v;
}

MembershipVerdict flat_membership(const IoTrajectory& traj, const basis::BasisSet& basis, int horizon,
                                  const Signal& u_bar, const Signal& y_bar, std::optional<double> tol) {
  return FlatRepresentation(traj, basis, horizon).check(u_bar, y_bar, tol);
}

DataLengthResult data_length_check(int length, int horizon, int order, int basis_size) {
  if (length < 1 || horizon < 1 || order < 1 || basis_size < 1) {
    throw ConfigError("data length check needs positive N, L, n, r");
  }
  if (horizon <= order) throw ConfigError("data length check needs L > n");
  DataLengthResult r;
  r.required_length = (basis_size + 1) * horizon + order - 1;
  r.feasible = length >= r.required_length;
  return r;
}

}  // namespace flatdd::repr
