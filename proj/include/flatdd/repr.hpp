#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flatdd/basis.hpp"
#include "flatdd/signals.hpp"

namespace flatdd::repr {

struct MembershipVerdict {
  /// Minimum-norm least-squares solution, length N - L + 1.
  Eigen::VectorXd alpha;
  /// Euclidean norm of the stacked-equation mismatch at alpha.
  double residual = 0.0;
  double tolerance = 0.0;
  bool is_member = false;
  /// Whether the excitation hypothesis held; a failure only adds a warning.
  bool pe_satisfied = false;
  std::vector<std::string> warnings;
};

/// Linear time-invariant baseline: is (u_bar, y_bar) in the column span of
/// [H_L(u); H_L(y)]? u and y both have length N; order is the state dimension
/// used for the PE-of-order-(L+n) hypothesis.
MembershipVerdict lti_membership(const Signal& u, const Signal& y, int order, int horizon,
                                 const Signal& u_bar, const Signal& y_bar,
                                 std::optional<double> tol = std::nullopt);

/// Flat-system membership: solves [H_{L-n}(Psi(u,y)); H_L(y)] alpha =
/// [Psi(u_bar, y_bar); y_bar] with length(u_bar) = L - n, length(y_bar) = L.
MembershipVerdict flat_membership(const IoTrajectory& traj, const basis::BasisSet& basis,
                                  int horizon, const Signal& u_bar, const Signal& y_bar,
                                  std::optional<double> tol = std::nullopt);

/// Data side of flat_membership, factored once so that many candidates can
/// be tested against the same record.
class FlatRepresentation {
 public:
  FlatRepresentation(const IoTrajectory& traj, basis::BasisSet basis, int horizon);

  [[nodiscard]] MembershipVerdict check(const Signal& u_bar, const Signal& y_bar,
                                        std::optional<double> tol = std::nullopt) const;
  /// [H_{L-n}(Psi(u,y)); H_L(y)].
  [[nodiscard]] const Eigen::MatrixXd& stacked() const { return stacked_; }
  [[nodiscard]] bool pe_satisfied() const { return pe_satisfied_; }

 private:
  basis::BasisSet basis_;
  int horizon_;
  int order_;
  Eigen::MatrixXd stacked_;
  Eigen::BDCSVD<Eigen::MatrixXd> svd_;
  bool pe_satisfied_ = false;
  std::vector<std::string> warnings_;
};

/// Minimum-norm least-squares solution via SVD.
Eigen::VectorXd min_norm_solve(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs);

struct DataLengthResult {
  bool feasible = false;
  int required_length = 0;
};

/// N >= (r + 1) L + n - 1.
DataLengthResult data_length_check(int length, int horizon, int order, int basis_size);

}  // namespace flatdd::repr
