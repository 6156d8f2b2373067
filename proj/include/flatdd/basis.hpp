#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flatdd/signals.hpp"

namespace flatdd::basis {

/// Scalar basis function psi(u, xi) with xi the window of n consecutive outputs.
using BasisFunction = std::function<double(double u, const Eigen::VectorXd& xi)>;

/// Finite set of basis functions psi_1 ... psi_r.
///
/// The affine flags tell the simulation and matching assemblers when the
/// substituted residual is linear in the unknowns. identity_index marks a
/// function with psi_i(u, xi) = u, which output matching requires.
struct BasisSet {
  std::string name;
  int xi_dim = 0;
  std::vector<BasisFunction> functions;
  std::vector<std::string> labels;
  bool affine_in_u = false;
  bool affine_in_xi = false;
  std::optional<int> identity_index;

  [[nodiscard]] int size() const { return static_cast<int>(functions.size()); }
};

/// [u, u xi1, u xi2, xi1 xi2, u xi1^2, u xi2^2] for n = 2.
BasisSet example1_poly();
/// The single function psi(u, xi) = u.
BasisSet identity_only(int xi_dim);
/// "example1-poly" or "identity-only". Throws ConfigError otherwise.
BasisSet basis_by_name(const std::string& name, int xi_dim);

/// Spot-checks r >= 1, the affine flags (second differences along the flagged
/// argument) and identity_index at seeded random probes. Throws ConfigError
/// describing the first inconsistency.
void validate_basis(const BasisSet& basis, std::uint64_t seed = 1, int probes = 32);

/// Psi(u_k, xi); throws EvaluationError naming the offending function when a
/// value is not finite.
Eigen::VectorXd eval_psi_hat(const BasisSet& basis, double u, const Eigen::VectorXd& xi);

/// The r-vector sequence Psi_hat_k(u, y) = Psi(u_k, y_[k, k+n-1]), k = 0 ... N-n-1.
Signal psi_sequence(const BasisSet& basis, const IoTrajectory& traj);

/// Psi_hat for a candidate (u_bar, y_bar) with length(y_bar) = length(u_bar) + n.
Signal psi_sequence(const BasisSet& basis, const Signal& u, const Signal& y);

/// Depth-(L-n) Hankel matrix of the Psi_hat sequence.
HankelMatrix build_psi_hankel(const BasisSet& basis, const IoTrajectory& traj, int horizon);

enum class KernelKind { gaussian, gaussian_plus_linear };

struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  double sigma = 1.0;
};

/// Kernel argument: an input sample together with its output window.
struct KernelPoint {
  double u = 0.0;
  Eigen::VectorXd xi;
};

double kernel_eval(const KernelSpec& spec, const KernelPoint& left, const KernelPoint& right);

/// Kernel as used by the implicit-basis solvers.
///
/// When has_identity_feature is set, eval(a, b) must equal a.u * b.u plus the
/// remaining part; matching relies on this split to recover the input.
struct Kernel {
  std::function<double(const KernelPoint&, const KernelPoint&)> eval;
  bool has_identity_feature = false;
};

Kernel make_kernel(const KernelSpec& spec);
/// Exact inner product Psi(a)^T Psi(b) of a finite basis, for cross-checks.
Kernel finite_basis_kernel(const BasisSet& basis);

Eigen::MatrixXd gram_matrix(const Kernel& kernel, const std::vector<KernelPoint>& points);

/// Data points (u_k, y_[k, k+n-1]) for k = 0 ... N-n-1.
std::vector<KernelPoint> kernel_points(const IoTrajectory& traj);

KernelKind kernel_kind_by_name(const std::string& name);
std::string kernel_kind_name(KernelKind kind);

}  // namespace flatdd::basis
