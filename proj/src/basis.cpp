#include "flatdd/basis.hpp"

#include <cmath>
#include <random>
#include <string>

#include "flatdd/errors.hpp"

namespace flatdd::basis {

BasisSet example1_poly() {
  BasisSet b;
  b.name = "example1-poly";
  b.xi_dim = 2;
  b.functions = {
      [](double u, const Eigen::VectorXd&) { return u; },
      [](double u, const Eigen::VectorXd& xi) { return u * xi(0); },
      [](double u, const Eigen::VectorXd& xi) { return u * xi(1); },
      [](double, const Eigen::VectorXd& xi) { return xi(0) * xi(1); },
      [](double u, const Eigen::VectorXd& xi) { return u * xi(0) * xi(0); },
      [](double u, const Eigen::VectorXd& xi) { return u * xi(1) * xi(1); },
  };
  b.labels = {"u", "u*xi1", "u*xi2", "xi1*xi2", "u*xi1^2", "u*xi2^2"};
  b.affine_in_u = true;
  b.affine_in_xi = false;
  b.identity_index = 0;
  return b;
}

BasisSet identity_only(int xi_dim) {
  BasisSet b;
  b.name = "identity-only";
  b.xi_dim = xi_dim;
  b.functions = {[](double u, const Eigen::VectorXd&) { return u; }};
  b.labels = {"u"};
  b.affine_in_u = true;
  b.affine_in_xi = true;
  b.identity_index = 0;
  return b;
}

BasisSet basis_by_name(const std::string& name, int xi_dim) {
  if (name == "example1-poly") {
    if (xi_dim != 2) throw ConfigError("basis 'example1-poly' requires system order n = 2");
    return example1_poly();
  }
  if (name == "identity-only") return identity_only(xi_dim);
  throw ConfigError("unknown basis '" + name + "' (expected example1-poly or identity-only)");
}

void validate_basis(const BasisSet& basis, std::uint64_t seed, int probes) {
  if (basis.size() < 1) throw ConfigError("basis '" + basis.name + "' is empty");
  if (basis.xi_dim < 1) throw ConfigError("basis '" + basis.name + "' needs xi_dim >= 1");
  if (!basis.labels.empty() && basis.labels.size() != basis.functions.size()) {
    throw ConfigError("basis '" + basis.name + "' has mismatched labels");
  }
  if (basis.identity_index && (*basis.identity_index < 0 || *basis.identity_index >= basis.size())) {
    throw ConfigError("basis '" + basis.name + "' identity_index out of range");
  }

  std::mt19937_64 rng(seed);
  auto draw = [&rng] { return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0; };
  const int n = basis.xi_dim;

  for (int p = 0; p < probes; ++p) {
    const double u = draw();
    const double du = draw();
    Eigen::VectorXd xi(n), dxi(n);
    for (int i = 0; i < n; ++i) {
      xi(i) = draw();
      dxi(i) = draw();
    }
    const Eigen::VectorXd base = eval_psi_hat(basis, u, xi);
    const double scale = 1.0 + base.cwiseAbs().maxCoeff();
    if (basis.affine_in_u) {
      const Eigen::VectorXd second = eval_psi_hat(basis, u + du, xi) - 2.0 * base + eval_psi_hat(basis, u - du, xi);
      if (second.cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw ConfigError("basis '" + basis.name + "' flagged affine in u but is not");
      }
    }
    if (basis.affine_in_xi) {
      const Eigen::VectorXd second =
          eval_psi_hat(basis, u, xi + dxi) - 2.0 * base + eval_psi_hat(basis, u, xi - dxi);
      if (second.cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw ConfigError("basis '" + basis.name + "' flagged affine in xi but is not");
      }
    }
    if (basis.identity_index && base(*basis.identity_index) != u) {
      throw ConfigError("basis '" + basis.name + "' identity_index does not return u");
    }
  }
}

Eigen::VectorXd eval_psi_hat(const BasisSet& basis, double u, const Eigen::VectorXd& xi) {
  if (xi.size() != basis.xi_dim) {
    throw DimensionError("basis '" + basis.name + "' expects xi of dimension " +
                         std::to_string(basis.xi_dim) + ", got " + std::to_string(xi.size()));
  }
  Eigen::VectorXd out(basis.size());
  for (int i = 0; i < basis.size(); ++i) {
    out(i) = basis.functions[static_cast<std::size_t>(i)](u, xi);
    if (!std::isfinite(out(i))) {
      throw EvaluationError("basis function " + std::to_string(i) + " of '" + basis.name +
                            "' returned a non-finite value");
    }
  }
  return out;
}

Signal psi_sequence(const BasisSet& basis, const Signal& u, const Signal& y) {
  const int n = basis.xi_dim;
  if (y.size() != u.size() + n) {
    throw DimensionError("basis of arity " + std::to_string(n) + " needs length(y) = length(u) + " +
                         std::to_string(n));
  }
  Eigen::MatrixXd out(basis.size(), u.size());
  const Eigen::VectorXd ys = y.stacked();
  for (int k = 0; k < u.size(); ++k) {
    out.col(k) = eval_psi_hat(basis, u[k], ys.segment(k, n));
  }
  return Signal(std::move(out));
}

Signal psi_sequence(const BasisSet& basis, const IoTrajectory& traj) {
  if (traj.order() != basis.xi_dim) {
    throw DimensionError("basis '" + basis.name + "' has arity " + std::to_string(basis.xi_dim) +
                         " but the trajectory has order " + std::to_string(traj.order()));
  }
  return psi_sequence(basis, traj.u(), traj.y());
}

HankelMatrix build_psi_hankel(const BasisSet& basis, const IoTrajectory& traj, int horizon) {
  const int n = traj.order();
  if (horizon <= n) {
    throw DimensionError("horizon L = " + std::to_string(horizon) + " must exceed order n = " +
                         std::to_string(n));
  }
  if (traj.length() - n < horizon - n) {
    throw DimensionError("insufficient data: " + std::to_string(traj.length() - n) +
                         " Psi samples for depth " + std::to_string(horizon - n));
  }
  return build_hankel(psi_sequence(basis, traj), horizon - n);
}

double kernel_eval(const KernelSpec& spec, const KernelPoint& left, const KernelPoint& right) {
  if (left.xi.size() != right.xi.size()) {
    throw DimensionError("kernel arguments have different output-window lengths");
  }
  const double du = left.u - right.u;
  const double dist2 = du * du + (left.xi - right.xi).squaredNorm();
  const double g = std::exp(-dist2 / (2.0 * spec.sigma * spec.sigma));
  return spec.kind == KernelKind::gaussian_plus_linear ? left.u * right.u + g : g;
}

Kernel make_kernel(const KernelSpec& spec) {
  if (!(spec.sigma > 0.0)) throw ConfigError("kernel bandwidth sigma must be positive");
  return Kernel{[spec](const KernelPoint& a, const KernelPoint& b) { return kernel_eval(spec, a, b); },
                spec.kind == KernelKind::gaussian_plus_linear};
}

Kernel finite_basis_kernel(const BasisSet& basis) {
  return Kernel{[basis](const KernelPoint& a, const KernelPoint& b) {
                  return eval_psi_hat(basis, a.u, a.xi).dot(eval_psi_hat(basis, b.u, b.xi));
                },
                basis.identity_index.has_value()};
}

Eigen::MatrixXd gram_matrix(const Kernel& kernel, const std::vector<KernelPoint>& points) {
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd g(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      g(i, j) = kernel.eval(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
      g(j, i) = g(i, j);
    }
  }
  return g;
}

std::vector<KernelPoint> kernel_points(const IoTrajectory& traj) {
  const int n = traj.order();
  const Eigen::VectorXd ys = traj.y().stacked();
  std::vector<KernelPoint> pts;
  pts.reserve(static_cast<std::size_t>(traj.u().size()));
  for (int k = 0; k < traj.u().size(); ++k) pts.push_back({traj.u()[k], ys.segment(k, n)});
  return pts;
}

KernelKind kernel_kind_by_name(const std::string& name) {
  if (name == "gaussian") return KernelKind::gaussian;
  if (name == "gaussian_plus_linear" || name == "gaussian-plus-linear") {
    return KernelKind::gaussian_plus_linear;
  }
  throw ConfigError("unknown kernel '" + name + "' (expected gaussian or gaussian_plus_linear)");
}

std::string kernel_kind_name(KernelKind kind) {
  return kind == KernelKind::gaussian ? "gaussian" : "gaussian_plus_linear";
}

}  // namespace flatdd::basis
