#pragma once

// Shared assembly for the simulation and matching problems.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flatdd/basis.hpp"
#include "flatdd/errors.hpp"
#include "flatdd/signals.hpp"

namespace flatdd::detail {

struct DataBlocks {
  int order = 0;
  int horizon = 0;
  int cols = 0;              // N - L + 1
  Eigen::MatrixXd y_hankel;  // H_L(y)
  Eigen::MatrixXd u_hankel;  // H_{L-n}(u)
};

inline DataBlocks data_blocks(const IoTrajectory& data, int horizon) {
  const int n = data.order();
  if (horizon <= n) {
    throw DimensionError("horizon L = " + std::to_string(horizon) + " must exceed order n = " +
                         std::to_string(n));
  }
  if (horizon > data.length()) {
    throw DimensionError("horizon L = " + std::to_string(horizon) + " exceeds data length N = " +
                         std::to_string(data.length()));
  }
  DataBlocks b;
  b.order = n;
  b.horizon = horizon;
  b.cols = data.length() - horizon + 1;
  b.y_hankel = build_hankel(data.y(), horizon).entries;
  b.u_hankel = build_hankel(data.u(), horizon - n).entries;
  return b;
}

inline void require_arity(const basis::BasisSet& basis, int order) {
  if (basis.xi_dim != order) {
    throw DimensionError("basis '" + basis.name + "' has arity " + std::to_string(basis.xi_dim) +
                         " but the system order is " + std::to_string(order));
  }
}

/// sum_k G[k : k+cols, k : k+cols] for k = 0 ... depth-1, i.e. the Gram
/// matrix of the depth-`depth` Hankel arrangement of the feature sequence.
inline Eigen::MatrixXd shifted_gram_sum(const Eigen::MatrixXd& gram, int depth, int cols) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(cols, cols);
  for (int k = 0; k < depth; ++k) q += gram.block(k, k, cols, cols);
  return q;
}

using KernelFn = std::function<double(const basis::KernelPoint&, const basis::KernelPoint&)>;

struct KernelTerms {
  Eigen::VectorXd cross;  // cross_j = sum_k K(unknown_k, data_{k+j})
  double self = 0.0;      // sum_k K(unknown_k, unknown_k)
};

inline KernelTerms kernel_terms(const KernelFn& kernel, const std::vector<basis::KernelPoint>& data,
                                const std::vector<basis::KernelPoint>& unknown, int cols) {
  KernelTerms t;
  t.cross = Eigen::VectorXd::Zero(cols);
  for (std::size_t k = 0; k < unknown.size(); ++k) {
    for (int j = 0; j < cols; ++j) t.cross(j) += kernel(unknown[k], data[k + static_cast<std::size_t>(j)]);
    t.self += kernel(unknown[k], unknown[k]);
  }
  return t;
}

/// Psi(u, xi) = offset + slope * xi for a basis affine in xi.
struct XiAffineParts {
  Eigen::VectorXd offset;
  Eigen::MatrixXd slope;
};

inline XiAffineParts xi_affine_parts(const basis::BasisSet& basis, double u) {
  const int n = basis.xi_dim;
  XiAffineParts p;
  p.offset = basis::eval_psi_hat(basis, u, Eigen::VectorXd::Zero(n));
  p.slope.resize(basis.size(), n);
  for (int i = 0; i < n; ++i) {
    p.slope.col(i) = basis::eval_psi_hat(basis, u, Eigen::VectorXd::Unit(n, i)) - p.offset;
  }
  return p;
}

/// Psi(u, xi) = offset + slope * u for a basis affine in u.
struct UAffineParts {
  Eigen::VectorXd offset;
  Eigen::VectorXd slope;
};

inline UAffineParts u_affine_parts(const basis::BasisSet& basis, const Eigen::VectorXd& xi) {
  UAffineParts p;
  p.offset = basis::eval_psi_hat(basis, 0.0, xi);
  p.slope = basis::eval_psi_hat(basis, 1.0, xi) - p.offset;
  return p;
}

}  // namespace flatdd::detail
