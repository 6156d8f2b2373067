#include "flatdd/signals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "flatdd/errors.hpp"

namespace flatdd {

namespace {

Eigen::MatrixXd as_row(const std::vector<double>& v) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) m(0, static_cast<Eigen::Index>(k)) = v[k];
  return m;
}

}  // namespace

Signal::Signal(const std::vector<double>& samples) : Signal(as_row(samples)) {}

Signal::Signal(const Eigen::VectorXd& samples) : Signal(Eigen::MatrixXd(samples.transpose())) {}

Signal::Signal(Eigen::MatrixXd samples) : data_(std::move(samples)) {
  if (data_.rows() < 1) throw DimensionError("signal sample dimension must be >= 1");
  if (data_.cols() < 1) throw DimensionError("signal must contain at least one sample");
}

Signal Signal::window(int first, int last) const {
  if (first < 0 || first >= last || last > size() - 1) {
    throw DimensionError("window [" + std::to_string(first) + ", " + std::to_string(last) +
                         "] invalid for signal of length " + std::to_string(size()));
  }
  return Signal(Eigen::MatrixXd(data_.middleCols(first, last - first + 1)));
}

Eigen::VectorXd Signal::stacked() const {
  return Eigen::Map<const Eigen::VectorXd>(data_.data(), data_.size());
}

std::vector<double> Signal::to_vector() const {
  return {data_.data(), data_.data() + data_.size()};
}

IoTrajectory::IoTrajectory(Signal u, Signal y, int order)
    : u_(std::move(u)), y_(std::move(y)), order_(order) {
  if (order_ < 1) throw DimensionError("system order n must be >= 1, got " + std::to_string(order_));
  if (u_.dim() != 1 || y_.dim() != 1) throw DimensionError("trajectory signals must be scalar");
  if (y_.size() != u_.size() + order_) {
    throw DimensionError("length(y) = " + std::to_string(y_.size()) + " but length(u) + n = " +
                         std::to_string(u_.size() + order_));
  }
}

HankelMatrix build_hankel(const Signal& z, int depth) {
  const int n = z.size();
  if (depth < 1 || depth > n) {
    throw DimensionError("Hankel depth L = " + std::to_string(depth) + " out of range for N = " +
                         std::to_string(n));
  }
  const int sigma = z.dim();
  const int cols = n - depth + 1;
  HankelMatrix h;
  h.depth = depth;
  h.source_length = n;
  h.sample_dim = sigma;
  h.entries.resize(static_cast<Eigen::Index>(sigma) * depth, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < depth; ++i) {
      h.entries.block(static_cast<Eigen::Index>(i) * sigma, j, sigma, 1) = z.sample(i + j);
    }
  }
  return h;
}

int numerical_rank(const Eigen::MatrixXd& m, std::optional<double> rank_tol) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double largest = s.size() > 0 ? s(0) : 0.0;
  const double tol =
      rank_tol.value_or(static_cast<double>(std::max(m.rows(), m.cols())) *
                        std::numeric_limits<double>::epsilon() * largest);
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol) ++rank;
  }
  return rank;
}

PeResult pe_check(const Signal& z, int order, std::optional<double> rank_tol) {
  if (rank_tol && !(*rank_tol > 0.0)) throw DimensionError("rank_tol must be positive");
  const HankelMatrix h = build_hankel(z, order);
  PeResult out;
  out.required_rank = z.dim() * order;
  out.numerical_rank = numerical_rank(h.entries, rank_tol);
  if (h.cols() < out.required_rank) {
    out.order_satisfied = false;
    out.diagnostic = "too short: H_L has " + std::to_string(h.cols()) + " columns, needs at least " +
                     std::to_string(out.required_rank) + " (N >= (sigma+1)L - 1)";
    return out;
  }
  out.order_satisfied = out.numerical_rank == out.required_rank;
  if (!out.order_satisfied) {
    out.diagnostic = "rank deficient: rank " + std::to_string(out.numerical_rank) + " < " +
                     std::to_string(out.required_rank);
  }
  return out;
}

}  // namespace flatdd
