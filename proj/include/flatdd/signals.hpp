#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace flatdd {

/// Finite sequence of real samples z_0 ... z_{N-1}, each of dimension sigma.
///
/// Samples are stored as the columns of a (sigma x N) matrix. Immutable after
/// construction.
class Signal {
 public:
  /// Scalar signal.
  explicit Signal(const std::vector<double>& samples);
  explicit Signal(const Eigen::VectorXd& samples);
  /// Vector-valued signal, one sample per column.
  explicit Signal(Eigen::MatrixXd samples);

  [[nodiscard]] int size() const { return static_cast<int>(data_.cols()); }
  [[nodiscard]] int dim() const { return static_cast<int>(data_.rows()); }

  [[nodiscard]] auto sample(int k) const { return data_.col(k); }
  /// Scalar access; only valid when dim() == 1.
  [[nodiscard]] double operator[](int k) const { return data_(0, k); }

  /// Samples l ... j inclusive. Requires 0 <= l < j <= N-1.
  [[nodiscard]] Signal window(int first, int last) const;

  /// Stacked column vector [z_0; z_1; ...; z_{N-1}].
  [[nodiscard]] Eigen::VectorXd stacked() const;
  [[nodiscard]] const Eigen::MatrixXd& samples() const { return data_; }
  [[nodiscard]] std::vector<double> to_vector() const;

  bool operator==(const Signal& other) const { return data_ == other.data_; }

 private:
  Eigen::MatrixXd data_;
};

/// Input/output record of a system of order n: u has n fewer samples than y.
class IoTrajectory {
 public:
  IoTrajectory(Signal u, Signal y, int order);

  [[nodiscard]] const Signal& u() const { return u_; }
  [[nodiscard]] const Signal& y() const { return y_; }
  [[nodiscard]] int order() const { return order_; }
  /// Output length N.
  [[nodiscard]] int length() const { return y_.size(); }

  bool operator==(const IoTrajectory& other) const = default;

 private:
  Signal u_;
  Signal y_;
  int order_;
};

/// Depth-L block Hankel arrangement of a sequence.
///
/// Column j stacks z_j ... z_{j+L-1}; block (i, j) is z_{i+j}.
struct HankelMatrix {
  Eigen::MatrixXd entries;
  int depth = 0;
  int source_length = 0;
  int sample_dim = 1;

  [[nodiscard]] int cols() const { return static_cast<int>(entries.cols()); }
  [[nodiscard]] auto block(int i, int j) const {
    return entries.block(static_cast<Eigen::Index>(i) * sample_dim, j, sample_dim, 1);
  }
  /// Block row h_i, i.e. rows i*sigma ... (i+1)*sigma - 1.
  [[nodiscard]] auto block_row(int i) const {
    return entries.middleRows(static_cast<Eigen::Index>(i) * sample_dim, sample_dim);
  }
};

HankelMatrix build_hankel(const Signal& z, int depth);

struct PeResult {
  bool order_satisfied = false;
  int numerical_rank = 0;
  int required_rank = 0;
  /// Empty when the order is satisfied.
  std::string diagnostic;
};

/// Persistency-of-excitation check: rank(H_L(z)) == sigma * L.
///
/// The numerical rank counts singular values above rank_tol; the default is
/// max(rows, cols) * eps * largest singular value.
PeResult pe_check(const Signal& z, int order, std::optional<double> rank_tol = std::nullopt);

/// Numerical rank of a matrix with the same thresholding rule as pe_check.
int numerical_rank(const Eigen::MatrixXd& m, std::optional<double> rank_tol = std::nullopt);

// Trajectory CSV: header "k,u,y"; rows k = 0..N-1; u empty for k >= N-n.
void write_trajectory(const std::filesystem::path& path, const IoTrajectory& traj);
IoTrajectory read_trajectory(const std::filesystem::path& path);
std::string format_trajectory(const IoTrajectory& traj);
IoTrajectory parse_trajectory(const std::string& text);

// Single-column series CSV: header "k,<column>".
void write_series(const std::filesystem::path& path, const std::string& column, const Signal& s);
Signal read_series(const std::filesystem::path& path);

/// 17 significant digits, enough to round-trip any double exactly.
std::string format_double(double v);

}  // namespace flatdd
