#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "flatdd/signals.hpp"

namespace flatdd::plant {

/// White-box SISO system x+ = f(x, u), y = h(x) with f(0,0) = 0, h(0) = 0.
///
/// Used to generate identification data and as ground truth in tests. The
/// data-driven modules never see f or h.
struct FlatModel {
  std::string name;
  int state_dim = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)> transition;
  std::function<double(const Eigen::VectorXd&)> output;
  int relative_degree = 0;

  // White-box oracles, never available to the data-driven code.
  /// State x from the output window y_[k, k+n-1].
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> state_from_outputs;
  /// Input u_k that yields y_{k+n} = target from the window xi_k, if one exists.
  std::function<std::optional<double>(const Eigen::VectorXd& xi, double target)> inverse_input;
};

/// x1+ = x2, x2+ = u (x1^2 + 2), y = x1.
FlatModel example1_model();
/// x1+ = x2, x2+ = sin(u) / (1 + x2^2), y = x1.
FlatModel example2_model();
/// n-fold delay chain ending in x_n+ = gain * u, y = x1.
FlatModel delay_chain(int order, double gain = 1.0);
/// Scalar x+ = a x + b u, y = x.
FlatModel scalar_lti(double a, double b);

/// Preset lookup: "example1" or "example2". Throws ConfigError otherwise.
FlatModel model_by_name(const std::string& name);

/// Runs the model from x0 over u. Returns length(u) + n outputs; the last n
/// come from the undriven (u = 0) continuation of the final state.
Signal simulate(const FlatModel& model, const Eigen::VectorXd& x0, const Signal& u);

/// Model-based output matching: u_k = inverse_input(y_[k, k+n-1], y_{k+n}).
/// Empty when the model has no inverse or the reference is unreachable.
std::optional<Signal> model_inverse(const FlatModel& model, const Signal& reference);

/// Initial state consistent with the first n samples of an output sequence.
Eigen::VectorXd initial_state(const FlatModel& model, const Signal& outputs);

/// Final state after applying all of u from x0.
Eigen::VectorXd final_state(const FlatModel& model, const Eigen::VectorXd& x0, const Signal& u);

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;
};

/// i.i.d. uniform draw on [lo, hi], fully determined by seed.
Signal generate_excitation(int length, Bounds bounds, std::uint64_t seed);

struct NoiseSpec {
  Bounds bounds;
  std::uint64_t seed = 0;
};

/// y + e with e i.i.d. uniform on the given bounds, drawn from the given seed.
Signal add_noise(const Signal& y, const NoiseSpec& spec);

struct ProbePoint {
  Eigen::VectorXd state;
  double input = 0.0;
};

/// Sampled check of the relative-degree condition: the finite-difference
/// derivative of h(f_O^k(f(x,u))) in u vanishes for k < d-1 and does not
/// vanish for k = d-1 at every probe point.
bool verify_relative_degree(const FlatModel& model, int degree,
                            const std::vector<ProbePoint>& probes, double fd_step);

/// 25 probe points covering [-1, 1]^3 for a two-state model.
std::vector<ProbePoint> default_probe_grid();

}  // namespace flatdd::plant
