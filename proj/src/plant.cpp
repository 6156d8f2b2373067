#include "flatdd/plant.hpp"

#include <cmath>
#include <random>
#include <string>

#include "flatdd/errors.hpp"

namespace flatdd::plant {

namespace {

void check_finite(const Eigen::VectorXd& x, int step) {
  if (!x.allFinite()) {
    throw DivergenceError("non-finite state at step " + std::to_string(step));
  }
}

// std::uniform_real_distribution is implementation-defined; map the top 53
// bits of the engine output directly so draws are identical on every platform.
double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<double> uniform_draws(int length, Bounds bounds, std::uint64_t seed) {
  if (!(bounds.lo <= bounds.hi)) {
    throw ConfigError("uniform bounds require lo <= hi");
  }
  std::mt19937_64 rng(seed);
  std::vector<double> v(static_cast<std::size_t>(length));
  const double width = bounds.hi - bounds.lo;
  for (auto& x : v) x = bounds.lo + width * unit_draw(rng);
  return v;
}

}  // namespace

FlatModel example1_model() {
  FlatModel m;
  m.name = "example1";
  m.state_dim = 2;
  m.relative_degree = 2;
  m.transition = [](const Eigen::VectorXd& x, double u) {
    Eigen::VectorXd next(2);
    next << x(1), u * (x(0) * x(0) + 2.0);
    return next;
  };
  m.output = [](const Eigen::VectorXd& x) { return x(0); };
  m.state_from_outputs = [](const Eigen::VectorXd& xi) { return xi; };
  m.inverse_input = [](const Eigen::VectorXd& xi, double target) -> std::optional<double> {
    return target / (xi(0) * xi(0) + 2.0);
  };
  return m;
}

FlatModel example2_model() {
  FlatModel m;
  m.name = "example2";
  m.state_dim = 2;
  m.relative_degree = 2;
  m.transition = [](const Eigen::VectorXd& x, double u) {
    Eigen::VectorXd next(2);
    next << x(1), std::sin(u) / (1.0 + x(1) * x(1));
    return next;
  };
  m.output = [](const Eigen::VectorXd& x) { return x(0); };
  m.state_from_outputs = [](const Eigen::VectorXd& xi) { return xi; };
  // sin is only invertible on (-pi/2, pi/2); that branch is the oracle.
  m.inverse_input = [](const Eigen::VectorXd& xi, double target) -> std::optional<double> {
    const double s = target * (1.0 + xi(1) * xi(1));
    if (!(std::abs(s) < 1.0)) return std::nullopt;
    return std::asin(s);
  };
  return m;
}

FlatModel delay_chain(int order, double gain) {
  if (order < 1) throw ConfigError("delay chain order must be >= 1");
  FlatModel m;
  m.name = "delay_chain";
  m.state_dim = order;
  m.relative_degree = order;
  m.transition = [order, gain](const Eigen::VectorXd& x, double u) {
    Eigen::VectorXd next(order);
    next.head(order - 1) = x.tail(order - 1);
    next(order - 1) = gain * u;
    return next;
  };
  m.output = [](const Eigen::VectorXd& x) { return x(0); };
  m.state_from_outputs = [](const Eigen::VectorXd& xi) { return xi; };
  m.inverse_input = [gain](const Eigen::VectorXd&, double target) -> std::optional<double> {
    if (gain == 0.0) return std::nullopt;
    return target / gain;
  };
  return m;
}

FlatModel scalar_lti(double a, double b) {
  FlatModel m;
  m.name = "scalar_lti";
  m.state_dim = 1;
  m.relative_degree = 1;
  m.transition = [a, b](const Eigen::VectorXd& x, double u) {
    return Eigen::VectorXd::Constant(1, a * x(0) + b * u);
  };
  m.output = [](const Eigen::VectorXd& x) { return x(0); };
  m.state_from_outputs = [](const Eigen::VectorXd& xi) { return xi; };
  m.inverse_input = [a, b](const Eigen::VectorXd& xi, double target) -> std::optional<double> {
    if (b == 0.0) return std::nullopt;
    return (target - a * xi(0)) / b;
  };
  return m;
}

FlatModel model_by_name(const std::string& name) {
  if (name == "example1") return example1_model();
  if (name == "example2") return example2_model();
  throw ConfigError("unknown model '" + name + "' (expected example1 or example2)");
}

Eigen::VectorXd final_state(const FlatModel& model, const Eigen::VectorXd& x0, const Signal& u) {
  if (x0.size() != model.state_dim) {
    throw DimensionError("initial state has dimension " + std::to_string(x0.size()) +
                         ", model expects " + std::to_string(model.state_dim));
  }
  Eigen::VectorXd x = x0;
  check_finite(x, 0);
  for (int k = 0; k < u.size(); ++k) {
    x = model.transition(x, u[k]);
    check_finite(x, k + 1);
  }
  return x;
}

Signal simulate(const FlatModel& model, const Eigen::VectorXd& x0, const Signal& u) {
  if (x0.size() != model.state_dim) {
    throw DimensionError("initial state has dimension " + std::to_string(x0.size()) +
                         ", model expects " + std::to_string(model.state_dim));
  }
  const int steps = u.size();
  const int n = model.state_dim;
  std::vector<double> y;
  y.reserve(static_cast<std::size_t>(steps + n));
  Eigen::VectorXd x = x0;
  check_finite(x, 0);
  for (int k = 0; k < steps + n; ++k) {
    y.push_back(model.output(x));
    if (k + 1 == steps + n) break;
    x = model.transition(x, k < steps ? u[k] : 0.0);
    check_finite(x, k + 1);
  }
  return Signal(y);
}

std::optional<Signal> model_inverse(const FlatModel& model, const Signal& reference) {
  const int n = model.state_dim;
  if (!model.inverse_input || reference.size() <= n) return std::nullopt;
  const Eigen::VectorXd y = reference.stacked();
  std::vector<double> u;
  for (int k = 0; k + n < reference.size(); ++k) {
    const auto uk = model.inverse_input(y.segment(k, n), y(k + n));
    if (!uk) return std::nullopt;
    u.push_back(*uk);
  }
  return Signal(u);
}

Eigen::VectorXd initial_state(const FlatModel& model, const Signal& outputs) {
  const int n = model.state_dim;
  if (!model.state_from_outputs) throw ConfigError("model '" + model.name + "' has no state map");
  if (outputs.size() < n) throw DimensionError("need at least n outputs to fix the initial state");
  return model.state_from_outputs(outputs.stacked().head(n));
}

Signal generate_excitation(int length, Bounds bounds, std::uint64_t seed) {
  if (length < 1) throw ConfigError("excitation length must be >= 1");
  return Signal(uniform_draws(length, bounds, seed));
}

Signal add_noise(const Signal& y, const NoiseSpec& spec) {
  if (y.dim() != 1) throw DimensionError("add_noise expects a scalar signal");
  auto e = uniform_draws(y.size(), spec.bounds, spec.seed);
  for (int k = 0; k < y.size(); ++k) e[static_cast<std::size_t>(k)] += y[k];
  return Signal(e);
}

bool verify_relative_degree(const FlatModel& model, int degree,
                            const std::vector<ProbePoint>& probes, double fd_step) {
  if (probes.empty()) throw ConfigError("relative degree check needs at least one probe point");
  if (!(fd_step > 0.0)) throw ConfigError("fd_step must be positive");
  if (degree < 1) return false;

  // h(f_O^k(f(x, u)))
  auto shifted_output = [&](const Eigen::VectorXd& x, double u, int k) {
    Eigen::VectorXd s = model.transition(x, u);
    for (int i = 0; i < k; ++i) s = model.transition(s, 0.0);
    return model.output(s);
  };

  for (const auto& p : probes) {
    if (p.state.size() != model.state_dim) {
      throw DimensionError("probe state dimension does not match the model");
    }
    for (int k = 0; k < degree; ++k) {
      const double value = shifted_output(p.state, p.input, k);
      const double deriv = (shifted_output(p.state, p.input + fd_step, k) -
                            shifted_output(p.state, p.input - fd_step, k)) /
                           (2.0 * fd_step);
      const double tol = 1e-8 * (1.0 + std::abs(value));
      const bool vanishes = std::abs(deriv) <= tol;
      if (k < degree - 1 && !vanishes) return false;
      if (k == degree - 1 && vanishes) return false;
    }
  }
  return true;
}

std::vector<ProbePoint> default_probe_grid() {
  std::vector<ProbePoint> probes;
  const double levels[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      Eigen::VectorXd x(2);
      x << levels[i], levels[j];
      // Latin-square assignment so every input level meets every state level.
      probes.push_back({x, levels[(i + 2 * j) % 5]});
    }
  }
  return probes;
}

}  // namespace flatdd::plant
