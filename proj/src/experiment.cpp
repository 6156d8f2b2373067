#include "flatdd/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "flatdd/basis.hpp"
#include "flatdd/errors.hpp"
#include "flatdd/matching.hpp"
#include "flatdd/simulate.hpp"
#include "json.hpp"

namespace flatdd::experiment {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

// Columns may have different lengths; missing cells stay empty.
void write_columns(const std::filesystem::path& path, const std::vector<std::string>& names,
                   const std::vector<const Signal*>& columns) {
  std::string out = "k";
  for (const auto& n : names) out += "," + n;
  out += '\n';
  int rows = 0;
  for (const auto* c : columns) rows = std::max(rows, c->size());
  for (int k = 0; k < rows; ++k) {
    out += std::to_string(k);
    for (const auto* c : columns) {
      out += ',';
      if (k < c->size()) out += format_double((*c)[k]);
    }
    out += '\n';
  }
  write_text(path, out);
}

void prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

json config_json(const ExperimentConfig& c) {
  return json{{"model", c.model},
              {"N", c.data_length},
              {"L", c.horizon},
              {"input_lo", c.input.lo},
              {"input_hi", c.input.hi},
              {"noise_lo", c.noise.lo},
              {"noise_hi", c.noise.hi},
              {"seed", c.seed},
              {"mode", c.mode},
              {"basis", c.basis},
              {"kernel", c.kernel},
              {"sigma", c.sigma},
              {"lambda", c.lambda},
              {"ref_amplitude", c.ref_amplitude},
              {"ref_period", c.ref_period},
              {"max_iter", c.max_iter},
              {"rel_tol", c.rel_tol},
              {"damping", c.damping}};
}

json run_json(const RunMetrics& m) {
  json j{{"experiment", m.experiment},
         {"seed", m.seed},
         {"objective", m.objective},
         {"initial_objective", m.initial_objective},
         {"converged", m.converged},
         {"iterations", m.iterations},
         {"stop_reason", m.stop_reason},
         {"y_err_2", m.y_err_2},
         {"warnings", m.warnings}};
  if (m.u_err_2) j["u_err_2"] = *m.u_err_2;
  return j;
}

Mode make_mode(const ExperimentConfig& cfg, int order) {
  if (cfg.mode == "explicit") return ExplicitMode{basis::basis_by_name(cfg.basis, order)};
  return KernelMode{basis::make_kernel({basis::kernel_kind_by_name(cfg.kernel), cfg.sigma})};
}

solver::SolverControls controls_of(const ExperimentConfig& cfg) {
  return {cfg.max_iter, cfg.rel_tol, cfg.damping};
}

double distance(const Signal& a, const Signal& b) { return (a.stacked() - b.stacked()).norm(); }

}  // namespace

ExperimentConfig example1_defaults() { return ExperimentConfig{}; }

ExperimentConfig example2_defaults() {
  ExperimentConfig c;
  c.model = "example2";
  c.data_length = 750;
  c.horizon = 50;
  c.input = {-1.0, 1.0};
  c.noise = {-0.05, 0.05};
  c.mode = "kernel";
  c.kernel = "gaussian";
  c.sigma = 1.0;
  c.lambda = 0.1;
  return c;
}

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "model") c.model = value;
  else if (key == "N") c.data_length = parse_value<int>(key, value);
  else if (key == "L") c.horizon = parse_value<int>(key, value);
  else if (key == "input_lo") c.input.lo = parse_value<double>(key, value);
  else if (key == "input_hi") c.input.hi = parse_value<double>(key, value);
  else if (key == "noise_lo") c.noise.lo = parse_value<double>(key, value);
  else if (key == "noise_hi") c.noise.hi = parse_value<double>(key, value);
  else if (key == "seed") c.seed = parse_value<std::uint64_t>(key, value);
  else if (key == "mode") c.mode = value;
  else if (key == "basis") c.basis = value;
  else if (key == "kernel") c.kernel = value;
  else if (key == "sigma") c.sigma = parse_value<double>(key, value);
  else if (key == "lambda") c.lambda = parse_value<double>(key, value);
  else if (key == "ref_amplitude") c.ref_amplitude = parse_value<double>(key, value);
  else if (key == "ref_period") c.ref_period = parse_value<double>(key, value);
  else if (key == "max_iter") c.max_iter = parse_value<int>(key, value);
  else if (key == "rel_tol") c.rel_tol = parse_value<double>(key, value);
  else if (key == "damping") c.damping = parse_value<double>(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string value = trim(std::string_view(content).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    set_config_value(base, trim(std::string_view(content).substr(0, eq)), value);
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string format_config(const ExperimentConfig& c) {
  std::string out;
  auto kv = [&out](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  kv("model", "\"" + c.model + "\"");
  kv("N", std::to_string(c.data_length));
  kv("L", std::to_string(c.horizon));
  kv("input_lo", format_double(c.input.lo));
  kv("input_hi", format_double(c.input.hi));
  kv("noise_lo", format_double(c.noise.lo));
  kv("noise_hi", format_double(c.noise.hi));
  kv("seed", std::to_string(c.seed));
  kv("mode", "\"" + c.mode + "\"");
  kv("basis", "\"" + c.basis + "\"");
  kv("kernel", "\"" + c.kernel + "\"");
  kv("sigma", format_double(c.sigma));
  kv("lambda", format_double(c.lambda));
  kv("ref_amplitude", format_double(c.ref_amplitude));
  kv("ref_period", format_double(c.ref_period));
  kv("max_iter", std::to_string(c.max_iter));
  kv("rel_tol", format_double(c.rel_tol));
  kv("damping", format_double(c.damping));
  return out;
}

void validate(const ExperimentConfig& c) {
  std::vector<std::string> bad;
  int order = 0;
  try {
    order = plant::model_by_name(c.model).state_dim;
  } catch (const ConfigError&) {
    bad.push_back("model (unknown '" + c.model + "')");
  }
  if (c.data_length < 1) bad.push_back("N (must be >= 1)");
  if (order > 0 && c.horizon <= order) bad.push_back("L (must exceed the model order)");
  if (c.horizon > c.data_length) bad.push_back("L (must not exceed N)");
  if (order > 0 && c.data_length <= order) bad.push_back("N (must exceed the model order)");
  if (!(c.input.lo <= c.input.hi)) bad.push_back("input_lo/input_hi (lo > hi)");
  if (!(c.noise.lo <= c.noise.hi)) bad.push_back("noise_lo/noise_hi (lo > hi)");
  if (c.mode != "explicit" && c.mode != "kernel") bad.push_back("mode (explicit or kernel)");
  if (c.mode == "explicit" && order > 0) {
    try {
      basis::basis_by_name(c.basis, order);
    } catch (const ConfigError& e) {
      bad.push_back(std::string("basis (") + e.what() + ")");
    }
  }
  if (c.mode == "kernel") {
    try {
      basis::kernel_kind_by_name(c.kernel);
    } catch (const ConfigError&) {
      bad.push_back("kernel (gaussian or gaussian_plus_linear)");
    }
  }
  if (!(c.sigma > 0.0)) bad.push_back("sigma (must be > 0)");
  if (!(c.lambda > 0.0)) bad.push_back("lambda (must be > 0)");
  if (!(c.ref_period > 0.0)) bad.push_back("ref_period (must be > 0)");
  if (c.max_iter < 1) bad.push_back("max_iter (must be >= 1)");
  if (!(c.rel_tol > 0.0)) bad.push_back("rel_tol (must be > 0)");
  if (!(c.damping > 0.0)) bad.push_back("damping (must be > 0)");
  if (!bad.empty()) {
    std::string msg = "invalid config:";
    for (const auto& b : bad) msg += " " + b + ";";
    throw ConfigError(msg);
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return seed + stream * 0x9E3779B97F4A7C15ULL;
}

IoTrajectory generate_data(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto model = plant::model_by_name(cfg.model);
  const int n = model.state_dim;
  const Signal u = plant::generate_excitation(cfg.data_length - n, cfg.input,
                                              derive_seed(cfg.seed, kInputStream));
  const Signal y = plant::simulate(model, Eigen::VectorXd::Zero(n), u);
  const Signal y_noisy = plant::add_noise(y, {cfg.noise, derive_seed(cfg.seed, kNoiseStream)});
  return IoTrajectory(u, y_noisy, n);
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("FLATDD_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "flatdd-out";
}

GenerateReport run_generate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  GenerateReport rep{generate_data(cfg), false, 0, 0, {}};
  const int n = rep.data.order();
  PeResult pe;
  if (cfg.mode == "explicit") {
    const auto b = basis::basis_by_name(cfg.basis, n);
    const Signal psi = basis::psi_sequence(b, rep.data);
    rep.pe_signal = "psi";
    if (cfg.horizon <= psi.size()) {
      pe = pe_check(psi, cfg.horizon);
    } else {
      pe.required_rank = b.size() * cfg.horizon;
      pe.diagnostic = "too short";
    }
  } else {
    rep.pe_signal = "u";
    pe = pe_check(rep.data.u(), std::min(cfg.horizon, rep.data.u().size()));
  }
  rep.pe_satisfied = pe.order_satisfied;
  rep.pe_rank = pe.numerical_rank;
  rep.pe_required = pe.required_rank;

  prepare_dir(out_dir);
  write_trajectory(out_dir / "data.csv", rep.data);
  json manifest{{"config", config_json(cfg)},
                {"rows", rep.data.length()},
                {"order", n},
                {"pe", {{"signal", rep.pe_signal},
                        {"order", cfg.horizon},
                        {"satisfied", pe.order_satisfied},
                        {"numerical_rank", pe.numerical_rank},
                        {"required_rank", pe.required_rank},
                        {"diagnostic", pe.diagnostic}}}};
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return rep;
}

Signal sinusoid_reference(const ExperimentConfig& cfg) {
  std::vector<double> y(static_cast<std::size_t>(cfg.horizon));
  for (int k = 0; k < cfg.horizon; ++k) {
    y[static_cast<std::size_t>(k)] = cfg.ref_amplitude * std::sin(2.0 * M_PI * k / cfg.ref_period);
  }
  return Signal(y);
}

RunMetrics run_example1(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out_dir) {
  validate(cfg);
  const auto model = plant::model_by_name(cfg.model);
  const IoTrajectory data = generate_data(cfg);
  const Signal reference = sinusoid_reference(cfg);

  matching::MatchProblem prob{data, cfg.horizon, reference, make_mode(cfg, model.state_dim), cfg.lambda,
                              controls_of(cfg), std::nullopt};
  const auto res = matching::dd_match(prob);
  const Signal achieved = plant::simulate(model, plant::initial_state(model, reference), res.input);
  const auto u_model = plant::model_inverse(model, reference);

  RunMetrics m{"example1", cfg.seed, res.objective, res.initial_objective, res.converged,
               res.iterations, solver::stop_reason_name(res.reason), distance(achieved, reference),
               std::nullopt, res.warnings};
  if (u_model) m.u_err_2 = distance(res.input, *u_model);

  if (out_dir) {
    prepare_dir(*out_dir);
    write_text(*out_dir / "config.txt", format_config(cfg));
    write_trajectory(*out_dir / "data.csv", data);
    if (u_model) {
      write_columns(*out_dir / "example1_inputs.csv", {"u_model", "u_data"}, {&*u_model, &res.input});
    } else {
      write_columns(*out_dir / "example1_inputs.csv", {"u_data"}, {&res.input});
    }
    write_columns(*out_dir / "example1_outputs.csv", {"y_ref", "y_achieved"}, {&reference, &achieved});
    write_text(*out_dir / "metrics.json", metrics_json(m, cfg));
  }
  return m;
}

RunMetrics run_example2(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out_dir) {
  validate(cfg);
  const auto model = plant::model_by_name(cfg.model);
  const int n = model.state_dim;
  const IoTrajectory data = generate_data(cfg);
  const Signal input = plant::generate_excitation(cfg.horizon - n, cfg.input,
                                                  derive_seed(cfg.seed, kFreshInputStream));
  const Signal y_true = plant::simulate(model, Eigen::VectorXd::Zero(n), input);
  const Signal init(Eigen::VectorXd(y_true.stacked().head(n)));

  simulate::SimProblem prob{data, cfg.horizon, input, init, make_mode(cfg, n), cfg.lambda,
                            controls_of(cfg), std::nullopt};
  const auto res = simulate::dd_simulate(prob);

  RunMetrics m{"example2", cfg.seed, res.objective, res.initial_objective, res.converged,
               res.iterations, solver::stop_reason_name(res.reason), distance(res.y, y_true),
               std::nullopt, res.warnings};
  if (out_dir) {
    prepare_dir(*out_dir);
    write_text(*out_dir / "config.txt", format_config(cfg));
    write_trajectory(*out_dir / "data.csv", data);
    write_series(*out_dir / "example2_input.csv", "u", input);
    write_columns(*out_dir / "example2_outputs.csv", {"y_model", "y_data"}, {&y_true, &res.y});
    write_text(*out_dir / "metrics.json", metrics_json(m, cfg));
  }
  return m;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ConfigError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

SweepReport run_sweep(const std::string& experiment, const ExperimentConfig& cfg, std::uint64_t first_seed,
                      int count) {
  if (count < 1) throw ConfigError("sweep needs at least one seed");
  if (experiment != "example1" && experiment != "example2") {
    throw ConfigError("sweep experiment must be example1 or example2");
  }
  SweepReport rep;
  rep.experiment = experiment;
  std::vector<double> y_errs, u_errs;
  for (int i = 0; i < count; ++i) {
    ExperimentConfig c = cfg;
    c.seed = first_seed + static_cast<std::uint64_t>(i);
    auto m = experiment == "example1" ? run_example1(c) : run_example2(c);
    y_errs.push_back(m.y_err_2);
    if (m.u_err_2) u_errs.push_back(*m.u_err_2);
    rep.runs.push_back(std::move(m));
  }
  rep.median_y_err_2 = median(y_errs);
  if (u_errs.size() == rep.runs.size()) rep.median_u_err_2 = median(u_errs);
  return rep;
}

std::string metrics_json(const RunMetrics& m, const ExperimentConfig& cfg) {
  json j = run_json(m);
  j["config"] = config_json(cfg);
  return j.dump(2) + "\n";
}

std::string sweep_json(const SweepReport& s, const ExperimentConfig& cfg) {
  json runs = json::array();
  for (const auto& r : s.runs) runs.push_back(run_json(r));
  json j{{"experiment", s.experiment},
         {"config", config_json(cfg)},
         {"runs", runs},
         {"median_y_err_2", s.median_y_err_2}};
  if (s.median_u_err_2) j["median_u_err_2"] = *s.median_u_err_2;
  return j.dump(2) + "\n";
}

const std::vector<std::string>& metrics_schema_keys() {
  static const std::vector<std::string> keys = {
      "experiment", "seed",    "objective", "initial_objective", "converged",
      "iterations", "stop_reason", "y_err_2", "warnings",          "config"};
  return keys;
}

}  // namespace flatdd::experiment
