#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flatdd/plant.hpp"
#include "flatdd/signals.hpp"

namespace flatdd::experiment {

/// Flat key = value experiment description.
struct ExperimentConfig {
  std::string model = "example1";
  int data_length = 500;  // N
  int horizon = 50;       // L
  plant::Bounds input{-0.5, 0.5};
  plant::Bounds noise{-0.025, 0.025};
  std::uint64_t seed = 0;
  std::string mode = "explicit";  // explicit | kernel
  std::string basis = "example1-poly";
  std::string kernel = "gaussian";  // gaussian | gaussian_plus_linear
  double sigma = 1.0;
  double lambda = 0.1;
  /// Sinusoidal matching reference y_k = amplitude sin(2 pi k / period).
  double ref_amplitude = 1.0;
  double ref_period = 25.0;
  int max_iter = 500;
  double rel_tol = 1e-8;
  double damping = 1.0;
};

ExperimentConfig example1_defaults();
ExperimentConfig example2_defaults();

/// Applies "key = value" lines (with '#' comments) on top of base.
/// Unknown keys and malformed values raise ConfigError naming the key.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
std::string format_config(const ExperimentConfig& cfg);
/// Sets one key from its text value.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Checks every field against the module preconditions; throws ConfigError
/// naming the offending fields.
void validate(const ExperimentConfig& cfg);

/// Independent RNG stream for a given purpose.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

inline constexpr std::uint64_t kInputStream = 0;
inline constexpr std::uint64_t kNoiseStream = 1;
inline constexpr std::uint64_t kFreshInputStream = 2;

/// Open-loop data: seeded excitation, simulation from x = 0, output noise.
IoTrajectory generate_data(const ExperimentConfig& cfg);

/// Default output directory: $FLATDD_OUTPUT_DIR, else "flatdd-out".
std::filesystem::path default_output_dir();

struct GenerateReport {
  IoTrajectory data;
  bool pe_satisfied = false;
  int pe_rank = 0;
  int pe_required = 0;
  std::string pe_signal;  // "psi" or "u"
};

/// Writes data.csv and manifest.json into out_dir.
GenerateReport run_generate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct RunMetrics {
  std::string experiment;
  std::uint64_t seed = 0;
  double objective = 0.0;
  double initial_objective = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string stop_reason;
  double y_err_2 = 0.0;
  std::optional<double> u_err_2;
  std::vector<std::string> warnings;
};

/// Output matching on the first preset with a sinusoidal reference.
///
/// Writes config.txt, data.csv, example1_inputs.csv (k,u_model,u_data),
/// example1_outputs.csv (k,y_ref,y_achieved) and metrics.json when out_dir is
/// given.
RunMetrics run_example1(const ExperimentConfig& cfg,
                        const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Kernel data-based simulation on the second preset for a fresh input.
///
/// Writes config.txt, data.csv, example2_input.csv (k,u),
/// example2_outputs.csv (k,y_model,y_data) and metrics.json.
RunMetrics run_example2(const ExperimentConfig& cfg,
                        const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Matching reference y_k = amplitude sin(2 pi k / period), k = 0 ... L-1.
Signal sinusoid_reference(const ExperimentConfig& cfg);

struct SweepReport {
  std::string experiment;
  std::vector<RunMetrics> runs;
  double median_y_err_2 = 0.0;
  std::optional<double> median_u_err_2;
};

/// Repeats run_example1 or run_example2 for seeds first_seed ... first_seed+count-1.
SweepReport run_sweep(const std::string& experiment, const ExperimentConfig& cfg,
                      std::uint64_t first_seed, int count);

double median(std::vector<double> values);

/// Stable JSON text (sorted keys, trailing newline).
std::string metrics_json(const RunMetrics& m, const ExperimentConfig& cfg);
std::string sweep_json(const SweepReport& s, const ExperimentConfig& cfg);

/// Keys every metrics.json carries.
const std::vector<std::string>& metrics_schema_keys();

}  // namespace flatdd::experiment
