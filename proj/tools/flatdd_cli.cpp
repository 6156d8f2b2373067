// Command-line driver: data generation, membership and PE checks,
// data-based simulation and matching from CSV files, and the two
// reproduction experiments.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "flatdd/basis.hpp"
#include "flatdd/errors.hpp"
#include "flatdd/experiment.hpp"
#include "flatdd/matching.hpp"
#include "flatdd/plant.hpp"
#include "flatdd/repr.hpp"
#include "flatdd/signals.hpp"
#include "flatdd/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace flatdd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNonConvergence = 2;
constexpr int kExitIo = 3;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> overrides;
};

struct SolveOptions {
  std::string data;
  std::string mode = "explicit";
  std::string basis = "example1-poly";
  std::string kernel;
  double sigma = 1.0;
  double lambda = 0.1;
  int max_iter = 500;
  double rel_tol = 1e-8;
  double damping = 1.0;
  std::string out;
  std::string oracle;
};

void add_solve_options(CLI::App* cmd, SolveOptions& o) {
  cmd->add_option("--data", o.data, "Identification trajectory CSV (k,u,y)")->required();
  cmd->add_option("--mode", o.mode, "explicit | kernel")->check(CLI::IsMember({"explicit", "kernel"}));
  cmd->add_option("--basis", o.basis, "Basis name for explicit mode");
  cmd->add_option("--kernel", o.kernel, "gaussian | gaussian_plus_linear");
  cmd->add_option("--sigma", o.sigma, "Gaussian kernel width");
  cmd->add_option("--lambda", o.lambda, "Regularization weight");
  cmd->add_option("--max-iter", o.max_iter, "Iteration cap");
  cmd->add_option("--rel-tol", o.rel_tol, "Relative step tolerance");
  cmd->add_option("--damping", o.damping, "Initial damping factor");
  cmd->add_option("--out", o.out, "Output CSV")->required();
  cmd->add_option("--oracle", o.oracle, "Preset model used to score the result (example1 | example2)");
}

Mode make_mode(const SolveOptions& o, int order, const std::string& default_kernel) {
  if (o.mode == "explicit") return ExplicitMode{basis::basis_by_name(o.basis, order)};
  const std::string kind = o.kernel.empty() ? default_kernel : o.kernel;
  return KernelMode{basis::make_kernel({basis::kernel_kind_by_name(kind), o.sigma})};
}

solver::SolverControls controls_of(const SolveOptions& o) { return {o.max_iter, o.rel_tol, o.damping}; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

fs::path sidecar_path(const std::string& out) {
  fs::path p(out);
  p.replace_extension(".json");
  if (p == fs::path(out)) p += ".metrics.json";
  return p;
}

int stop_exit_code(solver::StopReason r) {
  return r == solver::StopReason::max_iter ? kExitNonConvergence : kExitOk;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

experiment::ExperimentConfig resolve_config(const GlobalOptions& g, experiment::ExperimentConfig base) {
  if (!g.config.empty()) base = experiment::load_config(g.config, base);
  if (g.seed) base.seed = *g.seed;
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    experiment::set_config_value(base, kv.substr(0, eq), kv.substr(eq + 1));
  }
  experiment::validate(base);
  return base;
}

experiment::ExperimentConfig defaults_for(const std::string& name) {
  if (name == "example1") return experiment::example1_defaults();
  if (name == "example2") return experiment::example2_defaults();
  throw ConfigError("unknown experiment '" + name + "' (example1 or example2)");
}

fs::path out_dir_of(const GlobalOptions& g) {
  return g.out_dir.empty() ? experiment::default_output_dir() : fs::path(g.out_dir);
}

int cmd_generate(const GlobalOptions& g, const std::string& preset) {
  const auto cfg = resolve_config(g, defaults_for(preset));
  const fs::path dir = out_dir_of(g);
  const auto rep = experiment::run_generate(cfg, dir);
  std::cout << "wrote " << (dir / "data.csv").string() << " (" << rep.data.length() << " rows); PE of "
            << rep.pe_signal << " at order " << cfg.horizon << ": "
            << (rep.pe_satisfied ? "satisfied" : "not satisfied") << " (rank " << rep.pe_rank << "/"
            << rep.pe_required << ")\n";
  return kExitOk;
}

int cmd_check_pe(const std::string& data, const std::string& signal, int order, const std::string& basis_name) {
  const IoTrajectory traj = read_trajectory(data);
  std::optional<Signal> z;
  if (signal == "u") z = traj.u();
  else if (signal == "y") z = traj.y();
  else z = basis::psi_sequence(basis::basis_by_name(basis_name, traj.order()), traj);
  if (order < 1 || order > z->size()) {
    throw ConfigError("--order must lie in [1, " + std::to_string(z->size()) + "]");
  }
  const PeResult pe = pe_check(*z, order);
  json j{{"signal", signal},
         {"order", order},
         {"satisfied", pe.order_satisfied},
         {"numerical_rank", pe.numerical_rank},
         {"required_rank", pe.required_rank},
         {"diagnostic", pe.diagnostic}};
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_check_membership(const std::string& data, const std::string& candidate, const std::string& basis_name,
                         std::optional<double> tol) {
  const IoTrajectory traj = read_trajectory(data);
  const IoTrajectory cand = read_trajectory(candidate);
  if (cand.order() != traj.order()) {
    throw DimensionError("candidate order " + std::to_string(cand.order()) + " differs from data order " +
                         std::to_string(traj.order()));
  }
  const auto b = basis::basis_by_name(basis_name, traj.order());
  const auto v = repr::flat_membership(traj, b, cand.length(), cand.u(), cand.y(), tol);
  print_warnings(v.warnings);
  json j{{"alpha_norm", v.alpha.norm()},
         {"residual", v.residual},
         {"tolerance", v.tolerance},
         {"is_member", v.is_member},
         {"pe_satisfied", v.pe_satisfied}};
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_simulate(const SolveOptions& o, const std::string& input_csv, const std::string& init_csv) {
  const IoTrajectory traj = read_trajectory(o.data);
  const int n = traj.order();
  const Signal input = read_series(input_csv);
  const Signal init = read_series(init_csv);
  simulate::SimProblem prob{traj, input.size() + n, input, init, make_mode(o, n, "gaussian"),
                            o.lambda, controls_of(o), std::nullopt};
  const auto res = simulate::dd_simulate(prob);
  print_warnings(res.warnings);
  write_series(o.out, "y_est", res.y);

  json j{{"objective", res.objective},
         {"initial_objective", res.initial_objective},
         {"iterations", res.iterations},
         {"converged", res.converged},
         {"stop_reason", solver::stop_reason_name(res.reason)},
         {"warnings", res.warnings}};
  if (!o.oracle.empty()) {
    const auto model = plant::model_by_name(o.oracle);
    const Signal y_true = plant::simulate(model, plant::initial_state(model, init), input);
    j["y_error_vs_oracle"] = (res.y.stacked() - y_true.stacked()).norm();
  }
  write_text(sidecar_path(o.out), j.dump(2) + "\n");
  return stop_exit_code(res.reason);
}

int cmd_match(const SolveOptions& o, const std::string& reference_csv) {
  const IoTrajectory traj = read_trajectory(o.data);
  const int n = traj.order();
  const Signal reference = read_series(reference_csv);
  matching::MatchProblem prob{traj, reference.size(), reference, make_mode(o, n, "gaussian_plus_linear"),
                              o.lambda, controls_of(o), std::nullopt};
  const auto res = matching::dd_match(prob);
  print_warnings(res.warnings);
  write_series(o.out, "u_est", res.input);

  json j{{"objective", res.objective},
         {"initial_objective", res.initial_objective},
         {"iterations", res.iterations},
         {"converged", res.converged},
         {"stop_reason", solver::stop_reason_name(res.reason)},
         {"used_linear_path", res.used_linear_path},
         {"warnings", res.warnings}};
  if (!o.oracle.empty()) {
    const auto model = plant::model_by_name(o.oracle);
    if (const auto u_ref = plant::model_inverse(model, reference)) {
      j["u_error_vs_oracle"] = (res.input.stacked() - u_ref->stacked()).norm();
    }
    const Signal achieved = plant::simulate(model, plant::initial_state(model, reference), res.input);
    j["y_error_closed_loop"] = (achieved.stacked() - reference.stacked()).norm();
  }
  write_text(sidecar_path(o.out), j.dump(2) + "\n");
  return stop_exit_code(res.reason);
}

int cmd_example(const GlobalOptions& g, const std::string& name) {
  const auto cfg = resolve_config(g, defaults_for(name));
  const fs::path dir = out_dir_of(g) / name;
  const auto m = name == "example1" ? experiment::run_example1(cfg, dir) : experiment::run_example2(cfg, dir);
  print_warnings(m.warnings);
  std::cout << name << " seed " << m.seed << ": y_err_2 = " << format_double(m.y_err_2);
  if (m.u_err_2) std::cout << ", u_err_2 = " << format_double(*m.u_err_2);
  std::cout << ", stop = " << m.stop_reason << " after " << m.iterations << " iterations\n"
            << "outputs in " << dir.string() << "\n";
  return m.stop_reason == "max_iter" ? kExitNonConvergence : kExitOk;
}

int cmd_sweep(const GlobalOptions& g, const std::string& name, std::uint64_t first_seed, int count) {
  const auto cfg = resolve_config(g, defaults_for(name));
  const fs::path dir = out_dir_of(g);
  const auto rep = experiment::run_sweep(name, cfg, first_seed, count);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  const fs::path file = dir / (name + "_sweep.json");
  write_text(file, experiment::sweep_json(rep, cfg));
  bool any_max_iter = false;
  for (const auto& r : rep.runs) {
    std::cout << "seed " << r.seed << ": y_err_2 = " << format_double(r.y_err_2);
    if (r.u_err_2) std::cout << ", u_err_2 = " << format_double(*r.u_err_2);
    std::cout << ", stop = " << r.stop_reason << "\n";
    any_max_iter = any_max_iter || r.stop_reason == "max_iter";
  }
  std::cout << "median y_err_2 = " << format_double(rep.median_y_err_2);
  if (rep.median_u_err_2) std::cout << ", median u_err_2 = " << format_double(*rep.median_u_err_2);
  std::cout << "\nwrote " << file.string() << "\n";
  return any_max_iter ? kExitNonConvergence : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven simulation and output matching for flat nonlinear SISO systems"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "key = value experiment config file");
  app.add_option("--seed", g.seed, "Seed override");
  app.add_option("--out-dir", g.out_dir, "Output directory (default: $FLATDD_OUTPUT_DIR or flatdd-out)");
  app.add_option("--set", g.overrides, "Config override key=value (repeatable)");

  std::string preset = "example1";
  auto* generate = app.add_subcommand("generate", "Simulate a preset and write data.csv + manifest.json");
  generate->add_option("--preset", preset, "example1 | example2 defaults");

  std::string pe_data, pe_signal = "u", pe_basis = "example1-poly";
  int pe_order = 0;
  auto* check_pe = app.add_subcommand("check-pe", "Persistency-of-excitation check of a data file");
  check_pe->add_option("--data", pe_data, "Trajectory CSV")->required();
  check_pe->add_option("--order", pe_order, "Excitation order L")->required();
  check_pe->add_option("--signal", pe_signal, "u | y | psi")->check(CLI::IsMember({"u", "y", "psi"}));
  check_pe->add_option("--basis", pe_basis, "Basis for --signal psi");

  std::string mem_data, mem_candidate, mem_basis = "example1-poly";
  std::optional<double> mem_tol;
  auto* check_mem = app.add_subcommand("check-membership", "Is a candidate trajectory represented by the data?");
  check_mem->add_option("--data", mem_data, "Identification trajectory CSV")->required();
  check_mem->add_option("--candidate", mem_candidate, "Candidate trajectory CSV of length L")->required();
  check_mem->add_option("--basis", mem_basis, "Basis name");
  check_mem->add_option("--tol", mem_tol, "Residual tolerance");

  SolveOptions sim_opts;
  std::string sim_input, sim_init;
  auto* sim = app.add_subcommand("simulate", "Data-based simulation for a new input");
  add_solve_options(sim, sim_opts);
  sim->add_option("--input", sim_input, "Input series CSV (k,u), length L-n")->required();
  sim->add_option("--init", sim_init, "Initial outputs CSV (k,y), length n")->required();

  SolveOptions match_opts;
  std::string match_reference;
  auto* match = app.add_subcommand("match", "Data-based output matching for a reference");
  add_solve_options(match, match_opts);
  match->add_option("--reference", match_reference, "Reference series CSV (k,y), length L")->required();

  auto* ex1 = app.add_subcommand("example1", "Output matching experiment with a sinusoidal reference");
  auto* ex2 = app.add_subcommand("example2", "Kernel simulation experiment for a fresh input");

  std::string sweep_name = "example1";
  std::uint64_t sweep_first = 0;
  int sweep_count = 10;
  auto* sweep = app.add_subcommand("sweep", "Repeat an experiment over consecutive seeds");
  sweep->add_option("--experiment", sweep_name, "example1 | example2")
      ->check(CLI::IsMember({"example1", "example2"}));
  sweep->add_option("--first-seed", sweep_first, "First seed");
  sweep->add_option("--count", sweep_count, "Number of seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*generate) return cmd_generate(g, preset);
    if (*check_pe) return cmd_check_pe(pe_data, pe_signal, pe_order, pe_basis);
    if (*check_mem) return cmd_check_membership(mem_data, mem_candidate, mem_basis, mem_tol);
    if (*sim) return cmd_simulate(sim_opts, sim_input, sim_init);
    if (*match) return cmd_match(match_opts, match_reference);
    if (*ex1) return cmd_example(g, "example1");
    if (*ex2) return cmd_example(g, "example2");
    if (*sweep) return cmd_sweep(g, sweep_name, sweep_first, sweep_count);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const SingularError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitValidation;
}
