#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "flatdd/errors.hpp"
#include "flatdd/experiment.hpp"
#include "json.hpp"

using namespace flatdd;
using namespace flatdd::experiment;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("flatdd_experiment_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + FLATDD_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

ExperimentConfig reduced_example2(double noise) {
  auto cfg = example2_defaults();
  cfg.data_length = 200;
  cfg.horizon = 20;
  cfg.noise = {-noise, noise};
  return cfg;
}

}  // namespace

TEST_CASE("config defaults, parsing and validation") {
  const auto e1 = example1_defaults();
  CHECK(e1.model == "example1");
  CHECK(e1.data_length == 500);
  CHECK(e1.horizon == 50);
  CHECK(e1.input.hi == 0.5);
  CHECK(e1.noise.hi == 0.025);
  CHECK(e1.lambda == 0.1);
  CHECK(e1.basis == "example1-poly");
  const auto e2 = example2_defaults();
  CHECK(e2.model == "example2");
  CHECK(e2.data_length == 750);
  CHECK(e2.input.lo == -1.0);
  CHECK(e2.noise.hi == 0.05);
  CHECK(e2.mode == "kernel");
  CHECK(e2.sigma == 1.0);

  auto cfg = e2;
  cfg.seed = 12345678901234ULL;
  cfg.lambda = 0.123456789012345;
  CHECK(format_config(parse_config(format_config(cfg))) == format_config(cfg));
  const auto parsed = parse_config("# comment\nN = 80   # trailing\nmode = \"kernel\"\n\nsigma=2.5\n", e1);
  CHECK(parsed.data_length == 80);
  CHECK(parsed.mode == "kernel");
  CHECK(parsed.sigma == 2.5);
  CHECK(parsed.horizon == 50);

  CHECK_THROWS_AS(parse_config("colour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("N = 12x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("just text\n"), ConfigError);
  CHECK_THROWS_AS(load_config(fs::temp_directory_path() / "flatdd_no_such_config.txt"), IoError);

  auto bad = e1;
  bad.lambda = 0.0;
  bad.horizon = 2;
  bad.model = "example9";
  try {
    validate(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("lambda") != std::string::npos);
    CHECK(msg.find("model") != std::string::npos);
  }
  auto short_l = e1;
  short_l.horizon = 2;
  CHECK_THROWS_AS(validate(short_l), ConfigError);
  CHECK_NOTHROW(validate(e1));
  CHECK_NOTHROW(validate(e2));
}

TEST_CASE("seed streams and medians") {
  CHECK(derive_seed(7, kInputStream) == 7);
  CHECK(derive_seed(7, kNoiseStream) != derive_seed(7, kInputStream));
  CHECK(derive_seed(7, kNoiseStream) != derive_seed(8, kNoiseStream));
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS(median({}));
}

TEST_CASE("generated data files") {
  const auto dir = fresh_dir("generate");
  auto cfg = example1_defaults();
  const auto rep = run_generate(cfg, dir);
  const auto lines = lines_of(slurp(dir / "data.csv"));
  REQUIRE(lines.size() == 501);
  CHECK(lines[0] == "k,u,y");
  CHECK(lines[499].rfind("498,,", 0) == 0);
  CHECK(lines[500].rfind("499,,", 0) == 0);
  CHECK(lines[498].rfind("497,,", 0) != 0);
  CHECK(rep.data.length() == 500);
  CHECK(rep.pe_signal == "psi");
  CHECK(rep.pe_required == 6 * 50);

  const auto manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["config"]["N"] == 500);
  CHECK(manifest["pe"]["required_rank"] == 300);

  // Byte-identical on repetition.
  const std::string first = slurp(dir / "data.csv");
  run_generate(cfg, dir);
  CHECK(slurp(dir / "data.csv") == first);

  // Zero noise gives the oracle simulation.
  cfg.noise = {0.0, 0.0};
  const auto clean = generate_data(cfg);
  const auto u = plant::generate_excitation(498, cfg.input, derive_seed(cfg.seed, kInputStream));
  CHECK(clean.u() == u);
  CHECK(clean.y() == plant::simulate(plant::example1_model(), Eigen::VectorXd::Zero(2), u));
}

TEST_CASE("first experiment run: metrics, plot files and determinism") {
  const auto dir = fresh_dir("example1");
  const auto cfg = example1_defaults();
  const auto m = run_example1(cfg, dir / "a");
  CHECK(std::isfinite(m.y_err_2));
  REQUIRE(m.u_err_2.has_value());
  CHECK(std::isfinite(*m.u_err_2));
  CHECK(m.converged);

  const auto metrics = json::parse(slurp(dir / "a" / "metrics.json"));
  for (const auto& key : metrics_schema_keys()) CHECK_MESSAGE(metrics.contains(key), key);
  CHECK(metrics.contains("u_err_2"));
  CHECK(metrics["seed"] == 0);
  CHECK(metrics["config"]["model"] == "example1");

  const auto inputs = lines_of(slurp(dir / "a" / "example1_inputs.csv"));
  CHECK(inputs.size() == 49);
  CHECK(inputs[0] == "k,u_model,u_data");
  const auto outputs = lines_of(slurp(dir / "a" / "example1_outputs.csv"));
  CHECK(outputs.size() == 51);
  CHECK(outputs[0] == "k,y_ref,y_achieved");
  CHECK(parse_config(slurp(dir / "a" / "config.txt")).seed == cfg.seed);

  run_example1(cfg, dir / "b");
  for (const char* f : {"config.txt", "data.csv", "example1_inputs.csv", "example1_outputs.csv", "metrics.json"}) {
    CHECK_MESSAGE(slurp(dir / "a" / f) == slurp(dir / "b" / f), f);
  }
}

TEST_CASE("first experiment with zero noise and vanishing regularization") {
  auto cfg = example1_defaults();
  cfg.noise = {0.0, 0.0};
  cfg.lambda = 1e-8;
  const auto m = run_example1(cfg);
  const auto u_ref = plant::model_inverse(plant::example1_model(), sinusoid_reference(cfg));
  REQUIRE(u_ref.has_value());
  REQUIRE(m.u_err_2.has_value());
  CHECK(*m.u_err_2 <= 1e-2 * u_ref->stacked().norm());
}

TEST_CASE("second experiment: files, schema and determinism on a reduced instance") {
  const auto dir = fresh_dir("example2");
  const auto cfg = reduced_example2(0.05);
  const auto m = run_example2(cfg, dir / "a");
  CHECK(std::isfinite(m.y_err_2));
  CHECK_FALSE(m.u_err_2.has_value());
  const auto metrics = json::parse(slurp(dir / "a" / "metrics.json"));
  for (const auto& key : metrics_schema_keys()) CHECK_MESSAGE(metrics.contains(key), key);
  CHECK_FALSE(metrics.contains("u_err_2"));
  CHECK(lines_of(slurp(dir / "a" / "example2_outputs.csv"))[0] == "k,y_model,y_data");
  CHECK(lines_of(slurp(dir / "a" / "example2_input.csv")).size() == 19);
  run_example2(cfg, dir / "b");
  for (const char* f : {"config.txt", "data.csv", "example2_input.csv", "example2_outputs.csv", "metrics.json"}) {
    CHECK_MESSAGE(slurp(dir / "a" / f) == slurp(dir / "b" / f), f);
  }
}

TEST_CASE("noise-free reduced second experiment beats the noisy default") {
  std::vector<double> clean, noisy;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto c = reduced_example2(0.0);
    c.seed = seed;
    clean.push_back(run_example2(c).y_err_2);
    auto d = example2_defaults();
    d.seed = seed;
    noisy.push_back(run_example2(d).y_err_2);
  }
  CHECK(median(clean) < median(noisy));
}

TEST_CASE("sweeps aggregate per-seed runs") {
  const auto cfg = reduced_example2(0.05);
  const auto rep = run_sweep("example2", cfg, 4, 3);
  REQUIRE(rep.runs.size() == 3);
  CHECK(rep.runs[0].seed == 4);
  CHECK(rep.runs[2].seed == 6);
  CHECK(rep.median_y_err_2 == median({rep.runs[0].y_err_2, rep.runs[1].y_err_2, rep.runs[2].y_err_2}));
  const auto j = json::parse(sweep_json(rep, cfg));
  CHECK(j["runs"].size() == 3);
  CHECK_THROWS_AS(run_sweep("example3", cfg, 0, 1), ConfigError);
  CHECK_THROWS_AS(run_sweep("example2", cfg, 0, 0), ConfigError);
}

TEST_CASE("command line round trip") {
  const auto dir = fresh_dir("cli");
  const auto log = dir / "log.txt";
  const std::string out = "--out-dir \"" + dir.string() + "\"";

  CHECK(run_cli("generate " + out, log) == 0);
  const auto data = (dir / "data.csv").string();
  REQUIRE(fs::exists(data));

  CHECK(run_cli("check-pe --data \"" + data + "\" --order 50 --signal psi", log) == 0);
  CHECK(json::parse(slurp(log))["required_rank"] == 300);

  // A candidate taken from the data itself is a member.
  const auto traj = read_trajectory(data);
  const IoTrajectory window(traj.u().window(10, 57), traj.y().window(10, 59), 2);
  write_trajectory(dir / "candidate.csv", window);
  CHECK(run_cli("check-membership --data \"" + data + "\" --candidate \"" + (dir / "candidate.csv").string() + "\"",
                log) == 0);
  const auto verdict = json::parse(slurp(log));
  CHECK(verdict["is_member"] == true);
  CHECK(verdict.contains("alpha_norm"));
  CHECK(verdict.contains("residual"));

  const auto cfg = example1_defaults();
  write_series(dir / "reference.csv", "y", sinusoid_reference(cfg));
  CHECK(run_cli("match --data \"" + data + "\" --reference \"" + (dir / "reference.csv").string() + "\" --out \"" +
                    (dir / "u_est.csv").string() + "\" --oracle example1",
                log) == 0);
  CHECK(read_series(dir / "u_est.csv").size() == 48);
  const auto match_metrics = json::parse(slurp(dir / "u_est.json"));
  for (const char* key : {"objective", "iterations", "converged", "u_error_vs_oracle", "y_error_closed_loop"}) {
    CHECK_MESSAGE(match_metrics.contains(key), key);
  }

  const auto fresh_u = plant::generate_excitation(48, {-0.5, 0.5}, 99);
  write_series(dir / "input.csv", "u", fresh_u);
  write_series(dir / "init.csv", "y", Signal(std::vector<double>{0.0, 0.0}));
  const std::string sim_args = "simulate --data \"" + data + "\" --input \"" + (dir / "input.csv").string() +
                               "\" --init \"" + (dir / "init.csv").string() + "\" --out \"" +
                               (dir / "y_est.csv").string() + "\" --oracle example1";
  CHECK(run_cli(sim_args, log) == 0);
  CHECK(read_series(dir / "y_est.csv").size() == 50);
  CHECK(json::parse(slurp(dir / "y_est.json")).contains("y_error_vs_oracle"));

  // Exit codes: validation 1, non-convergence 2, I/O 3.
  CHECK(run_cli("simulate --data", log) == 1);
  CHECK(run_cli("example1 --set lambda=0 " + out, log) == 1);
  CHECK(run_cli("match --data \"" + data + "\" --reference \"" + (dir / "reference.csv").string() +
                    "\" --mode kernel --kernel gaussian --out \"" + (dir / "k.csv").string() + "\"",
                log) == 1);
  CHECK(run_cli(sim_args + " --mode kernel --max-iter 1", log) == 2);
  CHECK(run_cli("check-pe --data \"" + (dir / "missing.csv").string() + "\" --order 3", log) == 3);

  // Environment default for the output directory.
  const auto env_dir = dir / "env";
  setenv("FLATDD_OUTPUT_DIR", env_dir.string().c_str(), 1);
  CHECK(default_output_dir() == env_dir);
  CHECK(run_cli("generate --set N=80 --set L=10", log) == 0);
  CHECK(fs::exists(env_dir / "data.csv"));
  unsetenv("FLATDD_OUTPUT_DIR");
}
