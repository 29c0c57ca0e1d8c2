// graphon-lqr: run scenarios, the sinusoidal preset, truncation studies and
// oracle checks from the command line.

#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "graphon_lqr/artifacts.hpp"
#include "graphon_lqr/scenario.hpp"

namespace gl = graphon_lqr;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

struct Overrides {
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  void attach(CLI::App* app) {
    app->add_option("--dt", dt, "time step for Riccati and closed-loop integration");
    app->add_option("--horizon", horizon, "horizon T");
    app->add_option("--seed", seed, "seed for the initial state");
    app->add_option("--out", out, "output directory");
  }

  gl::Scenario apply(gl::Scenario s) const {
    if (dt) s.dt = *dt;
    if (horizon) s.horizon = *horizon;
    if (seed) s.seed = *seed;
    if (out) s.output_dir = *out;
    gl::validate(s);
    return s;
  }
};

gl::Scenario scenario_or_preset(const std::string& path) {
  return path.empty() ? gl::preset_example_vii() : gl::load_scenario(path);
}

void print_run(const gl::Scenario& s, const gl::RunResult& r) {
  std::printf("J=%.10g aux=%.10g rank=%zu", r.cost.total, r.cost.aux, r.rank);
  if (r.oracle) std::printf(" oracle_rel_gap=%.3e", r.oracle->cost_rel_gap);
  std::printf(" out=%s\n", s.output_dir.c_str());
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-horizon LQR on graphon-coupled networks"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run a scenario file and write artifacts");
  std::string run_path;
  bool run_oracle = false;
  Overrides run_over;
  run->add_option("scenario", run_path, "scenario JSON file")->required();
  run->add_flag("--compare-oracle", run_oracle, "also solve the full matrix Riccati equation");
  run_over.attach(run);

  // example-vii
  auto* preset = app.add_subcommand("example-vii", "run the sinusoidal-graphon preset");
  bool preset_oracle = false;
  std::string write_scenario;
  Overrides preset_over;
  preset->add_flag("--compare-oracle", preset_oracle, "also solve the full matrix Riccati equation");
  preset->add_option("--write-scenario", write_scenario, "write the preset scenario JSON and exit");
  preset_over.attach(preset);

  // truncation-study
  auto* trunc = app.add_subcommand("truncation-study", "compare truncated laws against the optimal law");
  std::string trunc_path;
  std::vector<std::size_t> trunc_levels;
  Overrides trunc_over;
  trunc->add_option("scenario", trunc_path, "scenario JSON file (default: the preset)");
  trunc->add_option("--levels", trunc_levels, "truncation levels L")->delimiter(',');
  trunc_over.attach(trunc);

  // oracle-check
  auto* oracle = app.add_subcommand("oracle-check", "compare the decoupled law with the matrix oracle");
  std::string oracle_path;
  double tol = 1e-4;
  Overrides oracle_over;
  oracle->add_option("scenario", oracle_path, "scenario JSON file (default: the preset)");
  oracle->add_option("--tol", tol, "maximum relative cost gap");
  oracle_over.attach(oracle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*run) {
      const auto s = run_over.apply(gl::load_scenario(run_path));
      print_run(s, gl::run_scenario(s, run_oracle));
    } else if (*preset) {
      const auto s = preset_over.apply(gl::preset_example_vii());
      if (!write_scenario.empty()) {
        gl::artifacts::write_json(write_scenario, gl::scenario_to_json(s));
        std::printf("wrote %s\n", write_scenario.c_str());
        return 0;
      }
      print_run(s, gl::run_scenario(s, preset_oracle));
    } else if (*trunc) {
      const auto s = trunc_over.apply(scenario_or_preset(trunc_path));
      const auto rows = gl::run_truncation_study(s, trunc_levels);
      for (const auto& row : rows) {
        std::printf("L=%zu J=%.10g J_opt=%.10g", row.levels, row.cost_truncated, row.cost_optimal);
        for (const auto& r : row.ratios)
        {
          std::printf(" ratio_%zu=%.6g", r.direction + 1, r.measured);
          if (!std::isnan(r.predicted)) std::printf(" predicted_%zu=%.6g", r.direction + 1, r.predicted);
        }
        std::printf("\n");
      }
    } else if (*oracle) {
      const auto s = oracle_over.apply(scenario_or_preset(oracle_path));
      const auto report = gl::run_oracle_check(s);
      const bool ok = report.cost_rel_gap <= tol;
      std::printf("oracle_rel_gap=%.3e p_gap=%.3e state_gap=%.3e %s\n", report.cost_rel_gap,
                  report.p_gap, report.state_gap, ok ? "ok" : "EXCEEDED");
      if (!ok) return kExitNumeric;
    }
  } catch (const gl::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const gl::Error& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
