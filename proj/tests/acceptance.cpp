// Acceptance gate: runs every acceptance criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "graphon_lqr/graphon.hpp"
#include "graphon_lqr/lqr.hpp"
#include "graphon_lqr/riccati.hpp"
#include "graphon_lqr/scenario.hpp"
#include "graphon_lqr/sim.hpp"
#include "support/testing.hpp"

using namespace graphon_lqr;
using testing_support::Rng;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const CoeffPoly kSquare{1.0, -2.0, 1.0};

// 1. Decoupled law vs matrix-Riccati oracle on random low-rank networks.
Outcome oracle_equivalence() {
  Rng rng(20200101);
  double worst_cost = 0.0, worst_p = 0.0;
  const int sizes[] = {4, 6, 8};
  for (int i = 0; i < 20; ++i) {
    const int n = sizes[i % 3];
    const auto sys = testing_support::random_system(rng, n, rng.integer(1, 3));
    const auto rep = oracle_compare(sys.system, sys.problem, sys.x0, 1.0, 1e-4);
    worst_cost = std::max(worst_cost, rep.cost_rel_gap);
    worst_p = std::max(worst_p, rep.p_gap);
  }
  return {worst_cost <= 1e-5 && worst_p <= 1e-6,
          "max rel cost gap " + fmt("%.3e", worst_cost) + " (<= 1e-5), max P gap " + fmt("%.3e", worst_p) +
              " (<= 1e-6)"};
}

// 2. The sinusoid preset builds the printed decoupled problems and its N=40
// closed loop matches the oracle.
Outcome sinusoid_example() {
  Outcome out;
  std::ostringstream os;
  const auto preset = preset_example_vii();
  const LqrProblem analytic(preset.alpha0, CoeffPoly(preset.poly_b), CoeffPoly(preset.poly_q),
                            CoeffPoly(preset.poly_p0), sinusoidal_graphon(), preset.horizon);
  // L' = 4L - L^2 + 1, L0 = 1  <=>  (alpha, beta, q, z) = (2, 1, 1, 1).
  const auto aux = auxiliary_params(analytic);
  const bool aux_ok = 2.0 * aux.drift == 4.0 && aux.gain * aux.gain == 1.0 && aux.q == 1.0 && aux.z == 1.0;
  // M' = 5M - (25/16) M^2 + 1/4, M0 = 1/4.
  bool eig_ok = analytic.graphon.rank() == 2;
  for (std::size_t l = 0; l < analytic.graphon.rank(); ++l) {
    const auto e = eigensystem_params(analytic, l);
    eig_ok = eig_ok && analytic.graphon.pair(l).lambda == 0.5 && 2.0 * e.drift == 5.0 &&
             e.gain * e.gain == 25.0 / 16.0 && e.q == 0.25 && e.z == 0.25;
  }
  // The step system the preset actually runs carries the same data up to rounding.
  const auto model = build_model(preset);
  bool step_ok = model.problem.graphon.rank() == 2 && model.system.n() == 40;
  for (std::size_t l = 0; step_ok && l < 2; ++l) {
    const auto e = eigensystem_params(model.problem, l);
    step_ok = std::abs(e.drift - 2.5) <= 1e-12 && std::abs(e.gain - 1.25) <= 1e-12 &&
              std::abs(e.q - 0.25) <= 1e-12 && std::abs(e.z - 0.25) <= 1e-12;
  }
  const auto rep = oracle_compare(model.system, model.problem, model.x0, preset.horizon, preset.dt);
  out.pass = aux_ok && eig_ok && step_ok && rep.cost_rel_gap <= 1e-4;
  os << "aux eq " << (aux_ok ? "ok" : "WRONG") << ", eigen eqs " << (eig_ok ? "ok" : "WRONG")
     << ", N=40 spectrum " << (step_ok ? "ok" : "WRONG") << ", rel cost gap " << fmt("%.3e", rep.cost_rel_gap)
     << " (<= 1e-4)";
  out.detail = os.str();
  return out;
}

// 3. Closed form vs numeric on a parameter sweep, and the tanh case.
Outcome closed_form_sweep() {
  Rng rng(515);
  double worst = 0.0;
  int points = 0;
  while (points < 50) {
    const double a = rng.uniform(-2, 3), b = rng.uniform(0.2, 2), q = rng.uniform(0, 2), z = rng.uniform(0, 2);
    if (std::abs(z - algebraic_root(a, b, q)) < 1e-3) continue;
    const ScalarRiccatiSpec spec{a, b, q, z, 5.0, 1e-4};
    const auto cf = solve_riccati_closed_form(spec);
    const auto num = solve_riccati_numeric(spec);
    for (std::size_t k = 0; k < cf.size(); ++k) worst = std::max(worst, std::abs(cf.values()[k] - num.values()[k]));
    ++points;
  }
  const ScalarRiccatiSpec tanh_spec{0.0, 1.0, 1.0, 0.0, 5.0, 1e-4};
  const auto cf = solve_riccati_closed_form(tanh_spec);
  const auto num = solve_riccati_numeric(tanh_spec);
  double tanh_gap = 0.0;
  for (std::size_t k = 0; k < cf.size(); ++k) {
    const double exact = std::tanh(cf.grid()[k]);
    tanh_gap = std::max({tanh_gap, std::abs(cf.values()[k] - exact), std::abs(num.values()[k] - exact)});
  }
  tanh_gap = std::max(tanh_gap, std::abs(solve_riccati_closed_form({0, 1, 1, 0, 1.0, 1e-4}).values().back() -
                                         testing_support::kTanh1));
  return {worst <= 1e-6 && tanh_gap <= 1e-8,
          "50-point max |closed - numeric| " + fmt("%.3e", worst) + " (<= 1e-6), tanh gap " +
              fmt("%.3e", tanh_gap) + " (<= 1e-8)"};
}

// 4. Terminal eigenstate ratio of the ignored direction under the rank-1 law.
Outcome truncation_ratio() {
  Outcome out;
  std::ostringstream os;
  const auto coupling = sample_graphon(sinusoidal_graphon(), 40);
  const auto x0 = initial_state(preset_example_vii().seed, 40);
  for (const double horizon : {0.5, 1.0, 2.0}) {
    const LqrProblem p(2.0, CoeffPoly{1.0}, kSquare, kSquare, spectral_decompose(coupling), horizon);
    const auto sys = build_step_system(coupling, p);
    const auto rows = truncation_study(sys, p, x0, {1}, horizon, 1e-3);
    const auto& r = rows.at(0).ratios.at(0);
    const double gap = std::abs(r.measured - r.predicted);
    out.pass = out.pass && r.direction == 1 && gap <= 1e-4;
    os << "T=" << horizon << ": measured " << fmt("%.6f", r.measured) << " predicted "
       << fmt("%.6f", r.predicted) << " gap " << fmt("%.1e", gap) << "; ";
  }
  out.detail = os.str() + "(<= 1e-4)";
  return out;
}

// 5. Quadratic-form decoupling identity and vanishing cross terms.
Outcome decoupling_identities() {
  Rng rng(1955);
  double worst_identity = 0.0, worst_cross = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.integer(3, 12);
    const auto g = testing_support::random_finite_rank(rng, n, rng.integer(1, std::min(3, n)));
    const CoeffPoly q(rng.coeffs(rng.integer(0, 4), -2.0, 2.0));
    const Eigen::VectorXd x = rng.vector(n, -2, 2);
    const Eigen::MatrixXd f = g.cell_matrix(static_cast<std::size_t>(n));
    Eigen::MatrixXd op = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t l = 0; l < g.rank(); ++l)
      op += g.pair(l).lambda * f.col(static_cast<Eigen::Index>(l)) * f.col(static_cast<Eigen::Index>(l)).transpose() / n;
    const auto split = project_state(x, g);
    double rhs = q.constant_term() * inner_product(split.auxiliary, split.auxiliary);
    Eigen::VectorXd eig_part = Eigen::VectorXd::Zero(n);
    for (std::size_t l = 0; l < g.rank(); ++l) {
      rhs += q(g.pair(l).lambda) * split.eigen_coords[l] * split.eigen_coords[l];
      eig_part += split.eigen_coords[l] * f.col(static_cast<Eigen::Index>(l));
    }
    const double lhs = inner_product(x, Eigen::VectorXd(apply_poly_matrix(q, op) * x));
    worst_identity = std::max(worst_identity, std::abs(lhs - rhs));
    Eigen::VectorXd power = eig_part;
    for (int k = 0; k <= 4; ++k) {
      worst_cross = std::max(worst_cross, std::abs(inner_product(split.auxiliary, power)));
      power = op * power;
    }
  }
  return {worst_identity <= 1e-8 && worst_cross <= 1e-10,
          "200 triples: identity gap " + fmt("%.3e", worst_identity) + " (<= 1e-8), cross terms " +
              fmt("%.3e", worst_cross) + " (<= 1e-10, k <= 4)"};
}

// 6. No truncated or perturbed controller beats the synthesized law.
Outcome optimality_dominance() {
  Rng rng(606);
  struct Case {
    LqrProblem problem;
    StepSystem system;
    Eigen::VectorXd x0;
  };
  std::vector<Case> cases;
  {
    const auto m = build_model(preset_example_vii());
    cases.push_back({m.problem, m.system, m.x0});
  }
  for (int i = 0; i < 3; ++i) {
    auto r = testing_support::random_system(rng, 6, 3);
    cases.push_back({std::move(r.problem), std::move(r.system), std::move(r.x0)});
  }
  const double dt = 1e-3;
  double worst = INFINITY;
  int runs = 0;
  for (const auto& c : cases) {
    const auto law = optimal_controller(c.problem, dt);
    const double j_opt = evaluate_cost(simulate(c.system, law, c.x0, c.problem.horizon, dt), c.system).total;
    for (std::size_t levels = 0; levels < c.problem.graphon.rank(); ++levels) {
      const auto trunc = truncated_controller(c.problem, levels, dt);
      const double j = evaluate_cost(simulate(c.system, trunc, c.x0, c.problem.horizon, dt), c.system).total;
      worst = std::min(worst, j - j_opt);
      ++runs;
    }
    for (int k = 0; k < 10; ++k) {
      // Perturbation of size 1e-3 in the L2 state norm, oscillating in time.
      const Eigen::VectorXd dir = rng.vector(c.x0.size());
      const Eigen::VectorXd unit = dir / std::sqrt(inner_product(dir, dir));
      const double w = rng.uniform(0.5, 8.0), phase = rng.uniform(0.0, 6.283185307179586);
      const auto perturbed = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return law(t, x) + 1e-3 * std::cos(w * t + phase) * unit;
      };
      const double j = evaluate_cost(simulate(c.system, perturbed, c.x0, c.problem.horizon, dt), c.system).total;
      worst = std::min(worst, j - j_opt);
      ++runs;
    }
  }
  return {worst >= -1e-8, std::to_string(runs) + " runs over " + std::to_string(cases.size()) +
                              " systems: min (J - J_opt) " + fmt("%.3e", worst) + " (>= -1e-8)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// 7. Two example-vii runs with the same seed give byte-identical artifacts.
// Both runs write to the same directory so that scenario.json, which records
// the output directory, is comparable as well.
Outcome determinism() {
  const auto dir = fs::temp_directory_path() / ("graphon_lqr_acceptance_" + std::to_string(::getpid()));
  std::vector<std::map<std::string, std::string>> snapshots;
  for (int run = 0; run < 2; ++run) {
    fs::remove_all(dir);
#ifdef GRAPHON_LQR_CLI
    const std::string cmd = std::string("\"") + GRAPHON_LQR_CLI + "\" example-vii --seed 2020 --out \"" +
                            dir.string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "example-vii run failed: " + cmd};
#else
    auto s = preset_example_vii();
    s.output_dir = dir.string();
    run_scenario(s);
#endif
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) files[entry.path().filename().string()] = slurp(entry.path());
    snapshots.push_back(std::move(files));
  }
  fs::remove_all(dir);
  std::string list;
  for (const auto& [name, bytes] : snapshots[0]) list += (list.empty() ? "" : ",") + name;
  const bool same = !snapshots[0].empty() && snapshots[0] == snapshots[1];
#ifdef GRAPHON_LQR_CLI
  const std::string how = "CLI";
#else
  const std::string how = "library";
#endif
  return {same, how + " runs, " + (same ? "identical: " : "DIFFER: ") + list};
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 oracle equivalence (random networks)", oracle_equivalence},
      {"2 sinusoid example decoupled problems + N=40 oracle", sinusoid_example},
      {"3 closed-form scalar Riccati sweep", closed_form_sweep},
      {"4 truncation terminal ratio", truncation_ratio},
      {"5 decoupling identities", decoupling_identities},
      {"6 optimality dominance", optimality_dominance},
      {"7 determinism of example-vii artifacts", determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
