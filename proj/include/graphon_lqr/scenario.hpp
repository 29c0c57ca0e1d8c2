#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphon_lqr/artifacts.hpp"
#include "graphon_lqr/error.hpp"
#include "graphon_lqr/graphon.hpp"
#include "graphon_lqr/lqr.hpp"
#include "graphon_lqr/scalar_poly.hpp"
#include "graphon_lqr/sim.hpp"

namespace graphon_lqr {

inline ValidationError field_error(const std::string& field, const std::string& what) {
  return ValidationError("field '" + field + "': " + what);
}

struct GraphonSpec {
  struct Pair {
    double lambda = 0.0;
    std::string fun = "const";
    int freq = 0;

    friend bool operator==(const Pair&, const Pair&) = default;
  };

  std::string type = "sinusoidal";  // sinusoidal | uniform | step | finite_rank
  std::string matrix_csv;            // step only
  std::vector<Pair> pairs;           // finite_rank only

  friend bool operator==(const GraphonSpec&, const GraphonSpec&) = default;
};

struct ControllerMode {
  enum class Kind { Optimal, Truncated, AuxiliaryOnly };

  Kind kind = Kind::Optimal;
  std::size_t levels = 0;  // Truncated only

  static ControllerMode parse(const std::string& text) {
    if (text == "optimal") return {Kind::Optimal, 0};
    if (text == "auxiliary_only") return {Kind::AuxiliaryOnly, 0};
    const std::string head = "truncated(";
    if (text.rfind(head, 0) == 0 && text.size() > head.size() + 1 && text.back() == ')') {
      const auto digits = text.substr(head.size(), text.size() - head.size() - 1);
      if (digits.find_first_not_of("0123456789") == std::string::npos)
        return {Kind::Truncated, static_cast<std::size_t>(std::stoull(digits))};
    }
    throw field_error("controller", "expected optimal, truncated(L) or auxiliary_only, got '" + text + "'");
  }

  std::string str() const {
    switch (kind) {
    case Kind::Optimal: return "optimal";
    case Kind::AuxiliaryOnly: return "auxiliary_only";
    case Kind::Truncated: return "truncated(" + std::to_string(levels) + ")";
    }
    return "optimal";
  }

  friend bool operator==(const ControllerMode&, const ControllerMode&) = default;
};

/// Everything needed to reproduce one closed-loop run.
struct Scenario {
  double alpha0 = 0.0;
  std::vector<double> poly_b{1.0};
  std::vector<double> poly_q{1.0};
  std::vector<double> poly_p0{1.0};
  double horizon = 1.0;
  double dt = 1e-3;
  GraphonSpec graphon;
  std::size_t n = 40;  // 0 for step graphons means "size of the CSV matrix"
  double bound = 1.0;
  ControllerMode controller;
  bool precompute_eigenstates = false;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::vector<std::size_t> truncation_levels;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline Scenario preset_example_vii() {
  Scenario s;
  s.alpha0 = 2.0;
  s.poly_b = {1.0, 0.5};
  s.poly_q = {1.0, -2.0, 1.0};
  s.poly_p0 = {1.0, -2.0, 1.0};
  s.horizon = 1.0;
  s.dt = 1e-3;
  s.graphon.type = "sinusoidal";
  s.n = 40;
  s.controller = {};
  s.seed = 2020;
  s.output_dir = "example_vii";
  s.truncation_levels = {0, 1, 2};
  return s;
}

namespace detail {

template <class T>
T read_field(const nlohmann::json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw field_error(path, e.what());
  }
}

inline void require_finite(double v, const std::string& field) {
  if (!std::isfinite(v)) throw field_error(field, "must be finite");
}

} // namespace detail

inline void validate(const Scenario& s) {
  detail::require_finite(s.alpha0, "alpha0");
  for (const auto& [name, poly] : {std::pair{"poly_B", &s.poly_b}, std::pair{"poly_Q", &s.poly_q},
                                   std::pair{"poly_P0", &s.poly_p0}}) {
    if (poly->empty()) throw field_error(name, "needs at least one coefficient");
    for (const double c : *poly) detail::require_finite(c, name);
  }
  if (!(s.horizon > 0.0) || !std::isfinite(s.horizon)) throw field_error("horizon", "must be positive");
  if (!(s.dt > 0.0) || !(s.dt < s.horizon)) throw field_error("dt", "must satisfy 0 < dt < horizon");
  if (!(s.bound > 0.0) || !std::isfinite(s.bound)) throw field_error("bound", "must be positive");
  const auto& g = s.graphon;
  if (g.type == "step") {
    if (g.matrix_csv.empty()) throw field_error("graphon.matrix_csv", "required for step graphons");
    if (!std::filesystem::is_regular_file(g.matrix_csv))
      throw field_error("graphon.matrix_csv", "file '" + g.matrix_csv + "' does not exist");
  } else if (g.type == "finite_rank") {
    if (g.pairs.empty()) throw field_error("graphon.pairs", "needs at least one eigenpair");
    if (s.n == 0) throw field_error("n", "must be positive");
  } else if (g.type == "sinusoidal" || g.type == "uniform") {
    if (s.n == 0) throw field_error("n", "must be positive");
  } else {
    throw field_error("graphon.type", "unknown graphon type '" + g.type + "'");
  }
}

inline Scenario scenario_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {}) {
  static const std::set<std::string> known{
      "alpha0", "poly_B", "poly_Q", "poly_P0", "horizon", "dt", "graphon", "n", "bound",
      "controller", "eigenstates", "seed", "output_dir", "truncation_levels"};
  if (!j.is_object()) throw ValidationError("scenario must be a JSON object");
  for (const auto& item : j.items())
    if (!known.count(item.key())) throw field_error(item.key(), "unknown scenario field");

  Scenario s;
  s.alpha0 = detail::read_field<double>(j, "alpha0", "alpha0");
  s.poly_b = detail::read_field<std::vector<double>>(j, "poly_B", "poly_B");
  s.poly_q = detail::read_field<std::vector<double>>(j, "poly_Q", "poly_Q");
  s.poly_p0 = detail::read_field<std::vector<double>>(j, "poly_P0", "poly_P0");
  if (j.contains("horizon")) s.horizon = detail::read_field<double>(j, "horizon", "horizon");
  if (j.contains("dt")) s.dt = detail::read_field<double>(j, "dt", "dt");
  if (j.contains("bound")) s.bound = detail::read_field<double>(j, "bound", "bound");
  if (j.contains("seed")) s.seed = detail::read_field<std::uint64_t>(j, "seed", "seed");
  if (j.contains("output_dir"))
    s.output_dir = detail::read_field<std::string>(j, "output_dir", "output_dir");
  if (j.contains("controller"))
    s.controller = ControllerMode::parse(detail::read_field<std::string>(j, "controller", "controller"));
  if (j.contains("eigenstates")) {
    const auto mode = detail::read_field<std::string>(j, "eigenstates", "eigenstates");
    if (mode != "realtime" && mode != "precomputed")
      throw field_error("eigenstates", "expected realtime or precomputed, got '" + mode + "'");
    s.precompute_eigenstates = mode == "precomputed";
  }
  if (j.contains("truncation_levels"))
    s.truncation_levels =
        detail::read_field<std::vector<std::size_t>>(j, "truncation_levels", "truncation_levels");

  if (!j.contains("graphon")) throw field_error("graphon", "required");
  const auto& g = j.at("graphon");
  if (!g.is_object()) throw field_error("graphon", "must be an object");
  s.graphon.type = detail::read_field<std::string>(g, "type", "graphon.type");
  if (s.graphon.type == "step") {
    std::filesystem::path csv = detail::read_field<std::string>(g, "matrix_csv", "graphon.matrix_csv");
    if (csv.is_relative() && !base_dir.empty()) csv = base_dir / csv;
    s.graphon.matrix_csv = csv.lexically_normal().string();
  } else if (s.graphon.type == "finite_rank") {
    const auto& pairs = g.contains("pairs") ? g.at("pairs") : nlohmann::json::array();
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto path = "graphon.pairs[" + std::to_string(k) + "]";
      GraphonSpec::Pair p;
      p.lambda = detail::read_field<double>(pairs[k], "lambda", path + ".lambda");
      p.fun = detail::read_field<std::string>(pairs[k], "fun", path + ".fun");
      if (pairs[k].contains("freq")) p.freq = detail::read_field<int>(pairs[k], "freq", path + ".freq");
      s.graphon.pairs.push_back(p);
    }
  }
  if (j.contains("n")) s.n = detail::read_field<std::size_t>(j, "n", "n");
  else if (s.graphon.type == "step") s.n = 0;
  validate(s);
  return s;
}

inline nlohmann::ordered_json scenario_to_json(const Scenario& s) {
  nlohmann::ordered_json j;
  j["alpha0"] = s.alpha0;
  j["poly_B"] = s.poly_b;
  j["poly_Q"] = s.poly_q;
  j["poly_P0"] = s.poly_p0;
  j["horizon"] = s.horizon;
  j["dt"] = s.dt;
  nlohmann::ordered_json g;
  g["type"] = s.graphon.type;
  if (s.graphon.type == "step") g["matrix_csv"] = s.graphon.matrix_csv;
  if (s.graphon.type == "finite_rank") {
    g["pairs"] = nlohmann::ordered_json::array();
    for (const auto& p : s.graphon.pairs)
      g["pairs"].push_back({{"lambda", p.lambda}, {"fun", p.fun}, {"freq", p.freq}});
  }
  j["graphon"] = g;
  j["n"] = s.n;
  j["bound"] = s.bound;
  j["controller"] = s.controller.str();
  j["eigenstates"] = s.precompute_eigenstates ? "precomputed" : "realtime";
  j["seed"] = s.seed;
  j["output_dir"] = s.output_dir;
  j["truncation_levels"] = s.truncation_levels;
  return j;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("scenario file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return scenario_from_json(j, path.parent_path());
}

/// Row-major CSV of a square coupling matrix.
inline Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw field_error("graphon.matrix_csv", "cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || std::string(end).find_first_not_of(" \t\r") != std::string::npos)
        throw field_error("graphon.matrix_csv", "line " + std::to_string(line_no) +
                                                    ": cannot parse '" + cell + "' as a number");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  const auto n = rows.size();
  if (n == 0) throw field_error("graphon.matrix_csv", "matrix is empty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n)
      throw field_error("graphon.matrix_csv", "row " + std::to_string(i + 1) + " has " +
                                                  std::to_string(rows[i].size()) +
                                                  " entries, expected " + std::to_string(n));
    for (std::size_t k = 0; k < n; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

inline StepGraphon scenario_coupling(const Scenario& s) {
  const auto& g = s.graphon;
  if (g.type == "step") {
    auto m = read_matrix_csv(g.matrix_csv);
    if (s.n != 0 && static_cast<std::size_t>(m.rows()) != s.n)
      throw field_error("n", "is " + std::to_string(s.n) + " but the coupling matrix has " +
                                 std::to_string(m.rows()) + " rows");
    try {
      return StepGraphon(std::move(m), s.bound);
    } catch (const ValidationError& e) {
      throw field_error("graphon.matrix_csv", e.what());
    }
  }
  if (g.type == "sinusoidal")
    return sample_graphon(
        [](double x, double y) { return std::cos(2.0 * std::numbers::pi * (x - y)); }, s.n, s.bound);
  if (g.type == "uniform") return sample_graphon([](double, double) { return 1.0; }, s.n, s.bound);
  std::vector<EigenPair> pairs;
  for (const auto& p : g.pairs) pairs.push_back({p.lambda, trig_eigenfunction(p.fun, p.freq)});
  try {
    return sample_graphon(FiniteRankGraphon(std::move(pairs), s.bound), s.n, s.bound);
  } catch (const ValidationError& e) {
    throw field_error("graphon.pairs", e.what());
  }
}

// Uniform draws on [-1, 1] from a seeded 64-bit Mersenne twister, mapped by
// bit manipulation so the sequence does not depend on the standard library's
// distribution implementations.
inline Eigen::VectorXd initial_state(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    x(static_cast<Eigen::Index>(i)) = 2.0 * u - 1.0;
  }
  return x;
}

struct Model {
  LqrProblem problem;
  StepSystem system;
  Eigen::VectorXd x0;
};

inline Model build_model(const Scenario& s) {
  validate(s);
  const auto coupling = scenario_coupling(s);
  LqrProblem p(s.alpha0, CoeffPoly(s.poly_b), CoeffPoly(s.poly_q), CoeffPoly(s.poly_p0),
               spectral_decompose(coupling), s.horizon);
  auto sys = build_step_system(coupling, p);
  return {std::move(p), std::move(sys), initial_state(s.seed, coupling.size())};
}

inline FeedbackLaw scenario_controller(const Scenario& s, const Model& m) {
  const auto d = m.problem.graphon.rank();
  std::size_t levels = d;
  if (s.controller.kind == ControllerMode::Kind::AuxiliaryOnly) levels = 0;
  if (s.controller.kind == ControllerMode::Kind::Truncated) {
    if (s.controller.levels > d)
      throw field_error("controller", "truncation level " + std::to_string(s.controller.levels) +
                                          " exceeds the graphon rank " + std::to_string(d));
    levels = s.controller.levels;
  }
  const auto reduced = m.problem.with_graphon(truncate(m.problem.graphon, levels));
  auto gains = synthesize_gains(reduced, s.dt);
  if (s.precompute_eigenstates) return FeedbackLaw(reduced, std::move(gains), m.x0);
  return FeedbackLaw(reduced, std::move(gains));
}

struct RunResult {
  CostBreakdown cost;
  std::size_t rank = 0;
  std::optional<OracleReport> oracle;
  std::vector<std::filesystem::path> files;
};

/// Synthesizes gains, simulates the closed loop and writes gains.csv,
/// trajectory.csv, cost.json and the effective scenario.json.
inline RunResult run_scenario(const Scenario& s, bool compare_oracle = false) {
  const auto model = build_model(s);
  const auto law = scenario_controller(s, model);
  const auto traj = simulate(model.system, law, model.x0, s.horizon, s.dt);

  RunResult result;
  result.cost = evaluate_cost(traj, model.system);
  result.rank = model.problem.graphon.rank();
  if (compare_oracle) result.oracle = oracle_compare(model.system, model.problem, model.x0, s.horizon, s.dt);

  const std::filesystem::path dir(s.output_dir);
  const auto gains = synthesize_gains(model.problem, s.dt);
  artifacts::write_gains_csv(dir / "gains.csv", gains);
  artifacts::write_trajectory_csv(dir / "trajectory.csv", traj);
  auto cost = artifacts::cost_json(result.cost);
  cost["controller"] = s.controller.str();
  cost["n"] = model.system.n();
  cost["rank"] = result.rank;
  cost["eigenvalues"] = model.problem.graphon.eigenvalues();
  if (result.oracle) artifacts::add_oracle_fields(cost, *result.oracle);
  artifacts::write_json(dir / "cost.json", cost);
  artifacts::write_json(dir / "scenario.json", scenario_to_json(s));
  result.files = {dir / "gains.csv", dir / "trajectory.csv", dir / "cost.json", dir / "scenario.json"};
  return result;
}

inline std::vector<TruncationRow> run_truncation_study(const Scenario& s,
                                                       std::vector<std::size_t> levels = {}) {
  const auto model = build_model(s);
  if (levels.empty()) levels = s.truncation_levels;
  if (levels.empty())
    for (std::size_t l = 0; l <= model.problem.graphon.rank(); ++l) levels.push_back(l);
  auto rows = truncation_study(model.system, model.problem, model.x0, levels, s.horizon, s.dt);
  artifacts::write_truncation_csv(std::filesystem::path(s.output_dir) / "truncation.csv", rows,
                                  model.problem.graphon.rank());
  return rows;
}

inline OracleReport run_oracle_check(const Scenario& s) {
  const auto model = build_model(s);
  const auto report = oracle_compare(model.system, model.problem, model.x0, s.horizon, s.dt);
  nlohmann::ordered_json j;
  artifacts::add_oracle_fields(j, report);
  artifacts::write_json(std::filesystem::path(s.output_dir) / "oracle.json", j);
  return report;
}

} // namespace graphon_lqr
