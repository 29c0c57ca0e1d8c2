#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphon_lqr/error.hpp"
#include "graphon_lqr/lqr.hpp"
#include "graphon_lqr/sim.hpp"

namespace graphon_lqr::artifacts {

// Shortest round-trip representation is not needed; 17 significant digits
// reproduce every double exactly and keep the output byte-stable.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

// Columns t, L, M_1, ..., M_d over the forward Riccati grid.
inline void write_gains_csv(const std::filesystem::path& path, const GainSchedule& gains) {
  auto out = open_output(path);
  out << "t,L";
  for (std::size_t l = 0; l < gains.eigen.size(); ++l) out << ",M_" << l + 1;
  out << '\n';
  const auto& grid = gains.aux.grid();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out << format_number(grid[k]) << ',' << format_number(gains.aux.values()[k]);
    for (const auto& m : gains.eigen) out << ',' << format_number(m.values()[k]);
    out << '\n';
  }
}

// Columns t, x_1..x_n, u_1..u_n.
inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  auto out = open_output(path);
  const auto n = traj.states.empty() ? 0 : traj.states.front().size();
  out << 't';
  for (Eigen::Index i = 0; i < n; ++i) out << ",x_" << i + 1;
  for (Eigen::Index i = 0; i < n; ++i) out << ",u_" << i + 1;
  out << '\n';
  for (std::size_t k = 0; k < traj.grid.size(); ++k) {
    out << format_number(traj.grid[k]);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_number(traj.states[k](i));
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_number(traj.controls[k](i));
    out << '\n';
  }
}

// Columns L, J_truncated, J_optimal, then measured/predicted ratio per direction
// (blank where the direction is kept or no prediction applies).
inline void write_truncation_csv(const std::filesystem::path& path,
                                 const std::vector<TruncationRow>& rows, std::size_t rank) {
  auto out = open_output(path);
  out << "L,J_truncated,J_optimal";
  for (std::size_t h = 0; h < rank; ++h)
    out << ",ratio_measured_" << h + 1 << ",ratio_predicted_" << h + 1;
  out << '\n';
  for (const auto& row : rows) {
    out << row.levels << ',' << format_number(row.cost_truncated) << ','
        << format_number(row.cost_optimal);
    for (std::size_t h = 0; h < rank; ++h) {
      const DirectionRatio* hit = nullptr;
      for (const auto& r : row.ratios)
        if (r.direction == h) hit = &r;
      out << ',' << (hit ? format_number(hit->measured) : "") << ','
          << (hit ? format_number(hit->predicted) : "");
    }
    out << '\n';
  }
}

inline nlohmann::ordered_json cost_json(const CostBreakdown& cost) {
  nlohmann::ordered_json j;
  j["total"] = cost.total;
  j["aux"] = cost.aux;
  j["eigen"] = cost.eigen;
  return j;
}

inline void add_oracle_fields(nlohmann::ordered_json& j, const OracleReport& report) {
  j["oracle_rel_gap"] = report.cost_rel_gap;
  j["oracle_p_gap"] = report.p_gap;
  j["oracle_state_gap"] = report.state_gap;
  j["oracle_cost"] = report.cost_oracle;
  j["decoupled_cost"] = report.cost_decoupled;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

} // namespace graphon_lqr::artifacts
