#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "graphon_lqr/curve.hpp"
#include "graphon_lqr/error.hpp"
#include "graphon_lqr/graphon.hpp"
#include "graphon_lqr/lqr.hpp"
#include "graphon_lqr/riccati.hpp"
#include "graphon_lqr/scalar_poly.hpp"

namespace graphon_lqr {

/// Network of n scalar subsystems coupled through a step graphon:
///   x' = a x + b u,  a = alpha0 I + entries / n,  b = poly_b(entries / n),
/// with cost weights q = poly_q(entries / n), p0 = poly_p0(entries / n).
struct StepSystem {
  StepGraphon coupling;
  double alpha0 = 0.0;
  CoeffPoly poly_b, poly_q, poly_p0;
  FiniteRankGraphon spectrum;
  Eigen::MatrixXd a, b, q, p0;

  std::size_t n() const noexcept { return coupling.size(); }
};

inline StepSystem build_step_system(const StepGraphon& coupling, const LqrProblem& p) {
  const Eigen::MatrixXd scaled = coupling.scaled();
  const auto n = scaled.rows();
  StepSystem sys{coupling,
                 p.alpha0,
                 p.poly_b,
                 p.poly_q,
                 p.poly_p0,
                 spectral_decompose(coupling),
                 p.alpha0 * Eigen::MatrixXd::Identity(n, n) + scaled,
                 apply_poly_matrix(p.poly_b, scaled),
                 apply_poly_matrix(p.poly_q, scaled),
                 apply_poly_matrix(p.poly_p0, scaled)};
  for (const auto& [m, name] : {std::pair{&sys.q, "poly_Q(A)"}, std::pair{&sys.p0, "poly_P0(A)"}}) {
    const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(*m, Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .minCoeff();
    if (lo < -1e-9) {
      std::ostringstream os;
      os << name << " is not positive semidefinite on this network (smallest eigenvalue " << lo
         << ")";
      throw ValidationError(os.str());
    }
  }
  return sys;
}

inline StepSystem build_step_system(const Eigen::MatrixXd& entries, const LqrProblem& p,
                                    double bound = 1.0) {
  return build_step_system(StepGraphon(entries, bound), p);
}

struct Trajectory {
  std::vector<double> grid;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> controls;

  double horizon() const { return grid.back(); }
  const Eigen::VectorXd& final_state() const { return states.back(); }
};

/// RK4 closed loop x' = a x + b u(t, x) on the uniform grid of [0, horizon].
template <class Feedback>
Trajectory simulate(const StepSystem& sys, const Feedback& controller, const Eigen::VectorXd& x0,
                    double horizon, double dt) {
  const auto n = static_cast<Eigen::Index>(sys.n());
  if (x0.size() != n) {
    std::ostringstream os;
    os << "initial state has " << x0.size() << " entries for a " << n << "-node network";
    throw ShapeError(os.str());
  }
  const auto control = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd u = controller(t, x);
    if (u.size() != n) throw ShapeError("controller returned a control of the wrong length");
    return u;
  };
  const auto field = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return sys.a * x + sys.b * control(t, x);
  };
  Trajectory traj;
  traj.grid = uniform_grid(horizon, dt);
  traj.states.reserve(traj.grid.size());
  traj.controls.reserve(traj.grid.size());
  traj.states.push_back(x0);
  for (std::size_t k = 0; k + 1 < traj.grid.size(); ++k) {
    const double t = traj.grid[k];
    traj.controls.push_back(control(t, traj.states[k]));
    Eigen::VectorXd next = rk4_step(field, t, traj.states[k], traj.grid[k + 1] - t);
    if (!next.allFinite()) {
      std::ostringstream os;
      os << "closed-loop state blew up at t=" << traj.grid[k + 1];
      throw NumericError(os.str());
    }
    traj.states.push_back(std::move(next));
  }
  traj.controls.push_back(control(traj.grid.back(), traj.states.back()));
  return traj;
}

/// J = total = aux + sum(eigen).
struct CostBreakdown {
  double total = 0.0;
  double aux = 0.0;
  std::vector<double> eigen;
};

/// Weights of composite Simpson's rule on a uniform grid (3/8 rule on the
/// last three intervals for an odd count, trapezoid for one interval).
inline std::vector<double> time_weights(const std::vector<double>& grid) {
  const std::size_t k = grid.size() - 1;
  std::vector<double> w(grid.size(), 0.0);
  if (k == 0) return w;
  const double h = (grid.back() - grid.front()) / static_cast<double>(k);
  if (k == 1) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  const std::size_t simpson = k % 2 == 0 ? k : k - 3;
  for (std::size_t i = 0; i + 2 <= simpson; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  if (simpson != k) {
    const std::size_t i = simpson;
    w[i] += 3.0 * h / 8.0;
    w[i + 1] += 9.0 * h / 8.0;
    w[i + 2] += 9.0 * h / 8.0;
    w[i + 3] += 3.0 * h / 8.0;
  }
  return w;
}

/// Cost with the L2 inner product <x, y> = x.y / n, split into the auxiliary
/// and eigendirection parts through the system's own spectral decomposition.
inline CostBreakdown evaluate_cost(const Trajectory& traj, const StepSystem& sys) {
  const auto n = static_cast<double>(sys.n());
  const auto& spec = sys.spectrum;
  const auto d = spec.rank();
  const Eigen::MatrixXd f = spec.cell_matrix(sys.n());
  std::vector<double> q_l, z_l;
  for (const auto& pair : spec.pairs()) {
    q_l.push_back(sys.poly_q(pair.lambda));
    z_l.push_back(sys.poly_p0(pair.lambda));
  }
  const double q0 = sys.poly_q.constant_term();
  const double z0 = sys.poly_p0.constant_term();

  const auto w = time_weights(traj.grid);
  CostBreakdown out{0.0, 0.0, std::vector<double>(d, 0.0)};
  const auto accumulate = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& u, double weight,
                              bool terminal) {
    const Eigen::VectorXd xc = f.transpose() * x / n;
    const Eigen::VectorXd xa = x - f * xc;
    if (terminal) {
      out.total += weight * x.dot(sys.p0 * x) / n;
      out.aux += weight * z0 * xa.squaredNorm() / n;
      for (std::size_t l = 0; l < d; ++l) out.eigen[l] += weight * z_l[l] * xc(static_cast<Eigen::Index>(l)) * xc(static_cast<Eigen::Index>(l));
      return;
    }
    const Eigen::VectorXd uc = f.transpose() * u / n;
    const Eigen::VectorXd ua = u - f * uc;
    out.total += weight * (x.dot(sys.q * x) + u.squaredNorm()) / n;
    out.aux += weight * (q0 * xa.squaredNorm() + ua.squaredNorm()) / n;
    for (std::size_t l = 0; l < d; ++l) {
      const auto li = static_cast<Eigen::Index>(l);
      out.eigen[l] += weight * (q_l[l] * xc(li) * xc(li) + uc(li) * uc(li));
    }
  };
  for (std::size_t k = 0; k < traj.grid.size(); ++k)
    accumulate(traj.states[k], traj.controls[k], w[k], false);
  accumulate(traj.states.back(), traj.controls.back(), 1.0, true);
  return out;
}

struct OracleReport {
  double p_gap = 0.0;      // max |P_decoupled - P_matrix| over entries and grid times
  double state_gap = 0.0;  // max |x_decoupled - x_matrix| over entries and grid times
  double cost_decoupled = 0.0;
  double cost_oracle = 0.0;
  double cost_rel_gap = 0.0;
};

/// Runs the decoupled localized law against the direct matrix-Riccati LQR
/// solution u = -b^T P(T - t) x on the same network.
inline OracleReport oracle_compare(const StepSystem& sys, const LqrProblem& problem,
                                   const Eigen::VectorXd& x0, double horizon, double dt) {
  const auto p = problem.with_horizon(horizon);
  const auto n = sys.n();
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& pair : p.graphon.pairs()) {
    const Eigen::VectorXd f = pair.eigfun.sample_cells(n);
    kernel += pair.lambda * f * f.transpose();
  }
  const double mismatch = (kernel - sys.coupling.entries()).cwiseAbs().maxCoeff();
  if (mismatch > 1e-6 * std::max(1.0, sys.coupling.bound())) {
    std::ostringstream os;
    os << "problem graphon does not reproduce the network coupling (max entry gap " << mismatch
       << ")";
    throw ValidationError(os.str());
  }

  const auto gains = synthesize_gains(p, dt);
  const FeedbackLaw law(p, gains);
  const auto oracle_p = solve_matrix_riccati(sys.a, sys.b, sys.q, sys.p0, horizon, dt);
  const Eigen::MatrixXd bt = sys.b.transpose();
  const auto oracle_law = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return -bt * (oracle_p.at(std::max(0.0, horizon - t)) * x);
  };

  OracleReport report;
  for (std::size_t k = 0; k < oracle_p.size(); ++k) {
    const Eigen::MatrixXd rec = reconstruct_P(gains, p.graphon, oracle_p.grid()[k], n);
    report.p_gap = std::max(report.p_gap, (rec - oracle_p.values()[k]).cwiseAbs().maxCoeff());
  }
  const auto dec = simulate(sys, law, x0, horizon, dt);
  const auto ref = simulate(sys, oracle_law, x0, horizon, dt);
  for (std::size_t k = 0; k < dec.states.size(); ++k)
    report.state_gap =
        std::max(report.state_gap, (dec.states[k] - ref.states[k]).cwiseAbs().maxCoeff());
  report.cost_decoupled = evaluate_cost(dec, sys).total;
  report.cost_oracle = evaluate_cost(ref, sys).total;
  const double gap = std::abs(report.cost_decoupled - report.cost_oracle);
  report.cost_rel_gap = report.cost_oracle > 0.0 ? gap / report.cost_oracle : gap;
  return report;
}

struct DirectionRatio {
  std::size_t direction = 0;  // zero-based eigendirection index
  double measured = std::numeric_limits<double>::quiet_NaN();
  double predicted = std::numeric_limits<double>::quiet_NaN();
};

struct TruncationRow {
  std::size_t levels = 0;
  double cost_truncated = 0.0;
  double cost_optimal = 0.0;
  std::vector<DirectionRatio> ratios;  // one entry per ignored direction
};

/// Costs of the rank-L truncated laws next to the optimal law, and the measured
/// terminal eigenstate ratio of each ignored direction against its prediction
/// (predictions only when poly_b is constant).
inline std::vector<TruncationRow> truncation_study(const StepSystem& sys, const LqrProblem& problem,
                                                   const Eigen::VectorXd& x0,
                                                   const std::vector<std::size_t>& levels,
                                                   double horizon, double dt) {
  const auto p = problem.with_horizon(horizon);
  const auto d = p.graphon.rank();
  const auto optimal = simulate(sys, truncated_law(p, d, dt), x0, horizon, dt);
  const double j_opt = evaluate_cost(optimal, sys).total;
  std::vector<TruncationRow> rows;
  for (const auto levels_l : levels) {
    if (levels_l > d) {
      std::ostringstream os;
      os << "truncation level " << levels_l << " exceeds the graphon rank " << d;
      throw ValidationError(os.str());
    }
    TruncationRow row{levels_l, j_opt, j_opt, {}};
    if (levels_l < d) {
      const auto traj = simulate(sys, truncated_law(p, levels_l, dt), x0, horizon, dt);
      row.cost_truncated = evaluate_cost(traj, sys).total;
      for (std::size_t h = levels_l; h < d; ++h) {
        const Eigen::VectorXd f = p.graphon.pairs()[h].eigfun.sample_cells(sys.n());
        DirectionRatio r{h};
        const double reference = inner_product(optimal.final_state(), f);
        if (reference != 0.0) r.measured = inner_product(traj.final_state(), f) / reference;
        if (p.poly_b.is_constant()) r.predicted = ratio_prediction(p, h, dt);
        row.ratios.push_back(r);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace graphon_lqr
