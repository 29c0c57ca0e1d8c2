#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "graphon_lqr/curve.hpp"
#include "graphon_lqr/error.hpp"

namespace graphon_lqr {

/// Scalar Riccati equation  Pi' = 2 alpha Pi - beta^2 Pi^2 + q,  Pi(0) = z0,
/// integrated forward in Riccati time over [0, horizon].
struct ScalarRiccatiSpec {
  double alpha = 0.0;
  double beta = 1.0;
  double q = 0.0;
  double z0 = 0.0;
  double horizon = 1.0;
  double dt = 1e-3;

  ScalarRiccatiSpec() = default;

  ScalarRiccatiSpec(double alpha_, double beta_, double q_, double z0_, double horizon_,
                    double dt_)
      : alpha(alpha_), beta(beta_), q(q_), z0(z0_), horizon(horizon_), dt(dt_) {
    validate();
  }

  void validate() const {
    std::ostringstream os;
    if (!std::isfinite(alpha) || !std::isfinite(beta))
      os << "Riccati drift and input gain must be finite";
    else if (!(q >= 0.0) || !std::isfinite(q))
      os << "Riccati state weight q = " << q << " must be finite and non-negative";
    else if (!(z0 >= 0.0) || !std::isfinite(z0))
      os << "Riccati initial value z0 = " << z0 << " must be finite and non-negative";
    else if (!(horizon > 0.0) || !std::isfinite(horizon))
      os << "Riccati horizon must be positive";
    else if (!(dt > 0.0) || dt > horizon * (1.0 + 1e-12))
      os << "Riccati step dt = " << dt << " must satisfy 0 < dt <= horizon";
    else
      return;
    throw ValidationError(os.str());
  }

  double rhs(double pi) const noexcept { return 2.0 * alpha * pi - beta * beta * pi * pi + q; }
};

/// RK4 solution on the uniform grid of the spec.
inline GainCurve solve_riccati_numeric(const ScalarRiccatiSpec& spec) {
  spec.validate();
  const auto grid = uniform_grid(spec.horizon, spec.dt);
  std::vector<double> values(grid.size());
  std::vector<double> slopes(grid.size());
  values[0] = spec.z0;
  slopes[0] = spec.rhs(spec.z0);
  const auto f = [&](double, double pi) { return spec.rhs(pi); };
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    values[k + 1] = rk4_step(f, grid[k], values[k], grid[k + 1] - grid[k]);
    if (!std::isfinite(values[k + 1])) {
      std::ostringstream os;
      os << "scalar Riccati integration blew up at step " << k + 1 << " (t=" << grid[k + 1] << ")";
      throw NumericError(os.str());
    }
    slopes[k + 1] = spec.rhs(values[k + 1]);
  }
  return GainCurve(grid, std::move(values), std::move(slopes));
}

/// Non-negative root S of 0 = 2 alpha S - beta^2 S^2 + q.
inline double algebraic_root(double alpha, double beta, double q) {
  if (beta == 0.0)
    throw DegenerateBranch(DegenerateBranch::Kind::ZeroInputGain,
                           "algebraic Riccati equation has no root for zero input gain");
  if (!(q >= 0.0)) throw ValidationError("algebraic Riccati root needs q >= 0");
  const double b2 = beta * beta;
  const double r = std::sqrt(alpha * alpha + q * b2);
  // (alpha + r) / beta^2, rewritten to avoid cancellation when alpha < 0.
  return alpha >= 0.0 ? (alpha + r) / b2 : (r - alpha > 0.0 ? q / (r - alpha) : 0.0);
}

/// Explicit solution through the reciprocal of Pi - S:
///   Pi_t = [e^{-2(alpha - beta^2 S) t} / (z0 - S) + beta^2 int_0^t e^{-2(alpha - beta^2 S) s} ds]^{-1} + S.
///
/// Evaluated as Pi_t = S + (z0 - S) E / (1 + (z0 - S) beta^2 (E - 1) / (2k)) with
/// k = alpha - beta^2 S <= 0 and E = e^{2kt}, which is the same expression
/// multiplied through by E and stays bounded for long horizons.
inline GainCurve solve_riccati_closed_form(const ScalarRiccatiSpec& spec) {
  spec.validate();
  const double s_root = algebraic_root(spec.alpha, spec.beta, spec.q);
  const double offset = spec.z0 - s_root;
  if (std::abs(offset) <= 1e-12 * std::max(1.0, std::abs(s_root)))
    throw DegenerateBranch(DegenerateBranch::Kind::EquilibriumStart,
                           "initial value equals the algebraic root; solution is constant");
  const double b2 = spec.beta * spec.beta;
  const double k = spec.alpha - b2 * s_root;
  const auto grid = uniform_grid(spec.horizon, spec.dt);
  std::vector<double> values(grid.size());
  std::vector<double> slopes(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    // (E - 1) / (2k), with the limit t as k -> 0.
    const double growth = k == 0.0 ? t : std::expm1(2.0 * k * t) / (2.0 * k);
    const double denom = 1.0 + offset * b2 * growth;
    // Pi - S keeps the sign of z0 - S on the whole horizon when q, z0 >= 0.
    if (!(denom > 0.0)) {
      std::ostringstream os;
      os << "closed-form Riccati solution crosses the algebraic root at t=" << t;
      throw NumericError(os.str());
    }
    const double e = std::exp(2.0 * k * t);
    values[i] = s_root + offset * e / denom;
    slopes[i] = spec.rhs(values[i]);
  }
  return GainCurve(grid, std::move(values), std::move(slopes));
}

/// Closed form where it is defined; the equilibrium constant when z0 = S; the
/// linear solution z0 e^{2 alpha t} + q (e^{2 alpha t} - 1) / (2 alpha) when beta = 0.
inline GainCurve solve_riccati_explicit(const ScalarRiccatiSpec& spec) {
  try {
    return solve_riccati_closed_form(spec);
  } catch (const DegenerateBranch& branch) {
    const auto grid = uniform_grid(spec.horizon, spec.dt);
    std::vector<double> values(grid.size());
    std::vector<double> slopes(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double t = grid[i];
      if (branch.kind() == DegenerateBranch::Kind::EquilibriumStart) {
        values[i] = algebraic_root(spec.alpha, spec.beta, spec.q);
      } else {
        const double growth = spec.alpha == 0.0 ? t : std::expm1(2.0 * spec.alpha * t) / (2.0 * spec.alpha);
        values[i] = spec.z0 * std::exp(2.0 * spec.alpha * t) + spec.q * growth;
      }
      slopes[i] = spec.rhs(values[i]);
    }
    return GainCurve(grid, std::move(values), std::move(slopes));
  }
}

namespace detail {

inline void require_psd(const Eigen::MatrixXd& m, const char* name) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << name << " must be square";
    throw ShapeError(os.str());
  }
  if (m.rows() == 0) return;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    std::ostringstream os;
    os << name << " must be symmetric";
    throw ValidationError(os.str());
  }
  const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly)
                        .eigenvalues()
                        .minCoeff();
  if (lo < -1e-9 * scale) {
    std::ostringstream os;
    os << name << " must be positive semidefinite (smallest eigenvalue " << lo << ")";
    throw ValidationError(os.str());
  }
}

} // namespace detail

/// Matrix Riccati equation P' = A^T P + P A - P B B^T P + Q, P(0) = P0, by RK4
/// with symmetrization after every step.
inline MatrixCurve solve_matrix_riccati(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                        const Eigen::MatrixXd& q, const Eigen::MatrixXd& p0,
                                        double horizon, double dt) {
  const auto n = a.rows();
  if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n || p0.rows() != n ||
      p0.cols() != n) {
    throw ShapeError("matrix Riccati operands have inconsistent shapes");
  }
  detail::require_psd(q, "state weight Q");
  detail::require_psd(p0, "terminal weight P0");
  const Eigen::MatrixXd bbt = b * b.transpose();
  const auto f = [&](double, const Eigen::MatrixXd& p) -> Eigen::MatrixXd {
    Eigen::MatrixXd ap = a.transpose() * p;
    return ap + ap.transpose() - p * bbt * p + q;
  };
  const auto grid = uniform_grid(horizon, dt);
  std::vector<Eigen::MatrixXd> values(grid.size());
  std::vector<Eigen::MatrixXd> slopes(grid.size());
  values[0] = 0.5 * (p0 + p0.transpose());
  slopes[0] = f(0.0, values[0]);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    Eigen::MatrixXd next = rk4_step(f, grid[k], values[k], grid[k + 1] - grid[k]);
    next = 0.5 * (next + next.transpose()).eval();
    if (!next.allFinite()) {
      std::ostringstream os;
      os << "matrix Riccati integration blew up at step " << k + 1 << " (t=" << grid[k + 1] << ")";
      throw NumericError(os.str());
    }
    values[k + 1] = std::move(next);
    slopes[k + 1] = f(grid[k + 1], values[k + 1]);
  }
  return MatrixCurve(grid, std::move(values), std::move(slopes));
}

} // namespace graphon_lqr
