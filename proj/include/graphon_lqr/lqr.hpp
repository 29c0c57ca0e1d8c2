#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "graphon_lqr/curve.hpp"
#include "graphon_lqr/error.hpp"
#include "graphon_lqr/graphon.hpp"
#include "graphon_lqr/riccati.hpp"
#include "graphon_lqr/scalar_poly.hpp"

namespace graphon_lqr {

/// Finite-horizon LQR problem on a finite-rank graphon:
///   x' = (alpha0 I + A) x + poly_b(A) u,
///   J  = int_0^T <x, poly_q(A) x> + <u, u> dt + <x_T, poly_p0(A) x_T>.
struct LqrProblem {
  // Tolerance on the weight polynomials' sign at stored eigenvalues (rounding only).
  static constexpr double kWeightSlack = 1e-12;

  double alpha0 = 0.0;
  CoeffPoly poly_b{1.0};
  CoeffPoly poly_q{0.0};
  CoeffPoly poly_p0{0.0};
  FiniteRankGraphon graphon;
  double horizon = 1.0;

  LqrProblem() = default;

  LqrProblem(double alpha0_, CoeffPoly poly_b_, CoeffPoly poly_q_, CoeffPoly poly_p0_,
             FiniteRankGraphon graphon_, double horizon_)
      : alpha0(alpha0_), poly_b(std::move(poly_b_)), poly_q(std::move(poly_q_)),
        poly_p0(std::move(poly_p0_)), graphon(std::move(graphon_)), horizon(horizon_) {
    validate();
  }

  double beta0() const noexcept { return poly_b.constant_term(); }
  double q0() const noexcept { return poly_q.constant_term(); }
  double z0() const noexcept { return poly_p0.constant_term(); }

  void validate() const {
    std::ostringstream os;
    if (!std::isfinite(alpha0))
      os << "alpha0 must be finite";
    else if (!(horizon > 0.0) || !std::isfinite(horizon))
      os << "horizon must be positive and finite";
    else if (q0() < 0.0)
      os << "poly_Q constant term q0 = " << q0() << " must be non-negative";
    else if (z0() < 0.0)
      os << "poly_P0 constant term z0 = " << z0() << " must be non-negative";
    if (!os.str().empty()) throw ValidationError(os.str());
    for (std::size_t l = 0; l < graphon.rank(); ++l) {
      const double lam = graphon.pairs()[l].lambda;
      if (poly_q(lam) < -kWeightSlack || poly_p0(lam) < -kWeightSlack) {
        os << "weights must be non-negative on the spectrum: poly_Q(" << lam << ") = " << poly_q(lam)
           << ", poly_P0(" << lam << ") = " << poly_p0(lam) << " (direction " << l + 1 << ")";
        throw ValidationError(os.str());
      }
    }
  }

  LqrProblem with_graphon(FiniteRankGraphon g) const {
    return LqrProblem(alpha0, poly_b, poly_q, poly_p0, std::move(g), horizon);
  }
  LqrProblem with_horizon(double t) const {
    return LqrProblem(alpha0, poly_b, poly_q, poly_p0, graphon, t);
  }
};

// Scalar LQR data of one decoupled subproblem.
struct ScalarSubproblem {
  double drift = 0.0;
  double gain = 0.0;
  double q = 0.0;
  double z = 0.0;

  friend bool operator==(const ScalarSubproblem&, const ScalarSubproblem&) = default;
};

inline ScalarSubproblem auxiliary_params(const LqrProblem& p) {
  return {p.alpha0, p.beta0(), p.q0(), p.z0()};
}

// (alpha0 + lambda_l, poly_b(lambda_l), poly_q(lambda_l), poly_p0(lambda_l)); l is zero-based.
inline ScalarSubproblem eigensystem_params(const LqrProblem& p, std::size_t l) {
  const double lam = p.graphon.pair(l).lambda;
  return {p.alpha0 + lam, p.poly_b(lam), p.poly_q(lam), p.poly_p0(lam)};
}

/// Eigenstate coordinates x_l = <x, f_l> and the orthogonal remainder.
template <class State>
struct DecoupledState {
  std::vector<double> eigen_coords;
  State auxiliary;
};

inline DecoupledState<Eigen::VectorXd> project_state(const Eigen::VectorXd& x,
                                                     const FiniteRankGraphon& g) {
  const auto n = static_cast<std::size_t>(x.size());
  if (n == 0) throw ShapeError("cannot project an empty state");
  if (!x.allFinite()) throw ValidationError("state has non-finite entries");
  DecoupledState<Eigen::VectorXd> out{{}, x};
  for (const auto& p : g.pairs()) {
    const Eigen::VectorXd f = p.eigfun.sample_cells(n);
    const double c = inner_product(x, f);
    out.eigen_coords.push_back(c);
    out.auxiliary -= c * f;
  }
  return out;
}

inline DecoupledState<Function> project_state(const Function& x, const FiniteRankGraphon& g) {
  std::vector<double> coords;
  for (const auto& p : g.pairs()) coords.push_back(inner_product(p.eigfun, x, g.quadrature()));
  Function aux = [x, pairs = g.pairs(), coords](double y) {
    double v = x(y);
    for (std::size_t l = 0; l < pairs.size(); ++l) v -= coords[l] * pairs[l].eigfun(y);
    return v;
  };
  return {std::move(coords), std::move(aux)};
}

/// Auxiliary gain L and one eigengain M^l per eigendirection, all stored
/// forward in Riccati time and read as L_{T-t}, M_{T-t}.
struct GainSchedule {
  GainCurve aux;
  std::vector<GainCurve> eigen;

  double horizon() const { return aux.horizon(); }
};

enum class RiccatiMethod { Numeric, ClosedForm };

inline GainCurve solve_subproblem(const ScalarSubproblem& s, double horizon, double dt,
                                  RiccatiMethod method) {
  // Clamp rounding-level negatives admitted by LqrProblem::kWeightSlack.
  const ScalarRiccatiSpec spec(s.drift, s.gain, std::max(s.q, 0.0), std::max(s.z, 0.0), horizon,
                               dt);
  return method == RiccatiMethod::Numeric ? solve_riccati_numeric(spec)
                                          : solve_riccati_explicit(spec);
}

/// d + 1 scalar Riccati solves. Directions sharing an eigenvalue share one solve.
inline GainSchedule synthesize_gains(const LqrProblem& p, double dt,
                                     RiccatiMethod method = RiccatiMethod::Numeric) {
  GainSchedule out{solve_subproblem(auxiliary_params(p), p.horizon, dt, method), {}};
  out.eigen.reserve(p.graphon.rank());
  for (std::size_t l = 0; l < p.graphon.rank(); ++l) {
    const double lam = p.graphon.pairs()[l].lambda;
    std::optional<std::size_t> same;
    for (std::size_t k = 0; k < l && !same; ++k)
      if (std::abs(p.graphon.pairs()[k].lambda - lam) <= 1e-14 * std::max(1.0, std::abs(lam)))
        same = k;
    out.eigen.push_back(same ? out.eigen[*same]
                             : solve_subproblem(eigensystem_params(p, l), p.horizon, dt, method));
  }
  return out;
}

namespace detail {

inline void check_schedule(const LqrProblem& p, const GainSchedule& gains, double t) {
  if (gains.eigen.size() != p.graphon.rank()) {
    std::ostringstream os;
    os << "gain schedule has " << gains.eigen.size() << " eigengains for a rank-"
       << p.graphon.rank() << " graphon";
    throw ShapeError(os.str());
  }
  if (std::abs(gains.horizon() - p.horizon) > 1e-12 * std::max(1.0, p.horizon))
    throw ValidationError("gain schedule horizon differs from the problem horizon");
  if (!(t >= 0.0 && t <= p.horizon * (1.0 + 1e-12))) {
    std::ostringstream os;
    os << "time " << t << " outside [0, " << p.horizon << "]";
    throw DomainError(os.str());
  }
}

inline double time_to_go(const LqrProblem& p, double t) { return std::max(0.0, p.horizon - t); }

} // namespace detail

/// Feedback for the subsystem at index gamma:
///   u_t(gamma) = -beta0 L_{T-t} x_aux(gamma) - sum_l poly_b(lambda_l) M^l_{T-t} x_l f_l(gamma).
/// For a cell-vector state gamma is resolved to its partition cell.
inline double control_localized(double gamma, double t, const Eigen::VectorXd& x,
                                const GainSchedule& gains, const LqrProblem& p) {
  check_unit_interval(gamma, "subsystem index");
  detail::check_schedule(p, gains, t);
  const auto n = static_cast<std::size_t>(x.size());
  const auto i = static_cast<Eigen::Index>(cell_index(gamma, n));
  const double tau = detail::time_to_go(p, t);
  double aux = x(i);
  double eig = 0.0;
  for (std::size_t l = 0; l < p.graphon.rank(); ++l) {
    const auto& pair = p.graphon.pairs()[l];
    const Eigen::VectorXd f = pair.eigfun.sample_cells(n);
    const double coord = inner_product(x, f);
    aux -= coord * f(i);
    eig += p.poly_b(pair.lambda) * gains.eigen[l].at(tau) * coord * f(i);
  }
  return -p.beta0() * gains.aux.at(tau) * aux - eig;
}

inline double control_localized(double gamma, double t, const Function& x,
                                const GainSchedule& gains, const LqrProblem& p) {
  check_unit_interval(gamma, "subsystem index");
  detail::check_schedule(p, gains, t);
  const double tau = detail::time_to_go(p, t);
  const auto split = project_state(x, p.graphon);
  double eig = 0.0;
  for (std::size_t l = 0; l < p.graphon.rank(); ++l) {
    const auto& pair = p.graphon.pairs()[l];
    eig += p.poly_b(pair.lambda) * gains.eigen[l].at(tau) * split.eigen_coords[l] * pair.eigfun(gamma);
  }
  return -p.beta0() * gains.aux.at(tau) * split.auxiliary(gamma) - eig;
}

using Controller = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

/// Vectorized localized law on cell-vector states. Eigenfunction cell values
/// are cached when the graphon carries step eigenfunctions.
///
/// With `initial_state` set, eigenstates are not re-projected from x_t but
/// propagated from <x_0, f_l> along the closed-loop scalar flow.
class FeedbackLaw {
public:
  FeedbackLaw(LqrProblem problem, GainSchedule gains,
              std::optional<Eigen::VectorXd> initial_state = std::nullopt)
      : problem_(std::move(problem)), gains_(std::move(gains)) {
    detail::check_schedule(problem_, gains_, 0.0);
    for (const auto& pair : problem_.graphon.pairs()) input_gain_.push_back(problem_.poly_b(pair.lambda));
    const auto& pairs = problem_.graphon.pairs();
    if (!pairs.empty() && pairs.front().eigfun.is_step())
      cells_ = problem_.graphon.cell_matrix(pairs.front().eigfun.cells());
    if (initial_state) {
      const auto f = eigen_cells(static_cast<std::size_t>(initial_state->size()));
      initial_coords_ = f.transpose() * *initial_state / static_cast<double>(initial_state->size());
    }
  }

  const LqrProblem& problem() const noexcept { return problem_; }
  const GainSchedule& gains() const noexcept { return gains_; }

  Eigen::VectorXd operator()(double t, const Eigen::VectorXd& x) const {
    detail::check_schedule(problem_, gains_, t);
    const auto n = static_cast<std::size_t>(x.size());
    const double tau = detail::time_to_go(problem_, t);
    const auto d = static_cast<Eigen::Index>(problem_.graphon.rank());
    if (d == 0) return -problem_.beta0() * gains_.aux.at(tau) * x;
    const Eigen::MatrixXd f = eigen_cells(n);
    const Eigen::VectorXd coords = initial_coords_ ? precomputed_coords(t) : Eigen::VectorXd(f.transpose() * x / static_cast<double>(n));
    Eigen::VectorXd weighted(d);
    for (Eigen::Index l = 0; l < d; ++l)
      weighted(l) = input_gain_[static_cast<std::size_t>(l)] *
                    gains_.eigen[static_cast<std::size_t>(l)].at(tau) * coords(l);
    const Eigen::VectorXd aux = x - f * coords;
    return -problem_.beta0() * gains_.aux.at(tau) * aux - f * weighted;
  }

  // Eigenstates x_l(t) = x_l(0) exp(int_0^t (alpha0 + lambda_l - b_l^2 M^l_{T-s}) ds).
  Eigen::VectorXd precomputed_coords(double t) const {
    Eigen::VectorXd out(initial_coords_->size());
    for (Eigen::Index l = 0; l < out.size(); ++l) {
      const auto li = static_cast<std::size_t>(l);
      const double b = input_gain_[li];
      const double lam = problem_.graphon.pairs()[li].lambda;
      const double tau = detail::time_to_go(problem_, t);
      const double integral = gains_.eigen[li].integral(tau, problem_.horizon);
      out(l) = (*initial_coords_)(l) * std::exp((problem_.alpha0 + lam) * t - b * b * integral);
    }
    return out;
  }

private:
  Eigen::MatrixXd eigen_cells(std::size_t n) const {
    if (cells_ && static_cast<std::size_t>(cells_->rows()) == n) return *cells_;
    return problem_.graphon.cell_matrix(n);
  }

  LqrProblem problem_;
  GainSchedule gains_;
  std::vector<double> input_gain_;
  std::optional<Eigen::MatrixXd> cells_;
  std::optional<Eigen::VectorXd> initial_coords_;
};

/// Eigenstate closed-loop factor exp(int_0^t (alpha0 + lambda_l - b_l^2 M^l_{T-s}) ds).
inline double eigenstate_flow(const LqrProblem& p, const GainSchedule& gains, std::size_t l,
                              double t) {
  detail::check_schedule(p, gains, t);
  const auto s = eigensystem_params(p, l);
  const double integral = gains.eigen[l].integral(detail::time_to_go(p, t), p.horizon);
  return std::exp(s.drift * t - s.gain * s.gain * integral);
}

inline Eigen::VectorXd control_centralized(double t, const Eigen::VectorXd& x,
                                           const GainSchedule& gains, const LqrProblem& p) {
  return FeedbackLaw(p, gains)(t, x);
}

inline Function control_centralized(double t, const Function& x, const GainSchedule& gains,
                                    const LqrProblem& p) {
  detail::check_schedule(p, gains, t);
  const double tau = detail::time_to_go(p, t);
  auto split = project_state(x, p.graphon);
  std::vector<double> weighted;
  for (std::size_t l = 0; l < p.graphon.rank(); ++l)
    weighted.push_back(p.poly_b(p.graphon.pairs()[l].lambda) * gains.eigen[l].at(tau) *
                       split.eigen_coords[l]);
  return [aux = std::move(split.auxiliary), weighted = std::move(weighted),
          pairs = p.graphon.pairs(), k = p.beta0() * gains.aux.at(tau)](double gamma) {
    double u = -k * aux(gamma);
    for (std::size_t l = 0; l < pairs.size(); ++l) u -= weighted[l] * pairs[l].eigfun(gamma);
    return u;
  };
}

/// Feedback operator on n cells: P(t) = L_t (I - sum Pi_l) + sum M^l_t Pi_l,
/// Pi_l = f_l f_l^T / n. Requires step eigenfunctions.
inline Eigen::MatrixXd reconstruct_P(const GainSchedule& gains, const FiniteRankGraphon& g,
                                     double t, std::size_t n) {
  if (gains.eigen.size() != g.rank()) throw ShapeError("gain schedule does not match the graphon rank");
  const auto ni = static_cast<Eigen::Index>(n);
  const double l_t = gains.aux.at(t);
  Eigen::MatrixXd p = l_t * Eigen::MatrixXd::Identity(ni, ni);
  for (std::size_t l = 0; l < g.rank(); ++l) {
    const auto& f = g.pairs()[l].eigfun;
    if (!f.is_step())
      throw UnsupportedError("reconstruct_P needs step eigenfunctions on a cell grid");
    const Eigen::VectorXd v = f.sample_cells(n);
    p.noalias() += ((gains.eigen[l].at(t) - l_t) / static_cast<double>(n)) * (v * v.transpose());
  }
  return p;
}

/// Localized law of the rank-L truncation: directions beyond L fall under the
/// auxiliary gain.
inline FeedbackLaw truncated_law(const LqrProblem& p, std::size_t levels, double dt,
                                 RiccatiMethod method = RiccatiMethod::Numeric) {
  const auto reduced = p.with_graphon(truncate(p.graphon, levels));
  return FeedbackLaw(reduced, synthesize_gains(reduced, dt, method));
}

inline Controller truncated_controller(const LqrProblem& p, std::size_t levels, double dt) {
  return truncated_law(p, levels, dt);
}

inline Controller optimal_controller(const LqrProblem& p, double dt) {
  return FeedbackLaw(p, synthesize_gains(p, dt));
}

/// Predicted terminal ratio x~_T / x_T in eigendirection h (zero-based) when h
/// is served by the auxiliary gain instead of its own:
///   exp(-beta0^2 int_0^T (M~_t - M^h_t) dt),  M~ = L.
inline double ratio_prediction(const LqrProblem& p, std::size_t h, double dt,
                               RiccatiMethod method = RiccatiMethod::ClosedForm) {
  if (!p.poly_b.is_constant())
    throw PreconditionError("ratio prediction requires a constant input polynomial poly_B = beta0");
  const auto aux = solve_subproblem(auxiliary_params(p), p.horizon, dt, method);
  const auto own = solve_subproblem(eigensystem_params(p, h), p.horizon, dt, method);
  const double b2 = p.beta0() * p.beta0();
  return std::exp(-b2 * (aux.integral(0.0, p.horizon) - own.integral(0.0, p.horizon)));
}

} // namespace graphon_lqr
