#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "graphon_lqr/error.hpp"

namespace graphon_lqr {

namespace detail {

inline bool all_finite(double v) { return std::isfinite(v); }

template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

// Additive zero with the same shape as `like`.
inline double zero_like(double) { return 0.0; }

template <class Derived>
typename Derived::PlainObject zero_like(const Eigen::DenseBase<Derived>& like) {
  return Derived::PlainObject::Zero(like.rows(), like.cols());
}

} // namespace detail

// Uniform grid 0 = t_0 < ... < t_K = T with K = ceil(T / dt) intervals.
inline std::vector<double> uniform_grid(double horizon, double dt) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw DomainError("horizon must be positive and finite");
  if (!(dt > 0.0) || dt > horizon * (1.0 + 1e-12))
    throw DomainError("time step must satisfy 0 < dt <= horizon");
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  std::vector<double> grid(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k)
    grid[k] = horizon * static_cast<double>(k) / static_cast<double>(steps);
  grid.back() = horizon;
  return grid;
}

// Classic fourth-order Runge-Kutta step for y' = f(t, y).
template <class V, class F>
V rk4_step(F&& f, double t, const V& y, double h) {
  const V k1 = f(t, y);
  const V k2 = f(t + 0.5 * h, V(y + (0.5 * h) * k1));
  const V k3 = f(t + 0.5 * h, V(y + (0.5 * h) * k2));
  const V k4 = f(t + h, V(y + h * k3));
  return V(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

/// Time-sampled curve with values of type `V` (a scalar or an Eigen matrix).
///
/// When slopes are supplied the curve is the piecewise cubic Hermite
/// interpolant of (value, slope) pairs, which is fourth-order accurate and
/// keeps off-grid queries made by Runge-Kutta stages consistent with the
/// integrator. Without slopes it is piecewise linear.
template <class V>
class SampledCurve {
public:
  SampledCurve() = default;

  SampledCurve(std::vector<double> grid, std::vector<V> values, std::vector<V> slopes = {})
      : grid_(std::move(grid)), values_(std::move(values)), slopes_(std::move(slopes)) {
    if (grid_.empty() || grid_.size() != values_.size())
      throw ShapeError("curve grid and values must be non-empty and of equal length");
    if (!slopes_.empty() && slopes_.size() != values_.size())
      throw ShapeError("curve slopes must match the number of samples");
    for (std::size_t k = 1; k < grid_.size(); ++k)
      if (!(grid_[k] > grid_[k - 1]))
        throw ValidationError("curve grid must be strictly increasing");
    for (std::size_t k = 0; k < values_.size(); ++k)
      if (!detail::all_finite(values_[k])) {
        std::ostringstream os;
        os << "curve value at sample " << k << " (t=" << grid_[k] << ") is not finite";
        throw NumericError(os.str());
      }
    cumulative_.reserve(grid_.size());
    V acc = detail::zero_like(values_.front());
    cumulative_.push_back(acc);
    for (std::size_t k = 0; k + 1 < grid_.size(); ++k) {
      acc = V(acc + segment_integral(k, 1.0));
      cumulative_.push_back(acc);
    }
  }

  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<V>& values() const noexcept { return values_; }
  const std::vector<V>& slopes() const noexcept { return slopes_; }
  bool has_slopes() const noexcept { return !slopes_.empty(); }
  std::size_t size() const noexcept { return grid_.size(); }
  double start() const { return grid_.front(); }
  double horizon() const { return grid_.back(); }

  V at(double t) const {
    const auto [k, s] = locate(t);
    if (s == 0.0) return values_[k];
    const double h = grid_[k + 1] - grid_[k];
    if (!has_slopes()) return V((1.0 - s) * values_[k] + s * values_[k + 1]);
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    return V(h00 * values_[k] + (h10 * h) * slopes_[k] + h01 * values_[k + 1] +
             (h11 * h) * slopes_[k + 1]);
  }

  // Exact integral of the interpolant over [a, b] (a may exceed b).
  V integral(double a, double b) const {
    if (a > b) return V(-integral(b, a));
    return V(antiderivative(b) - antiderivative(a));
  }

private:
  std::pair<std::size_t, double> locate(double t) const {
    const double span = std::max(1.0, std::abs(grid_.back()));
    if (!(t >= grid_.front() - 1e-12 * span && t <= grid_.back() + 1e-12 * span)) {
      std::ostringstream os;
      os << "time " << t << " outside curve range [" << grid_.front() << ", " << grid_.back()
         << "]";
      throw DomainError(os.str());
    }
    if (grid_.size() == 1 || t <= grid_.front()) return {0, 0.0};
    if (t >= grid_.back()) return {grid_.size() - 1, 0.0};
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
    const auto k = static_cast<std::size_t>(std::distance(grid_.begin(), it)) - 1;
    const double s = (t - grid_[k]) / (grid_[k + 1] - grid_[k]);
    return {k, s};
  }

  // Integral over [t_k, t_k + s*h].
  V segment_integral(std::size_t k, double s) const {
    const double h = grid_[k + 1] - grid_[k];
    if (!has_slopes())
      return V(h * ((s - 0.5 * s * s) * values_[k] + (0.5 * s * s) * values_[k + 1]));
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double s4 = s3 * s;
    const double i00 = s - s3 + 0.5 * s4;
    const double i10 = 0.5 * s2 - 2.0 * s3 / 3.0 + 0.25 * s4;
    const double i01 = s3 - 0.5 * s4;
    const double i11 = -s3 / 3.0 + 0.25 * s4;
    return V(h * (i00 * values_[k] + (i10 * h) * slopes_[k] + i01 * values_[k + 1] +
                  (i11 * h) * slopes_[k + 1]));
  }

  V antiderivative(double t) const {
    const auto [k, s] = locate(t);
    if (s == 0.0) return cumulative_[k];
    return V(cumulative_[k] + segment_integral(k, s));
  }

  std::vector<double> grid_;
  std::vector<V> values_;
  std::vector<V> slopes_;
  std::vector<V> cumulative_;
};

using GainCurve = SampledCurve<double>;
using MatrixCurve = SampledCurve<Eigen::MatrixXd>;

} // namespace graphon_lqr
