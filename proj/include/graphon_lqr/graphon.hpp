#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "graphon_lqr/error.hpp"

namespace graphon_lqr {

// A real function on [0, 1].
using Function = std::function<double(double)>;

/// Composite midpoint rule on a uniform grid of [0, 1].
struct Quadrature {
  std::size_t nodes = 4096;

  double node(std::size_t i) const noexcept {
    return (static_cast<double>(i) + 0.5) / static_cast<double>(nodes);
  }
  double weight() const noexcept { return 1.0 / static_cast<double>(nodes); }

  template <class F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) acc += f(node(i));
    return acc * weight();
  }
};

inline void check_unit_interval(double x, const char* what = "coordinate") {
  if (!(x >= 0.0 && x <= 1.0)) {
    std::ostringstream os;
    os << what << " " << x << " outside [0, 1]";
    throw DomainError(os.str());
  }
}

// Index of the partition cell P_i = [i/n, (i+1)/n) containing x; the last cell is closed at 1.
inline std::size_t cell_index(double x, std::size_t n) {
  check_unit_interval(x);
  const auto i = static_cast<std::size_t>(std::floor(x * static_cast<double>(n)));
  return std::min(i, n - 1);
}

inline double cell_midpoint(std::size_t i, std::size_t n) noexcept {
  return (static_cast<double>(i) + 0.5) / static_cast<double>(n);
}

inline double inner_product(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    std::ostringstream os;
    os << "cell vectors of length " << a.size() << " and " << b.size() << " are incompatible";
    throw ShapeError(os.str());
  }
  return a.dot(b) / static_cast<double>(a.size());
}

inline double inner_product(const Function& a, const Function& b, const Quadrature& q = {}) {
  return q.integrate([&](double x) { return a(x) * b(x); });
}

/// Eigenfunction of a graphon operator: either an analytic closure or a
/// piecewise-constant function given by its values on a uniform partition.
class Eigenfunction {
public:
  static Eigenfunction analytic(Function f) {
    if (!f) throw ValidationError("analytic eigenfunction is empty");
    return Eigenfunction(std::move(f));
  }

  static Eigenfunction step(Eigen::VectorXd cell_values) {
    if (cell_values.size() == 0) throw ValidationError("step eigenfunction needs at least one cell");
    if (!cell_values.allFinite()) throw ValidationError("step eigenfunction has non-finite values");
    return Eigenfunction(std::move(cell_values));
  }

  bool is_step() const noexcept { return std::holds_alternative<Eigen::VectorXd>(rep_); }

  std::size_t cells() const noexcept {
    return is_step() ? static_cast<std::size_t>(std::get<Eigen::VectorXd>(rep_).size()) : 0;
  }

  double operator()(double x) const {
    if (const auto* v = std::get_if<Eigen::VectorXd>(&rep_))
      return (*v)(static_cast<Eigen::Index>(cell_index(x, static_cast<std::size_t>(v->size()))));
    check_unit_interval(x);
    return std::get<Function>(rep_)(x);
  }

  const Eigen::VectorXd& cell_values() const {
    if (!is_step()) throw UnsupportedError("analytic eigenfunction has no cell values");
    return std::get<Eigen::VectorXd>(rep_);
  }

  // Values on an n-cell partition: the stored values for a step function with
  // matching n, midpoint samples for an analytic one.
  Eigen::VectorXd sample_cells(std::size_t n) const {
    if (is_step()) {
      const auto& v = std::get<Eigen::VectorXd>(rep_);
      if (static_cast<std::size_t>(v.size()) != n) {
        std::ostringstream os;
        os << "step eigenfunction on " << v.size() << " cells used on a " << n << "-cell partition";
        throw ShapeError(os.str());
      }
      return v;
    }
    const auto& f = std::get<Function>(rep_);
    Eigen::VectorXd out(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i)) = f(cell_midpoint(i, n));
    return out;
  }

  Function as_function() const {
    return [self = *this](double x) { return self(x); };
  }

private:
  explicit Eigenfunction(Function f) : rep_(std::move(f)) {}
  explicit Eigenfunction(Eigen::VectorXd v) : rep_(std::move(v)) {}

  std::variant<Function, Eigen::VectorXd> rep_;
};

inline double inner_product(const Eigenfunction& a, const Eigenfunction& b,
                            const Quadrature& q = {}) {
  if (a.is_step() && b.is_step() && a.cells() == b.cells())
    return inner_product(a.cell_values(), b.cell_values());
  return q.integrate([&](double x) { return a(x) * b(x); });
}

inline double inner_product(const Eigenfunction& a, const Function& b, const Quadrature& q = {}) {
  return q.integrate([&](double x) { return a(x) * b(x); });
}

struct EigenPair {
  double lambda = 0.0;
  Eigenfunction eigfun;
};

/// Graphon of finite rank, A(x, y) = sum_l lambda_l f_l(x) f_l(y), with
/// |lambda_l| non-increasing and orthonormal eigenfunctions.
class FiniteRankGraphon {
public:
  static constexpr double kOrthonormalityTol = 1e-8;

  FiniteRankGraphon() = default;

  explicit FiniteRankGraphon(std::vector<EigenPair> pairs, double bound = 1.0,
                             Quadrature quadrature = {})
      : pairs_(std::move(pairs)), bound_(bound), quadrature_(quadrature) {
    if (!(bound_ > 0.0) || !std::isfinite(bound_))
      throw ValidationError("graphon bound must be positive and finite");
    for (std::size_t l = 0; l < pairs_.size(); ++l) {
      const double lam = pairs_[l].lambda;
      std::ostringstream os;
      if (!std::isfinite(lam) || lam == 0.0) {
        os << "eigenvalue " << l + 1 << " must be finite and nonzero";
        throw ValidationError(os.str());
      }
      if (std::abs(lam) > bound_) {
        os << "eigenvalue " << l + 1 << " = " << lam << " exceeds the graphon bound " << bound_;
        throw ValidationError(os.str());
      }
      if (l > 0 && std::abs(lam) > std::abs(pairs_[l - 1].lambda)) {
        os << "eigenvalues must have non-increasing magnitude (pair " << l + 1 << ")";
        throw ValidationError(os.str());
      }
    }
    const auto g = gram();
    for (std::size_t l = 0; l < pairs_.size(); ++l)
      for (std::size_t k = 0; k < pairs_.size(); ++k) {
        const double target = l == k ? 1.0 : 0.0;
        if (std::abs(g(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) - target) >
            kOrthonormalityTol) {
          std::ostringstream os;
          os << "eigenfunctions " << l + 1 << " and " << k + 1 << " are not orthonormal (<f,f> = "
             << g(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) << ")";
          throw ValidationError(os.str());
        }
      }
  }

  std::size_t rank() const noexcept { return pairs_.size(); }
  const std::vector<EigenPair>& pairs() const noexcept { return pairs_; }
  const EigenPair& pair(std::size_t l) const {
    if (l >= pairs_.size()) {
      std::ostringstream os;
      os << "eigendirection index " << l << " out of range for rank " << pairs_.size();
      throw IndexError(os.str());
    }
    return pairs_[l];
  }
  double bound() const noexcept { return bound_; }
  const Quadrature& quadrature() const noexcept { return quadrature_; }

  std::vector<double> eigenvalues() const {
    std::vector<double> out;
    out.reserve(pairs_.size());
    for (const auto& p : pairs_) out.push_back(p.lambda);
    return out;
  }

  // <f_l, f_k> for all pairs.
  Eigen::MatrixXd gram() const {
    const auto d = static_cast<Eigen::Index>(pairs_.size());
    Eigen::MatrixXd g(d, d);
    for (Eigen::Index l = 0; l < d; ++l)
      for (Eigen::Index k = 0; k <= l; ++k)
        g(l, k) = g(k, l) = inner_product(pairs_[static_cast<std::size_t>(l)].eigfun,
                                          pairs_[static_cast<std::size_t>(k)].eigfun, quadrature_);
    return g;
  }

  double eval(double x, double y) const {
    check_unit_interval(x);
    check_unit_interval(y);
    double acc = 0.0;
    for (const auto& p : pairs_) acc += p.lambda * p.eigfun(x) * p.eigfun(y);
    return acc;
  }

  // (A v)(x) = sum_l lambda_l <f_l, v> f_l(x).
  Function apply(const Function& v) const {
    std::vector<double> coeff;
    coeff.reserve(pairs_.size());
    for (const auto& p : pairs_) coeff.push_back(p.lambda * inner_product(p.eigfun, v, quadrature_));
    return [pairs = pairs_, coeff = std::move(coeff)](double x) {
      double acc = 0.0;
      for (std::size_t l = 0; l < pairs.size(); ++l) acc += coeff[l] * pairs[l].eigfun(x);
      return acc;
    };
  }

  // Action on a piecewise-constant function given by its n cell values.
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    const auto n = static_cast<std::size_t>(v.size());
    if (n == 0) throw ShapeError("cannot apply a graphon to an empty cell vector");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
    for (const auto& p : pairs_) {
      const Eigen::VectorXd f = p.eigfun.sample_cells(n);
      out += (p.lambda * inner_product(f, v)) * f;
    }
    return out;
  }

  // Eigenfunction values on an n-cell partition, one column per pair.
  Eigen::MatrixXd cell_matrix(std::size_t n) const {
    Eigen::MatrixXd f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pairs_.size()));
    for (std::size_t l = 0; l < pairs_.size(); ++l)
      f.col(static_cast<Eigen::Index>(l)) = pairs_[l].eigfun.sample_cells(n);
    return f;
  }

private:
  std::vector<EigenPair> pairs_;
  double bound_ = 1.0;
  Quadrature quadrature_{};
};

/// Step-function graphon of a uniform n-cell partition:
/// A(x, y) = a_ij for x in P_i, y in P_j.
class StepGraphon {
public:
  explicit StepGraphon(Eigen::MatrixXd entries, double bound = 1.0)
      : entries_(std::move(entries)), bound_(bound) {
    if (!(bound_ > 0.0) || !std::isfinite(bound_))
      throw ValidationError("graphon bound must be positive and finite");
    if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
      std::ostringstream os;
      os << "coupling matrix must be square and non-empty, got " << entries_.rows() << "x"
         << entries_.cols();
      throw ShapeError(os.str());
    }
    std::vector<std::string> bad;
    const auto n = entries_.rows();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double a = entries_(i, j);
        std::ostringstream os;
        if (!std::isfinite(a) || std::abs(a) > bound_)
          os << "(" << i << "," << j << ") |a|=" << a << " > " << bound_;
        else if (j > i && a != entries_(j, i))
          os << "(" << i << "," << j << ") asymmetric: " << a << " vs " << entries_(j, i);
        else
          continue;
        bad.push_back(os.str());
      }
    if (!bad.empty()) {
      std::ostringstream os;
      os << "invalid coupling entries:";
      for (std::size_t k = 0; k < std::min<std::size_t>(bad.size(), 10); ++k) os << " " << bad[k];
      if (bad.size() > 10) os << " ... (" << bad.size() << " total)";
      throw ValidationError(os.str());
    }
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  double bound() const noexcept { return bound_; }

  // entries / n: the operator restricted to piecewise-constant functions.
  Eigen::MatrixXd scaled() const { return entries_ / static_cast<double>(size()); }

  double eval(double x, double y) const {
    return entries_(static_cast<Eigen::Index>(cell_index(x, size())),
                    static_cast<Eigen::Index>(cell_index(y, size())));
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    if (static_cast<std::size_t>(v.size()) != size()) {
      std::ostringstream os;
      os << "vector of length " << v.size() << " applied to a " << size() << "-cell graphon";
      throw ShapeError(os.str());
    }
    return entries_ * v / static_cast<double>(size());
  }

  double l2_norm() const { return entries_.norm() / static_cast<double>(size()); }

private:
  Eigen::MatrixXd entries_;
  double bound_;
};

inline double eval(const FiniteRankGraphon& g, double x, double y) { return g.eval(x, y); }
inline double eval(const StepGraphon& g, double x, double y) { return g.eval(x, y); }
inline Function apply(const FiniteRankGraphon& g, const Function& v) { return g.apply(v); }
inline Eigen::VectorXd apply(const FiniteRankGraphon& g, const Eigen::VectorXd& v) {
  return g.apply(v);
}
inline Eigen::VectorXd apply(const StepGraphon& g, const Eigen::VectorXd& v) { return g.apply(v); }

inline double default_zero_tol(const StepGraphon& g) {
  return 1e-10 * static_cast<double>(g.size()) * g.bound();
}

/// Spectral decomposition of a step graphon.
///
/// Operator eigenvalues are eig(entries) / n; those with magnitude at most
/// `zero_tol` are dropped. Eigenfunctions are step functions with values
/// sqrt(n) * v for unit eigenvectors v, so that their L2 norm is one, and are
/// signed so that the first non-negligible cell value is positive.
inline FiniteRankGraphon spectral_decompose(const StepGraphon& g,
                                            std::optional<double> zero_tol = std::nullopt) {
  const double tol = zero_tol.value_or(default_zero_tol(g));
  if (!(tol > 0.0)) throw ValidationError("zero tolerance must be positive");
  const auto n = static_cast<double>(g.size());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g.entries());
  // Tridiagonal QR can stall on highly degenerate spectra; a diagonal shift keeps the
  // eigenvectors and changes the deflation path.
  double shift = 0.0;
  const double scale = std::max(g.entries().cwiseAbs().maxCoeff(), 1e-300);
  for (const double s : {0.5, -0.75, 1.25, -1.5}) {
    if (solver.info() == Eigen::Success) break;
    shift = s * scale;
    Eigen::MatrixXd shifted = g.entries();
    shifted.diagonal().array() += shift;
    solver.compute(shifted);
  }
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "symmetric eigensolver did not converge for a " << g.size() << "x" << g.size()
       << " coupling after 5 shifted attempts (Eigen info=" << static_cast<int>(solver.info())
       << ", QR sweep cap "
       << Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>::m_maxIterations << " per eigenvalue, "
       << Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>::m_maxIterations * g.size()
       << " total)";
    throw NumericError(os.str());
  }

  const Eigen::VectorXd eig = solver.eigenvalues().array() - shift;
  std::vector<Eigen::Index> order;
  for (Eigen::Index k = 0; k < eig.size(); ++k)
    if (std::abs(eig(k) / n) > tol) order.push_back(k);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double la = eig(a);
    const double lb = eig(b);
    if (std::abs(la) != std::abs(lb)) return std::abs(la) > std::abs(lb);
    return la > lb;
  });

  std::vector<EigenPair> pairs;
  pairs.reserve(order.size());
  for (const auto k : order) {
    Eigen::VectorXd v = std::sqrt(n) * solver.eigenvectors().col(k);
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (std::abs(v(i)) > 1e-12) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    double lam = eig(k) / n;
    // |lambda| <= sup |A| <= bound holds exactly; only rounding can exceed it.
    if (std::abs(lam) > g.bound() && std::abs(lam) <= g.bound() * (1.0 + 1e-12))
      lam = std::copysign(g.bound(), lam);
    pairs.push_back({lam, Eigenfunction::step(std::move(v))});
  }
  return FiniteRankGraphon(std::move(pairs), g.bound());
}

// First min(L, d) eigenpairs.
inline FiniteRankGraphon truncate(const FiniteRankGraphon& g, std::size_t levels) {
  const auto keep = std::min(levels, g.rank());
  std::vector<EigenPair> pairs(g.pairs().begin(),
                               g.pairs().begin() + static_cast<std::ptrdiff_t>(keep));
  return FiniteRankGraphon(std::move(pairs), g.bound(), g.quadrature());
}

// Midpoint sampling of a kernel on the uniform n-cell partition.
template <class Kernel>
StepGraphon sample_graphon(const Kernel& kernel, std::size_t n, double bound = 1.0) {
  if (n == 0) throw ValidationError("partition size must be positive");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double v = kernel(cell_midpoint(i, n), cell_midpoint(j, n));
      // Rounding in eigen-expansions can overshoot the bound by an ulp or two.
      if (std::abs(v) > bound && std::abs(v) <= bound * (1.0 + 1e-12)) v = std::copysign(bound, v);
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  return StepGraphon(std::move(a), bound);
}

template <class G>
StepGraphon sample_graphon(const G& g, std::size_t n, double bound = 1.0)
  requires requires(const G& h) { h.eval(0.0, 0.0); }
{
  return sample_graphon([&](double x, double y) { return g.eval(x, y); }, n, bound);
}

/// L2([0,1]^2) distance by the midpoint rule on a nodes x nodes grid.
template <class G1, class G2>
double l2_distance(const G1& a, const G2& b, std::size_t nodes = 512) {
  const Quadrature q{nodes};
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = 0; j < nodes; ++j) {
      const double d = a.eval(q.node(i), q.node(j)) - b.eval(q.node(i), q.node(j));
      acc += d * d;
    }
  return std::sqrt(acc) * q.weight();
}

inline double l2_distance(const StepGraphon& a, const StepGraphon& b) {
  if (a.size() == b.size())
    return (a.entries() - b.entries()).norm() / static_cast<double>(a.size());
  // Common refinement: the product partition on lcm(n_a, n_b) cells is exact.
  const auto m = std::lcm(a.size(), b.size());
  return l2_distance<StepGraphon, StepGraphon>(a, b, m);
}

// Expands ||sum lambda f f^T - sum mu g g^T||^2 through one-dimensional inner
// products, so only the quadrature of the eigenfunctions enters.
inline double l2_distance(const FiniteRankGraphon& a, const FiniteRankGraphon& b) {
  std::vector<std::pair<double, const Eigenfunction*>> terms;
  for (const auto& p : a.pairs()) terms.emplace_back(p.lambda, &p.eigfun);
  for (const auto& p : b.pairs()) terms.emplace_back(-p.lambda, &p.eigfun);
  const Quadrature q{std::max(a.quadrature().nodes, b.quadrature().nodes)};
  double acc = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i)
    for (std::size_t j = 0; j < terms.size(); ++j) {
      const double ip = inner_product(*terms[i].second, *terms[j].second, q);
      acc += terms[i].first * terms[j].first * ip * ip;
    }
  return std::sqrt(std::max(acc, 0.0));
}

// Factories for the analytic graphons accepted in scenario files.

// sqrt(2) sin(2 pi k x), sqrt(2) cos(2 pi k x), or the constant 1.
inline Eigenfunction trig_eigenfunction(const std::string& kind, int freq) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double w = two_pi * freq;
  if (kind == "sin") return Eigenfunction::analytic([w](double x) { return std::numbers::sqrt2 * std::sin(w * x); });
  if (kind == "cos") return Eigenfunction::analytic([w](double x) { return std::numbers::sqrt2 * std::cos(w * x); });
  if (kind == "const") return Eigenfunction::analytic([](double) { return 1.0; });
  throw ValidationError("unknown eigenfunction kind '" + kind + "' (expected sin, cos or const)");
}

// cos(2 pi (x - y)) = (1/2) f1 f1 + (1/2) f2 f2 with f1 = sqrt2 sin, f2 = sqrt2 cos.
inline FiniteRankGraphon sinusoidal_graphon() {
  return FiniteRankGraphon({{0.5, trig_eigenfunction("sin", 1)}, {0.5, trig_eigenfunction("cos", 1)}});
}

inline FiniteRankGraphon uniform_graphon() {
  return FiniteRankGraphon({{1.0, trig_eigenfunction("const", 0)}});
}

} // namespace graphon_lqr
