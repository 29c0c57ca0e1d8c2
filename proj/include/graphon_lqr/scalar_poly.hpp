#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "graphon_lqr/error.hpp"

namespace graphon_lqr {

/// Polynomial c_0 + c_1 s + ... + c_k s^k in the coupling operator.
///
/// Used for the input, state-weight and terminal-weight operators. Trailing
/// zero coefficients are dropped on construction; the zero polynomial is
/// stored as the single coefficient {0}.
class CoeffPoly {
public:
  CoeffPoly() : coeffs_{0.0} {}

  explicit CoeffPoly(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw ValidationError("polynomial needs at least one coefficient");
    for (std::size_t k = 0; k < coeffs_.size(); ++k)
      if (!std::isfinite(coeffs_[k])) {
        std::ostringstream os;
        os << "polynomial coefficient " << k << " is not finite";
        throw ValidationError(os.str());
      }
    while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
  }

  CoeffPoly(std::initializer_list<double> coeffs) : CoeffPoly(std::vector<double>(coeffs)) {}

  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  std::size_t degree() const noexcept { return coeffs_.size() - 1; }
  double constant_term() const noexcept { return coeffs_.front(); }
  bool is_constant() const noexcept { return coeffs_.size() == 1; }

  double operator()(double s) const noexcept {
    double acc = coeffs_.back();
    for (std::size_t k = coeffs_.size() - 1; k-- > 0;) acc = acc * s + coeffs_[k];
    return acc;
  }

  friend bool operator==(const CoeffPoly&, const CoeffPoly&) = default;

private:
  std::vector<double> coeffs_;
};

inline double eval_poly(const CoeffPoly& p, double s) noexcept { return p(s); }

// Sum_k c_k m^k with m^0 = I, by Horner's scheme. The result is symmetrized.
template <class Derived>
Eigen::MatrixXd apply_poly_matrix(const CoeffPoly& p, const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << "polynomial argument must be square, got " << m.rows() << "x" << m.cols();
    throw ShapeError(os.str());
  }
  const auto n = m.rows();
  const auto& c = p.coeffs();
  Eigen::MatrixXd acc = c.back() * Eigen::MatrixXd::Identity(n, n);
  for (std::size_t k = c.size() - 1; k-- > 0;) {
    acc = (acc * m).eval();
    acc.diagonal().array() += c[k];
  }
  return 0.5 * (acc + acc.transpose());
}

} // namespace graphon_lqr
