#pragma once

// Cubic B-spline machinery over a finite, strictly increasing knot set.
//
// Basis and coefficient indices in this header are 1-based, following the
// knot-sequence convention t(1..m+6): the cubic basis is B(x|1,4)..B(x|m+2,4).
// Matrix-valued results use ordinary 0-based storage (column i-1 holds basis i).

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace liquid {

/// Strictly increasing finite knots k(1..m), m >= 2.
class KnotConfig {
 public:
  explicit KnotConfig(std::vector<double> knots);

  std::size_t size() const noexcept { return knots_.size(); }
  double front() const noexcept { return knots_.front(); }
  double back() const noexcept { return knots_.back(); }
  const std::vector<double>& values() const noexcept { return knots_; }

 private:
  std::vector<double> knots_;
};

/// Padded sequence t(1..m+6): the end knots repeated four times.
class TVector {
 public:
  explicit TVector(const KnotConfig& knots);

  /// Number of knots m.
  std::size_t knot_count() const noexcept { return t_.size() - 6; }
  /// Number of cubic basis functions, m+2.
  std::size_t basis_count() const noexcept { return t_.size() - 4; }
  std::size_t size() const noexcept { return t_.size(); }

  /// 1-based access, t(1) .. t(m+6).
  double operator()(std::size_t i) const { return t_[i - 1]; }
  const std::vector<double>& values() const noexcept { return t_; }

  double lower() const noexcept { return t_.front(); }
  double upper() const noexcept { return t_.back(); }

 private:
  std::vector<double> t_;
};

TVector build_t_vector(const KnotConfig& knots);

/// B(x|i,j) by the two-term recursion. Valid indices are 1..m+6-j, so order 1
/// covers the m+5 interval indicators and order 4 the m+2 cubic functions.
/// B(x|m+2,1) is closed on the right so the basis covers x = k(m).
double basis_eval(const TVector& t, std::size_t i, int order, double x);

/// All order-`order` values at x for indices 1..m+2, evaluated bottom-up.
/// Produces the same numbers as basis_eval; `out` must have length m+2.
void basis_row(const TVector& t, int order, double x, std::span<double> out);

/// Local evaluation of the (at most four) nonzero cubic functions at x in
/// [k(1), k(m)]. Returns the 1-based index of out[0]; out[j] = B(x|first+j,4).
std::size_t basis_nonzero(const TVector& t, double x, std::array<double, 4>& out);

/// Row r, column i-1 = B(xs[r]|i,order) for i = 1..m+2.
Eigen::MatrixXd basis_matrix(const TVector& t, int order, std::span<const double> xs);

/// B'(x|i,j) = (j-1)[B(x|i,j-1)/(t(i+j-1)-t(i)) - B(x|i+1,j-1)/(t(i+j)-t(i+1))],
/// dropping any term whose denominator vanishes. Requires j >= 2.
double basis_derivative(const TVector& t, std::size_t i, int order, double x);

/// Coefficients expressing B''(x|i,4) on the order-1 indicators:
///   B''(x|i,4) = sum_k [a_ik P(x|k) + b_ik N(x|k)] B(x|k,1),  k = 1..m+5
/// where P and N are the rising and falling unit ramps on [t(k), t(k+1)].
struct SecondDerivCoeffs {
  // Per cubic index i = 1..m+2, stored at [i-1].
  std::vector<double> c, d, e, f;
  // (m+2) x (m+5); entry (i-1, k-1) holds a_ik / b_ik.
  Eigen::MatrixXd a, b;

  double a_at(std::size_t i, std::size_t k) const { return a(i - 1, k - 1); }
  double b_at(std::size_t i, std::size_t k) const { return b(i - 1, k - 1); }
};

SecondDerivCoeffs second_deriv_coeffs(const TVector& t);

/// Rising ramp P(x|k) = (x - t(k)) / (t(k+1) - t(k)); 0 on a degenerate interval.
double ramp_up(const TVector& t, std::size_t k, double x);
/// Falling ramp N(x|k) = (t(k+1) - x) / (t(k+1) - t(k)); 0 on a degenerate interval.
double ramp_down(const TVector& t, std::size_t k, double x);

/// B''(x|i,4) rebuilt from the indicator expansion. Degenerate intervals are skipped.
double second_derivative_from_coeffs(const TVector& t, const SecondDerivCoeffs& coeffs,
                                     std::size_t i, double x);

/// Coefficients representing CS(x) = x: (t(i+1)+t(i+2)+t(i+3))/3.
Eigen::VectorXd greville_abscissae(const TVector& t);

}  // namespace liquid
