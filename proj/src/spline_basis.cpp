#include "liquid/spline_basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "liquid/errors.hpp"

namespace liquid {

namespace {

constexpr int kMaxOrder = 4;

void check_order(int order, int min_order) {
  if (order < min_order || order > kMaxOrder) {
    throw Error(ErrorCode::InvalidArgument,
                "spline order " + std::to_string(order) + " outside [" +
                    std::to_string(min_order) + ", 4]");
  }
}

void check_index(const TVector& t, std::size_t i, int order) {
  const std::size_t last = t.size() - static_cast<std::size_t>(order);
  if (i < 1 || i > last) {
    throw Error(ErrorCode::IndexOutOfRange,
                "basis index " + std::to_string(i) + " outside [1, " + std::to_string(last) +
                    "] for order " + std::to_string(order));
  }
}

// 6 / (p * q), or 0 when either factor vanishes.
double guarded(double numerator, double p, double q) {
  if (p == 0.0 || q == 0.0) return 0.0;
  return numerator / (p * q);
}

double eval_unchecked(const TVector& t, std::size_t i, int order, double x) {
  if (order == 1) {
    const double lo = t(i);
    const double hi = t(i + 1);
    if (!(hi > lo)) return 0.0;
    const bool closed_right = (i == t.knot_count() + 2);
    if (x < lo) return 0.0;
    return (x < hi || (closed_right && x == hi)) ? 1.0 : 0.0;
  }
  const auto j = static_cast<std::size_t>(order);
  double value = 0.0;
  const double den1 = t(i + j - 1) - t(i);
  if (den1 > 0.0) value += (x - t(i)) / den1 * eval_unchecked(t, i, order - 1, x);
  const double den2 = t(i + j) - t(i + 1);
  if (den2 > 0.0) value += (t(i + j) - x) / den2 * eval_unchecked(t, i + 1, order - 1, x);
  return value;
}

}  // namespace

KnotConfig::KnotConfig(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) {
    throw Error(ErrorCode::InvalidKnots, "need at least two knots, got " +
                                             std::to_string(knots_.size()));
  }
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i])) {
      throw Error(ErrorCode::InvalidKnots, "knot " + std::to_string(i + 1) + " is not finite");
    }
    if (i > 0 && !(knots_[i] > knots_[i - 1])) {
      throw Error(ErrorCode::InvalidKnots,
                  "knots must be strictly increasing (k(" + std::to_string(i) + ") >= k(" +
                      std::to_string(i + 1) + "))");
    }
  }
}

TVector::TVector(const KnotConfig& knots) {
  const auto& k = knots.values();
  t_.reserve(k.size() + 6);
  t_.insert(t_.end(), 3, k.front());
  t_.insert(t_.end(), k.begin(), k.end());
  t_.insert(t_.end(), 3, k.back());
}

TVector build_t_vector(const KnotConfig& knots) { return TVector(knots); }

double basis_eval(const TVector& t, std::size_t i, int order, double x) {
  check_order(order, 1);
  check_index(t, i, order);
  return eval_unchecked(t, i, order, x);
}

void basis_row(const TVector& t, int order, double x, std::span<double> out) {
  check_order(order, 1);
  const std::size_t m = t.knot_count();
  if (out.size() != m + 2) {
    throw Error(ErrorCode::InvalidArgument, "basis_row output has wrong length");
  }
  // Fixed-size scratch indexed 1-based; order 1 needs m+5 entries.
  std::vector<double> cur(m + 6, 0.0);
  std::vector<double> next(m + 6, 0.0);
  for (std::size_t k = 1; k <= m + 5; ++k) cur[k] = eval_unchecked(t, k, 1, x);
  for (int j = 2; j <= order; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const std::size_t last = m + 6 - ju;
    for (std::size_t i = 1; i <= last; ++i) {
      double value = 0.0;
      const double den1 = t(i + ju - 1) - t(i);
      if (den1 > 0.0) value += (x - t(i)) / den1 * cur[i];
      const double den2 = t(i + ju) - t(i + 1);
      if (den2 > 0.0) value += (t(i + ju) - x) / den2 * cur[i + 1];
      next[i] = value;
    }
    for (std::size_t i = last + 1; i <= m + 5; ++i) next[i] = 0.0;
    std::swap(cur, next);
  }
  for (std::size_t i = 1; i <= m + 2; ++i) out[i - 1] = cur[i];
}

std::size_t basis_nonzero(const TVector& t, double x, std::array<double, 4>& out) {
  const std::size_t m = t.knot_count();
  if (!(x >= t.lower() && x <= t.upper())) {
    throw Error(ErrorCode::DomainError, "x outside the knot range");
  }
  // Knot interval s with t(s) <= x < t(s+1), s in [4, m+2]; x = k(m) uses s = m+2.
  const auto& tv = t.values();
  const auto first_knot = tv.begin() + 3;
  const auto last_knot = tv.begin() + static_cast<std::ptrdiff_t>(m + 2);
  auto it = std::upper_bound(first_knot, last_knot, x);
  std::size_t s = static_cast<std::size_t>(it - tv.begin());  // 1-based index of last t <= x
  if (s > m + 2) s = m + 2;

  // left[r] holds B(x|s-j+1+r, j) as j rises from 1 to 4.
  std::array<double, 4> left{1.0, 0.0, 0.0, 0.0};
  for (std::size_t j = 2; j <= 4; ++j) {
    std::array<double, 4> next{};
    for (std::size_t r = 0; r < j; ++r) {
      const std::size_t i = s + 1 - j + r;
      double value = 0.0;
      if (r > 0) {
        const double den1 = t(i + j - 1) - t(i);
        if (den1 > 0.0) value += (x - t(i)) / den1 * left[r - 1];
      }
      if (r + 1 < j) {
        const double den2 = t(i + j) - t(i + 1);
        if (den2 > 0.0) value += (t(i + j) - x) / den2 * left[r];
      }
      next[r] = value;
    }
    left = next;
  }
  out = left;
  return s - 3;
}

Eigen::MatrixXd basis_matrix(const TVector& t, int order, std::span<const double> xs) {
  check_order(order, 1);
  const std::size_t cols = t.basis_count();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(xs.size()),
                                              static_cast<Eigen::Index>(cols));
  std::vector<double> row(cols);
  for (std::size_t r = 0; r < xs.size(); ++r) {
    basis_row(t, order, xs[r], row);
    for (std::size_t c = 0; c < cols; ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return out;
}

double basis_derivative(const TVector& t, std::size_t i, int order, double x) {
  check_order(order, 2);
  check_index(t, i, order);
  const auto j = static_cast<std::size_t>(order);
  double value = 0.0;
  const double den1 = t(i + j - 1) - t(i);
  if (den1 > 0.0) value += eval_unchecked(t, i, order - 1, x) / den1;
  const double den2 = t(i + j) - t(i + 1);
  if (den2 > 0.0) value -= eval_unchecked(t, i + 1, order - 1, x) / den2;
  return static_cast<double>(order - 1) * value;
}

SecondDerivCoeffs second_deriv_coeffs(const TVector& t) {
  const std::size_t m = t.knot_count();
  const std::size_t n = m + 2;
  SecondDerivCoeffs out;
  out.c.assign(n, 0.0);
  out.d.assign(n, 0.0);
  out.e.assign(n, 0.0);
  out.f.assign(n, 0.0);
  out.a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m + 5));
  out.b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m + 5));

  for (std::size_t i = 1; i <= n; ++i) {
    const double c = guarded(6.0, t(i + 3) - t(i), t(i + 2) - t(i));
    const double d = guarded(-6.0, t(i + 3) - t(i), t(i + 3) - t(i + 1));
    const double e = guarded(-6.0, t(i + 4) - t(i + 1), t(i + 3) - t(i + 1));
    const double f = guarded(6.0, t(i + 4) - t(i + 1), t(i + 4) - t(i + 2));
    out.c[i - 1] = c;
    out.d[i - 1] = d;
    out.e[i - 1] = e;
    out.f[i - 1] = f;

    const auto r = static_cast<Eigen::Index>(i - 1);
    const auto col = [](std::size_t k) { return static_cast<Eigen::Index>(k - 1); };
    out.a(r, col(i)) = c;
    out.a(r, col(i + 1)) = d + e;
    out.a(r, col(i + 2)) = f;
    out.b(r, col(i + 1)) = c;
    out.b(r, col(i + 2)) = d + e;
    out.b(r, col(i + 3)) = f;
  }
  return out;
}

double ramp_up(const TVector& t, std::size_t k, double x) {
  const double width = t(k + 1) - t(k);
  return width > 0.0 ? (x - t(k)) / width : 0.0;
}

double ramp_down(const TVector& t, std::size_t k, double x) {
  const double width = t(k + 1) - t(k);
  return width > 0.0 ? (t(k + 1) - x) / width : 0.0;
}

double second_derivative_from_coeffs(const TVector& t, const SecondDerivCoeffs& coeffs,
                                     std::size_t i, double x) {
  const std::size_t m = t.knot_count();
  if (i < 1 || i > m + 2) {
    throw Error(ErrorCode::IndexOutOfRange, "cubic basis index out of range");
  }
  double value = 0.0;
  for (std::size_t k = 1; k <= m + 5; ++k) {
    if (!(t(k + 1) > t(k))) continue;
    const double indicator = eval_unchecked(t, k, 1, x);
    if (indicator == 0.0) continue;
    value += (coeffs.a_at(i, k) * ramp_up(t, k, x) + coeffs.b_at(i, k) * ramp_down(t, k, x)) *
             indicator;
  }
  return value;
}

Eigen::VectorXd greville_abscissae(const TVector& t) {
  const std::size_t n = t.basis_count();
  Eigen::VectorXd g(static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i <= n; ++i) {
    g(static_cast<Eigen::Index>(i - 1)) = (t(i + 1) + t(i + 2) + t(i + 3)) / 3.0;
  }
  return g;
}

}  // namespace liquid
