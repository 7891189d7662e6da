#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "liquid/spline_basis.hpp"

namespace liquid {

struct CharacteristicSpec;

/// Integral of the squared second derivative as a quadratic form: the
/// roughness of CS = sum_i beta_i B_i is beta' R beta.
/// Units are (score units)^2 / (characteristic units)^3.
struct RoughnessMatrix {
  Eigen::MatrixXd r;

  Eigen::Index dim() const noexcept { return r.rows(); }
  double penalty(const Eigen::VectorXd& beta) const { return beta.dot(r * beta); }
};

/// Closed-form R for the cubic basis on `knots`, bordered by
/// `n_leading_discrete` zero rows/columns in front and `n_trailing_discrete`
/// behind. The liquid block is (m+2) x (m+2).
RoughnessMatrix char_roughness_matrix(const KnotConfig& knots, std::size_t n_leading_discrete = 0,
                                      std::size_t n_trailing_discrete = 0);

/// Independent check of the closed form: two-point Gauss-Legendre on every
/// knot interval of the product of second derivatives. Exact up to rounding
/// because B'' is piecewise linear.
RoughnessMatrix roughness_quadrature_oracle(const KnotConfig& knots);

/// Block-diagonal model penalty in characteristic order. Characteristics
/// without a liquid range contribute zero blocks.
RoughnessMatrix model_roughness_matrix(std::span<const CharacteristicSpec> chars);

}  // namespace liquid
