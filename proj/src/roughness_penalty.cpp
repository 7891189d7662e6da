#include "liquid/roughness_penalty.hpp"

#include <cmath>

#include "liquid/errors.hpp"
#include "liquid/scorecard_model.hpp"

namespace liquid {

namespace {

Eigen::MatrixXd liquid_block(const KnotConfig& knots) {
  const TVector t(knots);
  const SecondDerivCoeffs co = second_deriv_coeffs(t);
  const std::size_t n = t.basis_count();
  const std::size_t m = t.knot_count();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

  for (std::size_t i = 1; i <= n; ++i) {
    // a_i. and b_i. vanish outside s in [i, i+3], so |i - j| > 3 gives 0.
    for (std::size_t j = i; j <= n && j <= i + 3; ++j) {
      double sum = 0.0;
      for (std::size_t s = 1; s <= m + 5; ++s) {
        const double width = t(s + 1) - t(s);
        if (!(width > 0.0)) continue;
        const double ai = co.a_at(i, s), bi = co.b_at(i, s);
        const double aj = co.a_at(j, s), bj = co.b_at(j, s);
        sum += width * (ai * aj / 3.0 + ai * bj / 6.0 + bi * aj / 6.0 + bi * bj / 3.0);
      }
      const auto ii = static_cast<Eigen::Index>(i - 1);
      const auto jj = static_cast<Eigen::Index>(j - 1);
      r(ii, jj) = sum;
      r(jj, ii) = sum;
    }
  }
  return r;
}

}  // namespace

RoughnessMatrix char_roughness_matrix(const KnotConfig& knots, std::size_t n_leading_discrete,
                                      std::size_t n_trailing_discrete) {
  const Eigen::MatrixXd inner = liquid_block(knots);
  const auto lead = static_cast<Eigen::Index>(n_leading_discrete);
  const Eigen::Index dim = lead + inner.rows() + static_cast<Eigen::Index>(n_trailing_discrete);
  RoughnessMatrix out{Eigen::MatrixXd::Zero(dim, dim)};
  out.r.block(lead, lead, inner.rows(), inner.cols()) = inner;
  return out;
}

RoughnessMatrix roughness_quadrature_oracle(const KnotConfig& knots) {
  const TVector t(knots);
  const SecondDerivCoeffs co = second_deriv_coeffs(t);
  const std::size_t n = t.basis_count();
  const std::size_t m = t.knot_count();
  const double node = 1.0 / std::sqrt(3.0);

  RoughnessMatrix out{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))};
  Eigen::VectorXd values(static_cast<Eigen::Index>(n));
  for (std::size_t s = 1; s <= m + 5; ++s) {
    const double lo = t(s);
    const double hi = t(s + 1);
    if (!(hi > lo)) continue;
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (const double z : {-node, node}) {
      const double x = mid + half * z;
      for (std::size_t i = 1; i <= n; ++i) {
        values(static_cast<Eigen::Index>(i - 1)) = second_derivative_from_coeffs(t, co, i, x);
      }
      out.r.noalias() += half * values * values.transpose();
    }
  }
  return out;
}

RoughnessMatrix model_roughness_matrix(std::span<const CharacteristicSpec> chars) {
  Eigen::Index dim = 0;
  for (const auto& c : chars) dim += static_cast<Eigen::Index>(c.coefficient_count());
  RoughnessMatrix out{Eigen::MatrixXd::Zero(dim, dim)};

  Eigen::Index offset = 0;
  for (const auto& c : chars) {
    const auto count = static_cast<Eigen::Index>(c.coefficient_count());
    if (c.knots) {
      const RoughnessMatrix block =
          char_roughness_matrix(*c.knots, c.leading.size(), c.trailing.size());
      if (block.dim() != count) {
        throw Error(ErrorCode::InvalidArgument,
                    "roughness block for '" + c.name + "' does not match its coefficient count");
      }
      out.r.block(offset, offset, count, count) = block.r;
    }
    offset += count;
  }
  return out;
}

}  // namespace liquid
