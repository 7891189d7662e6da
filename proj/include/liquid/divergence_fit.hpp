#pragma once

// Penalized max-divergence fit:
//
//   minimize  beta'C beta + (2 lambda / n) beta'beta + sum_k lambda2_k beta'R_k beta
//   subject to  d'beta = delta,  pattern rows G beta >= 0
//
// with C the average of the class covariance matrices of the design vectors
// and d the difference of class means, so that minimizing beta'C beta at fixed
// d'beta maximizes the divergence (d'beta)^2 / beta'C beta.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "liquid/dataset.hpp"
#include "liquid/kernels.hpp"
#include "liquid/qp_solver.hpp"
#include "liquid/roughness_penalty.hpp"
#include "liquid/scorecard_model.hpp"

namespace liquid {

using Lambda2Map = std::map<std::string, double>;

/// One characteristic's liquid roughness block, placed at `offset` in the
/// model coefficient vector.
struct RoughnessBlock {
  std::size_t char_index = 0;
  Eigen::Index offset = 0;
  Eigen::MatrixXd r;
};

/// Weighted class moments of the expanded design (parallel kernel).
ClassMoments compute_moments(const ModelSpec& spec, const Dataset& data);

/// (mu_G - mu_B)^2 / ((var_G + var_B) / 2) with weighted population moments.
double score_divergence(std::span<const double> scores_g, std::span<const double> weights_g,
                        std::span<const double> scores_b, std::span<const double> weights_b);

/// Divergence of the score beta'x over a dataset, by scoring every record.
double dataset_divergence(const ModelSpec& spec, const Eigen::VectorXd& beta, const Dataset& data);

/// The same quantity from moments: (d'beta)^2 / beta'C beta.
double moment_divergence(const ClassMoments& m, const Eigen::VectorXd& beta);

/// Everything a fit needs that does not depend on the smoothing parameters:
/// moments of the development (and optionally validation) data, per-
/// characteristic roughness blocks, and the pattern rows. Immutable once built
/// and safe to share between concurrent fits.
class FitData {
 public:
  FitData(ModelSpec spec, const Dataset& dev, const Dataset* val = nullptr);
  FitData(ModelSpec spec, ClassMoments dev, std::optional<ClassMoments> val);

  const ModelSpec& spec() const noexcept { return spec_; }
  const ClassMoments& dev() const noexcept { return dev_; }
  const std::optional<ClassMoments>& val() const noexcept { return val_; }
  /// Liquid roughness blocks; discrete-only characteristics have none.
  const std::vector<RoughnessBlock>& roughness_blocks() const noexcept { return blocks_; }
  const Eigen::MatrixXd& pattern_rows() const noexcept { return patterns_; }

  /// Model without the named characteristic: moments are sub-selected, which
  /// equals recomputing them on the reduced design.
  FitData without(const std::string& name) const;
  /// Same data with pattern overrides applied.
  FitData with_patterns(const std::map<std::string, Pattern>& patterns) const;

  /// lambda2 per characteristic: the ModelSpec values with `overrides` applied.
  Lambda2Map resolve_lambda2(const Lambda2Map& overrides) const;

 private:
  void build_structure();

  ModelSpec spec_;
  ClassMoments dev_;
  std::optional<ClassMoments> val_;
  std::vector<RoughnessBlock> blocks_;
  Eigen::MatrixXd patterns_;
};

struct FitRequest {
  ModelSpec spec;
  const Dataset* dev = nullptr;
  const Dataset* val = nullptr;
  /// Overrides ModelSpec::lambda when set.
  std::optional<double> lambda;
  Lambda2Map lambda2;
};

/// H = 2(C + (2 lambda/n) I + sum_k lambda2_k R_k), equality d'beta = delta,
/// inequalities = pattern rows.
///
/// Every record puts total weight 1 on each characteristic's segment, so a
/// constant added to one characteristic's coefficients leaves C, R, d'beta and
/// the pattern rows unchanged, and the ridge term alone is minimized by the
/// zero-sum representative. Rows 1..K of the equality system state that
/// (1_k' beta = 0); they do not move the optimum and keep these directions out
/// of the reduced Hessian.
QuadraticProgram build_fit_qp(const FitData& data, const Lambda2Map& lambda2 = {},
                              std::optional<double> lambda = std::nullopt);
QuadraticProgram build_fit_qp(const FitRequest& req);

struct FitOptions {
  Lambda2Map lambda2;
  std::optional<double> lambda;
  std::vector<int> warm_start;
};

/// Solves the fit QP. Throws DegenerateClasses when d = 0 and the QP errors
/// otherwise. The returned spec carries the lambda2 values used.
FittedModel fit(const FitData& data, const FitOptions& options = {});
FittedModel fit(const FitRequest& req);

/// Scale beta by dev_divergence / delta so the class-mean score difference
/// equals the divergence (equal-variance normal weight-of-evidence scale).
FittedModel woe_rescale(const FittedModel& fitted);

/// beta'R beta summed over characteristics, with unit lambda2.
double roughness(const FitData& data, const Eigen::VectorXd& beta);

}  // namespace liquid
