#pragma once

// Record-level loops. Each kernel has an OpenMP version used by the library
// and a plain serial version kept as the reference for tests and benchmarks.
//
// The parallel moment kernel splits records into fixed chunks and merges the
// per-chunk sums in chunk order with compensated addition, so the result does
// not depend on the thread count.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "liquid/dataset.hpp"
#include "liquid/scorecard_model.hpp"

namespace liquid {

/// Weighted class moments of the design vectors.
struct ClassMoments {
  Eigen::VectorXd mean_g, mean_b;
  Eigen::MatrixXd cov_g, cov_b;
  double weight_g = 0.0;
  double weight_b = 0.0;
  /// Total sample weight.
  double n = 0.0;
  /// (cov_g + cov_b) / 2
  Eigen::MatrixXd c;
  /// mean_g - mean_b
  Eigen::VectorXd d;

  Eigen::Index dim() const noexcept { return d.size(); }
  /// Moments of the sub-model keeping only coefficient indices `keep`.
  ClassMoments select(const std::vector<Eigen::Index>& keep) const;
};

namespace kernels {

inline constexpr std::size_t kChunkRows = 4096;

/// Dense serial accumulation, one expanded design vector at a time.
ClassMoments moments_serial(const ModelSpec& spec, const Dataset& data);

/// Sparse chunked accumulation with OpenMP over chunks.
ClassMoments moments_parallel(const ModelSpec& spec, const Dataset& data);

/// Per-record model scores beta'x.
std::vector<double> scores_serial(const ModelSpec& spec, const Eigen::VectorXd& beta,
                                  const Dataset& data);
std::vector<double> scores_parallel(const ModelSpec& spec, const Eigen::VectorXd& beta,
                                    const Dataset& data);

/// Dense n x p design matrix (testing and small data only).
Eigen::MatrixXd design_matrix(const ModelSpec& spec, const Dataset& data);

}  // namespace kernels
}  // namespace liquid
