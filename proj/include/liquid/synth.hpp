#pragma once

// Synthetic weighted binary-outcome data with planted per-characteristic
// log-odds curves:  P(good | x) = logistic(intercept + sum_k f_k(x_k)).

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "liquid/dataset.hpp"

namespace liquid {

struct SynthSentinel {
  double value = 0.0;
  double probability = 0.0;
  double logodds = 0.0;
};

struct SynthCharacteristic {
  std::string name;
  /// "uniform" on [lo, hi], "normal" (mean, sd) clipped to [lo, hi], or
  /// "piecewise": equal probability on each interval between consecutive
  /// `breaks`, uniform within it.
  std::string distribution = "uniform";
  double lo = 0.0, hi = 1.0;
  double mean = 0.0, sd = 1.0;
  std::vector<double> breaks;
  std::vector<SynthSentinel> sentinels;
  /// Piecewise-linear true log-odds through (curve_x[i], curve_y[i]), flat
  /// beyond the ends.
  std::vector<double> curve_x, curve_y;

  double truth(double x) const;
};

struct SynthConfig {
  std::size_t n = 20000;
  std::uint64_t seed = 1;
  double intercept = 0.0;
  std::vector<SynthCharacteristic> characteristics;
};

/// Throws ConfigError on malformed documents.
SynthConfig synth_config_from_json(const nlohmann::json& doc);

/// Deterministic for a given config (including the seed).
Dataset generate_synthetic(const SynthConfig& cfg);

/// Ground truth for oracle comparisons: intercept, curves and sentinel log-odds.
nlohmann::json synth_truth_json(const SynthConfig& cfg);

}  // namespace liquid
