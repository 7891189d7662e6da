#pragma once

// Smoothing a traditional step-function scorecard: fit a penalized cubic
// characteristic with knots at the finite bin boundaries, then give every bin
// the sample-weighted average of the fitted score over the records in it.

#include <functional>
#include <string>
#include <vector>

#include "liquid/dataset.hpp"
#include "liquid/divergence_fit.hpp"
#include "liquid/scorecard_model.hpp"

namespace liquid {

struct StepBin {
  /// Interval and/or sentinel codes. A bin with codes only is a sentinel bin.
  AttributePredicate predicate;
  double weight = 0.0;
  std::vector<std::string> flags;

  bool is_sentinel() const noexcept { return !predicate.has_interval; }
};

struct StepCharacteristic {
  std::string name;
  std::string column;
  std::vector<StepBin> bins;
  /// Used only when smoothing with patterns enabled.
  Pattern pattern = Pattern::None;
};

struct StepScorecard {
  std::vector<StepCharacteristic> characteristics;
};

/// Throws ConfigError when interval bins are not contiguous and disjoint, a
/// sentinel code falls in a finite bin, a weight is not finite, or a bin has
/// neither an interval nor codes. Sentinel codes take precedence over open
/// tail bins.
void validate_step_scorecard(const StepScorecard& card);

/// The liquid model implied by a card: sentinel bins and bins with an
/// infinite lower bound become leading attributes, bins with an infinite upper
/// bound become trailing attributes, and the finite bin boundaries become knots.
/// A tail containing sentinel codes is split around them.
ModelSpec step_card_model(const StepScorecard& card, bool use_patterns = false);

/// Replaces each bin weight by sum(sw_i * cs(k, x_i)) / sum(sw_i) over the
/// records of `data` in that bin. Bins without sample weight keep their weight
/// and get the flag "zero_weight".
using ScoreFunction = std::function<double(std::size_t char_index, double x)>;
StepScorecard rediscretize(const StepScorecard& card, const ScoreFunction& cs, const Dataset& data);

struct SmoothingOptions {
  Lambda2Map lambda2;
  /// Applies each characteristic's pattern as a fit constraint.
  bool use_patterns = false;
  std::optional<double> lambda;
};

struct SmoothingResult {
  StepScorecard card;
  /// The weight-of-evidence scaled fit whose scores were averaged.
  FittedModel model;
};

/// `data` is the development sample the card was built on.
SmoothingResult smooth_step_scorecard(const StepScorecard& card, const Dataset& data,
                                      const SmoothingOptions& options);

}  // namespace liquid
