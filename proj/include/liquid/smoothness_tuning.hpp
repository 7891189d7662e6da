#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "liquid/divergence_fit.hpp"

namespace liquid {

struct Contribution {
  std::string name;
  double contribution = 0.0;
};

/// Leave-one-out marginal contributions on the validation sample:
/// val_divergence(full) - val_divergence(refit without k), sorted descending
/// (spec order on ties). A model with no characteristics has divergence 0.
std::vector<Contribution> marginal_contributions(const FitData& data, const Lambda2Map& lambda2 = {});
std::vector<Contribution> marginal_contributions(const ModelSpec& spec, const Dataset& dev,
                                                 const Dataset& val);

/// {0} and 10^(k/2) for k = 0..20.
std::vector<double> default_lambda2_grid();

struct TraceRow {
  double lambda2 = 0.0;
  double val_divergence = 0.0;
};

struct TuneStep {
  std::string characteristic;
  double chosen_lambda2 = 0.0;
  double chosen_val_divergence = 0.0;
  std::vector<TraceRow> rows;
};

struct TuneReport {
  std::vector<Contribution> ordering;
  /// nullopt for characteristics without a liquid range.
  std::map<std::string, std::optional<double>> chosen_lambda2;
  std::vector<TuneStep> trace;
  double baseline_val_divergence = 0.0;
  double final_val_divergence = 0.0;

  /// Lambda2 overrides reproducing the final model (liquid characteristics only).
  Lambda2Map lambda2_map() const;
};

/// Greedy per-characteristic search. Characteristics are visited in
/// marginal-contribution order; each liquid one is refit at every grid value
/// with earlier choices frozen, and the value with the highest validation
/// divergence is kept (larger lambda2 on ties). Grid fits inside a step run
/// concurrently; steps run in sequence.
TuneReport greedy_tune(const FitData& data, const std::vector<double>& grid);
TuneReport greedy_tune(const ModelSpec& spec, const Dataset& dev, const Dataset& val,
                       const std::vector<double>& grid);

}  // namespace liquid
