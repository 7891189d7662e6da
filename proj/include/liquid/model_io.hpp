#pragma once

// JSON documents: run configs (model spec + split), fitted models, tuning
// reports, curves and step scorecards. Every document carries
// "schema_version"; readers reject other versions. Infinite interval ends are
// written as null and read from null, "inf" or "-inf".

#include <cstdint>
#include <exception>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "liquid/legacy_smoothing.hpp"
#include "liquid/scorecard_model.hpp"
#include "liquid/smoothness_tuning.hpp"

namespace liquid {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  ModelSpec spec;
  double val_fraction = 0.3;
  std::uint64_t seed = 42;
};

/// Parse errors and malformed fields raise ConfigError.
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& doc);

ModelSpec model_spec_from_json(const Json& doc);
Json model_spec_to_json(const ModelSpec& spec);

/// A model spec plus an optional "split": {"val_fraction", "seed"}.
RunConfig run_config_from_json(const Json& doc);
Json run_config_to_json(const RunConfig& cfg);

Json fitted_model_to_json(const FittedModel& fitted);
FittedModel fitted_model_from_json(const Json& doc);

Json tune_report_to_json(const TuneReport& report);
Json curve_to_json(const CurveSample& curve);

StepScorecard step_card_from_json(const Json& doc);
Json step_card_to_json(const StepScorecard& card);

/// {code, message, detail} for an exception; detail names the subject when known.
Json error_to_json(const std::exception& e);

}  // namespace liquid
