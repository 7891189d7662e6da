#include <algorithm>

#include "doctest.h"
#include "fixtures.hpp"
#include "liquid/errors.hpp"
#include "liquid/model_io.hpp"
#include "liquid/smoothness_tuning.hpp"
#include "liquid/synth.hpp"

using namespace liquid;

namespace {

/// tanh signal, Char965-like signal and a three-code discrete column.
struct Session {
  ModelSpec spec;
  DataSplit split;
};

Session three_chars(std::uint64_t seed = 1) {
  Dataset d = generate_synthetic(fixture::synth({fixture::tanh_char("t"), fixture::char965_synth(), fixture::noise_char("d")}, seed));
  for (double& v : d.values[2]) v = std::floor(v / 34.0);
  Session s;
  CharacteristicSpec disc;
  disc.name = "d";
  disc.column = "d";
  for (int code = 0; code < 3; ++code) disc.leading.push_back(AttributePredicate::code(std::to_string(code), code));
  s.spec.characteristics = {fixture::liquid_char("t", fixture::uniform_knots(0, 100, 21), Pattern::Ascending),
                            fixture::char965(), disc};
  s.split = split_dataset(d, 0.3, seed + 50);
  return s;
}

const std::vector<double> kSmallGrid{0.0, 1e2, 1e4, 1e6, 1e8, 1e10};

}  // namespace

TEST_CASE("default grid") {
  const auto g = default_lambda2_grid();
  REQUIRE(g.size() == 22);
  CHECK(g.front() == 0.0);
  CHECK(g[1] == 1.0);
  CHECK(g.back() == doctest::Approx(1e10));
  for (double want : {10.0, std::pow(10.0, 2.5), std::pow(10.0, 3.5), 1e5, 1e7, std::pow(10.0, 7.5)}) {
    CHECK(std::any_of(g.begin(), g.end(), [&](double v) { return std::abs(v - want) <= 1e-12 * want; }));
  }
}

TEST_CASE("a pure-noise characteristic contributes almost nothing") {
  const Dataset d = generate_synthetic(fixture::synth({fixture::tanh_char("t"), fixture::noise_char("noise")}, 4));
  const DataSplit split = split_dataset(d, 0.3, 5);
  ModelSpec spec;
  spec.characteristics = {fixture::liquid_char("t", fixture::uniform_knots(0, 100, 21)),
                          fixture::liquid_char("noise", fixture::uniform_knots(0, 100, 6))};
  const auto c = marginal_contributions(spec, split.dev, split.val);
  REQUIRE(c.size() == 2);
  CHECK(c[0].name == "t");
  CHECK(c[1].name == "noise");
  CHECK(std::abs(c[1].contribution) < 0.02);
  CHECK(c[0].contribution > 0.1);
}

TEST_CASE("a lone characteristic contributes its whole validation divergence") {
  const Dataset d = generate_synthetic(fixture::synth({fixture::tanh_char("t")}, 2));
  const DataSplit split = split_dataset(d, 0.3, 3);
  ModelSpec spec;
  spec.characteristics = {fixture::liquid_char("t", fixture::uniform_knots(0, 100, 11))};
  const FitData data(spec, split.dev, &split.val);
  const auto c = marginal_contributions(data);
  REQUIRE(c.size() == 1);
  CHECK(c[0].contribution == doctest::Approx(fit(data).val_divergence).epsilon(1e-12));
}

TEST_CASE("a duplicated column is redundant") {
  const Dataset d = generate_synthetic(fixture::synth({fixture::tanh_char("t")}, 6));
  const DataSplit split = split_dataset(d, 0.3, 7);
  ModelSpec spec;
  spec.characteristics = {fixture::liquid_char("t", fixture::uniform_knots(0, 100, 11)),
                          fixture::liquid_char("t_copy", fixture::uniform_knots(0, 100, 11))};
  spec.characteristics[1].column = "t";
  const auto c = marginal_contributions(spec, split.dev, split.val);
  REQUIRE(c.size() == 2);
  CHECK(std::abs(c[0].contribution) < 1e-3);
  CHECK(std::abs(c[1].contribution) < 1e-3);
}

TEST_CASE("two-point grid on one characteristic") {
  const Dataset d = generate_synthetic(fixture::synth({fixture::tanh_char("t")}, 8));
  const DataSplit split = split_dataset(d, 0.3, 9);
  ModelSpec spec;
  spec.characteristics = {fixture::liquid_char("t", fixture::uniform_knots(0, 100, 21), Pattern::Ascending)};
  const TuneReport r = greedy_tune(spec, split.dev, split.val, {0.0, 1e10});
  REQUIRE(r.trace.size() == 1);
  REQUIRE(r.trace[0].rows.size() == 2);
  CHECK(r.trace[0].rows[0].lambda2 == 0.0);
  CHECK(r.trace[0].rows[1].lambda2 == 1e10);
  const double best = std::max(r.trace[0].rows[0].val_divergence, r.trace[0].rows[1].val_divergence);
  CHECK(r.trace[0].chosen_val_divergence == best);
  const double chosen = r.trace[0].rows[0].val_divergence > r.trace[0].rows[1].val_divergence ? 0.0 : 1e10;
  CHECK(*r.chosen_lambda2.at("t") == chosen);
  CHECK(r.final_val_divergence == best);
}

TEST_CASE("greedy tuning: ordering, skipping, freezing and replay") {
  const Session s = three_chars();
  const FitData data(s.spec, s.split.dev, &s.split.val);
  const TuneReport r = greedy_tune(data, kSmallGrid);

  REQUIRE(r.ordering.size() == 3);
  for (std::size_t i = 1; i < r.ordering.size(); ++i) CHECK(r.ordering[i - 1].contribution >= r.ordering[i].contribution);
  CHECK_FALSE(r.chosen_lambda2.at("d").has_value());
  CHECK(r.chosen_lambda2.at("t").has_value());
  CHECK(r.chosen_lambda2.at("char965").has_value());
  REQUIRE(r.trace.size() == 2);
  CHECK(r.baseline_val_divergence == doctest::Approx(fit(data).val_divergence).epsilon(1e-12));

  std::vector<std::string> liquid_order;
  for (const auto& c : r.ordering) {
    if (c.name != "d") liquid_order.push_back(c.name);
  }
  Lambda2Map frozen;
  for (std::size_t s_i = 0; s_i < r.trace.size(); ++s_i) {
    const TuneStep& step = r.trace[s_i];
    CHECK(step.characteristic == liquid_order[s_i]);
    REQUIRE(step.rows.size() == kSmallGrid.size());
    double best = -INFINITY;
    for (std::size_t g = 0; g < kSmallGrid.size(); ++g) {
      CHECK(step.rows[g].lambda2 == kSmallGrid[g]);
      best = std::max(best, step.rows[g].val_divergence);
    }
    CHECK(step.chosen_val_divergence == best);

    // Every row is the model with earlier choices frozen and this characteristic at the row's value.
    for (std::size_t g = 0; g < kSmallGrid.size(); g += 2) {
      Lambda2Map l2 = frozen;
      l2[step.characteristic] = kSmallGrid[g];
      CHECK(fit(data, {l2, std::nullopt, {}}).val_divergence == doctest::Approx(step.rows[g].val_divergence).epsilon(1e-9));
    }
    frozen[step.characteristic] = step.chosen_lambda2;
    CHECK(fit(data, {frozen, std::nullopt, {}}).val_divergence ==
          doctest::Approx(step.chosen_val_divergence).epsilon(1e-9));
    if (s_i > 0) {
      // The row at the characteristic's starting value repeats the previous step's choice.
      CHECK(step.rows[0].val_divergence == doctest::Approx(r.trace[s_i - 1].chosen_val_divergence).epsilon(1e-9));
    }
  }
  CHECK(r.lambda2_map() == frozen);
  const double replay = fit(data, {r.lambda2_map(), std::nullopt, {}}).val_divergence;
  CHECK(std::abs(replay - r.final_val_divergence) <= 1e-9 * r.final_val_divergence);
  CHECK(r.final_val_divergence == r.trace.back().chosen_val_divergence);
}

TEST_CASE("tuning is deterministic") {
  const Session s = three_chars(3);
  const TuneReport a = greedy_tune(s.spec, s.split.dev, s.split.val, kSmallGrid);
  const TuneReport b = greedy_tune(s.spec, s.split.dev, s.split.val, kSmallGrid);
  CHECK(tune_report_to_json(a).dump() == tune_report_to_json(b).dump());
}

TEST_CASE("grid validation") {
  const Session s = three_chars();
  const FitData data(s.spec, s.split.dev, &s.split.val);
  CHECK_THROWS_AS(greedy_tune(data, {}), Error);
  CHECK_THROWS_AS(greedy_tune(data, {1.0, 10.0}), Error);
  CHECK_THROWS_AS(greedy_tune(data, {0.0, -1.0}), Error);
  CHECK_THROWS_AS(greedy_tune(data, {0.0, INFINITY}), Error);
  const FitData no_val(s.spec, s.split.dev);
  CHECK_THROWS_AS(greedy_tune(no_val, {0.0}), Error);
  CHECK_THROWS_AS(marginal_contributions(no_val), Error);
}

TEST_CASE("fit failures carry step context") {
  ModelSpec spec;
  spec.characteristics = {fixture::liquid_char("x", {0, 1, 2})};
  const Dataset d = parse_csv("outcome,x\n1,0.5\n0,0.5\n1,1.5\n0,1.5\n");
  try {
    greedy_tune(spec, d, d, {0.0});
    FAIL("expected degenerate classes");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateClasses);
    CHECK(std::string(e.what()).find("baseline") != std::string::npos);
  }
}
