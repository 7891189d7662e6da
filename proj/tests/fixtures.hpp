#pragma once

// Small synthetic problems shared by the module tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "liquid/legacy_smoothing.hpp"
#include "liquid/scorecard_model.hpp"
#include "liquid/synth.hpp"

namespace fixture {

inline const std::vector<double> kChar965{-2950, -950, -750, -550, -400, -300, -200, -100, 80, 1425};

inline std::vector<double> uniform_knots(double lo, double hi, int m) {
  std::vector<double> k(m);
  for (int i = 0; i < m; ++i) k[i] = lo + (hi - lo) * i / (m - 1);
  return k;
}

inline liquid::CharacteristicSpec liquid_char(const std::string& name, std::vector<double> knots,
                                              liquid::Pattern pattern = liquid::Pattern::None) {
  liquid::CharacteristicSpec c;
  c.name = name;
  c.column = name;
  c.knots = liquid::KnotConfig(std::move(knots));
  c.pattern = pattern;
  return c;
}

/// Char965-shaped characteristic: a missing-value code, ten liquid knots and
/// an open attribute above 1425.
inline liquid::CharacteristicSpec char965(liquid::Pattern pattern = liquid::Pattern::None) {
  liquid::CharacteristicSpec c = liquid_char("char965", kChar965, pattern);
  c.leading = {liquid::AttributePredicate::code("missing", -9999999)};
  c.trailing = {liquid::AttributePredicate::interval("[1425,inf)", 1425, INFINITY, false, false)};
  return c;
}

inline liquid::SynthCharacteristic synth_char(const std::string& name, double lo, double hi,
                                              std::vector<double> cx, std::vector<double> cy) {
  liquid::SynthCharacteristic c;
  c.name = name;
  c.lo = lo;
  c.hi = hi;
  c.curve_x = std::move(cx);
  c.curve_y = std::move(cy);
  return c;
}

/// 1.2 tanh((x - 50) / 25) on [0, 100], sampled at 201 points.
inline liquid::SynthCharacteristic tanh_char(const std::string& name) {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 200; ++i) {
    const double x = 0.5 * i;
    xs.push_back(x);
    ys.push_back(1.2 * std::tanh((x - 50.0) / 25.0));
  }
  return synth_char(name, 0, 100, std::move(xs), std::move(ys));
}

inline liquid::SynthCharacteristic noise_char(const std::string& name) {
  return synth_char(name, 0, 100, {}, {});
}

/// Char965-like synthetic column: the ten knots and 3000 are its deciles,
/// the log-odds rise with wiggles, and 5% of records carry the missing code.
inline liquid::SynthCharacteristic char965_synth() {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 100; ++i) {
    const double x = -2950 + (3000.0 + 2950.0) * i / 100.0;
    xs.push_back(x);
    ys.push_back(0.6 * std::tanh(x / 1200.0) + 0.15 * std::sin(x / 300.0));
  }
  liquid::SynthCharacteristic c = synth_char("char965", -2950, 3000, std::move(xs), std::move(ys));
  c.sentinels = {{-9999999, 0.05, -0.4}};
  c.distribution = "piecewise";
  c.breaks = kChar965;
  c.breaks.push_back(3000);
  return c;
}

inline liquid::SynthConfig synth(std::vector<liquid::SynthCharacteristic> chars, std::uint64_t seed,
                                 std::size_t n = 20000, double intercept = 0.3) {
  liquid::SynthConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  cfg.intercept = intercept;
  cfg.characteristics = std::move(chars);
  return cfg;
}

/// Least-squares line through (xs, ys); returns max |residual|.
inline double max_line_deviation(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  double worst = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    worst = std::max(worst, std::abs(ys[i] - (my + slope * (xs[i] - mx))));
  }
  return worst;
}

inline double range_of(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

/// R^2 of the least-squares line through (xs, ys).
inline double r_squared(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  return sxy * sxy / (sxx * syy);
}

/// Step card on a tanh column: a missing code, an open bin below 10, deciles
/// [10, 20) ... [80, 90) and an open bin from 90, with weights from a coarse
/// staircase.
inline liquid::StepScorecard tanh_step_card(const std::string& name = "x") {
  liquid::StepCharacteristic c;
  c.name = name;
  c.column = name;
  c.pattern = liquid::Pattern::Ascending;
  c.bins.push_back({liquid::AttributePredicate::code("missing", -1), 0.1, {}});
  c.bins.push_back({liquid::AttributePredicate::interval("<10", -INFINITY, 10, false, false), -1.0, {}});
  for (int lo = 10; lo < 90; lo += 10) {
    c.bins.push_back({liquid::AttributePredicate::interval("[" + std::to_string(lo) + "," + std::to_string(lo + 10) + ")",
                                                           lo, lo + 10, true, false),
                      -1.0 + 0.25 * (lo / 10), {}});
  }
  c.bins.push_back({liquid::AttributePredicate::interval(">=90", 90, INFINITY, true, false), 1.0, {}});
  liquid::StepScorecard card;
  card.characteristics = {c};
  return card;
}

inline liquid::SynthCharacteristic tanh_char_with_missing(const std::string& name) {
  liquid::SynthCharacteristic c = tanh_char(name);
  c.sentinels = {{-1, 0.04, 0.2}};
  return c;
}

}  // namespace fixture
