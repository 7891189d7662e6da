#include "liquid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "liquid/errors.hpp"

namespace liquid {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    bad(where + "." + key + " has the wrong type");
  }
}

}  // namespace

double SynthCharacteristic::truth(double x) const {
  if (curve_x.empty()) return 0.0;
  if (x <= curve_x.front()) return curve_y.front();
  if (x >= curve_x.back()) return curve_y.back();
  const auto it = std::upper_bound(curve_x.begin(), curve_x.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - curve_x.begin());
  const double u = (x - curve_x[i - 1]) / (curve_x[i] - curve_x[i - 1]);
  return curve_y[i - 1] + u * (curve_y[i] - curve_y[i - 1]);
}

SynthConfig synth_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) bad("generator config must be a JSON object");
  if (auto v = doc.find("schema_version"); v != doc.end() && *v != 1) bad("unsupported schema_version");
  SynthConfig cfg;
  cfg.n = get_or<std::size_t>(doc, "n", cfg.n, "synth");
  cfg.seed = get_or<std::uint64_t>(doc, "seed", cfg.seed, "synth");
  cfg.intercept = get_or<double>(doc, "intercept", cfg.intercept, "synth");
  if (cfg.n == 0) bad("synth.n must be positive");
  const auto chars = doc.find("characteristics");
  if (chars == doc.end() || !chars->is_array() || chars->empty()) bad("synth.characteristics must be a nonempty array");
  for (std::size_t k = 0; k < chars->size(); ++k) {
    const auto& j = (*chars)[k];
    const std::string where = "characteristics[" + std::to_string(k) + "]";
    SynthCharacteristic c;
    c.name = get_or<std::string>(j, "name", "", where);
    if (c.name.empty() || c.name == "outcome" || c.name == "weight") bad(where + ".name is missing or reserved");
    c.distribution = get_or<std::string>(j, "distribution", c.distribution, where);
    c.lo = get_or<double>(j, "lo", c.lo, where);
    c.hi = get_or<double>(j, "hi", c.hi, where);
    c.mean = get_or<double>(j, "mean", 0.5 * (c.lo + c.hi), where);
    c.sd = get_or<double>(j, "sd", (c.hi - c.lo) / 4.0, where);
    c.breaks = get_or<std::vector<double>>(j, "breaks", {}, where);
    if (c.distribution == "piecewise") {
      if (c.breaks.size() < 2 || !std::is_sorted(c.breaks.begin(), c.breaks.end()) ||
          std::adjacent_find(c.breaks.begin(), c.breaks.end()) != c.breaks.end()) {
        bad(where + ".breaks must be at least two strictly increasing values");
      }
      c.lo = c.breaks.front();
      c.hi = c.breaks.back();
    } else if (c.distribution != "uniform" && c.distribution != "normal") {
      bad(where + ".distribution must be uniform, normal or piecewise");
    }
    if (!(c.lo < c.hi) || !std::isfinite(c.lo) || !std::isfinite(c.hi)) bad(where + ": need finite lo < hi");
    if (!(c.sd > 0.0)) bad(where + ".sd must be positive");
    double p_total = 0.0;
    if (auto s = j.find("sentinels"); s != j.end()) {
      for (const auto& sj : *s) {
        SynthSentinel sen;
        sen.value = get_or<double>(sj, "value", 0.0, where + ".sentinels");
        sen.probability = get_or<double>(sj, "probability", 0.0, where + ".sentinels");
        sen.logodds = get_or<double>(sj, "logodds", 0.0, where + ".sentinels");
        if (!(sen.probability >= 0.0)) bad(where + ": sentinel probability must be >= 0");
        if (sen.value >= c.lo && sen.value <= c.hi) bad(where + ": sentinel value inside [lo, hi]");
        p_total += sen.probability;
        c.sentinels.push_back(sen);
      }
    }
    if (p_total >= 1.0) bad(where + ": sentinel probabilities must sum below 1");
    if (auto cv = j.find("curve"); cv != j.end()) {
      c.curve_x = get_or<std::vector<double>>(*cv, "x", {}, where + ".curve");
      c.curve_y = get_or<std::vector<double>>(*cv, "y", {}, where + ".curve");
      if (c.curve_x.size() != c.curve_y.size() || c.curve_x.empty()) bad(where + ".curve needs matching nonempty x and y");
      if (!std::is_sorted(c.curve_x.begin(), c.curve_x.end()) ||
          std::adjacent_find(c.curve_x.begin(), c.curve_x.end()) != c.curve_x.end()) {
        bad(where + ".curve.x must be strictly increasing");
      }
    }
    cfg.characteristics.push_back(std::move(c));
  }
  return cfg;
}

Dataset generate_synthetic(const SynthConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Dataset data;
  for (const auto& c : cfg.characteristics) data.columns.push_back(c.name);
  data.values.assign(cfg.characteristics.size(), std::vector<double>(cfg.n));
  data.outcome.resize(cfg.n);
  data.weight.assign(cfg.n, 1.0);
  for (std::size_t r = 0; r < cfg.n; ++r) {
    double eta = cfg.intercept;
    for (std::size_t k = 0; k < cfg.characteristics.size(); ++k) {
      const auto& c = cfg.characteristics[k];
      double u = unit(rng);
      double x = 0.0;
      bool sentinel = false;
      for (const auto& s : c.sentinels) {
        if (u < s.probability) {
          x = s.value;
          eta += s.logodds;
          sentinel = true;
          break;
        }
        u -= s.probability;
      }
      if (!sentinel) {
        if (c.distribution == "uniform") {
          x = c.lo + (c.hi - c.lo) * unit(rng);
        } else if (c.distribution == "piecewise") {
          const std::size_t spans = c.breaks.size() - 1;
          const std::size_t s = std::min(spans - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(spans)));
          x = c.breaks[s] + (c.breaks[s + 1] - c.breaks[s]) * unit(rng);
        } else {
          std::normal_distribution<double> normal(c.mean, c.sd);
          x = std::clamp(normal(rng), c.lo, c.hi);
        }
        eta += c.truth(x);
      }
      data.values[k][r] = x;
    }
    const double p_good = 1.0 / (1.0 + std::exp(-eta));
    data.outcome[r] = unit(rng) < p_good ? 1 : 0;
  }
  return data;
}

nlohmann::json synth_truth_json(const SynthConfig& cfg) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["seed"] = cfg.seed;
  j["n"] = cfg.n;
  j["intercept"] = cfg.intercept;
  j["characteristics"] = nlohmann::json::array();
  for (const auto& c : cfg.characteristics) {
    nlohmann::json cj;
    cj["name"] = c.name;
    cj["distribution"] = c.distribution;
    if (c.distribution == "piecewise") cj["breaks"] = c.breaks;
    cj["curve"] = {{"x", c.curve_x}, {"y", c.curve_y}};
    cj["sentinels"] = nlohmann::json::array();
    for (const auto& s : c.sentinels) {
      cj["sentinels"].push_back({{"value", s.value}, {"probability", s.probability}, {"logodds", s.logodds}});
    }
    j["characteristics"].push_back(std::move(cj));
  }
  return j;
}

}  // namespace liquid
