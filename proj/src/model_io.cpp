#include "liquid/model_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "liquid/errors.hpp"

namespace liquid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

const Json& field(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) bad(where + " must be an object");
  const auto it = obj.find(key);
  if (it == obj.end()) bad(where + ": missing field '" + key + "'");
  return *it;
}

double number(const Json& v, const std::string& where) {
  if (!v.is_number()) bad(where + " must be a number");
  return v.get<double>();
}

double bound(const Json& v, double infinite, const std::string& where) {
  if (v.is_null()) return infinite;
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    bad(where + ": unrecognized bound '" + s + "'");
  }
  return number(v, where);
}

Json bound_to_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string string_field(const Json& obj, const char* key, const std::string& where) {
  const Json& v = field(obj, key, where);
  if (!v.is_string()) bad(where + "." + key + " must be a string");
  return v.get<std::string>();
}

template <class T>
T value_or(const Json& obj, const char* key, T fallback, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    bad(where + "." + key + " has the wrong type");
  }
}

void check_version(const Json& doc, const std::string& what) {
  if (!doc.is_object()) bad(what + " must be a JSON object");
  const auto it = doc.find("schema_version");
  if (it == doc.end()) return;
  if (!it->is_number_integer() || it->get<int>() != kSchemaVersion) {
    bad(what + ": unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
  }
}

AttributePredicate predicate_from_json(const Json& j, bool lo_closed, bool hi_closed, const std::string& where) {
  if (!j.is_object()) bad(where + " must be an object");
  AttributePredicate p;
  p.label = value_or<std::string>(j, "label", "", where);
  if (auto it = j.find("codes"); it != j.end()) {
    if (!it->is_array()) bad(where + ".codes must be an array");
    for (const auto& c : *it) p.codes.push_back(number(c, where + ".codes"));
  }
  if (j.contains("lo") || j.contains("hi")) {
    p.has_interval = true;
    p.lo = j.contains("lo") ? bound(j["lo"], -kInf, where + ".lo") : -kInf;
    p.hi = j.contains("hi") ? bound(j["hi"], kInf, where + ".hi") : kInf;
    p.lo_closed = value_or<bool>(j, "lo_closed", lo_closed, where);
    p.hi_closed = value_or<bool>(j, "hi_closed", hi_closed, where);
  }
  if (p.label.empty()) {
    std::ostringstream s;
    if (p.has_interval) {
      s << (p.lo_closed ? '[' : '(') << format_double(p.lo) << ',' << format_double(p.hi)
        << (p.hi_closed ? ']' : ')');
    } else {
      for (std::size_t i = 0; i < p.codes.size(); ++i) s << (i ? "," : "") << format_double(p.codes[i]);
    }
    p.label = s.str();
  }
  return p;
}

Json predicate_to_json(const AttributePredicate& p) {
  Json j;
  j["label"] = p.label;
  if (!p.codes.empty()) j["codes"] = p.codes;
  if (p.has_interval) {
    j["lo"] = bound_to_json(p.lo);
    j["hi"] = bound_to_json(p.hi);
    j["lo_closed"] = p.lo_closed;
    j["hi_closed"] = p.hi_closed;
  }
  return j;
}

std::vector<AttributePredicate> predicates(const Json& obj, const char* key, const std::string& where) {
  std::vector<AttributePredicate> out;
  const auto it = obj.find(key);
  if (it == obj.end()) return out;
  if (!it->is_array()) bad(where + "." + key + " must be an array");
  for (std::size_t i = 0; i < it->size(); ++i) {
    out.push_back(predicate_from_json((*it)[i], false, false, where + "." + key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

XScale parse_xscale(const std::string& s) {
  if (s == "natural") return XScale::Natural;
  if (s == "log1p") return XScale::Log1p;
  bad("unknown xscale '" + s + "'");
}

CharacteristicSpec characteristic_from_json(const Json& j, const std::string& where) {
  CharacteristicSpec c;
  c.name = string_field(j, "name", where);
  c.column = value_or<std::string>(j, "column", c.name, where);
  c.leading = predicates(j, "leading", where);
  c.trailing = predicates(j, "trailing", where);
  if (auto it = j.find("knots"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) bad(where + ".knots must be an array");
    std::vector<double> knots;
    for (const auto& k : *it) knots.push_back(number(k, where + ".knots"));
    try {
      c.knots = KnotConfig(std::move(knots));
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, where + " ('" + c.name + "'): " + e.what(), c.name);
    }
  }
  c.pattern = parse_pattern(value_or<std::string>(j, "pattern", "none", where));
  c.lambda2 = value_or<double>(j, "lambda2", 0.0, where);
  c.xscale = parse_xscale(value_or<std::string>(j, "xscale", "natural", where));
  return c;
}

Json characteristic_to_json(const CharacteristicSpec& c) {
  Json j;
  j["name"] = c.name;
  j["column"] = c.column;
  j["leading"] = Json::array();
  for (const auto& p : c.leading) j["leading"].push_back(predicate_to_json(p));
  j["knots"] = c.knots ? Json(c.knots->values()) : Json(nullptr);
  j["trailing"] = Json::array();
  for (const auto& p : c.trailing) j["trailing"].push_back(predicate_to_json(p));
  j["pattern"] = std::string(pattern_name(c.pattern));
  j["lambda2"] = c.lambda2;
  j["xscale"] = c.xscale == XScale::Log1p ? "log1p" : "natural";
  return j;
}

Json nan_to_null(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    bad("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) bad("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

ModelSpec model_spec_from_json(const Json& doc) {
  check_version(doc, "model spec");
  ModelSpec spec;
  spec.lambda = value_or<double>(doc, "lambda", spec.lambda, "model");
  spec.delta = value_or<double>(doc, "delta", spec.delta, "model");
  const Json& chars = field(doc, "characteristics", "model");
  if (!chars.is_array()) bad("model.characteristics must be an array");
  for (std::size_t i = 0; i < chars.size(); ++i) {
    spec.characteristics.push_back(characteristic_from_json(chars[i], "characteristics[" + std::to_string(i) + "]"));
  }
  spec.validate();
  return spec;
}

Json model_spec_to_json(const ModelSpec& spec) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["lambda"] = spec.lambda;
  j["delta"] = spec.delta;
  j["characteristics"] = Json::array();
  for (const auto& c : spec.characteristics) j["characteristics"].push_back(characteristic_to_json(c));
  return j;
}

RunConfig run_config_from_json(const Json& doc) {
  RunConfig cfg;
  cfg.spec = model_spec_from_json(doc);
  if (auto it = doc.find("split"); it != doc.end()) {
    cfg.val_fraction = value_or<double>(*it, "val_fraction", cfg.val_fraction, "split");
    cfg.seed = value_or<std::uint64_t>(*it, "seed", cfg.seed, "split");
  }
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0)) bad("split.val_fraction must lie in (0, 1)");
  return cfg;
}

Json run_config_to_json(const RunConfig& cfg) {
  Json j = model_spec_to_json(cfg.spec);
  j["split"] = {{"val_fraction", cfg.val_fraction}, {"seed", cfg.seed}};
  return j;
}

Json fitted_model_to_json(const FittedModel& fitted) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["spec"] = model_spec_to_json(fitted.spec);
  j["beta"] = std::vector<double>(fitted.beta.data(), fitted.beta.data() + fitted.beta.size());
  j["dev_divergence"] = fitted.dev_divergence;
  j["val_divergence"] = nan_to_null(fitted.val_divergence);
  j["active_set"] = fitted.active_set;
  j["iterations"] = fitted.iterations;
  return j;
}

FittedModel fitted_model_from_json(const Json& doc) {
  check_version(doc, "fitted model");
  FittedModel f;
  f.spec = model_spec_from_json(field(doc, "spec", "model"));
  const Json& beta = field(doc, "beta", "model");
  if (!beta.is_array() || beta.size() != f.spec.coefficient_count()) {
    bad("model.beta must have one entry per coefficient");
  }
  f.beta.resize(static_cast<Eigen::Index>(beta.size()));
  for (std::size_t i = 0; i < beta.size(); ++i) f.beta(static_cast<Eigen::Index>(i)) = number(beta[i], "model.beta");
  f.dev_divergence = value_or<double>(doc, "dev_divergence", 0.0, "model");
  f.val_divergence = value_or<double>(doc, "val_divergence", std::numeric_limits<double>::quiet_NaN(), "model");
  f.active_set = value_or<std::vector<int>>(doc, "active_set", {}, "model");
  f.iterations = value_or<int>(doc, "iterations", 0, "model");
  return f;
}

Json tune_report_to_json(const TuneReport& report) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["ordering"] = Json::array();
  for (const auto& c : report.ordering) j["ordering"].push_back({{"name", c.name}, {"contribution", c.contribution}});
  j["chosen_lambda2"] = Json::object();
  for (const auto& [name, value] : report.chosen_lambda2) {
    j["chosen_lambda2"][name] = value ? Json(*value) : Json(nullptr);
  }
  j["trace"] = Json::array();
  for (const auto& step : report.trace) {
    Json s;
    s["characteristic"] = step.characteristic;
    s["chosen_lambda2"] = step.chosen_lambda2;
    s["chosen_val_divergence"] = step.chosen_val_divergence;
    s["rows"] = Json::array();
    for (const auto& r : step.rows) s["rows"].push_back({{"lambda2", r.lambda2}, {"val_divergence", r.val_divergence}});
    j["trace"].push_back(std::move(s));
  }
  j["baseline_val_divergence"] = report.baseline_val_divergence;
  j["final_val_divergence"] = report.final_val_divergence;
  return j;
}

Json curve_to_json(const CurveSample& curve) {
  Json j;
  j["name"] = curve.name;
  j["lambda2"] = curve.lambda2;
  j["dev_divergence"] = curve.dev_divergence;
  j["val_divergence"] = nan_to_null(curve.val_divergence);
  j["xs"] = curve.xs;
  if (!curve.log1p_xs.empty()) j["log1p_xs"] = curve.log1p_xs;
  j["cs"] = curve.cs;
  return j;
}

StepScorecard step_card_from_json(const Json& doc) {
  check_version(doc, "step scorecard");
  StepScorecard card;
  const Json& chars = field(doc, "characteristics", "scorecard");
  if (!chars.is_array()) bad("scorecard.characteristics must be an array");
  for (std::size_t i = 0; i < chars.size(); ++i) {
    const std::string where = "characteristics[" + std::to_string(i) + "]";
    StepCharacteristic c;
    c.name = string_field(chars[i], "name", where);
    c.column = value_or<std::string>(chars[i], "column", c.name, where);
    c.pattern = parse_pattern(value_or<std::string>(chars[i], "pattern", "none", where));
    const Json& bins = field(chars[i], "bins", where);
    if (!bins.is_array()) bad(where + ".bins must be an array");
    for (std::size_t b = 0; b < bins.size(); ++b) {
      const std::string bw = where + ".bins[" + std::to_string(b) + "]";
      StepBin bin;
      bin.predicate = predicate_from_json(bins[b], true, false, bw);
      bin.weight = number(field(bins[b], "weight", bw), bw + ".weight");
      bin.flags = value_or<std::vector<std::string>>(bins[b], "flags", {}, bw);
      c.bins.push_back(std::move(bin));
    }
    card.characteristics.push_back(std::move(c));
  }
  validate_step_scorecard(card);
  return card;
}

Json step_card_to_json(const StepScorecard& card) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["characteristics"] = Json::array();
  for (const auto& c : card.characteristics) {
    Json cj;
    cj["name"] = c.name;
    cj["column"] = c.column;
    cj["pattern"] = std::string(pattern_name(c.pattern));
    cj["bins"] = Json::array();
    for (const auto& b : c.bins) {
      Json bj = predicate_to_json(b.predicate);
      bj["weight"] = b.weight;
      bj["flags"] = b.flags;
      cj["bins"].push_back(std::move(bj));
    }
    j["characteristics"].push_back(std::move(cj));
  }
  return j;
}

Json error_to_json(const std::exception& e) {
  Json j;
  Json detail = Json::object();
  if (const auto* le = dynamic_cast<const Error*>(&e)) {
    j["code"] = std::string(error_code_name(le->code()));
    if (!le->subject().empty()) detail["subject"] = le->subject();
  } else {
    j["code"] = "INTERNAL";
  }
  j["message"] = e.what();
  j["detail"] = std::move(detail);
  return j;
}

}  // namespace liquid
