#include "liquid/scorecard_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "liquid/errors.hpp"

namespace liquid {

bool AttributePredicate::matches(double x) const {
  for (const double c : codes) {
    if (x == c) return true;
  }
  if (!has_interval) return false;
  const bool above = lo_closed ? x >= lo : x > lo;
  const bool below = hi_closed ? x <= hi : x < hi;
  return above && below;
}

AttributePredicate AttributePredicate::code(std::string label, double value) {
  AttributePredicate p;
  p.label = std::move(label);
  p.codes.push_back(value);
  return p;
}

AttributePredicate AttributePredicate::interval(std::string label, double lo, double hi,
                                                bool lo_closed, bool hi_closed) {
  AttributePredicate p;
  p.label = std::move(label);
  p.has_interval = true;
  p.lo = lo;
  p.hi = hi;
  p.lo_closed = lo_closed;
  p.hi_closed = hi_closed;
  return p;
}

namespace {

bool overlaps_closed_range(const AttributePredicate& p, double a, double b) {
  for (const double c : p.codes) {
    if (c >= a && c <= b) return true;
  }
  if (!p.has_interval) return false;
  if (p.lo < b && p.hi > a) return true;
  if (p.hi == a && p.hi_closed) return true;
  if (p.lo == b && p.lo_closed) return true;
  return false;
}

}  // namespace

void ModelSpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::ConfigError, "ridge lambda must be finite and >= 0");
  }
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw Error(ErrorCode::ConfigError, "delta must be finite and > 0");
  }
  std::set<std::string> names;
  for (const auto& c : characteristics) {
    if (c.name.empty()) throw Error(ErrorCode::ConfigError, "characteristic with empty name");
    if (!names.insert(c.name).second) {
      throw Error(ErrorCode::ConfigError, "duplicate characteristic name '" + c.name + "'");
    }
    if (c.coefficient_count() == 0) {
      throw Error(ErrorCode::ConfigError, "characteristic '" + c.name + "' has no attributes");
    }
    if (!(c.lambda2 >= 0.0) || !std::isfinite(c.lambda2)) {
      throw Error(ErrorCode::ConfigError, "lambda2 of '" + c.name + "' must be finite and >= 0");
    }
    if (c.pattern != Pattern::None && !c.knots) {
      throw Error(ErrorCode::ConfigError,
                  "pattern on characteristic '" + c.name + "' which has no liquid range");
    }
    if (c.xscale == XScale::Log1p && c.knots && !(c.knots->front() > -1.0)) {
      throw Error(ErrorCode::ConfigError, "xscale log1p on '" + c.name + "' needs knots above -1");
    }
    if (c.knots) {
      for (const auto* group : {&c.leading, &c.trailing}) {
        for (const auto& p : *group) {
          if (overlaps_closed_range(p, c.knots->front(), c.knots->back())) {
            throw Error(ErrorCode::ConfigError, "attribute '" + p.label + "' of '" + c.name +
                                                    "' overlaps the liquid range");
          }
        }
      }
    }
  }
}

std::size_t ModelSpec::coefficient_count() const {
  std::size_t p = 0;
  for (const auto& c : characteristics) p += c.coefficient_count();
  return p;
}

std::size_t ModelSpec::offset_of(std::size_t char_index) const {
  std::size_t off = 0;
  for (std::size_t k = 0; k < char_index; ++k) off += characteristics[k].coefficient_count();
  return off;
}

std::size_t ModelSpec::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < characteristics.size(); ++k) {
    if (characteristics[k].name == name) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown characteristic '" + name + "'");
}

DesignLayout::DesignLayout(const ModelSpec& spec) {
  entries_.reserve(spec.characteristics.size());
  for (const auto& c : spec.characteristics) {
    Entry e{&c, p_, c.coefficient_count(), std::nullopt};
    if (c.knots) e.t.emplace(*c.knots);
    entries_.push_back(std::move(e));
    p_ += c.coefficient_count();
  }
}

void DesignLayout::append(std::size_t k, double x, SparseRow& row) const {
  const Entry& e = entries_[k];
  const CharacteristicSpec& c = *e.spec;
  int hits = 0;
  std::size_t slot = e.offset;
  std::size_t matched = 0;
  for (const auto& p : c.leading) {
    if (p.matches(x)) {
      ++hits;
      matched = slot;
    }
    ++slot;
  }
  const std::size_t liquid_offset = slot;
  const bool in_liquid = e.t && x >= e.t->lower() && x <= e.t->upper();
  if (in_liquid) ++hits;
  slot += c.liquid_count();
  for (const auto& p : c.trailing) {
    if (p.matches(x)) {
      ++hits;
      matched = slot;
    }
    ++slot;
  }
  if (hits != 1) {
    throw Error(ErrorCode::DomainError,
                "value " + std::to_string(x) + " of characteristic '" + c.name + "' " +
                    (hits == 0 ? "matches no attribute and lies outside the liquid range"
                               : "matches more than one attribute"),
                c.name);
  }
  if (in_liquid) {
    std::array<double, 4> vals{};
    const std::size_t first = basis_nonzero(*e.t, x, vals);
    for (std::size_t j = 0; j < 4; ++j) {
      if (vals[j] == 0.0) continue;
      row.index.push_back(static_cast<int>(liquid_offset + first - 1 + j));
      row.value.push_back(vals[j]);
    }
  } else {
    row.index.push_back(static_cast<int>(matched));
    row.value.push_back(1.0);
  }
}

void DesignLayout::expand(std::size_t k, double x, std::span<double> out) const {
  const Entry& e = entries_[k];
  std::fill(out.begin(), out.end(), 0.0);
  SparseRow row;
  append(k, x, row);
  for (std::size_t j = 0; j < row.index.size(); ++j) {
    out[static_cast<std::size_t>(row.index[j]) - e.offset] = row.value[j];
  }
}

Eigen::VectorXd expand_design(const ModelSpec& spec, std::span<const double> values) {
  if (values.size() != spec.characteristics.size()) {
    throw Error(ErrorCode::InvalidArgument, "record has " + std::to_string(values.size()) +
                                                " values for " +
                                                std::to_string(spec.characteristics.size()) +
                                                " characteristics");
  }
  const DesignLayout layout(spec);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.coefficient_count()));
  SparseRow row;
  for (std::size_t k = 0; k < layout.size(); ++k) layout.append(k, values[k], row);
  for (std::size_t j = 0; j < row.index.size(); ++j) out(row.index[j]) = row.value[j];
  return out;
}

double characteristic_score(const FittedModel& fitted, const std::string& name, double x) {
  const std::size_t k = fitted.spec.index_of(name);
  const DesignLayout layout(fitted.spec);
  SparseRow row;
  layout.append(k, x, row);
  double cs = 0.0;
  for (std::size_t j = 0; j < row.index.size(); ++j) cs += fitted.beta(row.index[j]) * row.value[j];
  return cs;
}

double model_score(const FittedModel& fitted, std::span<const double> values) {
  return fitted.beta.dot(expand_design(fitted.spec, values));
}

CurveSample sample_curve(const FittedModel& fitted, const std::string& name, std::size_t n) {
  const std::size_t k = fitted.spec.index_of(name);
  const CharacteristicSpec& c = fitted.spec.characteristics[k];
  if (!c.knots) throw Error(ErrorCode::InvalidArgument, "characteristic '" + name + "' has no liquid range", name);
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "a curve needs at least two samples");
  const TVector t(*c.knots);
  const auto first = static_cast<Eigen::Index>(fitted.spec.offset_of(k) + c.leading.size());
  const double lo = c.knots->front();
  const double hi = c.knots->back();
  CurveSample out;
  out.name = name;
  out.lambda2 = c.lambda2;
  out.dev_divergence = fitted.dev_divergence;
  out.val_divergence = fitted.val_divergence;
  std::array<double, 4> b{};
  for (std::size_t i = 0; i < n; ++i) {
    const double x = i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    const std::size_t i0 = basis_nonzero(t, x, b);
    double cs = 0.0;
    for (std::size_t j = 0; j < 4; ++j) cs += fitted.beta(first + static_cast<Eigen::Index>(i0 - 1 + j)) * b[j];
    out.xs.push_back(x);
    out.cs.push_back(cs);
    if (c.xscale == XScale::Log1p) out.log1p_xs.push_back(std::log1p(x));
  }
  return out;
}

Eigen::MatrixXd pattern_constraints(const ModelSpec& spec, const std::string& name) {
  const std::size_t k = spec.index_of(name);
  const CharacteristicSpec& c = spec.characteristics[k];
  const auto p = static_cast<Eigen::Index>(spec.coefficient_count());
  if (c.pattern == Pattern::None) return Eigen::MatrixXd(0, p);
  if (!c.knots) {
    throw Error(ErrorCode::InvalidArgument,
                "pattern on characteristic '" + name + "' which has no liquid range");
  }
  const auto first = static_cast<Eigen::Index>(spec.offset_of(k) + c.leading.size());
  const auto rows = static_cast<Eigen::Index>(c.liquid_count() - 1);
  const double sign = c.pattern == Pattern::Ascending ? 1.0 : -1.0;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(rows, p);
  for (Eigen::Index r = 0; r < rows; ++r) {
    g(r, first + r) = -sign;
    g(r, first + r + 1) = sign;
  }
  return g;
}

Eigen::MatrixXd model_pattern_constraints(const ModelSpec& spec) {
  const auto p = static_cast<Eigen::Index>(spec.coefficient_count());
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::Index rows = 0;
  for (const auto& c : spec.characteristics) {
    if (c.pattern == Pattern::None) continue;
    blocks.push_back(pattern_constraints(spec, c.name));
    rows += blocks.back().rows();
  }
  Eigen::MatrixXd g(rows, p);
  Eigen::Index r = 0;
  for (const auto& b : blocks) {
    g.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  return g;
}

std::string_view pattern_name(Pattern p) {
  switch (p) {
    case Pattern::Ascending: return "ascending";
    case Pattern::Descending: return "descending";
    case Pattern::None: break;
  }
  return "none";
}

Pattern parse_pattern(std::string_view s) {
  if (s == "ascending") return Pattern::Ascending;
  if (s == "descending") return Pattern::Descending;
  if (s == "none" || s.empty()) return Pattern::None;
  throw Error(ErrorCode::ConfigError, "unknown pattern '" + std::string(s) + "'");
}

}  // namespace liquid
