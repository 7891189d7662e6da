#pragma once

// Scorecard structure: each characteristic maps a raw value either to one of
// its discrete attributes (one-hot) or, inside the closed liquid range
// [k(1), k(m)], to the cubic B-spline basis row. Coefficients are laid out
// characteristic by characteristic as [leading | liquid (m+2) | trailing].

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "liquid/spline_basis.hpp"

namespace liquid {

enum class Pattern { None, Ascending, Descending };
enum class XScale { Natural, Log1p };

/// A discrete attribute: a set of exact codes (sentinels such as -9999999)
/// and/or one interval with configurable end closure.
struct AttributePredicate {
  std::string label;
  std::vector<double> codes;
  bool has_interval = false;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_closed = false;
  bool hi_closed = false;

  bool matches(double x) const;

  static AttributePredicate code(std::string label, double value);
  static AttributePredicate interval(std::string label, double lo, double hi, bool lo_closed,
                                     bool hi_closed);
};

struct CharacteristicSpec {
  std::string name;
  std::string column;
  std::vector<AttributePredicate> leading;
  std::optional<KnotConfig> knots;
  std::vector<AttributePredicate> trailing;
  Pattern pattern = Pattern::None;
  double lambda2 = 0.0;
  XScale xscale = XScale::Natural;

  bool has_liquid() const noexcept { return knots.has_value(); }
  std::size_t liquid_count() const noexcept { return knots ? knots->size() + 2 : 0; }
  std::size_t coefficient_count() const noexcept {
    return leading.size() + liquid_count() + trailing.size();
  }
};

struct ModelSpec {
  std::vector<CharacteristicSpec> characteristics;
  /// Ridge penalty on beta'beta, entering the objective as (2 lambda / n).
  double lambda = 1.0;
  /// Right-hand side of the mean-difference normalization d'beta = delta.
  double delta = 1.0;

  /// Throws ConfigError on duplicate names, negative penalties, delta <= 0,
  /// patterns on liquid-free characteristics, or attributes overlapping a liquid range.
  void validate() const;

  std::size_t coefficient_count() const;
  std::size_t offset_of(std::size_t char_index) const;
  std::size_t index_of(const std::string& name) const;
  const CharacteristicSpec& at(const std::string& name) const { return characteristics[index_of(name)]; }
};

/// Per-record sparse design: at most four nonzeros per characteristic.
struct SparseRow {
  std::vector<int> index;
  std::vector<double> value;

  void clear() {
    index.clear();
    value.clear();
  }
};

/// Offsets and padded knot sequences resolved once per model, for the hot
/// loops that expand many records.
class DesignLayout {
 public:
  explicit DesignLayout(const ModelSpec& spec);

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t coefficient_count() const noexcept { return p_; }

  /// Appends characteristic k's nonzeros for raw value x. Throws DomainError
  /// naming the characteristic when x matches nothing (or more than one attribute).
  void append(std::size_t k, double x, SparseRow& row) const;

  /// Dense expansion of one characteristic into `out` (its segment only).
  void expand(std::size_t k, double x, std::span<double> out) const;

  std::size_t offset(std::size_t k) const { return entries_[k].offset; }
  std::size_t count(std::size_t k) const { return entries_[k].count; }

 private:
  struct Entry {
    const CharacteristicSpec* spec;
    std::size_t offset;
    std::size_t count;
    std::optional<TVector> t;
  };
  std::vector<Entry> entries_;
  std::size_t p_ = 0;
};

/// Design vector of length p for one record; values[k] is the raw value of
/// characteristic k (spec order).
Eigen::VectorXd expand_design(const ModelSpec& spec, std::span<const double> values);

struct FittedModel {
  ModelSpec spec;
  Eigen::VectorXd beta;
  double dev_divergence = 0.0;
  double val_divergence = std::numeric_limits<double>::quiet_NaN();
  /// Binding pattern rows at the optimum, reusable as a warm start.
  std::vector<int> active_set;
  int iterations = 0;
};

/// CS(x) for the named characteristic.
double characteristic_score(const FittedModel& fitted, const std::string& name, double x);

/// Sum of characteristic scores for one record.
double model_score(const FittedModel& fitted, std::span<const double> values);

/// CS over the liquid range at `n` uniform points from k(1) to k(m).
/// `log1p_xs` is filled only for xscale = log1p.
struct CurveSample {
  std::string name;
  std::vector<double> xs;
  std::vector<double> log1p_xs;
  std::vector<double> cs;
  double lambda2 = 0.0;
  double dev_divergence = 0.0;
  double val_divergence = std::numeric_limits<double>::quiet_NaN();
};

CurveSample sample_curve(const FittedModel& fitted, const std::string& name, std::size_t n = 200);

/// Monotonicity rows G over the full coefficient vector, meaning G beta >= 0:
/// beta_{i+1} - beta_i for ascending, negated for descending, over consecutive
/// liquid coefficients. Empty for Pattern::None.
Eigen::MatrixXd pattern_constraints(const ModelSpec& spec, const std::string& name);

/// All characteristics' pattern rows stacked in spec order.
Eigen::MatrixXd model_pattern_constraints(const ModelSpec& spec);

std::string_view pattern_name(Pattern p);
Pattern parse_pattern(std::string_view s);

}  // namespace liquid
