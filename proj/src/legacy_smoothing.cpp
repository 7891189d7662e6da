#include "liquid/legacy_smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "liquid/errors.hpp"

namespace liquid {

namespace {

std::vector<const StepBin*> interval_bins(const StepCharacteristic& c) {
  std::vector<const StepBin*> out;
  for (const auto& b : c.bins) {
    if (b.predicate.has_interval) out.push_back(&b);
  }
  std::sort(out.begin(), out.end(),
            [](const StepBin* a, const StepBin* b) { return a->predicate.lo < b->predicate.lo; });
  return out;
}

/// `p` with the given codes cut out, as open pieces carrying p's label.
std::vector<AttributePredicate> without_codes(const AttributePredicate& p, std::vector<double> codes) {
  std::erase_if(codes, [&](double v) { return !p.matches(v); });
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  std::vector<AttributePredicate> out;
  double lo = p.lo;
  bool lo_closed = p.lo_closed;
  for (const double v : codes) {
    if (lo < v) out.push_back(AttributePredicate::interval(p.label, lo, v, lo_closed, false));
    lo = v;
    lo_closed = false;
  }
  if (lo < p.hi) out.push_back(AttributePredicate::interval(p.label, lo, p.hi, lo_closed, p.hi_closed));
  return out;
}

}  // namespace

void validate_step_scorecard(const StepScorecard& card) {
  std::set<std::string> names;
  for (const auto& c : card.characteristics) {
    if (c.name.empty()) throw Error(ErrorCode::ConfigError, "step characteristic with empty name");
    if (!names.insert(c.name).second) {
      throw Error(ErrorCode::ConfigError, "duplicate characteristic name '" + c.name + "'", c.name);
    }
    for (const auto& b : c.bins) {
      const auto& p = b.predicate;
      if (!p.has_interval && p.codes.empty()) {
        throw Error(ErrorCode::ConfigError, "bin '" + p.label + "' of '" + c.name + "' is not numeric", c.name);
      }
      if (!std::isfinite(b.weight)) {
        throw Error(ErrorCode::ConfigError, "bin '" + p.label + "' of '" + c.name + "' has a non-finite weight", c.name);
      }
      if (p.has_interval && !(p.lo < p.hi)) {
        throw Error(ErrorCode::ConfigError, "bin '" + p.label + "' of '" + c.name + "' is empty", c.name);
      }
    }
    const auto sorted = interval_bins(c);
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      const auto& a = sorted[i - 1]->predicate;
      const auto& b = sorted[i]->predicate;
      if (a.hi != b.lo || a.hi_closed == b.lo_closed) {
        throw Error(ErrorCode::ConfigError,
                    "bins '" + a.label + "' and '" + b.label + "' of '" + c.name + "' are not contiguous", c.name);
      }
    }
    for (const auto& b : c.bins) {
      if (b.predicate.has_interval) continue;
      for (const double code : b.predicate.codes) {
        for (const auto* other : sorted) {
          const bool finite = std::isfinite(other->predicate.lo) && std::isfinite(other->predicate.hi);
          if (finite && other->predicate.matches(code)) {
            throw Error(ErrorCode::ConfigError,
                        "sentinel bin '" + b.predicate.label + "' of '" + c.name + "' overlaps bin '" +
                            other->predicate.label + "'",
                        c.name);
          }
        }
      }
    }
  }
}

ModelSpec step_card_model(const StepScorecard& card, bool use_patterns) {
  validate_step_scorecard(card);
  ModelSpec spec;
  for (const auto& c : card.characteristics) {
    CharacteristicSpec out;
    out.name = c.name;
    out.column = c.column;
    std::vector<double> codes;
    for (const auto& b : c.bins) {
      if (!b.is_sentinel()) continue;
      out.leading.push_back(b.predicate);
      codes.insert(codes.end(), b.predicate.codes.begin(), b.predicate.codes.end());
    }
    std::vector<double> knots;
    const StepBin* low_tail = nullptr;
    const StepBin* high_tail = nullptr;
    for (const auto* b : interval_bins(c)) {
      const auto& p = b->predicate;
      if (std::isfinite(p.lo)) knots.push_back(p.lo);
      if (std::isfinite(p.hi)) knots.push_back(p.hi);
      if (!std::isfinite(p.lo)) low_tail = b;
      if (!std::isfinite(p.hi)) high_tail = b;
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    if (knots.size() < 2) {
      throw Error(ErrorCode::ConfigError, "characteristic '" + c.name + "' needs at least two finite bin boundaries",
                  c.name);
    }
    if (low_tail != nullptr) {
      for (auto& piece : without_codes(AttributePredicate::interval(low_tail->predicate.label, low_tail->predicate.lo,
                                                                    knots.front(), false, false),
                                       codes)) {
        out.leading.push_back(std::move(piece));
      }
    }
    if (high_tail != nullptr) {
      for (auto& piece : without_codes(AttributePredicate::interval(high_tail->predicate.label, knots.back(),
                                                                    high_tail->predicate.hi, false, false),
                                       codes)) {
        out.trailing.push_back(std::move(piece));
      }
    }
    out.knots = KnotConfig(std::move(knots));
    if (use_patterns) out.pattern = c.pattern;
    spec.characteristics.push_back(std::move(out));
  }
  spec.validate();
  return spec;
}

StepScorecard rediscretize(const StepScorecard& card, const ScoreFunction& cs, const Dataset& data) {
  StepScorecard out = card;
  for (std::size_t k = 0; k < out.characteristics.size(); ++k) {
    auto& c = out.characteristics[k];
    const auto& column = data.values[data.column_index(c.column)];
    std::vector<double> num(c.bins.size(), 0.0);
    std::vector<double> den(c.bins.size(), 0.0);
    // Sentinel bins first: their codes win over an open tail bin.
    std::vector<std::size_t> order;
    for (std::size_t b = 0; b < c.bins.size(); ++b) {
      if (c.bins[b].is_sentinel()) order.push_back(b);
    }
    for (std::size_t b = 0; b < c.bins.size(); ++b) {
      if (!c.bins[b].is_sentinel()) order.push_back(b);
    }
    for (std::size_t r = 0; r < data.rows(); ++r) {
      const double x = column[r];
      for (const std::size_t b : order) {
        if (!c.bins[b].predicate.matches(x)) continue;
        if (data.weight[r] > 0.0) {
          num[b] += data.weight[r] * cs(k, x);
          den[b] += data.weight[r];
        }
        break;
      }
    }
    for (std::size_t b = 0; b < c.bins.size(); ++b) {
      auto& bin = c.bins[b];
      std::erase(bin.flags, std::string("zero_weight"));
      if (den[b] > 0.0) {
        bin.weight = num[b] / den[b];
      } else {
        bin.flags.push_back("zero_weight");
      }
    }
  }
  return out;
}

SmoothingResult smooth_step_scorecard(const StepScorecard& card, const Dataset& data,
                                      const SmoothingOptions& options) {
  if (data.rows() == 0) throw Error(ErrorCode::InvalidArgument, "smoothing needs development data");
  const ModelSpec spec = step_card_model(card, options.use_patterns);
  const FitData fd(spec, data);
  FitOptions fopt;
  fopt.lambda2 = options.lambda2;
  fopt.lambda = options.lambda;
  SmoothingResult result;
  result.model = woe_rescale(fit(fd, fopt));

  const DesignLayout layout(result.model.spec);
  const Eigen::VectorXd& beta = result.model.beta;
  const ScoreFunction cs = [&](std::size_t k, double x) {
    SparseRow row;
    layout.append(k, x, row);
    double s = 0.0;
    for (std::size_t j = 0; j < row.index.size(); ++j) s += beta(row.index[j]) * row.value[j];
    return s;
  };
  result.card = rediscretize(card, cs, data);
  return result;
}

}  // namespace liquid
