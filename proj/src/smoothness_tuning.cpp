#include "liquid/smoothness_tuning.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "liquid/errors.hpp"

namespace liquid {

namespace {

Lambda2Map restrict_to(const ModelSpec& spec, const Lambda2Map& m) {
  Lambda2Map out;
  for (const auto& c : spec.characteristics) {
    if (auto it = m.find(c.name); it != m.end()) out[c.name] = it->second;
  }
  return out;
}

[[noreturn]] void rethrow_with(const std::string& context) {
  try {
    throw;
  } catch (const Error& e) {
    throw Error(e.code(), context + ": " + e.what(), e.subject());
  }
}

double val_divergence_of(const FitData& data, const FitOptions& opt) {
  if (data.spec().characteristics.empty()) return 0.0;
  return fit(data, opt).val_divergence;
}

}  // namespace

std::vector<Contribution> marginal_contributions(const FitData& data, const Lambda2Map& lambda2) {
  if (!data.val()) throw Error(ErrorCode::InvalidArgument, "marginal contributions need validation data");
  const ModelSpec& spec = data.spec();
  FitOptions full_opt;
  full_opt.lambda2 = restrict_to(spec, lambda2);
  double full = 0.0;
  try {
    full = val_divergence_of(data, full_opt);
  } catch (...) {
    rethrow_with("full model");
  }

  std::vector<Contribution> out(spec.characteristics.size());
  for (std::size_t k = 0; k < spec.characteristics.size(); ++k) {
    const std::string& name = spec.characteristics[k].name;
    try {
      const FitData reduced = data.without(name);
      FitOptions opt;
      opt.lambda2 = restrict_to(reduced.spec(), lambda2);
      out[k] = {name, full - val_divergence_of(reduced, opt)};
    } catch (...) {
      rethrow_with("model without '" + name + "'");
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Contribution& a, const Contribution& b) { return a.contribution > b.contribution; });
  return out;
}

std::vector<Contribution> marginal_contributions(const ModelSpec& spec, const Dataset& dev,
                                                 const Dataset& val) {
  return marginal_contributions(FitData(spec, dev, &val));
}

std::vector<double> default_lambda2_grid() {
  std::vector<double> grid{0.0};
  for (int k = 0; k <= 20; ++k) grid.push_back(std::pow(10.0, k / 2.0));
  return grid;
}

Lambda2Map TuneReport::lambda2_map() const {
  Lambda2Map out;
  for (const auto& [name, value] : chosen_lambda2) {
    if (value) out[name] = *value;
  }
  return out;
}

TuneReport greedy_tune(const FitData& data, const std::vector<double>& grid) {
  if (grid.empty()) throw Error(ErrorCode::ConfigError, "lambda2 grid is empty");
  for (double g : grid) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw Error(ErrorCode::ConfigError, "lambda2 grid values must be finite and >= 0");
  }
  if (std::find(grid.begin(), grid.end(), 0.0) == grid.end()) {
    throw Error(ErrorCode::ConfigError, "lambda2 grid must contain 0");
  }
  if (!data.val()) throw Error(ErrorCode::InvalidArgument, "tuning needs validation data");

  const ModelSpec& spec = data.spec();
  Lambda2Map current = data.resolve_lambda2({});
  TuneReport report;

  FittedModel base;
  try {
    base = fit(data, FitOptions{current, std::nullopt, {}});
  } catch (...) {
    rethrow_with("baseline fit");
  }
  report.baseline_val_divergence = base.val_divergence;
  report.final_val_divergence = base.val_divergence;
  report.ordering = marginal_contributions(data, current);

  for (const auto& entry : report.ordering) {
    const CharacteristicSpec& c = spec.at(entry.name);
    if (!c.has_liquid()) {
      report.chosen_lambda2[c.name] = std::nullopt;
      continue;
    }
    const int count = static_cast<int>(grid.size());
    std::vector<double> vals(grid.size(), 0.0);
    std::vector<std::exception_ptr> errors(grid.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int g = 0; g < count; ++g) {
      try {
        FitOptions opt;
        opt.lambda2 = current;
        opt.lambda2[c.name] = grid[g];
        opt.warm_start = base.active_set;
        vals[g] = fit(data, opt).val_divergence;
      } catch (...) {
        errors[g] = std::current_exception();
      }
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (!errors[g]) continue;
      try {
        std::rethrow_exception(errors[g]);
      } catch (...) {
        rethrow_with("tuning '" + c.name + "' at lambda2=" + format_double(grid[g]));
      }
    }

    TuneStep step;
    step.characteristic = c.name;
    std::size_t best = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      step.rows.push_back({grid[g], vals[g]});
      if (vals[g] > vals[best] || (vals[g] == vals[best] && grid[g] > grid[best])) best = g;
    }
    step.chosen_lambda2 = grid[best];
    step.chosen_val_divergence = vals[best];
    current[c.name] = grid[best];
    report.chosen_lambda2[c.name] = grid[best];
    report.final_val_divergence = vals[best];
    report.trace.push_back(std::move(step));

    base = fit(data, FitOptions{current, std::nullopt, base.active_set});
  }
  return report;
}

TuneReport greedy_tune(const ModelSpec& spec, const Dataset& dev, const Dataset& val,
                       const std::vector<double>& grid) {
  return greedy_tune(FitData(spec, dev, &val), grid);
}

}  // namespace liquid
