#include "liquid/divergence_fit.hpp"

#include <cmath>

#include "liquid/errors.hpp"

namespace liquid {

ClassMoments compute_moments(const ModelSpec& spec, const Dataset& data) {
  return kernels::moments_parallel(spec, data);
}

namespace {

struct WeightedMoments {
  double w = 0.0, mean = 0.0, var = 0.0;
};

WeightedMoments weighted_moments(std::span<const double> s, std::span<const double> w) {
  if (s.size() != w.size()) throw Error(ErrorCode::InvalidArgument, "scores and weights differ in length");
  WeightedMoments m;
  for (std::size_t i = 0; i < s.size(); ++i) {
    m.w += w[i];
    m.mean += w[i] * s[i];
  }
  if (!(m.w > 0.0)) throw Error(ErrorCode::DegenerateClasses, "a class has no positive weight");
  m.mean /= m.w;
  for (std::size_t i = 0; i < s.size(); ++i) m.var += w[i] * (s[i] - m.mean) * (s[i] - m.mean);
  m.var /= m.w;
  return m;
}

}  // namespace

double score_divergence(std::span<const double> scores_g, std::span<const double> weights_g,
                        std::span<const double> scores_b, std::span<const double> weights_b) {
  const WeightedMoments g = weighted_moments(scores_g, weights_g);
  const WeightedMoments b = weighted_moments(scores_b, weights_b);
  const double pooled = 0.5 * (g.var + b.var);
  if (!(pooled > 0.0)) throw Error(ErrorCode::ZeroVariance, "pooled score variance is zero");
  const double diff = g.mean - b.mean;
  return diff * diff / pooled;
}

double dataset_divergence(const ModelSpec& spec, const Eigen::VectorXd& beta, const Dataset& data) {
  const std::vector<double> scores = kernels::scores_parallel(spec, beta, data);
  std::vector<double> sg, wg, sb, wb;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    if (data.outcome[r] == 1) {
      sg.push_back(scores[r]);
      wg.push_back(data.weight[r]);
    } else {
      sb.push_back(scores[r]);
      wb.push_back(data.weight[r]);
    }
  }
  return score_divergence(sg, wg, sb, wb);
}

double moment_divergence(const ClassMoments& m, const Eigen::VectorXd& beta) {
  const double pooled = beta.dot(m.c * beta);
  if (!(pooled > 0.0)) throw Error(ErrorCode::ZeroVariance, "pooled score variance is zero");
  const double diff = m.d.dot(beta);
  return diff * diff / pooled;
}

FitData::FitData(ModelSpec spec, const Dataset& dev, const Dataset* val) : spec_(std::move(spec)) {
  spec_.validate();
  dev_ = compute_moments(spec_, dev);
  if (val != nullptr && val->rows() > 0) val_ = compute_moments(spec_, *val);
  build_structure();
}

FitData::FitData(ModelSpec spec, ClassMoments dev, std::optional<ClassMoments> val)
    : spec_(std::move(spec)), dev_(std::move(dev)), val_(std::move(val)) {
  spec_.validate();
  if (dev_.dim() != static_cast<Eigen::Index>(spec_.coefficient_count())) {
    throw Error(ErrorCode::InvalidArgument, "moment dimension does not match the model");
  }
  build_structure();
}

void FitData::build_structure() {
  blocks_.clear();
  std::size_t offset = 0;
  for (std::size_t k = 0; k < spec_.characteristics.size(); ++k) {
    const auto& c = spec_.characteristics[k];
    if (c.knots) {
      RoughnessBlock b;
      b.char_index = k;
      b.offset = static_cast<Eigen::Index>(offset + c.leading.size());
      b.r = char_roughness_matrix(*c.knots).r;
      blocks_.push_back(std::move(b));
    }
    offset += c.coefficient_count();
  }
  patterns_ = model_pattern_constraints(spec_);
}

FitData FitData::without(const std::string& name) const {
  const std::size_t k = spec_.index_of(name);
  std::vector<Eigen::Index> keep;
  const std::size_t first = spec_.offset_of(k);
  const std::size_t last = first + spec_.characteristics[k].coefficient_count();
  for (std::size_t i = 0; i < spec_.coefficient_count(); ++i) {
    if (i < first || i >= last) keep.push_back(static_cast<Eigen::Index>(i));
  }
  ModelSpec reduced = spec_;
  reduced.characteristics.erase(reduced.characteristics.begin() + static_cast<std::ptrdiff_t>(k));
  std::optional<ClassMoments> val;
  if (val_) val = val_->select(keep);
  return FitData(std::move(reduced), dev_.select(keep), std::move(val));
}

FitData FitData::with_patterns(const std::map<std::string, Pattern>& patterns) const {
  ModelSpec changed = spec_;
  for (const auto& [name, pattern] : patterns) {
    changed.characteristics[changed.index_of(name)].pattern = pattern;
  }
  return FitData(std::move(changed), dev_, val_);
}

Lambda2Map FitData::resolve_lambda2(const Lambda2Map& overrides) const {
  Lambda2Map out;
  for (const auto& c : spec_.characteristics) out[c.name] = c.lambda2;
  for (const auto& [name, value] : overrides) {
    spec_.index_of(name);
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw Error(ErrorCode::ConfigError, "lambda2 for '" + name + "' must be finite and >= 0");
    }
    out[name] = value;
  }
  return out;
}

QuadraticProgram build_fit_qp(const FitData& data, const Lambda2Map& lambda2,
                              std::optional<double> lambda) {
  const ModelSpec& spec = data.spec();
  const ClassMoments& m = data.dev();
  const double ridge = lambda.value_or(spec.lambda);
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw Error(ErrorCode::ConfigError, "ridge lambda must be finite and >= 0");
  }
  const Lambda2Map l2 = data.resolve_lambda2(lambda2);
  QuadraticProgram qp;
  Eigen::MatrixXd inner = m.c;
  inner.diagonal().array() += 2.0 * ridge / m.n;
  for (const auto& b : data.roughness_blocks()) {
    const double weight = l2.at(spec.characteristics[b.char_index].name);
    if (weight == 0.0) continue;
    inner.block(b.offset, b.offset, b.r.rows(), b.r.cols()) += weight * b.r;
  }
  qp.h = 2.0 * inner;
  const auto p = static_cast<Eigen::Index>(spec.coefficient_count());
  const auto k_count = static_cast<Eigen::Index>(spec.characteristics.size());
  qp.a_eq = Eigen::MatrixXd::Zero(1 + k_count, p);
  qp.b_eq = Eigen::VectorXd::Zero(1 + k_count);
  qp.a_eq.row(0) = m.d.transpose();
  qp.b_eq(0) = spec.delta;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const auto& c = spec.characteristics[static_cast<std::size_t>(k)];
    qp.a_eq.row(1 + k).segment(static_cast<Eigen::Index>(spec.offset_of(static_cast<std::size_t>(k))),
                               static_cast<Eigen::Index>(c.coefficient_count()))
        .setOnes();
  }
  qp.a_ineq = data.pattern_rows();
  qp.b_ineq = Eigen::VectorXd::Zero(qp.a_ineq.rows());
  return qp;
}

QuadraticProgram build_fit_qp(const FitRequest& req) {
  if (req.dev == nullptr) throw Error(ErrorCode::InvalidArgument, "fit request without development data");
  const FitData data(req.spec, *req.dev, req.val);
  return build_fit_qp(data, req.lambda2, req.lambda);
}

FittedModel fit(const FitData& data, const FitOptions& options) {
  const ClassMoments& m = data.dev();
  if (m.d.cwiseAbs().maxCoeff() <= 1e-14) {
    throw Error(ErrorCode::DegenerateClasses,
                "class means coincide in design space; divergence cannot be maximized");
  }
  const QuadraticProgram qp = build_fit_qp(data, options.lambda2, options.lambda);
  QpOptions qopt;
  qopt.warm_start = options.warm_start;
  const QpSolution sol = solve_qp(qp, qopt);

  FittedModel out;
  out.spec = data.spec();
  const Lambda2Map l2 = data.resolve_lambda2(options.lambda2);
  for (auto& c : out.spec.characteristics) c.lambda2 = l2.at(c.name);
  if (options.lambda) out.spec.lambda = *options.lambda;
  out.beta = sol.x;
  out.dev_divergence = moment_divergence(m, out.beta);
  if (data.val()) out.val_divergence = moment_divergence(*data.val(), out.beta);
  out.active_set = sol.active_set;
  out.iterations = sol.iterations;
  return out;
}

FittedModel fit(const FitRequest& req) {
  if (req.dev == nullptr) throw Error(ErrorCode::InvalidArgument, "fit request without development data");
  const FitData data(req.spec, *req.dev, req.val);
  FitOptions opt;
  opt.lambda2 = req.lambda2;
  opt.lambda = req.lambda;
  return fit(data, opt);
}

FittedModel woe_rescale(const FittedModel& fitted) {
  if (!(fitted.dev_divergence > 0.0)) {
    throw Error(ErrorCode::ZeroVariance, "cannot rescale a model with zero divergence");
  }
  FittedModel out = fitted;
  out.beta *= fitted.dev_divergence / fitted.spec.delta;
  return out;
}

double roughness(const FitData& data, const Eigen::VectorXd& beta) {
  double total = 0.0;
  for (const auto& b : data.roughness_blocks()) {
    const Eigen::VectorXd seg = beta.segment(b.offset, b.r.rows());
    total += seg.dot(b.r * seg);
  }
  return total;
}

}  // namespace liquid
