#include "liquid/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <omp.h>

#include "liquid/errors.hpp"

namespace liquid {

ClassMoments ClassMoments::select(const std::vector<Eigen::Index>& keep) const {
  ClassMoments out;
  out.mean_g = mean_g(keep);
  out.mean_b = mean_b(keep);
  out.cov_g = cov_g(keep, keep);
  out.cov_b = cov_b(keep, keep);
  out.weight_g = weight_g;
  out.weight_b = weight_b;
  out.n = n;
  out.c = c(keep, keep);
  out.d = d(keep);
  return out;
}

namespace kernels {

namespace {

struct ClassSums {
  double w = 0.0;
  Eigen::VectorXd s;
  Eigen::MatrixXd ss;  // upper triangle in the sparse kernel, full in the dense one

  explicit ClassSums(Eigen::Index p) : s(Eigen::VectorXd::Zero(p)), ss(Eigen::MatrixXd::Zero(p, p)) {}
  void reset() {
    w = 0.0;
    s.setZero();
    ss.setZero();
  }
};

ClassMoments finalize(const ClassSums& good, const ClassSums& bad) {
  if (good.w + bad.w <= 0.0) {
    throw Error(ErrorCode::DegenerateClasses, "total sample weight is zero");
  }
  if (good.w <= 0.0 || bad.w <= 0.0) {
    throw Error(ErrorCode::DegenerateClasses,
                std::string("data has no ") + (good.w <= 0.0 ? "good" : "bad") +
                    " records with positive weight");
  }
  ClassMoments m;
  m.weight_g = good.w;
  m.weight_b = bad.w;
  m.n = good.w + bad.w;
  m.mean_g = good.s / good.w;
  m.mean_b = bad.s / bad.w;
  m.cov_g = good.ss / good.w - m.mean_g * m.mean_g.transpose();
  m.cov_b = bad.ss / bad.w - m.mean_b * m.mean_b.transpose();
  m.cov_g = 0.5 * (m.cov_g + m.cov_g.transpose()).eval();
  m.cov_b = 0.5 * (m.cov_b + m.cov_b.transpose()).eval();
  m.c = 0.5 * (m.cov_g + m.cov_b);
  m.d = m.mean_g - m.mean_b;
  return m;
}

void mirror_upper(Eigen::MatrixXd& a) {
  a.triangularView<Eigen::StrictlyLower>() = a.transpose().triangularView<Eigen::StrictlyLower>();
}

// Neumaier-compensated running sum over raw arrays.
struct CompensatedArray {
  std::vector<double> total, comp;
  explicit CompensatedArray(std::size_t n) : total(n, 0.0), comp(n, 0.0) {}

  void add(const double* v) {
    for (std::size_t i = 0; i < total.size(); ++i) {
      const double t = total[i] + v[i];
      if (std::abs(total[i]) >= std::abs(v[i])) {
        comp[i] += (total[i] - t) + v[i];
      } else {
        comp[i] += (v[i] - t) + total[i];
      }
      total[i] = t;
    }
  }
  double value(std::size_t i) const { return total[i] + comp[i]; }
};

struct ChunkResult {
  ClassSums good, bad;
  std::optional<Error> error;
  ChunkResult(Eigen::Index p) : good(p), bad(p) {}
};

void accumulate_chunk(const DesignLayout& layout, const std::vector<std::size_t>& cols,
                      const Dataset& data, std::size_t begin, std::size_t end, ChunkResult& out) {
  out.good.reset();
  out.bad.reset();
  out.error.reset();
  SparseRow row;
  try {
    for (std::size_t r = begin; r < end; ++r) {
      const double w = data.weight[r];
      row.clear();
      for (std::size_t k = 0; k < layout.size(); ++k) layout.append(k, data.values[cols[k]][r], row);
      ClassSums& acc = data.outcome[r] == 1 ? out.good : out.bad;
      acc.w += w;
      const std::size_t nnz = row.index.size();
      for (std::size_t a = 0; a < nnz; ++a) {
        const double wa = w * row.value[a];
        const int ia = row.index[a];
        acc.s(ia) += wa;
        for (std::size_t b = a; b < nnz; ++b) {
          const int ib = row.index[b];
          // indices ascend within a row, so (ia, ib) is upper-triangular
          acc.ss(ia, ib) += wa * row.value[b];
        }
      }
    }
  } catch (const Error& e) {
    out.error = e;
  }
}

}  // namespace

ClassMoments moments_serial(const ModelSpec& spec, const Dataset& data) {
  const DesignLayout layout(spec);
  const auto cols = bind_columns(spec, data);
  const auto p = static_cast<Eigen::Index>(layout.coefficient_count());
  ClassSums good(p), bad(p);
  Eigen::VectorXd x(p);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t k = 0; k < layout.size(); ++k) {
      layout.expand(k, data.values[cols[k]][r],
                    std::span<double>(x.data() + layout.offset(k), layout.count(k)));
    }
    const double w = data.weight[r];
    ClassSums& acc = data.outcome[r] == 1 ? good : bad;
    acc.w += w;
    acc.s += w * x;
    acc.ss.noalias() += w * x * x.transpose();
  }
  return finalize(good, bad);
}

ClassMoments moments_parallel(const ModelSpec& spec, const Dataset& data) {
  const DesignLayout layout(spec);
  const auto cols = bind_columns(spec, data);
  const auto p = static_cast<Eigen::Index>(layout.coefficient_count());
  const std::size_t n = data.rows();
  const std::size_t chunks = (n + kChunkRows - 1) / kChunkRows;
  const std::size_t batch = std::max<std::size_t>(1, static_cast<std::size_t>(omp_get_max_threads()));

  std::vector<ChunkResult> buffers;
  buffers.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) buffers.emplace_back(p);

  const auto pp = static_cast<std::size_t>(p);
  CompensatedArray s_g(pp), s_b(pp), ss_g(pp * pp), ss_b(pp * pp);
  CompensatedArray w_g(1), w_b(1);

  for (std::size_t first = 0; first < chunks; first += batch) {
    const std::size_t count = std::min(batch, chunks - first);
#pragma omp parallel for schedule(static, 1)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(count); ++b) {
      const std::size_t chunk = first + static_cast<std::size_t>(b);
      const std::size_t begin = chunk * kChunkRows;
      const std::size_t end = std::min(n, begin + kChunkRows);
      accumulate_chunk(layout, cols, data, begin, end, buffers[static_cast<std::size_t>(b)]);
    }
    // Merge strictly in chunk order.
    for (std::size_t b = 0; b < count; ++b) {
      const ChunkResult& res = buffers[b];
      if (res.error) throw *res.error;
      w_g.add(&res.good.w);
      w_b.add(&res.bad.w);
      s_g.add(res.good.s.data());
      s_b.add(res.bad.s.data());
      ss_g.add(res.good.ss.data());
      ss_b.add(res.bad.ss.data());
    }
  }

  ClassSums good(p), bad(p);
  good.w = w_g.value(0);
  bad.w = w_b.value(0);
  for (std::size_t i = 0; i < pp; ++i) {
    good.s(static_cast<Eigen::Index>(i)) = s_g.value(i);
    bad.s(static_cast<Eigen::Index>(i)) = s_b.value(i);
  }
  for (std::size_t i = 0; i < pp * pp; ++i) {
    good.ss.data()[i] = ss_g.value(i);
    bad.ss.data()[i] = ss_b.value(i);
  }
  mirror_upper(good.ss);
  mirror_upper(bad.ss);
  return finalize(good, bad);
}

std::vector<double> scores_serial(const ModelSpec& spec, const Eigen::VectorXd& beta,
                                  const Dataset& data) {
  const DesignLayout layout(spec);
  const auto cols = bind_columns(spec, data);
  std::vector<double> out(data.rows());
  Eigen::VectorXd x(beta.size());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t k = 0; k < layout.size(); ++k) {
      layout.expand(k, data.values[cols[k]][r],
                    std::span<double>(x.data() + layout.offset(k), layout.count(k)));
    }
    out[r] = beta.dot(x);
  }
  return out;
}

std::vector<double> scores_parallel(const ModelSpec& spec, const Eigen::VectorXd& beta,
                                    const Dataset& data) {
  const DesignLayout layout(spec);
  const auto cols = bind_columns(spec, data);
  const std::size_t n = data.rows();
  std::vector<double> out(n);
  std::optional<Error> first_error;
  std::size_t first_error_row = n;

#pragma omp parallel
  {
    SparseRow row;
#pragma omp for schedule(static)
    for (std::ptrdiff_t ri = 0; ri < static_cast<std::ptrdiff_t>(n); ++ri) {
      const auto r = static_cast<std::size_t>(ri);
      try {
        row.clear();
        for (std::size_t k = 0; k < layout.size(); ++k) layout.append(k, data.values[cols[k]][r], row);
        double s = 0.0;
        for (std::size_t j = 0; j < row.index.size(); ++j) s += beta(row.index[j]) * row.value[j];
        out[r] = s;
      } catch (const Error& e) {
#pragma omp critical(liquid_scores_error)
        if (r < first_error_row) {
          first_error_row = r;
          first_error = e;
        }
      }
    }
  }
  if (first_error) throw *first_error;
  return out;
}

Eigen::MatrixXd design_matrix(const ModelSpec& spec, const Dataset& data) {
  const DesignLayout layout(spec);
  const auto cols = bind_columns(spec, data);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(data.rows()),
                                            static_cast<Eigen::Index>(layout.coefficient_count()));
  std::vector<double> seg;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t k = 0; k < layout.size(); ++k) {
      seg.assign(layout.count(k), 0.0);
      layout.expand(k, data.values[cols[k]][r], seg);
      for (std::size_t j = 0; j < seg.size(); ++j) {
        x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(layout.offset(k) + j)) = seg[j];
      }
    }
  }
  return x;
}

}  // namespace kernels
}  // namespace liquid
