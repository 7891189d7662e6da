#include "liquid/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "liquid/errors.hpp"

namespace liquid {

double QuadraticProgram::objective(const Eigen::VectorXd& x) const {
  double f = 0.5 * x.dot(h * x);
  if (g.size() > 0) f += g.dot(x);
  return f;
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double inf_norm(const MatrixXd& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

// Stacked working-set matrix: equality rows first, then working inequalities.
MatrixXd working_matrix(const QuadraticProgram& qp, const std::vector<int>& working) {
  const Index p = qp.dim();
  MatrixXd a(qp.a_eq.rows() + static_cast<Index>(working.size()), p);
  if (qp.a_eq.rows() > 0) a.topRows(qp.a_eq.rows()) = qp.a_eq;
  for (std::size_t w = 0; w < working.size(); ++w) {
    a.row(qp.a_eq.rows() + static_cast<Index>(w)) = qp.a_ineq.row(working[w]);
  }
  return a;
}

Index rank_of(const MatrixXd& a) {
  if (a.rows() == 0) return 0;
  Eigen::FullPivHouseholderQR<MatrixXd> qr(a.transpose());
  qr.setThreshold(1e-10);
  return qr.rank();
}

double row_tol(const QuadraticProgram& qp, Index i, const VectorXd& x, double tol) {
  return tol * (1.0 + std::abs(qp.b_ineq(i)) + qp.a_ineq.row(i).cwiseAbs().maxCoeff() *
                                                    std::max(1.0, x.cwiseAbs().maxCoeff()));
}

// Inequality rows binding at x, added in `preferred` order first then by
// index, skipping any that would make the working matrix rank deficient.
std::vector<int> binding_rows(const QuadraticProgram& qp, const VectorXd& x,
                              const std::vector<int>& preferred, double tol) {
  std::vector<int> order = preferred;
  for (Index i = 0; i < qp.a_ineq.rows(); ++i) {
    if (std::find(order.begin(), order.end(), static_cast<int>(i)) == order.end()) {
      order.push_back(static_cast<int>(i));
    }
  }
  std::vector<int> working;
  Index rank = rank_of(qp.a_eq);
  for (const int i : order) {
    if (i < 0 || i >= qp.a_ineq.rows()) continue;
    const double slack = qp.a_ineq.row(i).dot(x) - qp.b_ineq(i);
    if (std::abs(slack) > row_tol(qp, i, x, tol)) continue;
    working.push_back(i);
    const Index r = rank_of(working_matrix(qp, working));
    if (r == rank) {
      working.pop_back();
    } else {
      rank = r;
    }
  }
  std::sort(working.begin(), working.end());
  return working;
}

VectorXd gradient(const QuadraticProgram& qp, const VectorXd& x) {
  VectorXd grad = qp.h * x;
  if (qp.g.size() > 0) grad += qp.g;
  return grad;
}

struct LoopResult {
  VectorXd x;
  std::vector<int> working;
  VectorXd lambda_eq;
  VectorXd lambda_ineq;
  int iterations = 0;
  std::vector<double> trace;
};

LoopResult active_set_loop(const QuadraticProgram& qp, VectorXd x, std::vector<int> working,
                           const QpOptions& opt, int max_iter) {
  const Index p = qp.dim();
  const double h_norm = std::max(1.0, inf_norm(qp.h));
  LoopResult out;
  out.trace.push_back(qp.objective(x));
  bool at_subspace_min = false;

  for (int iter = 0;; ++iter) {
    if (iter >= max_iter) {
      throw Error(ErrorCode::IterationLimit,
                  "active-set iteration limit " + std::to_string(max_iter) + " exceeded");
    }
    const MatrixXd aw = working_matrix(qp, working);
    const VectorXd grad = gradient(qp, x);

    // Null space of the working constraints.
    MatrixXd z;
    Eigen::FullPivHouseholderQR<MatrixXd> qr;
    if (aw.rows() > 0) {
      qr.compute(aw.transpose());
      qr.setThreshold(1e-10);
      const Index r = qr.rank();
      const MatrixXd q = qr.matrixQ();
      z = q.rightCols(p - r);
    } else {
      z = MatrixXd::Identity(p, p);
    }

    VectorXd step = VectorXd::Zero(p);
    bool zero_curvature_ray = false;
    if (z.cols() > 0) {
      const MatrixXd reduced = z.transpose() * qp.h * z;
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (reduced + reduced.transpose()));
      const VectorXd& ev = eig.eigenvalues();
      const MatrixXd& vecs = eig.eigenvectors();
      const VectorXd gz = z.transpose() * grad;
      const double ev_max = std::max(ev.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
      const double floor = ev_max / opt.max_condition;
      const double gtol = 1e-10 * (1.0 + grad.cwiseAbs().maxCoeff());

      if (ev.minCoeff() < -1e-8 * h_norm) {
        throw Error(ErrorCode::Unbounded, "Hessian is not positive semidefinite on the feasible subspace");
      }
      // Flat directions: either a descent ray (follow it to a blocking
      // constraint) or a non-unique optimum (refused as ill-conditioned).
      for (Index k = 0; k < ev.size(); ++k) {
        if (ev(k) > floor) continue;
        const double slope = vecs.col(k).dot(gz);
        if (std::abs(slope) > gtol) {
          step = -(slope > 0 ? 1.0 : -1.0) * (z * vecs.col(k));
          zero_curvature_ray = true;
          break;
        }
      }
      if (!zero_curvature_ray) {
        if (ev.minCoeff() <= floor) {
          throw Error(ErrorCode::IllConditioned,
                      "reduced Hessian condition estimate exceeds " + std::to_string(opt.max_condition) +
                          "; optimum is not unique");
        }
        const VectorXd coef = vecs.transpose() * gz;
        step = -(z * (vecs * coef.cwiseQuotient(ev)));
      }
    }

    const double xscale = 1.0 + x.cwiseAbs().maxCoeff();
    if (!zero_curvature_ray && (at_subspace_min || step.cwiseAbs().maxCoeff() <= 1e-12 * xscale)) {
      // Stationary on the working set: check inequality multipliers.
      VectorXd lam = VectorXd::Zero(aw.rows());
      if (aw.rows() > 0) lam = qr.solve(grad);
      const Index neq = qp.a_eq.rows();
      const double thr = -opt.multiplier_tol * std::max(1.0, grad.cwiseAbs().maxCoeff());
      int drop = -1;
      double most_negative = thr;
      for (std::size_t w = 0; w < working.size(); ++w) {
        const double l = lam(neq + static_cast<Index>(w));
        if (l < most_negative) {
          most_negative = l;
          drop = static_cast<int>(w);
        }
      }
      if (drop < 0) {
        out.x = std::move(x);
        out.working = working;
        out.lambda_eq = lam.head(neq);
        out.lambda_ineq = VectorXd::Zero(qp.a_ineq.rows());
        for (std::size_t w = 0; w < working.size(); ++w) {
          out.lambda_ineq(working[w]) = lam(neq + static_cast<Index>(w));
        }
        out.iterations = iter;
        return out;
      }
      working.erase(working.begin() + drop);
      at_subspace_min = false;
      continue;
    }

    // Ratio test against inequalities outside the working set.
    double alpha = zero_curvature_ray ? std::numeric_limits<double>::infinity() : 1.0;
    int block = -1;
    const double step_norm = step.cwiseAbs().maxCoeff();
    for (Index i = 0; i < qp.a_ineq.rows(); ++i) {
      if (std::binary_search(working.begin(), working.end(), static_cast<int>(i))) continue;
      const double ap = qp.a_ineq.row(i).dot(step);
      if (ap >= -1e-14 * qp.a_ineq.row(i).cwiseAbs().maxCoeff() * step_norm) continue;
      const double slack = std::max(0.0, qp.a_ineq.row(i).dot(x) - qp.b_ineq(i));
      const double ratio = slack / -ap;
      if (ratio < alpha) {
        alpha = ratio;
        block = static_cast<int>(i);
      }
    }
    if (!std::isfinite(alpha)) {
      throw Error(ErrorCode::Unbounded, "objective decreases without bound along a feasible ray");
    }
    x += alpha * step;
    if (block >= 0) {
      working.insert(std::upper_bound(working.begin(), working.end(), block), block);
    }
    at_subspace_min = !zero_curvature_ray && block < 0;
    out.trace.push_back(qp.objective(x));
  }
}

void check_dimensions(const QuadraticProgram& qp) {
  const Index p = qp.h.rows();
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "QP: " + what); };
  if (qp.h.cols() != p || p == 0) fail("H must be square and nonempty");
  if (qp.g.size() != 0 && qp.g.size() != p) fail("g has wrong length");
  if (qp.a_eq.rows() > 0 && qp.a_eq.cols() != p) fail("Aeq has wrong column count");
  if (qp.a_eq.rows() != qp.b_eq.size()) fail("Aeq / beq row mismatch");
  if (qp.a_ineq.rows() > 0 && qp.a_ineq.cols() != p) fail("Aineq has wrong column count");
  if (qp.a_ineq.rows() != qp.b_ineq.size()) fail("Aineq / bineq row mismatch");
  if (!qp.h.allFinite()) fail("H has non-finite entries");
  const double asym = inf_norm(qp.h - qp.h.transpose());
  if (asym > 1e-12 * std::max(1.0, inf_norm(qp.h))) fail("H is not symmetric");
}

// Least-norm solution of the equalities, or zero when there are none.
VectorXd equality_start(const QuadraticProgram& qp, const MatrixXd& a, const VectorXd& b) {
  if (a.rows() == 0) return VectorXd::Zero(qp.dim());
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(a);
  cod.setThreshold(1e-12);
  VectorXd x = cod.solve(b);
  const double resid = (a * x - b).cwiseAbs().maxCoeff();
  if (resid > 1e-9 * (1.0 + b.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::Infeasible, "equality constraints are inconsistent");
  }
  return x;
}

double max_violation(const QuadraticProgram& qp, const VectorXd& x) {
  if (qp.a_ineq.rows() == 0) return 0.0;
  return (qp.b_ineq - qp.a_ineq * x).maxCoeff();
}

bool all_satisfied(const QuadraticProgram& qp, const VectorXd& x, double tol) {
  for (Index i = 0; i < qp.a_ineq.rows(); ++i) {
    if (qp.a_ineq.row(i).dot(x) - qp.b_ineq(i) < -row_tol(qp, i, x, tol)) return false;
  }
  return true;
}

// Elastic relaxation: minimize 1/2|x - x0|^2 + 1/2 s^2 + rho s subject to
// the equalities, Aineq x + s >= bineq and s >= 0. (x0, max violation) is
// feasible, and s = 0 at the optimum once rho exceeds the multipliers of the
// projection of x0 onto the feasible set.
VectorXd phase_one(const QuadraticProgram& qp, const VectorXd& x0, const QpOptions& opt) {
  const Index p = qp.dim();
  const Index mi = qp.a_ineq.rows();
  QuadraticProgram relax;
  relax.h = MatrixXd::Identity(p + 1, p + 1);
  relax.g = VectorXd::Zero(p + 1);
  relax.g.head(p) = -x0;
  relax.a_eq = MatrixXd::Zero(qp.a_eq.rows(), p + 1);
  if (qp.a_eq.rows() > 0) relax.a_eq.leftCols(p) = qp.a_eq;
  relax.b_eq = qp.b_eq;
  relax.a_ineq = MatrixXd::Zero(mi + 1, p + 1);
  relax.a_ineq.topLeftCorner(mi, p) = qp.a_ineq;
  relax.a_ineq.col(p).setOnes();
  relax.b_ineq = VectorXd::Zero(mi + 1);
  relax.b_ineq.head(mi) = qp.b_ineq;

  const double viol = max_violation(qp, x0);
  VectorXd z(p + 1);
  z.head(p) = x0;
  z(p) = viol;
  std::vector<int> warm;
  double rho = 1e3 * (1.0 + x0.cwiseAbs().maxCoeff() + viol);
  for (int attempt = 0; attempt < 4; ++attempt, rho *= 1e3) {
    relax.g(p) = rho;
    const std::vector<int> working = binding_rows(relax, z, warm, opt.feasibility_tol);
    const LoopResult res = active_set_loop(relax, z, working, opt, 50 * static_cast<int>(p + 1) + 50);
    z = res.x;
    warm = res.working;
    if (z(p) <= opt.feasibility_tol * (1.0 + viol)) return z.head(p);
  }
  throw Error(ErrorCode::Infeasible, "inequality constraints cannot be satisfied together with the equalities");
}

}  // namespace

QpSolution solve_qp(const QuadraticProgram& qp_in, const QpOptions& options) {
  check_dimensions(qp_in);
  const Index p = qp_in.dim();

  // Symmetric diagonal scaling x = S y giving the Hessian a unit diagonal, so
  // the condition test sees the problem independent of each variable's units.
  VectorXd scale = VectorXd::Ones(p);
  for (Index i = 0; i < p; ++i) {
    const double hii = qp_in.h(i, i);
    if (hii > 0.0 && std::isfinite(hii)) scale(i) = 1.0 / std::sqrt(hii);
  }
  QuadraticProgram qp;
  qp.h = scale.asDiagonal() * (0.5 * (qp_in.h + qp_in.h.transpose())) * scale.asDiagonal();
  if (qp_in.g.size() > 0) qp.g = scale.cwiseProduct(qp_in.g);
  qp.a_eq = qp_in.a_eq * scale.asDiagonal();
  qp.b_eq = qp_in.b_eq;
  qp.a_ineq = qp_in.a_ineq * scale.asDiagonal();
  qp.b_ineq = qp_in.b_ineq;
  const int max_iter = options.max_iterations.value_or(50 * static_cast<int>(p));

  VectorXd x;
  std::vector<int> preferred;
  bool started = false;

  if (!options.warm_start.empty()) {
    std::vector<int> ws;
    for (const int i : options.warm_start) {
      if (i >= 0 && i < qp.a_ineq.rows()) ws.push_back(i);
    }
    const MatrixXd a = working_matrix(qp, ws);
    VectorXd b(a.rows());
    b.head(qp.b_eq.size()) = qp.b_eq;
    for (std::size_t w = 0; w < ws.size(); ++w) b(qp.b_eq.size() + static_cast<Index>(w)) = qp.b_ineq(ws[w]);
    try {
      x = equality_start(qp, a, b);
      if (all_satisfied(qp, x, options.feasibility_tol)) {
        started = true;
        preferred = ws;
      }
    } catch (const Error&) {
      started = false;
    }
  }
  if (!started) {
    x = equality_start(qp, qp.a_eq, qp.b_eq);
    if (!all_satisfied(qp, x, options.feasibility_tol)) x = phase_one(qp, x, options);
  }

  const std::vector<int> working = binding_rows(qp, x, preferred, options.feasibility_tol);
  LoopResult res = active_set_loop(qp, x, working, options, max_iter);

  QpSolution sol;
  sol.x = scale.cwiseProduct(res.x);
  sol.active_set = std::move(res.working);
  sol.lambda_eq = std::move(res.lambda_eq);
  sol.lambda_ineq = std::move(res.lambda_ineq);
  sol.objective = qp_in.objective(sol.x);
  sol.iterations = res.iterations;
  sol.objective_trace = std::move(res.trace);
  return sol;
}

double kkt_residual(const QuadraticProgram& qp, const QpSolution& sol) {
  VectorXd r = gradient(qp, sol.x);
  if (qp.a_eq.rows() > 0) r -= qp.a_eq.transpose() * sol.lambda_eq;
  if (qp.a_ineq.rows() > 0) r -= qp.a_ineq.transpose() * sol.lambda_ineq;
  return r.cwiseAbs().maxCoeff();
}

}  // namespace liquid
