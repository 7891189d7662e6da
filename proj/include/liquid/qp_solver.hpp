#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace liquid {

/// minimize 1/2 x'Hx + g'x  subject to  Aeq x = beq,  Aineq x >= bineq.
/// The linear term is optional (empty g means zero).
struct QuadraticProgram {
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd a_ineq;
  Eigen::VectorXd b_ineq;

  Eigen::Index dim() const noexcept { return h.rows(); }
  double objective(const Eigen::VectorXd& x) const;
};

struct QpSolution {
  Eigen::VectorXd x;
  /// Indices of inequality rows in the final working set, ascending.
  std::vector<int> active_set;
  Eigen::VectorXd lambda_eq;
  /// One multiplier per inequality row; zero for rows outside the working set.
  Eigen::VectorXd lambda_ineq;
  double objective = 0.0;
  int iterations = 0;
  /// Objective after every phase-2 iteration (non-increasing).
  std::vector<double> objective_trace;
};

struct QpOptions {
  /// Default 50 * p when unset.
  std::optional<int> max_iterations;
  /// Inequality rows to try as the initial working set.
  std::vector<int> warm_start;
  double feasibility_tol = 1e-10;
  double multiplier_tol = 1e-9;
  /// Reduced-Hessian condition estimate above which the solve is refused.
  double max_condition = 1e12;
};

/// Primal active-set method. Phase 1 takes the least-norm solution of the
/// equalities and, if inequalities are violated, repairs it by solving an
/// elastic relaxation with the same machinery. Each phase-2 iteration adds
/// one blocking inequality or drops the one with the most negative multiplier
/// (lowest index on ties).
///
/// Throws Error with code Infeasible, Unbounded, IllConditioned or IterationLimit.
QpSolution solve_qp(const QuadraticProgram& qp, const QpOptions& options = {});

/// max(|stationarity residual|) for a candidate solution and multipliers.
double kkt_residual(const QuadraticProgram& qp, const QpSolution& sol);

}  // namespace liquid
