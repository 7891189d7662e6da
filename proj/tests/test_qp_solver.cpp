#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "liquid/errors.hpp"
#include "liquid/qp_solver.hpp"
#include "oracles.hpp"

using namespace liquid;

namespace {

QuadraticProgram projection_qp() {
  QuadraticProgram qp;
  qp.h = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  qp.a_eq = Eigen::MatrixXd::Ones(1, 2);
  qp.b_eq = Eigen::VectorXd::Constant(1, 2.0);
  qp.a_ineq = Eigen::MatrixXd(0, 2);
  qp.b_ineq = Eigen::VectorXd(0);
  return qp;
}

ErrorCode code_of(const QuadraticProgram& qp, const QpOptions& opt = {}) {
  try {
    solve_qp(qp, opt);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

void check_kkt(const QuadraticProgram& qp, const QpSolution& s) {
  if (qp.a_eq.rows() > 0) CHECK((qp.a_eq * s.x - qp.b_eq).cwiseAbs().maxCoeff() < 1e-8);
  if (qp.a_ineq.rows() > 0) {
    CHECK((qp.a_ineq * s.x - qp.b_ineq).minCoeff() > -1e-8);
    CHECK(s.lambda_ineq.minCoeff() >= -1e-9);
    for (Eigen::Index i = 0; i < qp.a_ineq.rows(); ++i) {
      const double slack = qp.a_ineq.row(i).dot(s.x) - qp.b_ineq(i);
      CHECK(std::abs(slack * s.lambda_ineq(i)) < 1e-6);
    }
  }
  CHECK(kkt_residual(qp, s) < 1e-6 * (1.0 + (qp.h * s.x).cwiseAbs().maxCoeff()));
}

}  // namespace

TEST_CASE("symmetric projection") {
  const QpSolution s = solve_qp(projection_qp());
  CHECK(s.x(0) == doctest::Approx(1.0));
  CHECK(s.x(1) == doctest::Approx(1.0));
  CHECK(s.active_set.empty());
}

TEST_CASE("clamped projection") {
  QuadraticProgram qp = projection_qp();
  qp.a_ineq = Eigen::RowVector2d(1, 0);
  qp.b_ineq = Eigen::VectorXd::Constant(1, 1.5);
  const QpSolution s = solve_qp(qp);
  CHECK(s.x(0) == doctest::Approx(1.5));
  CHECK(s.x(1) == doctest::Approx(0.5));
  CHECK(s.active_set == std::vector<int>{0});
  check_kkt(qp, s);
}

TEST_CASE("random problems against active-set enumeration") {
  std::mt19937_64 rng(777);
  std::uniform_int_distribution<int> pd(2, 8), med(0, 2), mid(0, 6);
  for (int trial = 0; trial < 100; ++trial) {
    const int p = pd(rng);
    const int me = std::min(med(rng), p - 1);
    const int mi = std::min(mid(rng), 6 - me);
    const QuadraticProgram qp = oracle::random_qp(rng, p, me, mi);
    const QpSolution s = solve_qp(qp);
    const double ref = oracle::qp_by_enumeration(qp);
    CHECK(std::abs(s.objective - ref) < 1e-6 * std::max(1.0, std::abs(ref)));
    check_kkt(qp, s);
  }
}

TEST_CASE("objective never increases across iterations") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const QuadraticProgram qp = oracle::random_qp(rng, 6, 1, 6);
    const QpSolution s = solve_qp(qp);
    for (std::size_t i = 1; i < s.objective_trace.size(); ++i) {
      CHECK(s.objective_trace[i] <= s.objective_trace[i - 1] + 1e-12 * (1 + std::abs(s.objective_trace[i - 1])));
    }
  }
}

TEST_CASE("row permutations and duplicated rows leave the solution unchanged") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const QuadraticProgram qp = oracle::random_qp(rng, 7, 2, 6);
    const QpSolution base = solve_qp(qp);

    QuadraticProgram perm = qp;
    std::vector<int> order(6);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < 6; ++i) {
      perm.a_ineq.row(i) = qp.a_ineq.row(order[i]);
      perm.b_ineq(i) = qp.b_ineq(order[i]);
    }
    perm.a_eq.row(0) = qp.a_eq.row(1);
    perm.a_eq.row(1) = qp.a_eq.row(0);
    std::swap(perm.b_eq(0), perm.b_eq(1));
    CHECK((solve_qp(perm).x - base.x).cwiseAbs().maxCoeff() < 1e-8);

    QuadraticProgram dup = qp;
    dup.a_ineq.conservativeResize(8, Eigen::NoChange);
    dup.b_ineq.conservativeResize(8);
    dup.a_ineq.row(6) = qp.a_ineq.row(2);
    dup.b_ineq(6) = qp.b_ineq(2);
    dup.a_ineq.row(7) = qp.a_ineq.row(4);
    dup.b_ineq(7) = qp.b_ineq(4);
    CHECK((solve_qp(dup).x - base.x).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("warm start reaches the same point") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    const QuadraticProgram qp = oracle::random_qp(rng, 6, 1, 5);
    const QpSolution cold = solve_qp(qp);
    QpOptions opt;
    opt.warm_start = cold.active_set;
    const QpSolution warm = solve_qp(qp, opt);
    CHECK((warm.x - cold.x).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(warm.iterations <= cold.iterations);
    opt.warm_start = {0, 1, 2, 3, 4};
    CHECK((solve_qp(qp, opt).x - cold.x).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("phase one repairs an infeasible starting point") {
  QuadraticProgram qp = projection_qp();
  qp.a_ineq = Eigen::MatrixXd(2, 2);
  qp.a_ineq << 1, 0, 0, 1;
  qp.b_ineq = Eigen::Vector2d(1.8, 0.1);
  const QpSolution s = solve_qp(qp);
  CHECK(s.x(0) == doctest::Approx(1.8));
  CHECK(s.x(1) == doctest::Approx(0.2));
  check_kkt(qp, s);
}

TEST_CASE("error cases") {
  QuadraticProgram inconsistent = projection_qp();
  inconsistent.a_eq = Eigen::MatrixXd(2, 2);
  inconsistent.a_eq << 1, 1, 2, 2;
  inconsistent.b_eq = Eigen::Vector2d(1, 3);
  CHECK(code_of(inconsistent) == ErrorCode::Infeasible);

  QuadraticProgram empty_region = projection_qp();
  empty_region.a_ineq = Eigen::MatrixXd(2, 2);
  empty_region.a_ineq << 1, 0, 0, 1;
  empty_region.b_ineq = Eigen::Vector2d(1.5, 1.5);
  CHECK(code_of(empty_region) == ErrorCode::Infeasible);

  QuadraticProgram ray;
  ray.h = Eigen::MatrixXd::Zero(2, 2);
  ray.h(0, 0) = 2.0;
  ray.g = Eigen::Vector2d(0.0, -1.0);
  ray.a_eq = Eigen::MatrixXd(0, 2);
  ray.b_eq = Eigen::VectorXd(0);
  ray.a_ineq = Eigen::MatrixXd(0, 2);
  ray.b_ineq = Eigen::VectorXd(0);
  CHECK(code_of(ray) == ErrorCode::Unbounded);

  std::mt19937_64 rng(5);
  QuadraticProgram busy = oracle::random_qp(rng, 8, 0, 6);
  busy.g *= 100.0;
  QpOptions tight;
  tight.max_iterations = 0;
  const QpSolution free_run = solve_qp(busy);
  if (free_run.iterations > 0) CHECK(code_of(busy, tight) == ErrorCode::IterationLimit);

  QuadraticProgram bad = projection_qp();
  bad.h = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(solve_qp(bad), Error);
}
