#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfng/solver.hpp"
#include "test_helpers.hpp"

using namespace mfng;
using mfng::testing::random_vector;

namespace {

LinearOperator dense_op(const Eigen::MatrixXd& a) {
  return LinearOperator{static_cast<int>(a.rows()),
                        [a](const Eigen::VectorXd& y) -> Eigen::VectorXd {
                          return a * y;
                        }};
}

Eigen::MatrixXd random_spd(PhiloxRng& rng, int n, double shift = 0.5) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.next_normal();
  return m * m.transpose() / n + shift * Eigen::MatrixXd::Identity(n, n);
}

Eigen::MatrixXd random_symmetric(PhiloxRng& rng, int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.next_normal();
  return 0.5 * (m + m.transpose());
}

}  // namespace

TEST_CASE("identity operator solves in one iteration") {
  const int n = 6;
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  PhiloxRng rng(41, 0);
  const Eigen::VectorXd b = random_vector(rng, n);
  SolverConfig config;
  const SolveResult r = minres(dense_op(a), b, Eigen::VectorXd::Zero(n), config);
  CHECK(r.termination == Termination::kConverged);
  CHECK(r.iterations <= 1);
  CHECK((r.x - b).norm() < 1e-12 * b.norm());
}

TEST_CASE("zero right-hand side returns the zero vector immediately") {
  const int n = 5;
  PhiloxRng rng(42, 0);
  const Eigen::MatrixXd a = random_spd(rng, n);
  SolverConfig config;
  const SolveResult r =
      minres(dense_op(a), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n),
             config);
  CHECK(r.termination == Termination::kConverged);
  CHECK(r.iterations == 0);
  CHECK(r.x.norm() == 0.0);
}

TEST_CASE("diagonal system solves componentwise") {
  Eigen::VectorXd d(4);
  d << 1.0, 2.0, 4.0, 8.0;
  const Eigen::MatrixXd a = d.asDiagonal();
  Eigen::VectorXd b(4);
  b << 1.0, 1.0, 1.0, 1.0;
  SolverConfig config;
  config.tolerance = 1e-12;
  const SolveResult r = minres(dense_op(a), b, Eigen::VectorXd::Zero(4), config);
  CHECK(r.termination == Termination::kConverged);
  for (int i = 0; i < 4; ++i)
    CHECK(r.x[i] == doctest::Approx(1.0 / d[i]).epsilon(1e-10));
}

TEST_CASE("minres matches a dense LDLT solve on random SPD systems") {
  PhiloxRng rng(43, 0);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 3 + static_cast<int>(rng.next_below(20));
    const Eigen::MatrixXd a = random_spd(rng, n);
    const Eigen::VectorXd b = random_vector(rng, n);
    SolverConfig config;
    config.tolerance = 1e-12;
    config.max_iterations = 10 * n;
    const SolveResult r = minres(dense_op(a), b, Eigen::VectorXd::Zero(n), config);
    const Eigen::VectorXd exact = a.ldlt().solve(b);
    CHECK(r.termination == Termination::kConverged);
    CHECK((r.x - exact).norm() <= 1e-8 * exact.norm());
    CHECK(r.final_relative_residual <= 1e-10);
  }
}

TEST_CASE("minres handles symmetric indefinite systems") {
  PhiloxRng rng(44, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 4 + static_cast<int>(rng.next_below(12));
    Eigen::MatrixXd a = random_symmetric(rng, n);
    // push well away from singular
    a += 1e-3 * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd b = random_vector(rng, n);
    SolverConfig config;
    config.tolerance = 1e-12;
    config.max_iterations = 50 * n;
    const SolveResult r = minres(dense_op(a), b, Eigen::VectorXd::Zero(n), config);
    const Eigen::VectorXd exact = a.fullPivLu().solve(b);
    CHECK((a * r.x - b).norm() <= 1e-6 * b.norm());
    CHECK((r.x - exact).norm() <= 1e-4 * exact.norm());
  }
}

TEST_CASE("singular consistent system yields the minimum-norm solution") {
  PhiloxRng rng(45, 0);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 8;
    // rank-3 PSD matrix
    Eigen::MatrixXd u(n, 3);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 3; ++j) u(i, j) = rng.next_normal();
    const Eigen::MatrixXd a = u * u.transpose();
    // consistent rhs inside the range
    const Eigen::VectorXd b = a * random_vector(rng, n);
    SolverConfig config;
    config.tolerance = 1e-13;
    config.max_iterations = 200;
    const SolveResult r = minres(dense_op(a), b, Eigen::VectorXd::Zero(n), config);
    const Eigen::VectorXd pinv =
        a.completeOrthogonalDecomposition().pseudoInverse() * b;
    CHECK((a * r.x - b).norm() <= 1e-8 * b.norm());
    CHECK((r.x - pinv).norm() <= 1e-6 * (1.0 + pinv.norm()));
  }
}

TEST_CASE("residual history decreases monotonically for minres") {
  PhiloxRng rng(46, 0);
  const int n = 30;
  const Eigen::MatrixXd a = random_spd(rng, n, 0.05);
  const Eigen::VectorXd b = random_vector(rng, n);
  SolverConfig config;
  config.tolerance = 1e-12;
  config.max_iterations = 400;
  const SolveResult r = minres(dense_op(a), b, Eigen::VectorXd::Zero(n), config);
  REQUIRE(!r.residual_history.empty());
  for (std::size_t i = 1; i < r.residual_history.size(); ++i)
    CHECK(r.residual_history[i] <= r.residual_history[i - 1] * (1 + 1e-12));
}

TEST_CASE("iteration cap reports max_iterations") {
  PhiloxRng rng(47, 0);
  const int n = 40;
  const Eigen::MatrixXd a = random_spd(rng, n, 1e-4);
  const Eigen::VectorXd b = random_vector(rng, n);
  SolverConfig config;
  config.tolerance = 1e-15;
  config.max_iterations = 3;
  const SolveResult r = minres(dense_op(a), b, Eigen::VectorXd::Zero(n), config);
  CHECK(r.termination == Termination::kMaxIterations);
  CHECK(r.iterations == 3);
}

TEST_CASE("non-finite operator output reports breakdown, never throws") {
  const int n = 4;
  LinearOperator op{n, [](const Eigen::VectorXd& y) -> Eigen::VectorXd {
                      return std::numeric_limits<double>::quiet_NaN() * y;
                    }};
  PhiloxRng rng(48, 0);
  const Eigen::VectorXd b = random_vector(rng, n);
  SolverConfig config;
  const SolveResult r = minres(op, b, Eigen::VectorXd::Zero(n), config);
  CHECK(r.termination == Termination::kBreakdown);
}

TEST_CASE("warm start from the exact solution converges immediately") {
  PhiloxRng rng(49, 0);
  const int n = 10;
  const Eigen::MatrixXd a = random_spd(rng, n);
  const Eigen::VectorXd b = random_vector(rng, n);
  const Eigen::VectorXd exact = a.ldlt().solve(b);
  SolverConfig config;
  config.tolerance = 1e-8;
  const SolveResult r = minres(dense_op(a), b, exact, config);
  CHECK(r.termination == Termination::kConverged);
  CHECK(r.iterations <= 1);
  CHECK((r.x - exact).norm() <= 1e-8 * exact.norm());
}

TEST_CASE("jacobi preconditioning solves an ill-scaled diagonal system fast") {
  const int n = 50;
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d[i] = std::pow(10.0, -6.0 + 12.0 * i / (n - 1));
  const Eigen::MatrixXd a = d.asDiagonal();
  PhiloxRng rng(50, 0);
  const Eigen::VectorXd b = random_vector(rng, n);
  SolverConfig plain;
  plain.tolerance = 1e-10;
  plain.max_iterations = n;
  SolverConfig pre = plain;
  pre.jacobi_diagonal = d;
  const SolveResult rp = minres(dense_op(a), b, Eigen::VectorXd::Zero(n), pre);
  CHECK(rp.termination == Termination::kConverged);
  CHECK(rp.iterations <= 2);
  CHECK((a * rp.x - b).norm() <= 1e-8 * b.norm());
}

TEST_CASE("cg matches minres on SPD systems") {
  PhiloxRng rng(51, 0);
  for (int rep = 0; rep < 15; ++rep) {
    const int n = 4 + static_cast<int>(rng.next_below(16));
    const Eigen::MatrixXd a = random_spd(rng, n);
    const Eigen::VectorXd b = random_vector(rng, n);
    SolverConfig config;
    config.tolerance = 1e-12;
    config.max_iterations = 10 * n;
    const SolveResult rc = cg(dense_op(a), b, Eigen::VectorXd::Zero(n), config);
    const Eigen::VectorXd exact = a.ldlt().solve(b);
    CHECK(rc.termination == Termination::kConverged);
    CHECK((rc.x - exact).norm() <= 1e-8 * exact.norm());
  }
}

TEST_CASE("cg reports breakdown on negative curvature") {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.0, 0.0, -1.0;
  Eigen::VectorXd b(2);
  b << 0.0, 1.0;
  SolverConfig config;
  const SolveResult r = cg(dense_op(a), b, Eigen::VectorXd::Zero(2), config);
  CHECK(r.termination == Termination::kBreakdown);
}

TEST_CASE("cg converges within n iterations in exact arithmetic terms") {
  PhiloxRng rng(52, 0);
  const int n = 25;
  const Eigen::MatrixXd a = random_spd(rng, n);
  const Eigen::VectorXd b = random_vector(rng, n);
  SolverConfig config;
  config.tolerance = 1e-10;
  config.max_iterations = n + 5;
  const SolveResult r = cg(dense_op(a), b, Eigen::VectorXd::Zero(n), config);
  CHECK(r.termination == Termination::kConverged);
  CHECK(r.iterations <= n + 5);
}

TEST_CASE("reported final residual is the true recomputed residual") {
  PhiloxRng rng(53, 0);
  const int n = 12;
  const Eigen::MatrixXd a = random_spd(rng, n);
  const Eigen::VectorXd b = random_vector(rng, n);
  SolverConfig config;
  config.tolerance = 1e-9;
  const SolveResult r = minres(dense_op(a), b, Eigen::VectorXd::Zero(n), config);
  const double true_res = (a * r.x - b).norm() / b.norm();
  CHECK(r.final_relative_residual == doctest::Approx(true_res).epsilon(1e-12));
  CHECK(r.final_relative_residual <= config.tolerance);
}
