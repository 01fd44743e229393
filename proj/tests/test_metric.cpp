#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfng/eval.hpp"
#include "mfng/metric.hpp"
#include "test_helpers.hpp"

using namespace mfng;
using mfng::testing::random_binary;
using mfng::testing::random_dbm;
using mfng::testing::random_vector;

namespace {

std::vector<JointState> random_states(PhiloxRng& rng, const DbmModel& model,
                                      int count) {
  std::vector<JointState> out;
  for (int m = 0; m < count; ++m)
    out.push_back(model.to_joint(random_binary(rng, model.num_units())));
  return out;
}

}  // namespace

TEST_CASE("sample matrix rows are the per-sample energy gradients") {
  PhiloxRng rng(31, 0);
  DbmModel model = random_dbm(rng, {3, 2, 2}, 0.8, true);
  const auto states = random_states(rng, model, 12);
  const SampleMatrix sm = build_sample_matrix(model, states);
  REQUIRE(sm.sample_count() == 12);
  REQUIRE(sm.dimension() == model.num_params());
  for (int m = 0; m < 12; ++m) {
    const Eigen::VectorXd g = model.energy_grad(states[m]);
    CHECK((sm.S.row(m).transpose() - g).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK((sm.s_bar - sm.S.colwise().mean().transpose()).cwiseAbs().maxCoeff() <
        1e-14);
  CHECK(sm.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("weighted mean uses the supplied weights") {
  PhiloxRng rng(32, 0);
  DbmModel model = random_dbm(rng, {3, 2}, 0.8, true);
  const auto states = random_states(rng, model, 5);
  Eigen::VectorXd w(5);
  w << 0.5, 0.2, 0.1, 0.1, 0.1;
  const SampleMatrix sm = build_sample_matrix(model, states, w);
  const Eigen::VectorXd expected = sm.S.transpose() * w;
  CHECK((sm.s_bar - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("matrix-free apply equals the dense damped covariance") {
  PhiloxRng rng(33, 0);
  for (int rep = 0; rep < 20; ++rep) {
    DbmModel model = random_dbm(rng, {4, 3, 2}, 0.7, true);
    const auto states = random_states(rng, model, 16);
    const SampleMatrix sm = build_sample_matrix(model, states);
    const double alpha = 0.1;
    MetricOperator op(sm, alpha);
    // independent oracle: explicit weighted sum of centered outer products
    const int n = sm.dimension();
    Eigen::MatrixXd dense = alpha * Eigen::MatrixXd::Identity(n, n);
    for (int m = 0; m < sm.sample_count(); ++m) {
      const Eigen::VectorXd d = sm.S.row(m).transpose() - sm.s_bar;
      dense += sm.weights[m] * d * d.transpose();
    }
    for (int t = 0; t < 3; ++t) {
      const Eigen::VectorXd y = random_vector(rng, n);
      const Eigen::VectorXd lhs = op.apply(y);
      const Eigen::VectorXd rhs = dense * y;
      CHECK((lhs - rhs).norm() <= 1e-10 * rhs.norm());
    }
    CHECK((op.dense() - dense).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("operator is symmetric and positive definite with damping") {
  PhiloxRng rng(34, 0);
  DbmModel model = random_dbm(rng, {4, 3}, 0.7, true);
  const auto states = random_states(rng, model, 8);
  MetricOperator op(build_sample_matrix(model, states), 0.1);
  const int n = op.dimension();
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd u = random_vector(rng, n);
    const Eigen::VectorXd v = random_vector(rng, n);
    CHECK(u.dot(op.apply(v)) == doctest::Approx(v.dot(op.apply(u))).epsilon(1e-10));
    CHECK(u.dot(op.apply(u)) >= 0.1 * u.squaredNorm() * (1 - 1e-12));
  }
}

TEST_CASE("diagonal matches the dense diagonal") {
  PhiloxRng rng(35, 0);
  DbmModel model = random_dbm(rng, {3, 3, 2}, 0.6, true);
  const auto states = random_states(rng, model, 10);
  MetricOperator op(build_sample_matrix(model, states), 0.05);
  const Eigen::VectorXd d = op.diagonal();
  const Eigen::MatrixXd dense = op.dense();
  CHECK((d - dense.diagonal()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(d.minCoeff() >= 0.05 * (1 - 1e-12));
}

TEST_CASE("undamped apply annihilates directions orthogonal to the samples") {
  // With M < N the undamped operator has rank < N: any vector orthogonal to
  // every centered row maps to zero.
  PhiloxRng rng(36, 0);
  DbmModel model = random_dbm(rng, {4, 3, 2}, 0.7, true);
  const auto states = random_states(rng, model, 4);
  const SampleMatrix sm = build_sample_matrix(model, states);
  MetricOperator op(sm, 0.0);
  Eigen::MatrixXd centered = sm.S.rowwise() - sm.s_bar.transpose();
  // project a random vector onto the orthogonal complement of the row space
  Eigen::VectorXd y = random_vector(rng, sm.dimension());
  const Eigen::MatrixXd ct = centered.transpose();
  y -= ct * (ct.completeOrthogonalDecomposition().pseudoInverse() * y);
  CHECK(op.apply(y).norm() < 1e-9 * (1.0 + y.norm()));
}

TEST_CASE("enumeration-weighted samples reproduce the exact fisher metric") {
  PhiloxRng rng(37, 0);
  for (int rep = 0; rep < 5; ++rep) {
    DbmModel model = random_dbm(rng, {3, 2, 2}, 0.8, true);
    auto [states, probs] = enumerate_joint(model);
    std::vector<JointState> joints;
    joints.reserve(states.size());
    for (const auto& s : states) joints.push_back(model.to_joint(s));
    MetricOperator op(build_sample_matrix(model, joints, probs), 0.0);
    const Eigen::MatrixXd fim = exact_fim(model, FimForm::kCovariance);
    CHECK((op.dense() - fim).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("weights must be non-negative and normalizable") {
  PhiloxRng rng(38, 0);
  DbmModel model = random_dbm(rng, {2, 2}, 0.5, true);
  const auto states = random_states(rng, model, 3);
  Eigen::VectorXd bad(3);
  bad << 0.5, 0.5, -0.1;
  CHECK_THROWS(build_sample_matrix(model, states, bad));
  Eigen::VectorXd wrong_len(2);
  wrong_len << 0.5, 0.5;
  CHECK_THROWS(build_sample_matrix(model, states, wrong_len));
}

TEST_CASE("metric from a chain pool equals metric from its states") {
  PhiloxRng rng(39, 0);
  DbmModel model = random_dbm(rng, {3, 2}, 0.7, true);
  ChainPool pool(model, 6, 13);
  sample_negative(model, pool, 3);
  const SampleMatrix a = build_sample_matrix(model, pool);
  const SampleMatrix b = build_sample_matrix(model, pool.states);
  CHECK((a.S - b.S).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.s_bar - b.s_bar).cwiseAbs().maxCoeff() == 0.0);
}
