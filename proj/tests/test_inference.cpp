#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfng/eval.hpp"
#include "mfng/inference.hpp"
#include "test_helpers.hpp"

using namespace mfng;
using mfng::testing::random_binary;
using mfng::testing::random_dbm;

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

TEST_CASE("mean field on a decoupled model returns sigmoid of the bias") {
  DbmModel model({2, 3});
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(model.num_params());
  // weights zero; hidden biases 0.5, -1.0, 2.0
  theta[2 * 3 + 2 + 0] = 0.5;
  theta[2 * 3 + 2 + 1] = -1.0;
  theta[2 * 3 + 2 + 2] = 2.0;
  model.set_params(theta);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(4, 2);
  v(1, 0) = 1.0;
  const auto mu = mean_field_posterior(model, v, 10);
  REQUIRE(mu.size() == 1);
  REQUIRE(mu[0].rows() == 4);
  REQUIRE(mu[0].cols() == 3);
  for (int r = 0; r < 4; ++r) {
    CHECK(mu[0](r, 0) == doctest::Approx(sigmoid(0.5)).epsilon(1e-12));
    CHECK(mu[0](r, 1) == doctest::Approx(sigmoid(-1.0)).epsilon(1e-12));
    CHECK(mu[0](r, 2) == doctest::Approx(sigmoid(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("mean field posterior is exact for a two-layer model") {
  // With a single hidden layer the posterior factorizes, so the fixed point
  // must match the enumerated conditional marginals.
  PhiloxRng rng(21, 0);
  for (int rep = 0; rep < 10; ++rep) {
    DbmModel model = random_dbm(rng, {4, 3}, 0.8, true);
    const Eigen::VectorXd v = random_binary(rng, 4);
    const auto mu = mean_field_posterior(model, v.transpose(), 30);
    auto [states, probs] = enumerate_clamped(model, v);
    Eigen::VectorXd marg = Eigen::VectorXd::Zero(3);
    for (std::size_t i = 0; i < states.size(); ++i)
      marg += probs[i] * states[i].segment(4, 3);
    for (int j = 0; j < 3; ++j)
      CHECK(mu[0](0, j) == doctest::Approx(marg[j]).epsilon(1e-10));
  }
}

TEST_CASE("mean field marginals stay strictly inside the unit interval") {
  PhiloxRng rng(22, 0);
  DbmModel model = random_dbm(rng, {3, 4, 2}, 3.0, true);
  Eigen::MatrixXd v(2, 3);
  v << 1, 0, 1, 0, 0, 1;
  const auto mu = mean_field_posterior(model, v, 5);
  for (const auto& layer : mu)
    for (int r = 0; r < layer.rows(); ++r)
      for (int c = 0; c < layer.cols(); ++c) {
        CHECK(layer(r, c) > 0.0);
        CHECK(layer(r, c) < 1.0);
      }
}

TEST_CASE("mean field is deterministic") {
  PhiloxRng rng(23, 0);
  DbmModel model = random_dbm(rng, {3, 4, 2}, 1.0, true);
  Eigen::MatrixXd v(1, 3);
  v << 1, 0, 1;
  const auto a = mean_field_posterior(model, v, 7);
  const auto b = mean_field_posterior(model, v, 7);
  for (std::size_t l = 0; l < a.size(); ++l)
    CHECK((a[l] - b[l]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mean field rejects non-finite parameters") {
  DbmModel model({2, 2});
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(model.num_params());
  theta[0] = std::numeric_limits<double>::quiet_NaN();
  model.set_params(theta);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(1, 2);
  CHECK_THROWS(mean_field_posterior(model, v, 5));
}

TEST_CASE("chain pool states are binary and reproducible per seed") {
  PhiloxRng rng(24, 0);
  DbmModel model = random_dbm(rng, {4, 3, 2}, 0.5, true);
  ChainPool a(model, 8, 99);
  ChainPool b(model, 8, 99);
  ChainPool c(model, 8, 100);
  REQUIRE(a.size() == 8);
  bool all_equal = true, any_diff_seed = false;
  for (int m = 0; m < 8; ++m)
    for (std::size_t l = 0; l < a.states[m].size(); ++l) {
      for (int i = 0; i < a.states[m][l].size(); ++i) {
        const double x = a.states[m][l][i];
        CHECK((x == 0.0 || x == 1.0));
      }
      if ((a.states[m][l] - b.states[m][l]).cwiseAbs().maxCoeff() != 0.0)
        all_equal = false;
      if ((a.states[m][l] - c.states[m][l]).cwiseAbs().maxCoeff() != 0.0)
        any_diff_seed = true;
    }
  CHECK(all_equal);
  CHECK(any_diff_seed);
}

TEST_CASE("gibbs on a decoupled model matches independent bernoulli rates") {
  DbmModel model({2, 2});
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(model.num_params());
  theta[4] = 1.0;   // b0_0
  theta[5] = -0.5;  // b0_1
  theta[6] = 0.0;   // b1_0
  theta[7] = 2.0;   // b1_1
  model.set_params(theta);
  ChainPool pool(model, 400, 7);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(4);
  const int sweeps = 200;
  for (int t = 0; t < sweeps; ++t) {
    gibbs_sweep(model, pool, false);
    for (const auto& chain : pool.states) {
      counts[0] += chain[0][0];
      counts[1] += chain[0][1];
      counts[2] += chain[1][0];
      counts[3] += chain[1][1];
    }
  }
  counts /= 400.0 * sweeps;
  CHECK(counts[0] == doctest::Approx(sigmoid(1.0)).epsilon(0.02));
  CHECK(counts[1] == doctest::Approx(sigmoid(-0.5)).epsilon(0.03));
  CHECK(counts[2] == doctest::Approx(0.5).epsilon(0.02));
  CHECK(counts[3] == doctest::Approx(sigmoid(2.0)).epsilon(0.02));
}

TEST_CASE("clamped gibbs never moves the visible layer") {
  PhiloxRng rng(25, 0);
  DbmModel model = random_dbm(rng, {3, 3, 2}, 1.0, true);
  ChainPool pool(model, 6, 4);
  std::vector<Eigen::VectorXd> visible;
  for (const auto& chain : pool.states) visible.push_back(chain[0]);
  for (int t = 0; t < 20; ++t) gibbs_sweep(model, pool, true);
  for (int m = 0; m < 6; ++m)
    CHECK((pool.states[m][0] - visible[m]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("long gibbs run reproduces the exact distribution of a small model") {
  PhiloxRng rng(26, 0);
  DbmModel model = random_dbm(rng, {3, 2}, 0.6, true);
  auto [states, probs] = enumerate_joint(model);
  ChainPool pool(model, 64, 5);
  std::vector<double> freq(states.size(), 0.0);
  const int burn = 50, sweeps = 4000;
  sample_negative(model, pool, burn);
  for (int t = 0; t < sweeps; ++t) {
    gibbs_sweep(model, pool, false);
    for (const auto& chain : pool.states) {
      int idx = 0;
      int bit = 0;
      for (const auto& layer : chain)
        for (int i = 0; i < layer.size(); ++i)
          idx |= static_cast<int>(layer[i]) << bit++;
      freq[idx] += 1.0;
    }
  }
  double tv = 0.0;
  const double total = 64.0 * sweeps;
  for (std::size_t i = 0; i < states.size(); ++i) {
    int idx = 0;
    for (int b = 0; b < states[i].size(); ++b)
      idx |= static_cast<int>(states[i][b]) << b;
    tv += std::abs(freq[idx] / total - probs[i]);
  }
  CHECK(tv / 2.0 < 0.02);
}

TEST_CASE("sample_negative requires at least one sweep") {
  DbmModel model({2, 2});
  ChainPool pool(model, 2, 1);
  CHECK_THROWS(sample_negative(model, pool, 0));
}

TEST_CASE("mean-field positive phase clamps the visible rows") {
  PhiloxRng rng(27, 0);
  DbmModel model = random_dbm(rng, {4, 3}, 0.7, true);
  Eigen::MatrixXd v(3, 4);
  v << 1, 0, 0, 1, 0, 1, 1, 0, 1, 1, 1, 1;
  InferenceConfig config;
  config.mode = InferenceConfig::Mode::kMeanField;
  config.iterations = 8;
  const auto pos = positive_phase(model, v, config);
  REQUIRE(pos.size() == 3);
  for (int r = 0; r < 3; ++r) {
    CHECK((pos[r][0] - v.row(r).transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (int j = 0; j < 3; ++j) {
      CHECK(pos[r][1][j] > 0.0);
      CHECK(pos[r][1][j] < 1.0);
    }
  }
}

TEST_CASE("gibbs positive phase yields binary hidden states and needs an rng") {
  PhiloxRng rng(28, 0);
  DbmModel model = random_dbm(rng, {4, 3}, 0.7, true);
  Eigen::MatrixXd v(2, 4);
  v << 1, 0, 0, 1, 0, 1, 1, 0;
  InferenceConfig config;
  config.mode = InferenceConfig::Mode::kGibbs;
  config.iterations = 3;
  CHECK_THROWS(positive_phase(model, v, config, nullptr));
  PhiloxRng gen(5, 77);
  const auto pos = positive_phase(model, v, config, &gen);
  for (int r = 0; r < 2; ++r) {
    CHECK((pos[r][0] - v.row(r).transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (int j = 0; j < 3; ++j)
      CHECK((pos[r][1][j] == 0.0 || pos[r][1][j] == 1.0));
  }
}
