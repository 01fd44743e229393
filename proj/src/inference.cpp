#include "mfng/inference.hpp"

#include <cmath>
#include <stdexcept>

namespace mfng {

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Total input to every unit of layer l given neighbouring layer states
// (centered), plus the layer bias.
Eigen::VectorXd layer_field(const DbmModel& model, int l,
                            const std::vector<Eigen::VectorXd>& centered) {
  Eigen::VectorXd f = model.bias(l);
  if (l >= 1) f += model.weight(l).transpose() * centered[l - 1];
  if (l < model.num_layers() - 1) f += model.weight(l + 1) * centered[l + 1];
  return f;
}

void sample_layer(const DbmModel& model, int l, JointState& state,
                  std::vector<Eigen::VectorXd>& centered, PhiloxRng& rng) {
  const Eigen::VectorXd f = layer_field(model, l, centered);
  auto off = model.offset(l);
  for (int i = 0; i < f.size(); ++i) {
    state[l][i] = rng.bernoulli(sigmoid(f[i])) ? 1.0 : 0.0;
    centered[l][i] = state[l][i] - off[i];
  }
}

}  // namespace

ChainPool::ChainPool(const DbmModel& model, int chains, std::uint64_t seed,
                     std::uint64_t stream_base) {
  if (chains < 1) throw std::invalid_argument("chain count must be >= 1");
  const Eigen::VectorXd offsets = model.unit_offset();
  for (int m = 0; m < chains; ++m) {
    rngs.emplace_back(seed, stream_base + static_cast<std::uint64_t>(m));
    Eigen::VectorXd flat(model.num_units());
    for (int i = 0; i < flat.size(); ++i)
      flat[i] = rngs.back().bernoulli(offsets[i]) ? 1.0 : 0.0;
    states.push_back(model.to_joint(flat));
  }
}

std::vector<Eigen::MatrixXd> mean_field_posterior(const DbmModel& model,
                                                  const Eigen::MatrixXd& visible,
                                                  int iterations) {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (visible.cols() != model.layer_sizes()[0])
    throw std::invalid_argument("visible width mismatch");
  if (!model.params().allFinite())
    throw std::invalid_argument("non-finite model parameters");
  const int K = model.num_layers() - 1;
  const int B = static_cast<int>(visible.rows());

  // centered[l] holds (mu^l - c^l), batch x n_l.
  std::vector<Eigen::MatrixXd> mu(K + 1), centered(K + 1);
  mu[0] = visible;
  centered[0] = visible.rowwise() - model.offset(0).transpose();
  for (int l = 1; l <= K; ++l) {
    mu[l] = Eigen::MatrixXd::Zero(B, model.layer_sizes()[l]).rowwise() +
            model.offset(l).transpose();
    centered[l] = Eigen::MatrixXd::Zero(B, model.layer_sizes()[l]);
  }

  for (int it = 0; it < iterations; ++it) {
    for (int l = 1; l <= K; ++l) {
      Eigen::MatrixXd z = centered[l - 1] * model.weight(l);
      if (l < K) z += centered[l + 1] * model.weight(l + 1).transpose();
      z.rowwise() += model.bias(l).transpose();
      mu[l] = z.unaryExpr([](double v) { return sigmoid(v); });
      centered[l] = mu[l].rowwise() - model.offset(l).transpose();
    }
  }
  return {mu.begin() + 1, mu.end()};
}

void gibbs_sweep(const DbmModel& model, ChainPool& pool, bool clamp_visible) {
  const int K = model.num_layers() - 1;
  for (int m = 0; m < pool.size(); ++m) {
    JointState& state = pool.states[m];
    model.check_state(state);
    std::vector<Eigen::VectorXd> centered(K + 1);
    for (int l = 0; l <= K; ++l) centered[l] = state[l] - model.offset(l);
    for (int l = 1; l <= K; l += 2)
      sample_layer(model, l, state, centered, pool.rngs[m]);
    for (int l = clamp_visible ? 2 : 0; l <= K; l += 2)
      sample_layer(model, l, state, centered, pool.rngs[m]);
  }
}

void sample_negative(const DbmModel& model, ChainPool& pool, int k_sweeps) {
  if (k_sweeps < 1) throw std::invalid_argument("k_sweeps must be >= 1");
  for (int k = 0; k < k_sweeps; ++k) gibbs_sweep(model, pool, false);
}

std::vector<JointState> positive_phase(const DbmModel& model,
                                       const Eigen::MatrixXd& visible,
                                       const InferenceConfig& config,
                                       PhiloxRng* rng) {
  const int B = static_cast<int>(visible.rows());
  std::vector<JointState> out;
  out.reserve(B);
  if (config.mode == InferenceConfig::Mode::kMeanField) {
    auto mu = mean_field_posterior(model, visible, config.iterations);
    for (int r = 0; r < B; ++r) {
      JointState s;
      s.push_back(visible.row(r).transpose());
      for (const auto& layer : mu) s.push_back(layer.row(r).transpose());
      out.push_back(std::move(s));
    }
    return out;
  }
  if (rng == nullptr)
    throw std::invalid_argument("gibbs positive phase needs a generator");
  const Eigen::VectorXd offsets = model.unit_offset();
  const int n0 = model.layer_sizes()[0];
  for (int r = 0; r < B; ++r) {
    ChainPool one;
    one.rngs.push_back(*rng);
    Eigen::VectorXd flat(model.num_units());
    flat.head(n0) = visible.row(r).transpose();
    for (int i = n0; i < flat.size(); ++i)
      flat[i] = one.rngs[0].bernoulli(offsets[i]) ? 1.0 : 0.0;
    one.states.push_back(model.to_joint(flat));
    for (int it = 0; it < config.iterations; ++it)
      gibbs_sweep(model, one, true);
    *rng = one.rngs[0];
    out.push_back(std::move(one.states[0]));
  }
  return out;
}

}  // namespace mfng
