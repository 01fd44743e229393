#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mfng/model.hpp"
#include "mfng/rng.hpp"

namespace mfng {

struct InferenceConfig {
  enum class Mode { kMeanField, kGibbs };
  Mode mode = Mode::kMeanField;
  int iterations = 5;
};

// M persistent Markov chains, one Philox stream per chain. States are
// strictly binary.
class ChainPool {
 public:
  // Initializes every unit as Bernoulli(offset).
  ChainPool(const DbmModel& model, int chains, std::uint64_t seed,
            std::uint64_t stream_base = 1);
  // Uninitialized pool for snapshot restore.
  ChainPool() = default;

  int size() const { return static_cast<int>(states.size()); }

  std::vector<JointState> states;
  std::vector<PhiloxRng> rngs;
};

// Fixed-point mean-field marginals for the hidden layers given a clamped
// visible batch (rows of `visible`). Returns K matrices, layer l at index
// l-1, each batch x n_l, entries strictly in (0,1). Deterministic.
std::vector<Eigen::MatrixXd> mean_field_posterior(const DbmModel& model,
                                                  const Eigen::MatrixXd& visible,
                                                  int iterations);

// One block-Gibbs sweep over every chain: odd layers given even, then even
// layers given odd. The visible layer is skipped when clamped.
void gibbs_sweep(const DbmModel& model, ChainPool& pool, bool clamp_visible);

// k_sweeps unclamped sweeps; the pool persists across calls.
void sample_negative(const DbmModel& model, ChainPool& pool, int k_sweeps);

// Positive-phase samples for one batch. Mean-field mode returns real-valued
// marginal states (visible row clamped); Gibbs mode runs clamped sweeps from
// an offset-initialized state using the supplied generator.
std::vector<JointState> positive_phase(const DbmModel& model,
                                       const Eigen::MatrixXd& visible,
                                       const InferenceConfig& config,
                                       PhiloxRng* rng = nullptr);

}  // namespace mfng
