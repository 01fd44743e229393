#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <vector>

#include "mfng/inference.hpp"
#include "mfng/metric.hpp"
#include "mfng/model.hpp"
#include "mfng/solver.hpp"

namespace mfng {

enum class Algorithm { kMfng, kMfngDiag, kSml };

struct TrainConfig {
  Algorithm algorithm = Algorithm::kMfng;
  double learning_rate = 5e-3;
  int batch_size = 25;
  int epochs = 1;
  InferenceConfig inference;
  SolverConfig solver;
  bool jacobi = false;  // per-update Jacobi preconditioner from diag(L)
  double damping = 0.1;
  std::uint64_t seed = 0;
  int chains = 0;        // 0: tied to batch_size
  int gibbs_sweeps = 5;  // negative-phase sweeps per update

  int resolved_chains() const { return chains > 0 ? chains : batch_size; }
  void validate() const;
};

struct PhaseTimings {
  double positive = 0, negative = 0, build = 0, solve = 0, apply = 0, total = 0;
};

struct UpdateReport {
  int epoch = 0;
  int update = 0;  // global update index
  double grad_norm = 0;
  double natural_grad_norm = 0;
  int solver_iterations = 0;
  double solver_residual = 0;
  Termination solver_termination = Termination::kConverged;
  bool fallback = false;
  PhaseTimings timings;
};

// g = mean(s+) - mean(s-) of per-sample energy gradients.
Eigen::VectorXd nll_gradient(const DbmModel& model,
                             const std::vector<JointState>& positive,
                             const std::vector<JointState>& negative);
Eigen::VectorXd nll_gradient(const DbmModel& model,
                             const std::vector<JointState>& positive,
                             const Eigen::VectorXd& positive_weights,
                             const std::vector<JointState>& negative,
                             const Eigen::VectorXd& negative_weights);

struct UpdateDirection {
  Eigen::VectorXd delta;
  Eigen::VectorXd gradient;
  int solver_iterations = 0;
  double solver_residual = 0;
  Termination solver_termination = Termination::kConverged;
  bool fallback = false;
};

// Core of one natural-gradient update given explicit (possibly weighted)
// positive and negative sample sets: builds the metric from the negative
// samples only and solves (L + alpha I) delta = g with MinRes. A solver
// breakdown falls back to delta = g.
UpdateDirection mfng_direction(const DbmModel& model,
                               const std::vector<JointState>& positive,
                               const Eigen::VectorXd& positive_weights,
                               const std::vector<JointState>& negative,
                               const Eigen::VectorXd& negative_weights,
                               const TrainConfig& config,
                               const Eigen::VectorXd* warm_start = nullptr);

// One full MFNG update: positive phase on `batch`, k Gibbs sweeps on the
// persistent pool, metric build and solve. Returns the step direction; the
// caller applies theta <- theta - learning_rate * delta.
Eigen::VectorXd mfng_iteration(const DbmModel& model,
                               const Eigen::MatrixXd& batch, ChainPool& pool,
                               const TrainConfig& config,
                               PhiloxRng* positive_rng = nullptr,
                               const Eigen::VectorXd* warm_start = nullptr,
                               UpdateReport* report = nullptr);

// Diagonal-metric variant: delta_j = g_j / (diag(L)_j + implicit alpha).
Eigen::VectorXd mfng_diag_iteration(const DbmModel& model,
                                    const Eigen::MatrixXd& batch,
                                    ChainPool& pool, const TrainConfig& config,
                                    PhiloxRng* positive_rng = nullptr,
                                    UpdateReport* report = nullptr);

// Plain stochastic maximum likelihood: delta = g.
Eigen::VectorXd sml_iteration(const DbmModel& model, const Eigen::MatrixXd& batch,
                              ChainPool& pool, const TrainConfig& config,
                              PhiloxRng* positive_rng = nullptr,
                              UpdateReport* report = nullptr);

using EpochCallback =
    std::function<void(int epoch, const DbmModel& model, const ChainPool& pool,
                       const std::vector<UpdateReport>& epoch_updates)>;

// Epoch loop: seeded shuffle, minibatch updates with the persistent pool
// threaded through, theta <- theta - lr * delta, per-epoch callback.
// `jsonl` receives one JSON record per update when set. Throws
// std::runtime_error if parameters go non-finite.
std::vector<UpdateReport> train(DbmModel& model, const Eigen::MatrixXd& data,
                                const TrainConfig& config, ChainPool& pool,
                                const EpochCallback& callback = {},
                                std::ostream* jsonl = nullptr,
                                int start_epoch = 0);

}  // namespace mfng
