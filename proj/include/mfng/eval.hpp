#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "mfng/model.hpp"

namespace mfng {

inline constexpr int kEnumerationCap = 24;  // max units for log Z sums
inline constexpr int kStateListCap = 20;    // max units for explicit state lists

// log Z = log sum_x exp(-E(x)) over all 2^n states, Gray-code order with
// incremental energy updates, max-shifted.
double exact_log_z(const EnergyModel& model);

// log sum over hidden configurations with the first n_visible units clamped.
double exact_log_z_clamped(const EnergyModel& model,
                           const Eigen::VectorXd& visible);

// Mean over dataset rows of log p(v), hidden layers marginalized exactly.
double exact_loglik(const EnergyModel& model, const Eigen::MatrixXd& visible);

// All 2^n joint states with their exact probabilities.
std::pair<std::vector<Eigen::VectorXd>, Eigen::VectorXd> enumerate_joint(
    const EnergyModel& model);
// All hidden completions of `visible` with probabilities p(h | v).
std::pair<std::vector<Eigen::VectorXd>, Eigen::VectorXd> enumerate_clamped(
    const EnergyModel& model, const Eigen::VectorXd& visible);

enum class FimForm { kCovariance, kHessianLogZ, kScoreOuter };

// Exact Fisher information in one of three equivalent forms: covariance of
// the energy gradient under p, finite-difference Hessian of log Z, or the
// expected outer product of the score.
Eigen::MatrixXd exact_fim(const EnergyModel& model, FimForm form,
                          double fd_step = 1e-4);

// Exact NLL gradient: clamped expectation of dE/dtheta minus the model
// expectation.
Eigen::VectorXd exact_nll_gradient(const EnergyModel& model,
                                   const Eigen::MatrixXd& visible);

// Dense solve of (FIM + alpha I) x = exact NLL gradient. At alpha = 0 a
// singular system yields the minimum-norm solution.
Eigen::VectorXd exact_natural_gradient(const EnergyModel& model,
                                       const Eigen::MatrixXd& visible,
                                       double alpha);

// Maximum-likelihood base-rate biases: logit of per-pixel means, clipped.
Eigen::VectorXd base_rate_biases(const Eigen::MatrixXd& data, double clip = 10.0);

struct AisConfig {
  int n_particles = 100;
  Eigen::VectorXd betas;  // strictly increasing, beta_0 = 0, beta_last = 1
  std::uint64_t seed = 0;
};

Eigen::VectorXd linear_betas(int count);

struct AisResult {
  double log_z = 0.0;
  double log_weight_variance = 0.0;
  Eigen::VectorXd log_weights;
};

// Annealed importance sampling estimate of log Z for a DBM. The base model
// has the given visible biases, zero weights and zero hidden biases; odd
// layers are summed out analytically in the weight increments.
AisResult ais_log_z(const DbmModel& model,
                    const Eigen::VectorXd& base_visible_bias,
                    const AisConfig& config);

}  // namespace mfng
