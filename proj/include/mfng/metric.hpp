#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mfng/inference.hpp"
#include "mfng/model.hpp"

namespace mfng {

// Per-sample energy gradients: row m is dE(x_m)/dtheta, plus the weighted
// column mean. Weights default to uniform 1/M and always sum to one.
struct SampleMatrix {
  Eigen::MatrixXd S;       // M x N
  Eigen::VectorXd s_bar;   // length N
  Eigen::VectorXd weights; // length M, sums to 1

  int sample_count() const { return static_cast<int>(S.rows()); }
  int dimension() const { return static_cast<int>(S.cols()); }
};

SampleMatrix build_sample_matrix(const DbmModel& model, const ChainPool& pool);
SampleMatrix build_sample_matrix(const DbmModel& model,
                                 const std::vector<JointState>& states,
                                 const Eigen::VectorXd& weights = {});
SampleMatrix build_sample_matrix(const EnergyModel& model,
                                 const std::vector<Eigen::VectorXd>& flat_states,
                                 const Eigen::VectorXd& weights = {});

// Matrix-free damped Fisher-metric estimate
//   L y = sum_m w_m (s_m - s_bar)(s_m - s_bar)^T y + alpha y,
// evaluated through two thin matrix-vector products; the N x N matrix is
// never formed. Immutable after construction.
class MetricOperator {
 public:
  MetricOperator(const SampleMatrix& samples, double alpha);

  int dimension() const { return static_cast<int>(centered_.cols()); }
  double alpha() const { return alpha_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& y) const;
  // diag(L) including the damping term.
  Eigen::VectorXd diagonal() const;
  // Explicit dense operator, for oracle testing only.
  Eigen::MatrixXd dense(int cap = 2000) const;

 private:
  Eigen::MatrixXd centered_;  // rows sqrt(w_m) * (s_m - s_bar)
  double alpha_;
};

}  // namespace mfng
