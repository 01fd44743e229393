#include "mfng/metric.hpp"

#include <cmath>
#include <stdexcept>

namespace mfng {

namespace {

SampleMatrix finalize(Eigen::MatrixXd S, const Eigen::VectorXd& weights) {
  const int M = static_cast<int>(S.rows());
  if (M == 0) throw std::invalid_argument("empty sample set");
  SampleMatrix out;
  if (weights.size() == 0) {
    out.weights = Eigen::VectorXd::Constant(M, 1.0 / M);
  } else {
    if (weights.size() != M) throw std::invalid_argument("weight count mismatch");
    if (weights.minCoeff() < 0.0 || weights.sum() <= 0.0)
      throw std::invalid_argument("weights must be non-negative with positive sum");
    out.weights = weights / weights.sum();
  }
  out.s_bar = S.transpose() * out.weights;
  out.S = std::move(S);
  return out;
}

}  // namespace

SampleMatrix build_sample_matrix(const DbmModel& model, const ChainPool& pool) {
  return build_sample_matrix(model, pool.states);
}

SampleMatrix build_sample_matrix(const DbmModel& model,
                                 const std::vector<JointState>& states,
                                 const Eigen::VectorXd& weights) {
  Eigen::MatrixXd S(states.size(), model.num_params());
  for (std::size_t m = 0; m < states.size(); ++m)
    S.row(m) = model.energy_grad(states[m]).transpose();
  return finalize(std::move(S), weights);
}

SampleMatrix build_sample_matrix(const EnergyModel& model,
                                 const std::vector<Eigen::VectorXd>& flat_states,
                                 const Eigen::VectorXd& weights) {
  Eigen::MatrixXd S(flat_states.size(), model.num_params());
  for (std::size_t m = 0; m < flat_states.size(); ++m)
    S.row(m) = model.energy_grad(flat_states[m]).transpose();
  return finalize(std::move(S), weights);
}

MetricOperator::MetricOperator(const SampleMatrix& samples, double alpha)
    : alpha_(alpha) {
  if (alpha < 0.0) throw std::invalid_argument("damping must be >= 0");
  centered_ = samples.S.rowwise() - samples.s_bar.transpose();
  centered_.array().colwise() *= samples.weights.array().sqrt();
}

Eigen::VectorXd MetricOperator::apply(const Eigen::VectorXd& y) const {
  if (y.size() != dimension()) throw std::invalid_argument("vector size mismatch");
  return centered_.transpose() * (centered_ * y) + alpha_ * y;
}

Eigen::VectorXd MetricOperator::diagonal() const {
  return centered_.colwise().squaredNorm().transpose().array() + alpha_;
}

Eigen::MatrixXd MetricOperator::dense(int cap) const {
  if (dimension() > cap)
    throw std::invalid_argument("dense metric exceeds the dimension cap");
  Eigen::MatrixXd L = centered_.transpose() * centered_;
  L.diagonal().array() += alpha_;
  return L;
}

}  // namespace mfng
