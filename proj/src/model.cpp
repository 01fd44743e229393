#include "mfng/model.hpp"

#include <cmath>
#include <stdexcept>

namespace mfng {

std::string weight_name(int l) { return "W" + std::to_string(l); }
std::string bias_name(int l) { return "b" + std::to_string(l); }

namespace {

Eigen::VectorXd zero_or(const Eigen::VectorXd& v, int n, const char* what) {
  if (v.size() == 0) return Eigen::VectorXd::Zero(n);
  if (v.size() != n) throw std::invalid_argument(std::string(what) + " size mismatch");
  return v;
}

}  // namespace

// ---------------------------------------------------------------- GenericBm

GenericBm::GenericBm(int n, Eigen::VectorXd offsets)
    : GenericBm(Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n),
                std::move(offsets)) {}

GenericBm::GenericBm(Eigen::MatrixXd weights, Eigen::VectorXd bias,
                     Eigen::VectorXd offsets)
    : n_(static_cast<int>(bias.size())),
      weights_(std::move(weights)),
      bias_(std::move(bias)),
      offsets_(zero_or(offsets, n_, "offsets")) {
  if (weights_.rows() != n_ || weights_.cols() != n_)
    throw std::invalid_argument("weight matrix shape mismatch");
  if (!weights_.isApprox(weights_.transpose()))
    throw std::invalid_argument("weight matrix must be symmetric");
  if (weights_.diagonal().cwiseAbs().maxCoeff() != 0.0 && n_ > 0)
    throw std::invalid_argument("weight matrix must have zero diagonal");
  layout_.add("W", n_ * (n_ - 1) / 2, 1);
  layout_.add("b", n_, 1);
}

Eigen::VectorXd GenericBm::params() const {
  Eigen::VectorXd theta(layout_.size());
  int idx = 0;
  for (int k = 0; k < n_; ++k)
    for (int l = k + 1; l < n_; ++l) theta[idx++] = weights_(k, l);
  theta.tail(n_) = bias_;
  return theta;
}

void GenericBm::set_params(const Eigen::VectorXd& theta) {
  if (theta.size() != layout_.size())
    throw std::invalid_argument("parameter vector size mismatch");
  int idx = 0;
  for (int k = 0; k < n_; ++k)
    for (int l = k + 1; l < n_; ++l) {
      weights_(k, l) = theta[idx];
      weights_(l, k) = theta[idx];
      ++idx;
    }
  bias_ = theta.tail(n_);
}

void GenericBm::set_weight(int k, int l, double value) {
  if (k == l) throw std::invalid_argument("diagonal weights are fixed at zero");
  weights_(k, l) = value;
  weights_(l, k) = value;
}

void GenericBm::set_bias(const Eigen::VectorXd& b) {
  if (b.size() != n_) throw std::invalid_argument("bias size mismatch");
  bias_ = b;
}

double GenericBm::energy(const Eigen::VectorXd& state) const {
  if (state.size() != n_) throw std::invalid_argument("state size mismatch");
  const Eigen::VectorXd y = state - offsets_;
  return -0.5 * y.dot(weights_ * y) - bias_.dot(y);
}

Eigen::VectorXd GenericBm::energy_grad(const Eigen::VectorXd& state) const {
  if (state.size() != n_) throw std::invalid_argument("state size mismatch");
  const Eigen::VectorXd y = state - offsets_;
  Eigen::VectorXd g(layout_.size());
  int idx = 0;
  for (int k = 0; k < n_; ++k)
    for (int l = k + 1; l < n_; ++l) g[idx++] = -y[k] * y[l];
  g.tail(n_) = -y;
  return g;
}

// ----------------------------------------------------------------- DbmModel

DbmModel::DbmModel(std::vector<int> layer_sizes, Eigen::VectorXd unit_offsets)
    : sizes_(std::move(layer_sizes)) {
  if (sizes_.empty()) throw std::invalid_argument("at least one layer required");
  total_units_ = 0;
  for (int n : sizes_) {
    if (n <= 0) throw std::invalid_argument("layer sizes must be positive");
    unit_offsets_idx_.push_back(total_units_);
    total_units_ += n;
  }
  const int K = num_layers() - 1;
  for (int l = 1; l <= K; ++l) layout_.add(weight_name(l), sizes_[l - 1], sizes_[l]);
  for (int l = 0; l <= K; ++l) layout_.add(bias_name(l), sizes_[l], 1);
  params_ = Eigen::VectorXd::Zero(layout_.size());
  offsets_ = zero_or(unit_offsets, total_units_, "offsets");
  if ((offsets_.array() < 0.0).any() || (offsets_.array() > 1.0).any())
    throw std::invalid_argument("offsets must lie in [0,1]");
}

void DbmModel::set_params(const Eigen::VectorXd& theta) {
  if (theta.size() != layout_.size())
    throw std::invalid_argument("parameter vector size mismatch");
  params_ = theta;
}

Eigen::Map<const Eigen::MatrixXd> DbmModel::weight(int l) const {
  return layout_.view(params_, weight_name(l));
}
Eigen::Map<Eigen::MatrixXd> DbmModel::weight(int l) {
  return layout_.view(params_, weight_name(l));
}
Eigen::Map<const Eigen::VectorXd> DbmModel::bias(int l) const {
  auto m = layout_.view(params_, bias_name(l));
  return {m.data(), m.rows()};
}
Eigen::Map<Eigen::VectorXd> DbmModel::bias(int l) {
  auto m = layout_.view(params_, bias_name(l));
  return {m.data(), m.rows()};
}
Eigen::VectorBlock<const Eigen::VectorXd> DbmModel::offset(int l) const {
  return offsets_.segment(unit_offsets_idx_[l], sizes_[l]);
}

Eigen::MatrixXd DbmModel::coupling() const {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(total_units_, total_units_);
  for (int l = 1; l < num_layers(); ++l) {
    const int r = unit_offsets_idx_[l - 1];
    const int c = unit_offsets_idx_[l];
    W.block(r, c, sizes_[l - 1], sizes_[l]) = weight(l);
    W.block(c, r, sizes_[l], sizes_[l - 1]) = weight(l).transpose();
  }
  return W;
}

Eigen::VectorXd DbmModel::unit_bias() const {
  Eigen::VectorXd b(total_units_);
  for (int l = 0; l < num_layers(); ++l)
    b.segment(unit_offsets_idx_[l], sizes_[l]) = bias(l);
  return b;
}

JointState DbmModel::to_joint(const Eigen::VectorXd& flat) const {
  if (flat.size() != total_units_)
    throw std::invalid_argument("flat state size mismatch");
  JointState s;
  for (int l = 0; l < num_layers(); ++l)
    s.push_back(flat.segment(unit_offsets_idx_[l], sizes_[l]));
  return s;
}

Eigen::VectorXd DbmModel::to_flat(const JointState& state) const {
  check_state(state);
  Eigen::VectorXd flat(total_units_);
  for (int l = 0; l < num_layers(); ++l)
    flat.segment(unit_offsets_idx_[l], sizes_[l]) = state[l];
  return flat;
}

void DbmModel::check_state(const JointState& state) const {
  if (static_cast<int>(state.size()) != num_layers())
    throw std::invalid_argument("layer count mismatch");
  for (int l = 0; l < num_layers(); ++l)
    if (state[l].size() != sizes_[l])
      throw std::invalid_argument("layer size mismatch");
}

double DbmModel::energy(const JointState& state) const {
  check_state(state);
  double e = 0.0;
  Eigen::VectorXd prev = state[0] - offset(0);
  e -= bias(0).dot(prev);
  for (int l = 1; l < num_layers(); ++l) {
    Eigen::VectorXd cur = state[l] - offset(l);
    e -= prev.dot(weight(l) * cur);
    e -= bias(l).dot(cur);
    prev = std::move(cur);
  }
  return e;
}

double DbmModel::energy(const Eigen::VectorXd& state) const {
  return energy(to_joint(state));
}

Eigen::VectorXd DbmModel::energy_grad(const JointState& state) const {
  check_state(state);
  std::vector<Eigen::VectorXd> y(num_layers());
  for (int l = 0; l < num_layers(); ++l) y[l] = state[l] - offset(l);
  Eigen::VectorXd g(layout_.size());
  for (int l = 1; l < num_layers(); ++l)
    layout_.view(g, weight_name(l)) = -y[l - 1] * y[l].transpose();
  for (int l = 0; l < num_layers(); ++l)
    layout_.view(g, bias_name(l)).col(0) = -y[l];
  return g;
}

Eigen::VectorXd DbmModel::energy_grad(const Eigen::VectorXd& state) const {
  return energy_grad(to_joint(state));
}

DbmModel DbmModel::uncentered() const {
  DbmModel out(sizes_);
  out.params_ = params_;
  const int K = num_layers() - 1;
  for (int l = 0; l <= K; ++l) {
    Eigen::VectorXd b = bias(l);
    if (l >= 1) b -= weight(l).transpose() * offset(l - 1).eval().matrix();
    if (l < K) b -= weight(l + 1) * offset(l + 1).eval().matrix();
    out.bias(l) = b;
  }
  return out;
}

}  // namespace mfng
