#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "mfng/param_vector.hpp"

namespace mfng {

// One vector per layer. Entries are binary for sampled states, or in [0,1]
// when carrying mean-field marginals through the positive phase.
using JointState = std::vector<Eigen::VectorXd>;

// Pairwise binary energy model. The flat `state` argument concatenates all
// units (layer order for layered models). Enumeration oracles only use this
// interface, so they work for any pairwise model.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;

  virtual int num_units() const = 0;
  virtual int num_params() const = 0;
  virtual const ParamLayout& layout() const = 0;

  virtual Eigen::VectorXd params() const = 0;
  virtual void set_params(const Eigen::VectorXd& theta) = 0;
  virtual std::unique_ptr<EnergyModel> clone() const = 0;

  // Full symmetric inter-unit coupling matrix (zero diagonal), per-unit
  // biases and centering offsets. These define
  //   E(x) = -1/2 (x-c)^T W (x-c) - b^T (x-c).
  virtual Eigen::MatrixXd coupling() const = 0;
  virtual Eigen::VectorXd unit_bias() const = 0;
  virtual Eigen::VectorXd unit_offset() const = 0;

  virtual double energy(const Eigen::VectorXd& state) const = 0;
  // dE/dtheta at `state`, in layout order.
  virtual Eigen::VectorXd energy_grad(const Eigen::VectorXd& state) const = 0;
};

// Fully-visible Boltzmann machine with symmetric zero-diagonal weights.
// Parameters are the strict upper triangle of W (row-major pair order
// (0,1), (0,2), ..., (n-2,n-1)) followed by the biases.
class GenericBm : public EnergyModel {
 public:
  explicit GenericBm(int n, Eigen::VectorXd offsets = {});
  GenericBm(Eigen::MatrixXd weights, Eigen::VectorXd bias,
            Eigen::VectorXd offsets = {});

  int num_units() const override { return n_; }
  int num_params() const override { return layout_.size(); }
  const ParamLayout& layout() const override { return layout_; }

  Eigen::VectorXd params() const override;
  void set_params(const Eigen::VectorXd& theta) override;
  std::unique_ptr<EnergyModel> clone() const override {
    return std::make_unique<GenericBm>(*this);
  }

  Eigen::MatrixXd coupling() const override { return weights_; }
  Eigen::VectorXd unit_bias() const override { return bias_; }
  Eigen::VectorXd unit_offset() const override { return offsets_; }

  double energy(const Eigen::VectorXd& state) const override;
  Eigen::VectorXd energy_grad(const Eigen::VectorXd& state) const override;

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }
  void set_weight(int k, int l, double value);
  void set_bias(const Eigen::VectorXd& b);

 private:
  int n_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
  Eigen::VectorXd offsets_;
  ParamLayout layout_;
};

// Centered deep Boltzmann machine: layers 0..K, couplings only between
// adjacent layers. Parameter layout is W1..WK then b0..bK; W^(l) has shape
// n_{l-1} x n_l, stored column-major.
class DbmModel : public EnergyModel {
 public:
  explicit DbmModel(std::vector<int> layer_sizes,
                    Eigen::VectorXd unit_offsets = {});

  int num_layers() const { return static_cast<int>(sizes_.size()); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  int num_units() const override { return total_units_; }
  int num_params() const override { return layout_.size(); }
  const ParamLayout& layout() const override { return layout_; }

  Eigen::VectorXd params() const override { return params_; }
  void set_params(const Eigen::VectorXd& theta) override;
  std::unique_ptr<EnergyModel> clone() const override {
    return std::make_unique<DbmModel>(*this);
  }

  Eigen::MatrixXd coupling() const override;
  Eigen::VectorXd unit_bias() const override;
  Eigen::VectorXd unit_offset() const override { return offsets_; }

  double energy(const Eigen::VectorXd& state) const override;
  Eigen::VectorXd energy_grad(const Eigen::VectorXd& state) const override;

  double energy(const JointState& state) const;
  Eigen::VectorXd energy_grad(const JointState& state) const;

  // l in [1, K]: weights between layers l-1 and l.
  Eigen::Map<const Eigen::MatrixXd> weight(int l) const;
  Eigen::Map<Eigen::MatrixXd> weight(int l);
  Eigen::Map<const Eigen::VectorXd> bias(int l) const;
  Eigen::Map<Eigen::VectorXd> bias(int l);
  Eigen::VectorBlock<const Eigen::VectorXd> offset(int l) const;

  int layer_unit_offset(int l) const { return unit_offsets_idx_[l]; }

  JointState to_joint(const Eigen::VectorXd& flat) const;
  Eigen::VectorXd to_flat(const JointState& state) const;
  void check_state(const JointState& state) const;

  // Equivalent zero-offset model: offsets absorbed into the biases. Defines
  // the same distribution (the leftover energy constant cancels in p).
  DbmModel uncentered() const;

 private:
  std::vector<int> sizes_;
  int total_units_;
  std::vector<int> unit_offsets_idx_;  // start index of each layer
  ParamLayout layout_;
  Eigen::VectorXd params_;
  Eigen::VectorXd offsets_;
};

std::string weight_name(int l);
std::string bias_name(int l);

}  // namespace mfng
