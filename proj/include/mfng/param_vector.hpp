#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace mfng {

struct ParamBlock {
  std::string name;
  int rows = 0;
  int cols = 0;  // 1 for bias vectors
  int offset = 0;
  int size() const { return rows * cols; }
};

// Fixed flat parameter layout: named dense blocks, disjoint and covering
// [0, N) in declaration order. Matrix blocks are stored column-major.
class ParamLayout {
 public:
  void add(const std::string& name, int rows, int cols);
  int size() const { return size_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block(const std::string& name) const;
  bool has(const std::string& name) const;

  Eigen::Map<const Eigen::MatrixXd> view(const Eigen::VectorXd& flat,
                                         const std::string& name) const;
  Eigen::Map<Eigen::MatrixXd> view(Eigen::VectorXd& flat,
                                   const std::string& name) const;

 private:
  std::vector<ParamBlock> blocks_;
  int size_ = 0;
};

using NamedBlocks = std::vector<std::pair<std::string, Eigen::MatrixXd>>;

NamedBlocks unflatten(const ParamLayout& layout, const Eigen::VectorXd& flat);
Eigen::VectorXd flatten(const ParamLayout& layout, const NamedBlocks& blocks);

}  // namespace mfng
