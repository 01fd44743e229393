#include "mfng/param_vector.hpp"

#include <stdexcept>

namespace mfng {

void ParamLayout::add(const std::string& name, int rows, int cols) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("negative block shape");
  if (has(name)) throw std::invalid_argument("duplicate block name: " + name);
  blocks_.push_back({name, rows, cols, size_});
  size_ += rows * cols;
}

bool ParamLayout::has(const std::string& name) const {
  for (const auto& b : blocks_)
    if (b.name == name) return true;
  return false;
}

const ParamBlock& ParamLayout::block(const std::string& name) const {
  for (const auto& b : blocks_)
    if (b.name == name) return b;
  throw std::out_of_range("no parameter block named " + name);
}

Eigen::Map<const Eigen::MatrixXd> ParamLayout::view(
    const Eigen::VectorXd& flat, const std::string& name) const {
  if (flat.size() != size_) throw std::invalid_argument("flat vector size mismatch");
  const ParamBlock& b = block(name);
  return {flat.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<Eigen::MatrixXd> ParamLayout::view(Eigen::VectorXd& flat,
                                              const std::string& name) const {
  if (flat.size() != size_) throw std::invalid_argument("flat vector size mismatch");
  const ParamBlock& b = block(name);
  return {flat.data() + b.offset, b.rows, b.cols};
}

NamedBlocks unflatten(const ParamLayout& layout, const Eigen::VectorXd& flat) {
  if (flat.size() != layout.size())
    throw std::invalid_argument("flat vector size mismatch");
  NamedBlocks out;
  for (const auto& b : layout.blocks())
    out.emplace_back(b.name, Eigen::Map<const Eigen::MatrixXd>(
                                 flat.data() + b.offset, b.rows, b.cols));
  return out;
}

Eigen::VectorXd flatten(const ParamLayout& layout, const NamedBlocks& blocks) {
  Eigen::VectorXd flat(layout.size());
  if (blocks.size() != layout.blocks().size())
    throw std::invalid_argument("block count mismatch");
  for (const auto& [name, value] : blocks) {
    const ParamBlock& b = layout.block(name);
    if (value.rows() != b.rows || value.cols() != b.cols)
      throw std::invalid_argument("block shape mismatch for " + name);
    Eigen::Map<Eigen::MatrixXd>(flat.data() + b.offset, b.rows, b.cols) = value;
  }
  return flat;
}

}  // namespace mfng
