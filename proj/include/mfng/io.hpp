#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mfng/inference.hpp"
#include "mfng/model.hpp"

namespace mfng {

// IDX container (the MNIST format): big-endian magic, dimension sizes,
// row-major uint8 payload.
struct IdxData {
  std::vector<int> dims;
  // dims[0] rows, remaining dimensions flattened into columns; values
  // scaled to [0, 1].
  Eigen::MatrixXd values;
};

IdxData load_idx(const std::string& path);
void write_idx(const std::string& path, const IdxData& data);

// x >= threshold -> 1 (threshold inclusive), else 0.
Eigen::MatrixXd binarize(const Eigen::MatrixXd& values, double threshold = 0.5);

// Distinct bars-and-stripes patterns on a rows x cols grid: every
// all-columns pattern plus every all-rows pattern, duplicates removed.
Eigen::MatrixXd bars_stripes_patterns(int rows, int cols);
// `size` patterns drawn uniformly (seeded) from the distinct set.
Eigen::MatrixXd bars_stripes_dataset(int rows, int cols, int size,
                                     std::uint64_t seed);
Eigen::MatrixXd random_bernoulli_dataset(int size, int dim, double p,
                                         std::uint64_t seed);

// Versioned little-endian model checkpoint: layer sizes, offsets, parameter
// blocks in layout order (column-major, 64-bit floats).
void save_checkpoint(const std::string& path, const DbmModel& model);
DbmModel load_checkpoint(const std::string& path);

// Versioned chain-pool snapshot: dimensions, packed state bits, RNG stream
// counters. Restoring requires the matching model.
void save_pool(const std::string& path, const ChainPool& pool,
               const DbmModel& model);
ChainPool load_pool(const std::string& path, const DbmModel& model);

}  // namespace mfng
