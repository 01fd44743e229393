#pragma once

#include <array>
#include <cstdint>

namespace mfng {

// Philox4x32-10 counter-based generator. Distinct (seed, stream) pairs give
// independent streams; the full state is the 64-bit block counter plus an
// index into the current 4-word block, so snapshots are two integers.
class PhiloxRng {
 public:
  PhiloxRng() : PhiloxRng(0, 0) {}
  PhiloxRng(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  // Uniform in [0, 1), 53-bit resolution.
  double next_double();
  bool bernoulli(double p) { return next_double() < p; }
  // Uniform integer in [0, n), n >= 1.
  std::uint32_t next_below(std::uint32_t n);
  // Standard normal via Box-Muller (consumes two doubles).
  double next_normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t block() const { return block_; }
  int index() const { return idx_; }
  void restore(std::uint64_t block, int index);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_;
  std::array<std::uint32_t, 4> buf_;
  int idx_;
};

}  // namespace mfng
