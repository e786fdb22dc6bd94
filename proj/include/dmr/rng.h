#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace dmr {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based Gaussian stream. Draw k at time step n depends only on
/// (seed, path_index, n, k), so paths can be generated in any order and on
/// any number of workers with identical results.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t path_index) : seed_(seed), path_index_(path_index) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t path_index() const { return path_index_; }

  /// Fills `out` with standard normals for component indices 0..out.size()-1.
  void normals(std::uint64_t step, std::span<double> out) const;
  double normal(std::uint64_t step, std::uint32_t component) const;
  /// Two uniforms in (0, 1) from one counter block.
  std::array<double, 2> uniforms(std::uint64_t step, std::uint32_t block) const;

 private:
  std::array<double, 2> normal_pair(std::uint64_t step, std::uint32_t pair) const;

  std::uint64_t seed_;
  std::uint64_t path_index_;
};

}  // namespace dmr
