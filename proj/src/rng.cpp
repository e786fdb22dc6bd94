#include "dmr/rng.h"

#include <cmath>
#include <numbers>

namespace dmr {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform strictly inside (0, 1).
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::array<double, 2> RngStream::uniforms(std::uint64_t step, std::uint32_t block) const {
  const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(step), block,
                                         static_cast<std::uint32_t>(path_index_),
                                         static_cast<std::uint32_t>(path_index_ >> 32)};
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                         static_cast<std::uint32_t>(seed_ >> 32)};
  const auto r = philox4x32(ctr, key);
  return {to_unit(r[0], r[1]), to_unit(r[2], r[3])};
}

std::array<double, 2> RngStream::normal_pair(std::uint64_t step, std::uint32_t pair) const {
  const auto [u1, u2] = uniforms(step, pair);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

void RngStream::normals(std::uint64_t step, std::span<double> out) const {
  for (std::size_t k = 0; k < out.size(); k += 2) {
    const auto z = normal_pair(step, static_cast<std::uint32_t>(k / 2));
    out[k] = z[0];
    if (k + 1 < out.size()) out[k + 1] = z[1];
  }
}

double RngStream::normal(std::uint64_t step, std::uint32_t component) const {
  return normal_pair(step, component / 2)[component % 2];
}

}  // namespace dmr
