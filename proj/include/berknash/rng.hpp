#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace berknash {

// Philox4x32-10 counter-based generator (Salmon et al., Random123 constants).
// Counter-based so that a (seed, stream, counter) triple pins every draw:
// identical seeds replay bit-identical trajectories regardless of call-site
// reordering between streams.
class Philox4x32 {
 public:
  explicit Philox4x32(uint64_t seed, uint64_t stream = 0)
      : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
        ctr_{0, 0, static_cast<uint32_t>(stream),
             static_cast<uint32_t>(stream >> 32)},
        buf_pos_(4) {}

  // Raw block for known-answer tests.
  static std::array<uint32_t, 4> block(const std::array<uint32_t, 4>& counter,
                                       const std::array<uint32_t, 2>& key) {
    std::array<uint32_t, 4> x = counter;
    std::array<uint32_t, 2> k = key;
    for (int round = 0; round < 10; ++round) {
      const uint64_t p0 = kM0 * static_cast<uint64_t>(x[0]);
      const uint64_t p1 = kM1 * static_cast<uint64_t>(x[2]);
      const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
      const uint32_t lo0 = static_cast<uint32_t>(p0);
      const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
      const uint32_t lo1 = static_cast<uint32_t>(p1);
      x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
      k[0] += kW0;
      k[1] += kW1;
    }
    return x;
  }

  uint32_t next_u32() {
    if (buf_pos_ == 4) {
      buf_ = block(ctr_, key_);
      buf_pos_ = 0;
      if (++ctr_[0] == 0) ++ctr_[1];
    }
    return buf_[buf_pos_++];
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    const uint64_t hi = next_u32();
    const uint64_t lo = next_u32();
    const uint64_t bits = ((hi << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Index draw from unnormalized nonnegative weights by inverse-CDF scan.
  size_t categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform01() * total;
    double acc = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

  // Inverse-CDF draw against a precomputed cumulative row (last entry ~1).
  static size_t draw_from_cumulative(const std::vector<double>& cum, double u) {
    size_t lo = 0, hi = cum.size();
    while (lo < hi) {
      size_t mid = (lo + hi) / 2;
      if (cum[mid] <= u) lo = mid + 1;
      else hi = mid;
    }
    return lo < cum.size() ? lo : cum.size() - 1;
  }

 private:
  static constexpr uint64_t kM0 = 0xD2511F53ull;
  static constexpr uint64_t kM1 = 0xCD9E8D57ull;
  static constexpr uint32_t kW0 = 0x9E3779B9u;
  static constexpr uint32_t kW1 = 0xBB67AE85u;

  std::array<uint32_t, 2> key_;
  std::array<uint32_t, 4> ctr_;
  std::array<uint32_t, 4> buf_{};
  int buf_pos_;
};

}  // namespace berknash
