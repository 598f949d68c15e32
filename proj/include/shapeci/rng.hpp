#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace shapeci {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A pure
/// function of (key, counter), so replications can be drawn in any order.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, key);
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// (base seed, replication index); the stream it selects is a pure function of
/// the pair.
struct SeedSpec {
  std::uint64_t base = 0;
  std::uint64_t replication = 0;

  bool operator==(const SeedSpec&) const = default;
};

/// Stream tags keep the draws of different consumers apart for the same seed.
enum class StreamTag : std::uint32_t { WhiteNoise = 1, Regression = 2, RegressionBlocks = 3 };

/// Standard normal variates addressed by an increment index.
class NormalStream {
 public:
  NormalStream(SeedSpec seed, StreamTag tag)
      : key_{static_cast<std::uint32_t>(seed.base), static_cast<std::uint32_t>(seed.base >> 32)},
        rep_lo_(static_cast<std::uint32_t>(seed.replication)),
        rep_hi_(static_cast<std::uint32_t>(seed.replication >> 32) ^
                (static_cast<std::uint32_t>(tag) << 24)) {}

  double operator()(std::uint64_t index) const {
    const auto out = Philox4x32::apply({static_cast<std::uint32_t>(index),
                                        static_cast<std::uint32_t>(index >> 32), rep_lo_, rep_hi_},
                                       key_);
    // Two 53-bit uniforms; u1 in (0, 1] so the log is finite.
    const std::uint64_t a = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    const std::uint64_t b = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  Philox4x32::Key key_;
  std::uint32_t rep_lo_;
  std::uint32_t rep_hi_;
};

}  // namespace shapeci
