#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace wip::rng {

// Philox4x32-10 counter-based generator (Salmon et al. reference constants).
// A draw is a pure function of (key, counter), so sample paths are
// reproducible regardless of how work is split across threads.
struct Philox4x32 {
  static constexpr uint32_t kMul0 = 0xD2511F53u;
  static constexpr uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr uint32_t kWey0 = 0x9E3779B9u;
  static constexpr uint32_t kWey1 = 0xBB67AE85u;

  static std::array<uint32_t, 4> block(std::array<uint32_t, 2> key,
                                       std::array<uint32_t, 4> ctr) {
    for (int round = 0; round < 10; ++round) {
      const uint64_t p0 = static_cast<uint64_t>(kMul0) * ctr[0];
      const uint64_t p1 = static_cast<uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<uint32_t>(p1),
             static_cast<uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<uint32_t>(p0)};
      key[0] += kWey0;
      key[1] += kWey1;
    }
    return ctr;
  }
};

// Standard normal draw addressed by (seed, sample, particle, step, component).
// One block feeds a Box-Muller pair; component k uses element k%2 of pair k/2.
// Index limits: sample/particle/step < 2^32.
inline double normal_draw(uint64_t seed, uint64_t sample, uint32_t particle,
                          uint32_t step, uint32_t component) {
  const auto w = Philox4x32::block(
      {static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
      {static_cast<uint32_t>(sample), particle, step, component >> 1});
  const uint64_t b1 = (static_cast<uint64_t>(w[0]) << 32) | w[1];
  const uint64_t b2 = (static_cast<uint64_t>(w[2]) << 32) | w[3];
  const double u1 = (static_cast<double>(b1 >> 11) + 0.5) * 0x1.0p-53;  // (0,1)
  const double u2 = (static_cast<double>(b2 >> 11) + 0.5) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.28318530717958647692528676655900577 * u2;
  return (component & 1u) ? r * std::sin(a) : r * std::cos(a);
}

}  // namespace wip::rng
