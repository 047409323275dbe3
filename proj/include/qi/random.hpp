#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al., SC'11).
// Every draw is a pure function of (key, counter), so any partition of the
// counter space across threads reproduces the serial stream exactly.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace qi::random {

class Philox4x32 {
  public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr int rounds = 10;

    static constexpr Counter generate(Counter ctr, Key key)
    {
        for (int r = 0; r < rounds; ++r) {
            ctr = round(ctr, key);
            if (r + 1 < rounds) {
                key[0] += kW0;
                key[1] += kW1;
            }
        }
        return ctr;
    }

  private:
    static constexpr std::uint32_t kM0 = 0xD2511F53;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57;
    static constexpr std::uint32_t kW0 = 0x9E3779B9;
    static constexpr std::uint32_t kW1 = 0xBB67AE85;

    static constexpr Counter round(const Counter& c, const Key& k)
    {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// Keyed stream of normal deviates addressed by (stream, index).
class NormalStream {
  public:
    NormalStream(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream)
    {
    }

    /// Two independent standard normals for the given index (Box-Muller).
    std::pair<double, double> normal_pair(std::uint64_t index) const
    {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                      static_cast<std::uint32_t>(stream_),
                                      static_cast<std::uint32_t>(stream_ >> 32)};
        const auto out = Philox4x32::generate(ctr, key_);
        const double u1 = open_unit((static_cast<std::uint64_t>(out[0]) << 32) | out[1]);
        const double u2 = open_unit((static_cast<std::uint64_t>(out[2]) << 32) | out[3]);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        return {radius * std::cos(angle), radius * std::sin(angle)};
    }

    /// k-th deviate of the stream: element k % 2 of pair k / 2.
    double normal(std::uint64_t k) const
    {
        const auto pr = normal_pair(k / 2);
        return (k % 2 == 0) ? pr.first : pr.second;
    }

  private:
    /// 53-bit uniform in (0, 1).
    static double open_unit(std::uint64_t bits)
    {
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    Philox4x32::Key key_;
    std::uint64_t stream_;
};

} // namespace qi::random
