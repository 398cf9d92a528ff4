#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace slowfast {

/// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
///
/// Stateless: every 128-bit output block is a pure function of (key, counter),
/// so draws can be addressed directly by (seed, path index, step index,
/// channel, draw index) and are reproducible independent of worker scheduling.
struct Philox4x32 {
    static constexpr std::uint32_t kMulA = 0xD2511F53u;
    static constexpr std::uint32_t kMulB = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
    static constexpr std::uint32_t kWeylB = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeylA;
                key[1] += kWeylB;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * ctr[2];
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

/// Channel labels for independent draw streams within one (path, step).
enum class RngChannel : std::uint32_t {
    kBrownian = 0,
    kJump = 1,
};

/// Addressed uniform draws for path simulation.
///
/// One block yields two doubles in (0,1], built from 53 bits each. The
/// counter layout is (draw, step, path_lo, path_hi ^ channel<<28); the key is
/// the 64-bit master seed.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path_index)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          path_lo_(static_cast<std::uint32_t>(path_index)),
          path_hi_(static_cast<std::uint32_t>(path_index >> 32)) {}

    /// Two uniforms in (0,1] for block `draw` of `channel` at step `step`.
    std::array<double, 2> uniforms(std::uint64_t step, RngChannel channel,
                                   std::uint32_t draw) const {
        const std::array<std::uint32_t, 4> ctr = {
            draw,
            static_cast<std::uint32_t>(step),
            path_lo_ ^ static_cast<std::uint32_t>(step >> 32),
            path_hi_ ^ (static_cast<std::uint32_t>(channel) << 28),
        };
        const auto words = Philox4x32::block(ctr, key_);
        return {to_unit(words[0], words[1]), to_unit(words[2], words[3])};
    }

    /// Two independent standard Gaussians (Box-Muller).
    std::array<double, 2> gaussians(std::uint64_t step, std::uint32_t draw) const {
        const auto u = uniforms(step, RngChannel::kBrownian, draw);
        const double r = std::sqrt(-2.0 * std::log(u[0]));
        const double angle = 2.0 * M_PI * u[1];
        return {r * std::cos(angle), r * std::sin(angle)};
    }

private:
    // 53-bit mantissa from two words, mapped to (0,1] so log() is safe.
    static double to_unit(std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t bits =
            ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 1.0) * 0x1p-53;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint32_t path_lo_ = 0;
    std::uint32_t path_hi_ = 0;
};

}  // namespace slowfast
