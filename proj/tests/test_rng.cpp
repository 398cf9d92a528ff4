#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "slowfast/rng.hpp"

using namespace slowfast;

TEST_CASE("philox4x32-10 known-answer vectors") {
    // Reference vectors from the Random123 distribution (kat_vectors).
    {
        const auto out = Philox4x32::block({0u, 0u, 0u, 0u}, {0u, 0u});
        CHECK(out[0] == 0x6627e8d5u);
        CHECK(out[1] == 0xe169c58du);
        CHECK(out[2] == 0xbc57ac4cu);
        CHECK(out[3] == 0x9b00dbd8u);
    }
    {
        const auto out = Philox4x32::block(
            {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
            {0xffffffffu, 0xffffffffu});
        CHECK(out[0] == 0x408f276du);
        CHECK(out[1] == 0x41c83b0eu);
        CHECK(out[2] == 0xa20bc7c6u);
        CHECK(out[3] == 0x6d5451fdu);
    }
    {
        const auto out = Philox4x32::block(
            {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
            {0xa4093822u, 0x299f31d0u});
        CHECK(out[0] == 0xd16cfe09u);
        CHECK(out[1] == 0x94fdccebu);
        CHECK(out[2] == 0x5001e420u);
        CHECK(out[3] == 0x24126ea1u);
    }
}

TEST_CASE("uniforms lie in (0,1] and are addressable") {
    const PathRng rng(12345, 7);
    for (std::uint64_t step = 0; step < 100; ++step) {
        const auto u = rng.uniforms(step, RngChannel::kJump, 3);
        CHECK(u[0] > 0.0);
        CHECK(u[0] <= 1.0);
        CHECK(u[1] > 0.0);
        CHECK(u[1] <= 1.0);
    }
    const auto base = rng.uniforms(5, RngChannel::kBrownian, 0);
    CHECK(rng.uniforms(5, RngChannel::kBrownian, 0)[0] == base[0]);
    CHECK(rng.uniforms(5, RngChannel::kJump, 0)[0] != base[0]);
    CHECK(rng.uniforms(6, RngChannel::kBrownian, 0)[0] != base[0]);
    CHECK(rng.uniforms(5, RngChannel::kBrownian, 1)[0] != base[0]);
    CHECK(PathRng(12345, 8).uniforms(5, RngChannel::kBrownian, 0)[0] != base[0]);
    CHECK(PathRng(12346, 7).uniforms(5, RngChannel::kBrownian, 0)[0] != base[0]);
}

TEST_CASE("gaussian moments") {
    const PathRng rng(99, 0);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0, sum3 = 0.0;
    for (int i = 0; i < n / 2; ++i) {
        const auto z = rng.gaussians(static_cast<std::uint64_t>(i), 0);
        for (const double v : z) {
            sum += v;
            sum2 += v * v;
            sum3 += v * v * v;
        }
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    const double skew = sum3 / n;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
    CHECK(std::abs(skew) < 0.03);
}
