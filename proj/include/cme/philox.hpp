#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace cme {

// Philox4x32-10 counter-based generator. Variates are a pure function of
// (key, counter), so any partition of samples across workers reproduces the
// same stream.
struct Philox4x32 {
    static std::array<std::uint32_t, 4> block(std::uint64_t key, std::uint64_t ctr_lo,
                                              std::uint64_t ctr_hi) {
        constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
        constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
        std::uint32_t c0 = static_cast<std::uint32_t>(ctr_lo);
        std::uint32_t c1 = static_cast<std::uint32_t>(ctr_lo >> 32);
        std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi);
        std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi >> 32);
        std::uint32_t k0 = static_cast<std::uint32_t>(key);
        std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
        for (int round = 0; round < 10; ++round) {
            std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c0;
            std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c2;
            std::uint32_t h0 = static_cast<std::uint32_t>(p0 >> 32), l0 = static_cast<std::uint32_t>(p0);
            std::uint32_t h1 = static_cast<std::uint32_t>(p1 >> 32), l1 = static_cast<std::uint32_t>(p1);
            std::uint32_t n0 = h1 ^ c1 ^ k0, n1 = l1, n2 = h0 ^ c3 ^ k1, n3 = l0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += W0;
            k1 += W1;
        }
        return {c0, c1, c2, c3};
    }
};

// Two standard normals via Box-Muller from one Philox block.
inline void philox_normal_pair(std::uint64_t key, std::uint64_t sample, std::uint64_t block_idx,
                               double& z0, double& z1) {
    const auto out = Philox4x32::block(key, sample, block_idx);
    const std::uint64_t bits0 = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    const std::uint64_t bits1 = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    const double u0 = (static_cast<double>(bits0 >> 11) + 0.5) * 0x1p-53;  // in (0,1)
    const double u1 = (static_cast<double>(bits1 >> 11) + 0.5) * 0x1p-53;
    const double radius = std::sqrt(-2.0 * std::log(u0));
    const double angle = 2.0 * M_PI * u1;
    z0 = radius * std::cos(angle);
    z1 = radius * std::sin(angle);
}

}  // namespace cme
