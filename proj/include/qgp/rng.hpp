#pragma once

// Counter-based pseudo-randomness (Philox4x32-10).  Every draw is a pure
// function of (seed, stream, block counter), so independently seeded parts of
// a computation can consume randomness in any order without perturbing each
// other, and a run is reproducible from its seed alone.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace qgp {

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         std::array<std::uint32_t, 2>& key) {
    constexpr std::uint64_t m0 = 0xD2511F53ull;
    constexpr std::uint64_t m1 = 0xCD9E8D57ull;
    const std::uint64_t p0 = m0 * ctr[0];
    const std::uint64_t p1 = m1 * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += 0x9E3779B9u; // standard Philox Weyl key-schedule constants
    key[1] += 0xBB67AE85u;
}

} // namespace detail

/// One block of Philox4x32 with 10 rounds.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) detail::philox_round(ctr, key);
    return ctr;
}

/// Deterministic random stream addressed by (seed, stream, block).
///
/// The 128-bit Philox counter is laid out as [block_lo, block_hi, stream_lo,
/// stream_hi] and the 64-bit seed forms the key, so distinct streams of the
/// same seed are disjoint by construction.  `derived` hands out substreams for
/// restarts, Monte Carlo repetitions, etc.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream), block_(0) {}

    CounterRng derived(std::uint64_t stream) const { return CounterRng(seed_, stream); }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t block() const { return block_; }

    std::array<std::uint32_t, 4> next_block() {
        const std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(block_),
            static_cast<std::uint32_t>(block_ >> 32),
            static_cast<std::uint32_t>(stream_),
            static_cast<std::uint32_t>(stream_ >> 32)};
        const std::array<std::uint32_t, 2> key = {
            static_cast<std::uint32_t>(seed_),
            static_cast<std::uint32_t>(seed_ >> 32)};
        ++block_;
        return philox4x32(ctr, key);
    }

    /// Uniform double in [0, 1) with 53 random bits.  Consumes one block.
    double uniform() {
        const auto w = next_block();
        const std::uint64_t bits =
            (static_cast<std::uint64_t>(w[1]) << 32) | w[0];
        return static_cast<double>(bits >> 11) * 0x1.0p-53;
    }

    /// Standard complex Gaussian (E|z|^2 = 1) via Box-Muller.  Consumes one
    /// block: words 0,1 give the radius, words 2,3 the phase.
    std::complex<double> complex_gaussian() {
        const auto w = next_block();
        const std::uint64_t a = (static_cast<std::uint64_t>(w[1]) << 32) | w[0];
        const std::uint64_t b = (static_cast<std::uint64_t>(w[3]) << 32) | w[2];
        const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53; // (0, 1]
        const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;      // [0, 1)
        const double r = std::sqrt(-std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(phi), r * std::sin(phi)};
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_;
};

} // namespace qgp
