#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "qgp/state.hpp"

namespace qgp {

inline constexpr std::uint64_t fnv_offset_basis = 1469598103934665603ull;

inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = fnv_offset_basis) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = fnv_offset_basis) {
    return fnv1a(s.data(), s.size(), h);
}

/// Order-sensitive hash of layout and matrix entries; used to tie reported
/// quantities back to the exact state they were computed from.
inline std::uint64_t state_fingerprint(const DensityOperator& rho) {
    std::uint64_t h = fnv_offset_basis;
    for (const auto& s : rho.layout().subsystems()) {
        h = fnv1a(s.label, h);
        h = fnv1a(&s.dim, sizeof(s.dim), h);
    }
    const auto& m = rho.matrix();
    for (long i = 0; i < m.rows(); ++i)
        for (long j = 0; j < m.cols(); ++j) {
            const double re = m(i, j).real();
            const double im = m(i, j).imag();
            h = fnv1a(&re, sizeof(re), h);
            h = fnv1a(&im, sizeof(im), h);
        }
    return h;
}

} // namespace qgp
