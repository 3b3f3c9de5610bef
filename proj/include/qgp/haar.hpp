#pragma once

// Seeded Haar-uniform unitary sampling: QR orthonormalisation of an i.i.d.
// complex Gaussian matrix with the diagonal phase correction that makes the
// distribution exactly Haar (plain QR alone is biased).  Each draw consumes a
// fixed number of generator blocks, so replay is stable.

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>

#include "qgp/layout.hpp"
#include "qgp/linear_map.hpp"
#include "qgp/rng.hpp"

namespace qgp {

class HaarSampler {
public:
    HaarSampler(std::uint64_t seed, long dim, std::uint64_t stream = 0)
        : rng_(seed, stream), dim_(dim) {
        if (dim < 1) throw std::invalid_argument("dimension must be positive");
    }

    /// Independent sampler on the same seed; use distinct stream indices for
    /// parallel or restarted work.
    HaarSampler derived(std::uint64_t stream, long dim = 0) const {
        return HaarSampler(rng_.seed(), dim > 0 ? dim : dim_, stream);
    }

    std::uint64_t seed() const { return rng_.seed(); }
    std::uint64_t stream() const { return rng_.stream(); }
    long dim() const { return dim_; }

    Eigen::MatrixXcd draw() {
        Eigen::MatrixXcd g(dim_, dim_);
        for (long i = 0; i < dim_; ++i)
            for (long j = 0; j < dim_; ++j) g(i, j) = rng_.complex_gaussian();
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
        Eigen::MatrixXcd q =
            qr.householderQ() * Eigen::MatrixXcd::Identity(dim_, dim_);
        const Eigen::MatrixXcd r = qr.matrixQR().template triangularView<Eigen::Upper>();
        for (long i = 0; i < dim_; ++i) {
            const std::complex<double> rii = r(i, i);
            q.col(i) *= std::abs(rii) > 0.0 ? rii / std::abs(rii) : 1.0;
        }
        return q;
    }

private:
    CounterRng rng_;
    long dim_;
};

/// One Haar sample wrapped as a unitary acting on `on`.
inline LinearMapOperator haar_unitary(HaarSampler& sampler,
                                      const SubsystemLayout& on) {
    if (on.total_dim() != sampler.dim())
        throw std::invalid_argument("sampler dimension does not match layout");
    return LinearMapOperator(MapKind::unitary, on, on, sampler.draw());
}

inline LinearMapOperator haar_unitary(HaarSampler& sampler,
                                      const std::string& label) {
    return haar_unitary(sampler, SubsystemLayout({{label, sampler.dim()}}));
}

} // namespace qgp
