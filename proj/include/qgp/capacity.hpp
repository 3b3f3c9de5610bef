#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qgp/channel.hpp"
#include "qgp/coding.hpp"
#include "qgp/haar.hpp"
#include "qgp/layout.hpp"
#include "qgp/linear_map.hpp"
#include "qgp/rng.hpp"
#include "qgp/state.hpp"
#include "qgp/tensor_ops.hpp"

namespace qgp {

// Search for good constrained input states.  Every sigma with the required
// side marginal arises as (id_S (x) E)(psi^{SS'}) for a CPTP map E from the
// side purifier S' into (A, A'): we parametrize E through an isometry
// S' -> A (x) A' (x) F given by a square unitary on the padded space, applied
// to the purifier with a fixed ancilla ket, and hill-climb over the unitary
// group with random Hermitian exponential steps of shrinking size.  The
// result is a lower bound on the supremum; nothing here claims optimality.

struct CapacityResult {
    DensityOperator best_sigma;  ///< best constrained input found, on (A, A', S)
    double rate = 0.0;           ///< qubits per use; lower bound on the supremum
    double classical_rate = 0.0; ///< 2x rate via dense coding, same caveat
    long iterations = 0;         ///< objective evaluations across all restarts
    int restarts = 0;
    /// (iteration, rate) at every global-best improvement.
    std::vector<std::pair<long, double>> trace;
    std::pair<long, long> dims_used{0, 0};  ///< (|A|, ancilla |F|)
    std::uint64_t seed = 0;
};

namespace detail {

/// exp(i alpha H) for a Frobenius-normalised random Hermitian direction H.
inline Eigen::MatrixXcd hermitian_step(CounterRng& rng, long dim, double alpha) {
    Eigen::MatrixXcd g(dim, dim);
    for (long i = 0; i < dim; ++i)
        for (long j = 0; j < dim; ++j) g(i, j) = rng.complex_gaussian();
    Eigen::MatrixXcd h = 0.5 * (g + g.adjoint());
    const double scale = h.norm();
    if (scale > 0.0) h /= scale;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Eigen::VectorXcd phases(dim);
    for (long i = 0; i < dim; ++i)
        phases(i) = std::exp(std::complex<double>(0.0, alpha * es.eigenvalues()(i)));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace detail

inline CapacityResult optimize_capacity(
    const SideInfoChannel& ch, long dim_a, long env_dim, int restarts,
    const HaarSampler& sampler, int max_iters = 10000,
    long dim_cap = SubsystemLayout::default_dim_cap) {
    if (dim_a < 1) throw std::invalid_argument("dim_a must be positive");
    if (env_dim < 1) throw std::invalid_argument("env_dim must be positive");
    if (restarts < 1) throw std::invalid_argument("need at least one restart");
    if (max_iters < 1) throw std::invalid_argument("need at least one step");

    long sp_dim = 1, ap_dim = 1;
    for (const auto& l : ch.encoder_labels())
        sp_dim *= ch.side_state().layout().dim_of(l);
    for (const auto& l : ch.message_labels())
        ap_dim *= ch.channel().in_layout().dim_of(l);
    const long m = dim_a * ap_dim * env_dim;
    if (m < sp_dim)
        throw std::invalid_argument(
            "isometry target smaller than the side purifier; raise dim_a or "
            "env_dim");

    std::vector<Subsystem> out_subs{{"A", dim_a}};
    for (const auto& l : ch.message_labels())
        out_subs.push_back({l, ch.channel().in_layout().dim_of(l)});
    out_subs.push_back({"F", env_dim});
    const SubsystemLayout iso_out(out_subs, dim_cap);
    const SubsystemLayout iso_in =
        ch.side_state().layout().subset(ch.encoder_labels());
    const Eigen::MatrixXcd embed = Eigen::MatrixXcd::Identity(m, sp_dim);

    std::vector<std::string> keep{"A"};
    for (const auto& l : ch.message_labels()) keep.push_back(l);
    for (const auto& l : ch.side_labels()) keep.push_back(l);

    const auto realise = [&](const Eigen::MatrixXcd& u) {
        const LinearMapOperator iso(MapKind::isometry, iso_in, iso_out,
                                    u * embed);
        return marginal(apply_map(iso, ch.side_state(), dim_cap), keep);
    };
    const auto rate_of = [&](const Eigen::MatrixXcd& u) {
        return gp_rate(realise(u), ch);
    };

    long iters = 0;
    double best_rate = -1e300;
    Eigen::MatrixXcd best_u;
    std::vector<std::pair<long, double>> trace;
    // strict improvement keeps the earliest (lowest-stream) candidate on ties
    const auto consider = [&](double r, const Eigen::MatrixXcd& u) {
        if (r > best_rate) {
            best_rate = r;
            best_u = u;
            trace.emplace_back(iters, r);
        }
    };

    const std::uint64_t base = sampler.stream() << 20;
    for (int k = 0; k < restarts; ++k) {
        HaarSampler starts = sampler.derived(
            base + 2 * static_cast<std::uint64_t>(k) + 1, m);
        CounterRng steps(sampler.seed(),
                         base + 2 * static_cast<std::uint64_t>(k) + 2);

        Eigen::MatrixXcd u = starts.draw();
        double cur = rate_of(u);
        ++iters;
        consider(cur, u);

        double alpha = 0.5;
        double window_ref = cur;
        int stalled = 0;
        for (int it = 0; it < max_iters; ++it) {
            const Eigen::MatrixXcd cand =
                u * detail::hermitian_step(steps, m, alpha);
            const double r = rate_of(cand);
            ++iters;
            if (r > cur) {
                u = cand;
                cur = r;
                alpha = std::min(alpha * 1.2, 2.0);
                consider(cur, u);
            } else {
                alpha *= 0.85;
            }
            if (cur - window_ref > 1e-7 * std::max(1.0, std::abs(cur))) {
                window_ref = cur;
                stalled = 0;
            } else if (++stalled >= 50) {
                break;
            }
            if (alpha < 1e-7) break;
        }
    }

    return CapacityResult{
        .best_sigma = permute_subsystems(realise(best_u), keep),
        .rate = best_rate,
        .classical_rate = 2.0 * best_rate,
        .iterations = iters,
        .restarts = restarts,
        .trace = std::move(trace),
        .dims_used = {dim_a, env_dim},
        .seed = sampler.seed(),
    };
}

} // namespace qgp
