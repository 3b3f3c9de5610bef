#pragma once

// Monte Carlo probes of the decoupling behaviour of Haar-random unitaries:
// rotate one subsystem, discard part of it, and measure how far the remainder
// is from being maximally mixed and uncorrelated with a reference.  The
// averaged squared trace norm obeys
//
//   E_U ||rho_kept,R(U) - I/|kept| (x) psi_R||_1^2  <=  (|A||R|/|dropped|^2) tr[(psi_AR)^2]
//
// which is what fqsw_bound_check estimates.  iid_decoupling_experiment runs
// the block version: restrict a tensor power to its typical subspace first,
// then rotate and split the compressed system.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qgp/entropy.hpp"
#include "qgp/haar.hpp"
#include "qgp/state.hpp"
#include "qgp/tensor_ops.hpp"
#include "qgp/typicality.hpp"

namespace qgp {

/// Rotate the `a_label` factor of `psi` by `u`, regroup it as kept (x)
/// dropped, and return the joint state of the kept part with the reference
/// subsystems, tracing out everything else.  The kept part is labelled
/// `a_label + "bar"` and comes first in the returned layout, followed by
/// `r_labels` in the given order.
inline DensityOperator decoupled_residual(const PureState& psi,
                                          const std::string& a_label,
                                          const std::vector<std::string>& r_labels,
                                          const Eigen::MatrixXcd& u, long kept_dim,
                                          long dropped_dim) {
    const SubsystemLayout& layout = psi.layout();
    if (!layout.has(a_label))
        throw std::invalid_argument("state has no subsystem '" + a_label + "'");
    if (r_labels.empty())
        throw std::invalid_argument("at least one reference subsystem is required");
    for (const auto& r : r_labels)
        if (r == a_label || !layout.has(r))
            throw std::invalid_argument("bad reference subsystem '" + r + "'");
    const long dim_a = layout.dim_of(a_label);
    if (kept_dim < 1 || dropped_dim < 1 || kept_dim * dropped_dim != dim_a)
        throw std::invalid_argument("split does not factor the rotated subsystem");
    if (u.rows() != dim_a || u.cols() != dim_a)
        throw std::invalid_argument("unitary dimension does not match subsystem");

    const LinearMapOperator rotate(
        MapKind::unitary, SubsystemLayout({{a_label, dim_a}}),
        SubsystemLayout({{a_label + "bar", kept_dim}, {a_label + "hat", dropped_dim}}),
        u);
    const PureState rotated = apply_map(rotate, psi);

    std::vector<std::string> keep = {a_label + "bar"};
    keep.insert(keep.end(), r_labels.begin(), r_labels.end());
    return permute_subsystems(marginal(rotated, keep), keep);
}

/// Sample statistics for the averaged decoupling inequality.
struct DecouplingReport {
    long dim_a = 0;
    long dim_dropped = 0;
    long dim_kept = 0;
    long dim_r = 0;
    int n_samples = 0;
    double lhs_mean = 0.0;
    double lhs_max = 0.0;
    std::vector<double> lhs_values; // squared trace norms, one per sample
    double rhs_bound = 0.0;
    double purity = 0.0; // tr[(psi_AR)^2]
    std::uint64_t seed = 0;
    double std_error = 0.0;
    bool mean_within_bound = false;       // lhs_mean <= rhs_bound + 3 std errors
    bool any_sample_within_bound = false; // existence of a good unitary
};

/// Estimate the left-hand side of the averaged decoupling inequality by Monte
/// Carlo and compare it against the closed-form right-hand side.  Sample i is
/// drawn from the substream (sampler.stream() << 20) + 1 + i, so the report is
/// reproducible and samples could be evaluated in any order.
inline DecouplingReport fqsw_bound_check(const PureState& psi,
                                         const std::string& a_label,
                                         const std::vector<std::string>& r_labels,
                                         long kept_dim, long dropped_dim,
                                         const HaarSampler& sampler, int n_samples) {
    if (n_samples < 1) throw std::invalid_argument("need at least one sample");
    const SubsystemLayout& layout = psi.layout();
    if (!layout.has(a_label))
        throw std::invalid_argument("state has no subsystem '" + a_label + "'");
    const long dim_a = layout.dim_of(a_label);
    if (sampler.dim() != dim_a)
        throw std::invalid_argument("sampler dimension does not match subsystem");
    if (kept_dim < 1 || dropped_dim < 1 || kept_dim * dropped_dim != dim_a)
        throw std::invalid_argument("split does not factor the rotated subsystem");

    std::vector<std::string> ar_labels = {a_label};
    ar_labels.insert(ar_labels.end(), r_labels.begin(), r_labels.end());
    const DensityOperator psi_ar = marginal(psi, ar_labels);
    const DensityOperator psi_r =
        permute_subsystems(marginal(psi, r_labels), r_labels);

    DecouplingReport rep;
    rep.dim_a = dim_a;
    rep.dim_dropped = dropped_dim;
    rep.dim_kept = kept_dim;
    rep.dim_r = psi_r.layout().total_dim();
    rep.n_samples = n_samples;
    rep.purity = (psi_ar.matrix() * psi_ar.matrix()).trace().real();
    rep.rhs_bound = static_cast<double>(dim_a) * static_cast<double>(rep.dim_r) /
                    (static_cast<double>(dropped_dim) * dropped_dim) * rep.purity;
    rep.seed = sampler.seed();

    const DensityOperator target = tensor_product(
        DensityOperator::maximally_mixed(
            SubsystemLayout({{a_label + "bar", kept_dim}})),
        psi_r);

    rep.lhs_values.reserve(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        HaarSampler draw_from = sampler.derived((sampler.stream() << 20) + 1 + i);
        const DensityOperator residual = decoupled_residual(
            psi, a_label, r_labels, draw_from.draw(), kept_dim, dropped_dim);
        const double d = trace_distance(residual, target);
        rep.lhs_values.push_back(d * d);
    }

    double sum = 0.0;
    for (double v : rep.lhs_values) {
        sum += v;
        rep.lhs_max = std::max(rep.lhs_max, v);
    }
    rep.lhs_mean = sum / n_samples;
    if (n_samples > 1) {
        double ss = 0.0;
        for (double v : rep.lhs_values) ss += (v - rep.lhs_mean) * (v - rep.lhs_mean);
        rep.std_error = std::sqrt(ss / (n_samples - 1)) / std::sqrt(double(n_samples));
    }
    rep.mean_within_bound = rep.lhs_mean <= rep.rhs_bound + 3.0 * rep.std_error;
    for (double v : rep.lhs_values)
        if (v <= rep.rhs_bound) {
            rep.any_sample_within_bound = true;
            break;
        }
    return rep;
}

/// Spread of the per-sample decoupling values around their mean.
struct ConcentrationReport {
    DecouplingReport decoupling;
    double std_dev = 0.0;
    double outlier_fraction = 0.0; // fraction beyond mean + 2 std deviations
};

inline ConcentrationReport concentration_probe(const PureState& psi,
                                               const std::string& a_label,
                                               const std::vector<std::string>& r_labels,
                                               long kept_dim, long dropped_dim,
                                               const HaarSampler& sampler,
                                               int n_samples) {
    if (n_samples < 100)
        throw std::invalid_argument("concentration probe needs at least 100 samples");
    ConcentrationReport rep;
    rep.decoupling = fqsw_bound_check(psi, a_label, r_labels, kept_dim, dropped_dim,
                                      sampler, n_samples);
    double ss = 0.0;
    for (double v : rep.decoupling.lhs_values) {
        const double d = v - rep.decoupling.lhs_mean;
        ss += d * d;
    }
    rep.std_dev = std::sqrt(ss / (n_samples - 1));
    long outliers = 0;
    for (double v : rep.decoupling.lhs_values)
        if (v > rep.decoupling.lhs_mean + 2.0 * rep.std_dev) ++outliers;
    rep.outlier_fraction = static_cast<double>(outliers) / n_samples;
    return rep;
}

/// One block-length run of the typical-subspace decoupling experiment.
struct IidDecouplingReport {
    int n = 0;
    double epsilon = 0.0; // typicality width, also used as the size slack
    long typical_dim = 0;
    double typical_mass = 0.0; // weight kept by the typical projection
    long dim_kept = 0;
    long dim_dropped = 0;
    double mutual_information = 0.0; // between the rotated part and the references
    double distance = 0.0; // trace distance of the residual from its target
    std::uint64_t seed = 0;
};

/// Project the n-th tensor power of `sigma` onto the typical subspace of the
/// `a_label` marginal, rotate the compressed system by one Haar draw, split it,
/// and measure how close the kept part plus the reference copies are to
/// maximally-mixed (x) product-of-marginals.  Subsystem labels of copy i carry
/// the suffix i+1.  By default the dropped dimension holds
/// ceil(n (I(A;R)/2 + epsilon)) qubits, clipped to the typical dimension and
/// rounded up to a divisor of it; an explicit `dropped_dim` must divide the
/// typical dimension.  The post-projection state is renormalized before the
/// rotation; the discarded weight is reported as `typical_mass`.
inline IidDecouplingReport iid_decoupling_experiment(
    const PureState& sigma, const std::string& a_label,
    const std::vector<std::string>& r_labels, int n, const HaarSampler& sampler,
    std::optional<long> dropped_dim = std::nullopt,
    std::optional<double> epsilon = std::nullopt,
    long dim_cap = SubsystemLayout::default_dim_cap) {
    if (n < 1) throw std::invalid_argument("block length must be positive");
    const SubsystemLayout& layout = sigma.layout();
    if (!layout.has(a_label))
        throw std::invalid_argument("state has no subsystem '" + a_label + "'");
    for (const auto& r : r_labels)
        if (r == a_label || !layout.has(r))
            throw std::invalid_argument("bad reference subsystem '" + r + "'");

    IidDecouplingReport rep;
    rep.n = n;
    rep.epsilon = epsilon ? *epsilon : default_epsilon_schedule().value(n);
    rep.seed = sampler.seed();

    const std::string typ_label = a_label + "typ";
    const TypicalProjector tp(marginal(sigma, {a_label}), n, rep.epsilon, a_label,
                              typ_label, dim_cap);
    rep.typical_dim = tp.typical_dim();

    // Tensor power with per-copy label suffixes matching the compressor's.
    auto copy_renames = [&](int i) {
        std::map<std::string, std::string> renames;
        for (const auto& s : layout.subsystems())
            renames[s.label] = s.label + std::to_string(i + 1);
        return renames;
    };
    PureState big = relabel_subsystems(sigma, copy_renames(0));
    for (int i = 1; i < n; ++i)
        big = tensor_product(big, relabel_subsystems(sigma, copy_renames(i)));

    const PureState projected = apply_map(tp.compressor(), big);
    rep.typical_mass = projected.amplitudes().squaredNorm();
    if (rep.typical_mass < 1e-12)
        throw std::runtime_error("typical projection removed the whole state");
    const PureState compressed = PureState::unchecked(
        projected.layout(),
        projected.amplitudes() / std::sqrt(rep.typical_mass));

    rep.mutual_information =
        mutual_information(sigma.density(), {a_label}, r_labels);

    if (dropped_dim) {
        if (*dropped_dim < 1 || *dropped_dim > rep.typical_dim ||
            rep.typical_dim % *dropped_dim != 0)
            throw std::invalid_argument(
                "split must divide and not exceed the typical dimension");
        rep.dim_dropped = *dropped_dim;
    } else {
        const double qubits = n * (0.5 * rep.mutual_information + rep.epsilon);
        const long t = std::max<long>(0, static_cast<long>(std::ceil(qubits - 1e-9)));
        long want = rep.typical_dim;
        if (t < 62 && (1L << t) < rep.typical_dim) {
            for (long d = 1L << t; d <= rep.typical_dim; ++d)
                if (rep.typical_dim % d == 0) {
                    want = d;
                    break;
                }
        }
        rep.dim_dropped = want;
    }
    rep.dim_kept = rep.typical_dim / rep.dim_dropped;

    // One draw, addressed by the sampler's own (seed, stream).
    const Eigen::MatrixXcd u =
        sampler.derived(sampler.stream(), rep.typical_dim).draw();

    std::vector<std::string> ref_copies;
    for (int i = 0; i < n; ++i)
        for (const auto& r : r_labels) ref_copies.push_back(r + std::to_string(i + 1));

    DensityOperator target = DensityOperator::maximally_mixed(
        SubsystemLayout({{typ_label + "bar", rep.dim_kept}}));
    const DensityOperator psi_r =
        permute_subsystems(marginal(sigma, r_labels), r_labels);
    for (int i = 0; i < n; ++i) {
        std::map<std::string, std::string> renames;
        for (const auto& r : r_labels) renames[r] = r + std::to_string(i + 1);
        target = tensor_product(target, relabel_subsystems(psi_r, renames));
    }

    const DensityOperator residual = decoupled_residual(
        compressed, typ_label, ref_copies, u, rep.dim_kept, rep.dim_dropped);
    rep.distance = trace_distance(residual, target);
    return rep;
}

} // namespace qgp
