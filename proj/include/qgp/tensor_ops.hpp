#pragma once

// Operations on labelled states and maps: tensor products, permutations,
// partial traces, purification, distances, and the Uhlmann isometry between
// purifications.  Flattened indices are row-major over the layout, so the
// first subsystem is the most significant digit and Kronecker products
// correspond to layout concatenation.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qgp/layout.hpp"
#include "qgp/linear_map.hpp"
#include "qgp/state.hpp"

namespace qgp {

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (long i = 0; i < a.rows(); ++i)
        for (long j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Eigen::VectorXcd kron(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    Eigen::VectorXcd out(a.size() * b.size());
    for (long i = 0; i < a.size(); ++i)
        out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

namespace detail {

/// map[f_old] = f_new for reordering subsystems to `order`.
inline std::vector<long> permutation_map(const SubsystemLayout& layout,
                                         const std::vector<std::string>& order) {
    if (order.size() != layout.count())
        throw std::invalid_argument("permutation must mention every subsystem");
    std::vector<std::size_t> positions;
    positions.reserve(order.size());
    std::vector<bool> seen(layout.count(), false);
    for (const auto& l : order) {
        const std::size_t p = layout.index_of(l);
        if (seen[p])
            throw std::invalid_argument("duplicate label '" + l + "' in permutation");
        seen[p] = true;
        positions.push_back(p);
    }
    const auto dims = layout.dims();
    std::vector<long> new_dims(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) new_dims[k] = dims[positions[k]];
    std::vector<long> new_strides(order.size(), 1);
    for (std::size_t k = order.size(); k-- > 1;)
        new_strides[k - 1] = new_strides[k] * new_dims[k];

    const long total = layout.total_dim();
    std::vector<long> map(total);
    std::vector<long> digits;
    for (long f = 0; f < total; ++f) {
        decode_index(dims, f, digits);
        long g = 0;
        for (std::size_t k = 0; k < order.size(); ++k)
            g += new_strides[k] * digits[positions[k]];
        map[f] = g;
    }
    return map;
}

/// Flat-index offsets contributed by a subset of subsystems (all other digits
/// zero), enumerated over that subset's own index range.
inline std::vector<long> subset_offsets(const SubsystemLayout& layout,
                                        const std::vector<std::size_t>& positions) {
    const auto dims = layout.dims();
    const auto strides = layout.strides();
    std::vector<long> sub_dims;
    sub_dims.reserve(positions.size());
    long sub_total = 1;
    for (auto p : positions) {
        sub_dims.push_back(dims[p]);
        sub_total *= dims[p];
    }
    std::vector<long> offsets(sub_total);
    std::vector<long> digits;
    for (long f = 0; f < sub_total; ++f) {
        decode_index(sub_dims, f, digits);
        long off = 0;
        for (std::size_t k = 0; k < positions.size(); ++k)
            off += strides[positions[k]] * digits[k];
        offsets[f] = off;
    }
    return offsets;
}

/// Positions of `labels` within `layout`, sorted into layout order.
inline std::vector<std::size_t> layout_positions_sorted(
    const SubsystemLayout& layout, const std::vector<std::string>& labels) {
    std::vector<std::size_t> positions;
    positions.reserve(labels.size());
    for (const auto& l : labels) {
        const std::size_t p = layout.index_of(l);
        if (std::find(positions.begin(), positions.end(), p) != positions.end())
            throw std::invalid_argument("label '" + l + "' listed twice");
        positions.push_back(p);
    }
    std::sort(positions.begin(), positions.end());
    return positions;
}

} // namespace detail

inline PureState permute_subsystems(const PureState& psi,
                                    const std::vector<std::string>& order) {
    const auto map = detail::permutation_map(psi.layout(), order);
    Eigen::VectorXcd out(psi.dim());
    for (long f = 0; f < psi.dim(); ++f) out(map[f]) = psi.amplitudes()(f);
    return PureState::unchecked(psi.layout().subset(order), std::move(out));
}

inline DensityOperator permute_subsystems(const DensityOperator& rho,
                                          const std::vector<std::string>& order) {
    const auto map = detail::permutation_map(rho.layout(), order);
    const long d = rho.dim();
    Eigen::MatrixXcd out(d, d);
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j) out(map[i], map[j]) = rho.matrix()(i, j);
    return DensityOperator::unchecked(rho.layout().subset(order), std::move(out));
}

inline PureState tensor_product(const PureState& a, const PureState& b,
                                long dim_cap = SubsystemLayout::default_dim_cap) {
    return PureState::unchecked(a.layout().concat(b.layout(), dim_cap),
                                kron(a.amplitudes(), b.amplitudes()));
}

inline DensityOperator tensor_product(const DensityOperator& a,
                                      const DensityOperator& b,
                                      long dim_cap = SubsystemLayout::default_dim_cap) {
    return DensityOperator::unchecked(a.layout().concat(b.layout(), dim_cap),
                                      kron(a.matrix(), b.matrix()));
}

inline LinearMapOperator tensor_product(const LinearMapOperator& a,
                                        const LinearMapOperator& b,
                                        long dim_cap = SubsystemLayout::default_dim_cap) {
    MapKind kind;
    if (a.kind() == MapKind::unitary && b.kind() == MapKind::unitary)
        kind = MapKind::unitary;
    else if ((a.kind() == MapKind::unitary || a.kind() == MapKind::isometry) &&
             (b.kind() == MapKind::unitary || b.kind() == MapKind::isometry))
        kind = MapKind::isometry;
    else if (a.kind() == MapKind::projector && b.kind() == MapKind::projector)
        kind = MapKind::projector;
    else
        kind = MapKind::partial_isometry;
    return LinearMapOperator(kind, a.in_layout().concat(b.in_layout(), dim_cap),
                             a.out_layout().concat(b.out_layout(), dim_cap),
                             kron(a.matrix(), b.matrix()));
}

/// Reduced state on `keep`; result subsystems stay in the input's order.
inline DensityOperator partial_trace(const DensityOperator& rho,
                                     const std::vector<std::string>& keep) {
    if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep set");
    const auto& layout = rho.layout();
    const auto keep_pos = detail::layout_positions_sorted(layout, keep);
    std::vector<std::size_t> tr_pos;
    for (std::size_t p = 0; p < layout.count(); ++p)
        if (std::find(keep_pos.begin(), keep_pos.end(), p) == keep_pos.end())
            tr_pos.push_back(p);

    const auto keep_off = detail::subset_offsets(layout, keep_pos);
    const auto tr_off = detail::subset_offsets(layout, tr_pos);
    const long kd = static_cast<long>(keep_off.size());

    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(kd, kd);
    for (long i = 0; i < kd; ++i)
        for (long j = 0; j < kd; ++j) {
            std::complex<double> acc = 0.0;
            for (long t : tr_off) acc += rho.matrix()(keep_off[i] + t, keep_off[j] + t);
            out(i, j) = acc;
        }

    std::vector<Subsystem> kept;
    for (auto p : keep_pos) kept.push_back(layout.subsystem(p));
    return DensityOperator::unchecked(
        SubsystemLayout(std::move(kept), std::numeric_limits<long>::max()),
        std::move(out));
}

/// Reduced state of a pure state, via the Gram matrix of the reshaped
/// amplitude vector (avoids materialising the full density operator).
inline DensityOperator marginal(const PureState& psi,
                                const std::vector<std::string>& keep) {
    if (keep.empty()) throw std::invalid_argument("marginal: empty keep set");
    const auto& layout = psi.layout();
    const auto keep_pos = detail::layout_positions_sorted(layout, keep);
    std::vector<std::string> order;
    std::vector<Subsystem> kept;
    for (auto p : keep_pos) {
        order.push_back(layout.subsystem(p).label);
        kept.push_back(layout.subsystem(p));
    }
    for (std::size_t p = 0; p < layout.count(); ++p)
        if (std::find(keep_pos.begin(), keep_pos.end(), p) == keep_pos.end())
            order.push_back(layout.subsystem(p).label);
    const PureState permuted = permute_subsystems(psi, order);

    long kd = 1;
    for (const auto& s : kept) kd *= s.dim;
    const long td = layout.total_dim() / kd;
    Eigen::Map<const Eigen::Matrix<std::complex<double>, Eigen::Dynamic,
                                   Eigen::Dynamic, Eigen::RowMajor>>
        m(permuted.amplitudes().data(), kd, td);
    return DensityOperator::unchecked(
        SubsystemLayout(std::move(kept), std::numeric_limits<long>::max()),
        m * m.adjoint());
}

/// Minimal purification: appends a reference subsystem whose dimension is the
/// numerical rank of rho (relative eigenvalue cutoff 1e-12).
inline PureState purify(const DensityOperator& rho, const std::string& ref_label,
                        double rank_cutoff_rel = 1e-12) {
    if (rho.layout().has(ref_label))
        throw std::invalid_argument("reference label '" + ref_label +
                                    "' already present");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.matrix());
    const auto& evals = es.eigenvalues();
    const long d = rho.dim();
    const double cutoff = rank_cutoff_rel * std::max(evals.maxCoeff(), 0.0);
    std::vector<long> kept; // indices of retained eigenvalues, largest first
    for (long i = d - 1; i >= 0; --i)
        if (evals(i) > cutoff && evals(i) > 0.0) kept.push_back(i);
    if (kept.empty()) throw std::invalid_argument("cannot purify the zero operator");

    const long r = static_cast<long>(kept.size());
    Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(d * r);
    for (long k = 0; k < r; ++k) {
        const double root = std::sqrt(evals(kept[k]));
        for (long a = 0; a < d; ++a) amps(a * r + k) = root * es.eigenvectors()(a, kept[k]);
    }
    amps /= amps.norm();
    return PureState::unchecked(
        rho.layout().concat(SubsystemLayout({{ref_label, r}})), std::move(amps));
}

/// Trace norm of a Hermitian matrix (sum of |eigenvalues|).
inline double trace_norm(const Eigen::MatrixXcd& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

namespace detail {

inline DensityOperator aligned_to(const SubsystemLayout& target,
                                  const DensityOperator& x) {
    if (x.layout() == target) return x;
    const auto order = target.labels();
    for (const auto& l : order)
        if (!x.layout().has(l) || x.layout().dim_of(l) != target.dim_of(l))
            throw std::invalid_argument(
                "operands are not defined on the same subsystems ('" + l + "')");
    if (x.layout().count() != target.count())
        throw std::invalid_argument("operands are not defined on the same subsystems");
    return permute_subsystems(x, order);
}

} // namespace detail

/// ||rho - sigma||_1 after aligning layouts; ranges over [0, 2].
inline double trace_distance(const DensityOperator& rho, const DensityOperator& sigma) {
    const DensityOperator s = detail::aligned_to(rho.layout(), sigma);
    return trace_norm(rho.matrix() - s.matrix());
}

/// |<psi|phi>| for identically laid-out pure states.
inline double fidelity_pure(const PureState& psi, const PureState& phi) {
    if (!(psi.layout() == phi.layout()))
        throw std::invalid_argument("fidelity_pure requires identical layouts");
    return std::abs(psi.amplitudes().dot(phi.amplitudes()));
}

/// ||psi><psi| - |phi><phi||_1 = 2 sqrt(1 - |<psi|phi>|^2); permutes phi into
/// psi's order first.
inline double trace_distance(const PureState& psi, const PureState& phi) {
    const PureState aligned = psi.layout() == phi.layout()
                                  ? phi
                                  : permute_subsystems(phi, psi.layout().labels());
    const double f = fidelity_pure(psi, aligned);
    return 2.0 * std::sqrt(std::max(0.0, 1.0 - f * f));
}

/// (1/sqrt(d)) Σ_i |i>|i> on two fresh labels of dimension d.
inline PureState maximally_entangled(const std::string& label_a,
                                     const std::string& label_b, long d) {
    if (d < 1) throw std::invalid_argument("dimension must be positive");
    SubsystemLayout layout({{label_a, d}, {label_b, d}});
    Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(d * d);
    const double w = 1.0 / std::sqrt(static_cast<double>(d));
    for (long i = 0; i < d; ++i) amps(i * d + i) = w;
    return PureState::unchecked(std::move(layout), std::move(amps));
}

namespace detail {

struct ApplyPlan {
    std::vector<std::string> pre_order;  // targeted labels first, in map order
    SubsystemLayout extended_out;        // map outputs ++ untargeted
    std::vector<std::string> final_order;
    long rest_dim = 1;
};

inline ApplyPlan apply_plan(const SubsystemLayout& map_in,
                            const SubsystemLayout& map_out,
                            const SubsystemLayout& layout) {
    ApplyPlan plan;
    for (const auto& s : map_in.subsystems()) {
        if (!layout.has(s.label))
            throw std::invalid_argument("state lacks subsystem '" + s.label +
                                        "' targeted by the map");
        if (layout.dim_of(s.label) != s.dim)
            throw std::invalid_argument("dimension mismatch on subsystem '" +
                                        s.label + "'");
        plan.pre_order.push_back(s.label);
    }
    std::vector<Subsystem> untargeted;
    for (const auto& s : layout.subsystems())
        if (!map_in.has(s.label)) {
            plan.pre_order.push_back(s.label);
            untargeted.push_back(s);
            plan.rest_dim *= s.dim;
        }
    for (const auto& s : map_out.subsystems())
        if (std::any_of(untargeted.begin(), untargeted.end(),
                        [&](const Subsystem& u) { return u.label == s.label; }))
            throw std::invalid_argument("map output label '" + s.label +
                                        "' collides with an untouched subsystem");
    plan.extended_out = map_out.concat(
        SubsystemLayout(untargeted, std::numeric_limits<long>::max()),
        std::numeric_limits<long>::max());

    // Final order: outputs substituted where the first targeted label sat.
    const std::string& first = map_in.subsystem(0).label;
    for (const auto& s : layout.subsystems()) {
        if (s.label == first)
            for (const auto& o : map_out.subsystems())
                plan.final_order.push_back(o.label);
        else if (!map_in.has(s.label))
            plan.final_order.push_back(s.label);
    }
    return plan;
}

inline ApplyPlan apply_plan(const LinearMapOperator& m, const SubsystemLayout& layout) {
    return apply_plan(m.in_layout(), m.out_layout(), layout);
}

} // namespace detail

/// Applies a labelled map to the subsystems it names, leaving the rest
/// untouched.  Output subsystems take the position of the first targeted
/// label.  Norm is preserved only for unitaries and isometries; projector and
/// partial-isometry outputs are returned unnormalised.
inline PureState apply_map(const LinearMapOperator& m, const PureState& psi,
                           long dim_cap = SubsystemLayout::default_dim_cap) {
    const auto plan = detail::apply_plan(m, psi.layout());
    const PureState permuted = permute_subsystems(psi, plan.pre_order);
    const long in_d = m.in_layout().total_dim();
    const long out_d = m.out_layout().total_dim();
    Eigen::Map<const Eigen::Matrix<std::complex<double>, Eigen::Dynamic,
                                   Eigen::Dynamic, Eigen::RowMajor>>
        block(permuted.amplitudes().data(), in_d, plan.rest_dim);
    Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic,
                  Eigen::RowMajor>
        mapped = m.matrix() * block;
    Eigen::VectorXcd flat =
        Eigen::Map<Eigen::VectorXcd>(mapped.data(), out_d * plan.rest_dim);
    PureState raw = PureState::unchecked(
        SubsystemLayout(plan.extended_out.subsystems(), dim_cap), std::move(flat));
    return permute_subsystems(raw, plan.final_order);
}

inline DensityOperator apply_map(const LinearMapOperator& m, const DensityOperator& rho,
                                 long dim_cap = SubsystemLayout::default_dim_cap) {
    const auto plan = detail::apply_plan(m, rho.layout());
    const DensityOperator permuted = permute_subsystems(rho, plan.pre_order);
    const Eigen::MatrixXcd big =
        kron(m.matrix(), Eigen::MatrixXcd::Identity(plan.rest_dim, plan.rest_dim));
    Eigen::MatrixXcd out = big * permuted.matrix() * big.adjoint();
    DensityOperator raw = DensityOperator::unchecked(
        SubsystemLayout(plan.extended_out.subsystems(), dim_cap), std::move(out));
    return permute_subsystems(raw, plan.final_order);
}

/// Enlarges one subsystem's dimension, embedding the existing amplitudes in
/// the lowest basis states of the padded factor.
inline PureState pad_subsystem(const PureState& psi, const std::string& label,
                               long new_dim,
                               long dim_cap = SubsystemLayout::default_dim_cap) {
    const auto& layout = psi.layout();
    const std::size_t pos = layout.index_of(label);
    const long old_dim = layout.subsystem(pos).dim;
    if (new_dim < old_dim)
        throw std::invalid_argument("pad_subsystem cannot shrink '" + label + "'");
    if (new_dim == old_dim) return psi;
    std::vector<Subsystem> subs = layout.subsystems();
    subs[pos].dim = new_dim;
    SubsystemLayout padded(subs, dim_cap);
    const auto old_dims = layout.dims();
    const auto new_strides = padded.strides();
    Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(padded.total_dim());
    std::vector<long> digits;
    for (long f = 0; f < psi.dim(); ++f) {
        decode_index(old_dims, f, digits);
        amps(encode_index(new_strides, digits)) = psi.amplitudes()(f);
    }
    return PureState::unchecked(std::move(padded), std::move(amps));
}

namespace detail {

inline SubsystemLayout relabelled(const SubsystemLayout& layout,
                                  const std::map<std::string, std::string>& renames) {
    std::vector<Subsystem> subs = layout.subsystems();
    for (auto& s : subs) {
        auto it = renames.find(s.label);
        if (it != renames.end()) s.label = it->second;
    }
    return SubsystemLayout(std::move(subs), std::numeric_limits<long>::max());
}

} // namespace detail

inline PureState relabel_subsystems(const PureState& psi,
                                    const std::map<std::string, std::string>& renames) {
    return PureState::unchecked(detail::relabelled(psi.layout(), renames),
                                psi.amplitudes());
}

inline DensityOperator relabel_subsystems(
    const DensityOperator& rho, const std::map<std::string, std::string>& renames) {
    return DensityOperator::unchecked(detail::relabelled(rho.layout(), renames),
                                      rho.matrix());
}

inline LinearMapOperator relabel_subsystems(
    const LinearMapOperator& m, const std::map<std::string, std::string>& in_renames,
    const std::map<std::string, std::string>& out_renames) {
    return LinearMapOperator(m.kind(), detail::relabelled(m.in_layout(), in_renames),
                             detail::relabelled(m.out_layout(), out_renames),
                             m.matrix());
}

/// Result of the Uhlmann step between two purifications.
///
/// `partial` maps phi's purifying system C into psi's purifying system B and
/// is supported on the cross-overlap operator's row space; `completed` extends
/// it to a full isometry (requires |C| <= |B|), which acts identically on the
/// support and therefore achieves the same overlap.
struct UhlmannResult {
    LinearMapOperator partial;
    LinearMapOperator completed;
    double achieved_overlap = 0.0;
    Eigen::VectorXd singular_values;
};

/// Overlap-maximising partial isometry W: C -> B with
/// <psi| (I_A (x) W) |phi> = sum of singular values of the cross-overlap
/// operator M_{bc} = Σ_a conj(psi_{ab}) phi_{ac}, where A is the set of
/// shared labels. The optimum is W = conj(U_r V_r^dag) from the SVD
/// M = U S V^dag restricted to the numerical support of M.
inline UhlmannResult uhlmann_partial_isometry(const PureState& psi,
                                              const PureState& phi,
                                              double rank_cutoff_rel = 1e-12) {
    std::vector<std::string> shared, own_b, own_c;
    for (const auto& s : psi.layout().subsystems()) {
        if (phi.layout().has(s.label)) {
            if (phi.layout().dim_of(s.label) != s.dim)
                throw std::invalid_argument("shared subsystem '" + s.label +
                                            "' has mismatched dimensions");
            shared.push_back(s.label);
        } else {
            own_b.push_back(s.label);
        }
    }
    for (const auto& s : phi.layout().subsystems())
        if (!psi.layout().has(s.label)) own_c.push_back(s.label);

    std::vector<std::string> psi_order = shared, phi_order = shared;
    psi_order.insert(psi_order.end(), own_b.begin(), own_b.end());
    phi_order.insert(phi_order.end(), own_c.begin(), own_c.end());
    const PureState psi_p = permute_subsystems(psi, psi_order);
    const PureState phi_p = permute_subsystems(phi, phi_order);

    long shared_dim = 1;
    for (const auto& l : shared) shared_dim *= psi.layout().dim_of(l);
    const long b_dim = psi.dim() / shared_dim;
    const long c_dim = phi.dim() / shared_dim;
    if (c_dim > b_dim)
        throw std::invalid_argument(
            "uhlmann completion needs phi's purifying dimension (" +
            std::to_string(c_dim) + ") <= psi's (" + std::to_string(b_dim) + ")");

    using RowMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic,
                                 Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> psi_m(psi_p.amplitudes().data(), shared_dim, b_dim);
    Eigen::Map<const RowMat> phi_m(phi_p.amplitudes().data(), shared_dim, c_dim);
    const Eigen::MatrixXcd cross = psi_m.adjoint() * phi_m; // b_dim x c_dim

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(cross,
                                           Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    long rank = 0;
    const double cutoff = sv.size() > 0 ? rank_cutoff_rel * sv(0) : 0.0;
    for (long i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff && sv(i) > 0.0) ++rank;

    const Eigen::MatrixXcd w_partial =
        (svd.matrixU().leftCols(rank) * svd.matrixV().leftCols(rank).adjoint())
            .conjugate();
    const Eigen::MatrixXcd w_full =
        (svd.matrixU().leftCols(c_dim) * svd.matrixV().adjoint()).conjugate();

    SubsystemLayout in = phi.layout().subset(own_c);
    SubsystemLayout out = psi.layout().subset(own_b);
    UhlmannResult result{
        LinearMapOperator(MapKind::partial_isometry, in, out, w_partial),
        LinearMapOperator(MapKind::isometry, in, out, w_full), sv.sum(), sv};
    return result;
}

} // namespace qgp
