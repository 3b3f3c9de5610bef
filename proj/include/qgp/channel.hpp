#pragma once

// CPTP maps in Kraus form, Stinespring dilations, Choi matrices, and the
// side-information channel model: a channel N^{A'S -> B} together with a pure
// side state on (S, S') whose S half feeds the channel and whose S' half is
// available to the encoder.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "qgp/layout.hpp"
#include "qgp/linear_map.hpp"
#include "qgp/state.hpp"
#include "qgp/tensor_ops.hpp"

namespace qgp {

inline Eigen::Matrix2cd pauli_matrix(int i) {
    const std::complex<double> im(0.0, 1.0);
    Eigen::Matrix2cd m;
    switch (i) {
        case 0: m << 1, 0, 0, 1; break;
        case 1: m << 0, 1, 1, 0; break;
        case 2: m << 0, -im, im, 0; break;
        case 3: m << 1, 0, 0, -1; break;
        default: throw std::invalid_argument("pauli index out of range");
    }
    return m;
}

class KrausChannel {
public:
    KrausChannel(std::vector<Eigen::MatrixXcd> kraus, SubsystemLayout in,
                 SubsystemLayout out, double tol = 1e-9)
        : KrausChannel(std::move(kraus), std::move(in), std::move(out),
                       check_shapes_tag{}) {
        const double residual = completeness_residual();
        if (residual > tol)
            throw std::invalid_argument(
                "Kraus operators are not trace preserving (residual " +
                std::to_string(residual) + ")");
    }

    /// Skips the completeness check (shape checks still apply); for channels
    /// under construction or deliberately non-CPTP test inputs.
    static KrausChannel unvalidated(std::vector<Eigen::MatrixXcd> kraus,
                                    SubsystemLayout in, SubsystemLayout out) {
        return KrausChannel(std::move(kraus), std::move(in), std::move(out),
                            check_shapes_tag{});
    }

    const std::vector<Eigen::MatrixXcd>& kraus() const { return kraus_; }
    const SubsystemLayout& in_layout() const { return in_; }
    const SubsystemLayout& out_layout() const { return out_; }

    /// Operator-norm deviation of Σ K†K from the identity.
    double completeness_residual() const {
        Eigen::MatrixXcd acc =
            Eigen::MatrixXcd::Zero(in_.total_dim(), in_.total_dim());
        for (const auto& k : kraus_) acc += k.adjoint() * k;
        acc -= Eigen::MatrixXcd::Identity(in_.total_dim(), in_.total_dim());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
            0.5 * (acc + acc.adjoint()), Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    }

private:
    struct check_shapes_tag {};
    KrausChannel(std::vector<Eigen::MatrixXcd> kraus, SubsystemLayout in,
                 SubsystemLayout out, check_shapes_tag)
        : kraus_(std::move(kraus)), in_(std::move(in)), out_(std::move(out)) {
        if (kraus_.empty())
            throw std::invalid_argument("channel needs at least one Kraus operator");
        for (const auto& k : kraus_)
            if (k.rows() != out_.total_dim() || k.cols() != in_.total_dim())
                throw std::invalid_argument(
                    "Kraus operator shape does not match channel layouts");
    }

    std::vector<Eigen::MatrixXcd> kraus_;
    SubsystemLayout in_;
    SubsystemLayout out_;
};

struct CptpReport {
    double completeness_residual = 0.0;
    // Complete positivity holds by construction in Kraus form; there is no
    // separate witness to compute.
    bool cp_by_construction = true;
};

inline CptpReport validate_cptp(const KrausChannel& ch) {
    return {ch.completeness_residual(), true};
}

/// Σ K ρ K† on the targeted subsystems; spectators pass through unchanged.
inline DensityOperator apply_channel(const KrausChannel& ch,
                                     const DensityOperator& rho,
                                     long dim_cap = SubsystemLayout::default_dim_cap) {
    const auto plan =
        detail::apply_plan(ch.in_layout(), ch.out_layout(), rho.layout());
    const DensityOperator permuted = permute_subsystems(rho, plan.pre_order);
    const long out_total = ch.out_layout().total_dim() * plan.rest_dim;
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(out_total, out_total);
    const Eigen::MatrixXcd rest_id =
        Eigen::MatrixXcd::Identity(plan.rest_dim, plan.rest_dim);
    for (const auto& k : ch.kraus()) {
        const Eigen::MatrixXcd big = kron(k, rest_id);
        acc += big * permuted.matrix() * big.adjoint();
    }
    DensityOperator raw = DensityOperator::unchecked(
        SubsystemLayout(plan.extended_out.subsystems(), dim_cap), std::move(acc));
    return permute_subsystems(raw, plan.final_order);
}

/// Isometry V: in -> out ⊗ env stacking the (nonzero) Kraus operators;
/// tracing the environment from V ρ V† recovers the channel action.
inline LinearMapOperator stinespring_dilation(const KrausChannel& ch,
                                              const std::string& env_label) {
    std::vector<const Eigen::MatrixXcd*> kept;
    for (const auto& k : ch.kraus())
        if (k.squaredNorm() > 1e-24) kept.push_back(&k);
    if (kept.empty())
        throw std::invalid_argument("channel has no nonzero Kraus operators");
    const long n_env = static_cast<long>(kept.size());
    const long d_in = ch.in_layout().total_dim();
    const long d_out = ch.out_layout().total_dim();
    Eigen::MatrixXcd v(d_out * n_env, d_in);
    for (long b = 0; b < d_out; ++b)
        for (long e = 0; e < n_env; ++e)
            v.row(b * n_env + e) = kept[e]->row(b);
    SubsystemLayout out_env =
        ch.out_layout().concat(SubsystemLayout({{env_label, n_env}}));
    return LinearMapOperator(MapKind::isometry, ch.in_layout(),
                             std::move(out_env), std::move(v));
}

/// tr_B[V ρ V†]: the state handed to the environment (spectator subsystems of
/// rho, if any, are kept).
inline DensityOperator complementary_output(const KrausChannel& ch,
                                            const DensityOperator& rho,
                                            const std::string& env_label = "E") {
    const LinearMapOperator v = stinespring_dilation(ch, env_label);
    const DensityOperator dilated = apply_map(v, rho);
    std::vector<std::string> keep;
    for (const auto& s : dilated.layout().subsystems())
        if (!ch.out_layout().has(s.label)) keep.push_back(s.label);
    return partial_trace(dilated, keep);
}

/// (id ⊗ N)(Φ) on (in-copy, out), with the input copies labelled
/// `label + copy_suffix`.  Computed directly as (1/d_in) Σ_e vec(K_e) vec(K_e)†
/// with vec(K)[(i,o)] = K(o,i), avoiding the d_in² intermediate state.
inline DensityOperator choi_matrix(const KrausChannel& ch,
                                   const std::string& copy_suffix = "c") {
    const long d_in = ch.in_layout().total_dim();
    const long d_out = ch.out_layout().total_dim();
    std::vector<Subsystem> copies;
    for (const auto& s : ch.in_layout().subsystems())
        copies.push_back({s.label + copy_suffix, s.dim});
    SubsystemLayout choi_layout =
        SubsystemLayout(copies).concat(ch.out_layout());
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(d_in * d_out, d_in * d_out);
    Eigen::VectorXcd v(d_in * d_out);
    for (const auto& k : ch.kraus()) {
        for (long i = 0; i < d_in; ++i)
            for (long o = 0; o < d_out; ++o) v(i * d_out + o) = k(o, i);
        c += v * v.adjoint();
    }
    c /= static_cast<double>(d_in);
    return DensityOperator::unchecked(std::move(choi_layout), std::move(c));
}

/// Kraus decomposition recovered from a Choi matrix on (in-copy, out); the
/// eigenvalue cutoff is relative to the largest eigenvalue.
inline KrausChannel kraus_from_choi(const DensityOperator& choi,
                                    const SubsystemLayout& in,
                                    const SubsystemLayout& out,
                                    double cutoff_rel = 1e-12) {
    const long d_in = in.total_dim();
    const long d_out = out.total_dim();
    if (choi.dim() != d_in * d_out)
        throw std::invalid_argument("Choi dimension does not match layouts");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(choi.matrix());
    const double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
    std::vector<Eigen::MatrixXcd> kraus;
    for (long i = choi.dim() - 1; i >= 0; --i) {
        const double lam = es.eigenvalues()(i);
        if (lam <= cutoff_rel * top || lam <= 0.0) continue;
        const double scale = std::sqrt(static_cast<double>(d_in) * lam);
        Eigen::MatrixXcd k(d_out, d_in);
        for (long a = 0; a < d_in; ++a)
            for (long b = 0; b < d_out; ++b)
                k(b, a) = scale * es.eigenvectors()(a * d_out + b, i);
        kraus.push_back(std::move(k));
    }
    return KrausChannel(std::move(kraus), in, out);
}

/// Channel with side information at the transmitter: the side state's S half
/// (every side label present in the channel input) is consumed by the channel,
/// its purifying half S' stays with the encoder.
class SideInfoChannel {
public:
    SideInfoChannel(KrausChannel channel, PureState side_state)
        : channel_(std::move(channel)), side_state_(std::move(side_state)) {
        for (const auto& s : side_state_.layout().subsystems()) {
            if (channel_.in_layout().has(s.label)) {
                if (channel_.in_layout().dim_of(s.label) != s.dim)
                    throw std::invalid_argument(
                        "side subsystem '" + s.label +
                        "' dimension differs between channel and side state");
                side_labels_.push_back(s.label);
            } else {
                encoder_labels_.push_back(s.label);
            }
        }
        if (side_labels_.empty())
            throw std::invalid_argument(
                "side state shares no subsystem with the channel input");
        for (const auto& s : channel_.in_layout().subsystems())
            if (!side_state_.layout().has(s.label))
                message_labels_.push_back(s.label);
        if (message_labels_.empty())
            throw std::invalid_argument(
                "channel input consists only of side subsystems");
    }

    const KrausChannel& channel() const { return channel_; }
    const PureState& side_state() const { return side_state_; }

    /// Channel-input side labels (S), encoder-held purifier labels (S'), and
    /// the message input labels (A').
    const std::vector<std::string>& side_labels() const { return side_labels_; }
    const std::vector<std::string>& encoder_labels() const { return encoder_labels_; }
    const std::vector<std::string>& message_labels() const { return message_labels_; }

    DensityOperator side_marginal() const {
        return marginal(side_state_, side_labels_);
    }

private:
    KrausChannel channel_;
    PureState side_state_;
    std::vector<std::string> side_labels_;
    std::vector<std::string> encoder_labels_;
    std::vector<std::string> message_labels_;
};

/// Memory with defective cells: the channel measures S; outcome 0 (defective,
/// probability p) replaces the qubit with |0>, outcome 1 applies a
/// depolarizing channel of strength `depol` (probability of replacement by
/// I/2).  Side state sqrt(p)|00> + sqrt(1-p)|11> on (S, S').
inline SideInfoChannel defective_memory_channel(double p, double depol) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("p must lie in [0,1]");
    if (depol < 0.0 || depol > 1.0)
        throw std::invalid_argument("depol must lie in [0,1]");
    SubsystemLayout in({{"Ap", 2}, {"S", 2}});
    SubsystemLayout out({{"B", 2}});
    std::vector<Eigen::MatrixXcd> kraus;
    // Outcome 0: |0><a| on A', <0| on S.
    for (int a = 0; a < 2; ++a) {
        Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(2, 4);
        k(0, a * 2 + 0) = 1.0;
        kraus.push_back(std::move(k));
    }
    // Outcome 1: depolarizing Kraus set on A', <1| on S.
    const double w0 = std::sqrt(1.0 - 0.75 * depol);
    const double w1 = std::sqrt(0.25 * depol);
    for (int i = 0; i < 4; ++i) {
        const double w = i == 0 ? w0 : w1;
        if (w == 0.0) continue;
        const Eigen::Matrix2cd sigma = pauli_matrix(i);
        Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(2, 4);
        for (int b = 0; b < 2; ++b)
            for (int a = 0; a < 2; ++a) k(b, a * 2 + 1) = w * sigma(b, a);
        kraus.push_back(std::move(k));
    }
    KrausChannel channel(std::move(kraus), std::move(in), std::move(out));

    SubsystemLayout side_layout({{"S", 2}, {"Sp", 2}});
    Eigen::VectorXcd side = Eigen::VectorXcd::Zero(4);
    side(0) = std::sqrt(p);
    side(3) = std::sqrt(1.0 - p);
    return SideInfoChannel(std::move(channel),
                           PureState(std::move(side_layout), std::move(side)));
}

/// Channel that applies a uniformly chosen Pauli to the qubit, with the choice
/// revealed to the transmitter: S (dimension 4) selects sigma_i in the
/// standard basis and the side state is maximally entangled on (S, S').
inline SideInfoChannel pauli_reveal_channel() {
    SubsystemLayout in({{"Ap", 2}, {"S", 4}});
    SubsystemLayout out({{"B", 2}});
    std::vector<Eigen::MatrixXcd> kraus;
    for (int i = 0; i < 4; ++i) {
        const Eigen::Matrix2cd sigma = pauli_matrix(i);
        Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(2, 8);
        for (int b = 0; b < 2; ++b)
            for (int a = 0; a < 2; ++a) k(b, a * 4 + i) = sigma(b, a);
        kraus.push_back(std::move(k));
    }
    KrausChannel channel(std::move(kraus), std::move(in), std::move(out));
    return SideInfoChannel(std::move(channel),
                           maximally_entangled("S", "Sp", 4));
}

/// Noiseless qubit channel with trivial (one-dimensional) side information;
/// convenient as a base case throughout.
inline SideInfoChannel identity_side_channel() {
    SubsystemLayout in({{"Ap", 2}, {"S", 1}});
    SubsystemLayout out({{"B", 2}});
    std::vector<Eigen::MatrixXcd> kraus = {Eigen::MatrixXcd::Identity(2, 2)};
    KrausChannel channel(std::move(kraus), std::move(in), std::move(out));
    SubsystemLayout side_layout({{"S", 1}, {"Sp", 1}});
    Eigen::VectorXcd side(1);
    side(0) = 1.0;
    return SideInfoChannel(std::move(channel),
                           PureState(std::move(side_layout), std::move(side)));
}

/// n-fold tensor power with per-copy indexed labels (Ap1, S1, B1, ...).
inline SideInfoChannel n_fold(const SideInfoChannel& ch, int n,
                              long dim_cap = SubsystemLayout::default_dim_cap) {
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    auto indexed = [](const SubsystemLayout& layout, int i) {
        std::vector<Subsystem> subs = layout.subsystems();
        for (auto& s : subs) s.label += std::to_string(i);
        return subs;
    };

    std::vector<Subsystem> in_subs, out_subs, side_subs;
    for (int i = 1; i <= n; ++i) {
        for (auto& s : indexed(ch.channel().in_layout(), i)) in_subs.push_back(s);
        for (auto& s : indexed(ch.channel().out_layout(), i)) out_subs.push_back(s);
        for (auto& s : indexed(ch.side_state().layout(), i)) side_subs.push_back(s);
    }
    SubsystemLayout in(in_subs, dim_cap);
    SubsystemLayout out(out_subs, dim_cap);
    SubsystemLayout side_layout(side_subs, dim_cap);

    const auto& base = ch.channel().kraus();
    std::vector<Eigen::MatrixXcd> kraus;
    std::vector<std::size_t> tuple(static_cast<std::size_t>(n), 0);
    while (true) {
        Eigen::MatrixXcd k = base[tuple[0]];
        for (int i = 1; i < n; ++i) k = kron(k, base[tuple[i]]);
        kraus.push_back(std::move(k));
        int pos = n - 1;
        while (pos >= 0 && ++tuple[pos] == base.size()) tuple[pos--] = 0;
        if (pos < 0) break;
    }

    Eigen::VectorXcd side = ch.side_state().amplitudes();
    for (int i = 1; i < n; ++i) side = kron(side, ch.side_state().amplitudes());

    return SideInfoChannel(
        KrausChannel(std::move(kraus), std::move(in), std::move(out)),
        PureState(std::move(side_layout), std::move(side)));
}

} // namespace qgp
