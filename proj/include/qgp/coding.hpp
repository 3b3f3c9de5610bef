#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qgp/channel.hpp"
#include "qgp/entropy.hpp"
#include "qgp/haar.hpp"
#include "qgp/layout.hpp"
#include "qgp/linear_map.hpp"
#include "qgp/state.hpp"
#include "qgp/tensor_ops.hpp"
#include "qgp/typicality.hpp"

namespace qgp {

// Finite-blocklength entanglement-transmission codes for channels with side
// information held by the sender.  The builder fixes a single-letter input
// state sigma on (A, A', S), compresses its n-fold A-block onto a typical
// subspace, splits that subspace with a random unitary into
//   R  - the message system to be transmitted,
//   Bt - an entanglement resource shared with the receiver up front,
//   Ah - a sacrificial block that decouples the sender's environment,
// and then derives encoder and decoder isometries by matching purifications.
//
// Reserved labels produced here: R, Rp (message reference), Bt/At (shared
// entanglement halves), Ah/Bh (recovered entanglement halves), Bb (decoder's
// message output), D (sigma's purifier), E (channel environment), G (decoder
// reference), and "<A>typ" for the compressed block.  Per-copy systems carry
// a 1-based numeric suffix: A1, S2, E3, ...

namespace detail {

inline std::map<std::string, std::string> copy_renames(
    const std::vector<std::string>& labels, int copy) {
    std::map<std::string, std::string> renames;
    for (const auto& l : labels) renames.emplace(l, l + std::to_string(copy));
    return renames;
}

inline std::vector<std::string> suffixed(const std::vector<std::string>& labels,
                                         int copy) {
    std::vector<std::string> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(l + std::to_string(copy));
    return out;
}

/// Smallest divisor of m that is >= min(target, m).
inline long divisor_at_least(long m, long target) {
    const long t = std::min(std::max(target, 1L), m);
    for (long d = t; d < m; ++d)
        if (m % d == 0) return d;
    return m;
}

/// 2^ceil(x), saturating, with a small tolerance so values integral up to
/// rounding are not bumped a full level.
inline long pow2_ceil(double x) {
    if (x <= 0.0) return 1;
    const double e = std::ceil(x - 1e-9);
    if (e >= 62.0) return std::numeric_limits<long>::max() / 4;
    return 1L << static_cast<int>(e);
}

inline DensityOperator mixed_block(const std::string& label, long dim) {
    return DensityOperator::maximally_mixed(SubsystemLayout({{label, dim}}));
}

/// The channel acting on copy `i`'s systems.  Kraus operators are unchanged;
/// only the labels move, so no revalidation is needed.
inline KrausChannel channel_copy(const KrausChannel& ch, int copy) {
    std::vector<Subsystem> in, out;
    for (const auto& s : ch.in_layout().subsystems())
        in.push_back({s.label + std::to_string(copy), s.dim});
    for (const auto& s : ch.out_layout().subsystems())
        out.push_back({s.label + std::to_string(copy), s.dim});
    return KrausChannel::unvalidated(ch.kraus(), SubsystemLayout(in),
                                     SubsystemLayout(out));
}

} // namespace detail

/// Explicit dimensions for the three-way split of the typical subspace.  The
/// product must equal the typical dimension.
struct CodeSizes {
    long dim_r = 1;
    long dim_bt = 1;
    long dim_ah = 1;
};

/// A finite-n code together with the diagnostics accumulated while building
/// it.  The four *_distance fields trace how each construction step degrades:
/// input/output decoupling feed the two Uhlmann steps, whose match distances
/// bound the end-to-end error.
struct CodeArtifacts {
    int n;

    LinearMapOperator u_split;  ///< typical block -> (R, Bt, Ah)
    LinearMapOperator w_enc;    ///< (Rp, At, Sp^n) -> sender's systems
    LinearMapOperator v_dec;    ///< (Bt, B^n) -> (Bb, Bh, G)

    long dim_r;
    long dim_bt;
    long dim_ah;
    double log_dim_r;
    double log_dim_bt;
    double log_dim_ah;

    long typical_dim;
    double typical_mass;
    double delta;

    double input_decouple_distance;   ///< (R Bt : S^n) factorisation before the channel
    double output_decouple_distance;  ///< (R Ah : E^n D^n) factorisation after it
    double encoder_match_distance;    ///< W phi_in vs the split state
    double decoder_match_distance;    ///< V omega vs the target output
    double end_to_end_distance;       ///< pure-state distance through the whole chain
    double epsilon_achieved;          ///< trace distance of the (R,Bb,Ah,Bh) marginal

    DensityOperator residual_state;   ///< what the environment keeps, on (G, E^n, D^n)
    std::uint64_t seed;
};

namespace detail {

/// sigma must carry exactly one subsystem besides the channel inputs; returns
/// sigma permuted to (A, A'..., S...) order plus the A label.
inline std::pair<DensityOperator, std::string> canonical_input(
    const DensityOperator& sigma, const SideInfoChannel& ch) {
    std::vector<std::string> extra;
    for (const auto& s : sigma.layout().subsystems())
        if (!ch.channel().in_layout().has(s.label)) extra.push_back(s.label);
    if (extra.size() != 1)
        throw std::invalid_argument(
            "input state must hold exactly one subsystem besides the channel "
            "inputs");
    for (const auto& s : ch.channel().in_layout().subsystems()) {
        if (!sigma.layout().has(s.label))
            throw std::invalid_argument("input state is missing channel input '" +
                                        s.label + "'");
        if (sigma.layout().dim_of(s.label) != s.dim)
            throw std::invalid_argument("dimension mismatch on channel input '" +
                                        s.label + "'");
    }
    std::vector<std::string> order{extra[0]};
    for (const auto& l : ch.message_labels()) order.push_back(l);
    for (const auto& l : ch.side_labels()) order.push_back(l);
    return {permute_subsystems(sigma, order), extra[0]};
}

inline void check_side_marginal(const DensityOperator& sigma,
                                const SideInfoChannel& ch, double tol = 1e-6) {
    const DensityOperator got = partial_trace(sigma, ch.side_labels());
    if (trace_distance(got, ch.side_marginal()) > tol)
        throw std::invalid_argument(
            "input state's side marginal does not match the channel's side "
            "state");
}

/// Reference input for a code with the given message/entanglement sizes: the
/// message pair, the shared pair, and n side-state copies.
inline PureState reference_input(const SideInfoChannel& ch, int n, long dim_r,
                                 long dim_bt, long dim_cap) {
    PureState phi_in =
        tensor_product(maximally_entangled("R", "Rp", dim_r),
                       maximally_entangled("Bt", "At", dim_bt), dim_cap);
    const PureState side_pure = ch.side_state();
    const std::vector<std::string> side_labels = side_pure.layout().labels();
    for (int i = 1; i <= n; ++i)
        phi_in = tensor_product(
            phi_in,
            relabel_subsystems(side_pure, copy_renames(side_labels, i)),
            dim_cap);
    return phi_in;
}

} // namespace detail

/// One-shot rate (in qubits per channel use) of the input state sigma on the
/// given channel: (1/2) I(A;B) - (1/2) I(A;S).  sigma must cover the channel
/// inputs plus one extra subsystem A and reproduce the side marginal.
inline double gp_rate(const DensityOperator& sigma, const SideInfoChannel& ch) {
    auto [canon, a] = detail::canonical_input(sigma, ch);
    detail::check_side_marginal(canon, ch);
    const DensityOperator out = apply_channel(ch.channel(), canon);
    const double i_ab =
        mutual_information(out, {a}, ch.channel().out_layout().labels());
    const double i_as = mutual_information(canon, {a}, ch.side_labels());
    return 0.5 * i_ab - 0.5 * i_as;
}

/// Capacity-achieving input for the revealed-Pauli channel: A is maximally
/// entangled with a partner that has been hit by the inverse of the Pauli the
/// side system announces, so the channel's correction restores the pair.
/// I(A;S) = 0 while I(A;B) = 2, giving one qubit per use.
inline DensityOperator pauli_precorrection_state() {
    const SubsystemLayout layout({{"A", 2}, {"Ap", 2}, {"S", 4}});
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(16, 16);
    for (int s = 0; s < 4; ++s) {
        const Eigen::Matrix2cd p = pauli_matrix(s);
        Eigen::VectorXcd branch = Eigen::VectorXcd::Zero(4);
        for (int a = 0; a < 2; ++a)
            for (int ap = 0; ap < 2; ++ap)
                branch(2 * a + ap) = p(ap, a) / std::sqrt(2.0);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                m(4 * i + s, 4 * j + s) += 0.25 * branch(i) * std::conj(branch(j));
    }
    return DensityOperator(layout, m);
}

/// Build a blocklength-n code from the input state sigma.
///
/// The split sizes default to the information-theoretic targets
///   |Bt| ~ 2^{n/2 I(A;ED) + 2n delta},  |Ah| ~ 2^{n/2 I(A;S) + 2n delta},
/// rounded up to divisors of the typical dimension, with R absorbing the
/// remainder; pass `sizes` to override.  `delta` defaults to the n^-1/4
/// schedule.  The splitting unitary is drawn from `sampler` re-derived at the
/// typical dimension, so a given (seed, stream) pins the whole construction.
inline CodeArtifacts build_code(const DensityOperator& sigma,
                                const SideInfoChannel& ch, int n,
                                const HaarSampler& sampler,
                                std::optional<CodeSizes> sizes = std::nullopt,
                                std::optional<double> delta = std::nullopt,
                                long dim_cap = SubsystemLayout::default_dim_cap) {
    if (n < 1) throw std::invalid_argument("blocklength must be at least 1");
    auto [canon, a] = detail::canonical_input(sigma, ch);
    detail::check_side_marginal(canon, ch);
    const double dn = delta ? *delta : default_epsilon_schedule().value(n);
    if (dn <= 0.0) throw std::invalid_argument("delta must be positive");

    const std::vector<std::string> msg = ch.message_labels();
    const std::vector<std::string> side = ch.side_labels();
    const std::vector<std::string> enc = ch.encoder_labels();
    const std::vector<std::string> outs = ch.channel().out_layout().labels();

    // Single-copy purification and its image under the dilated channel; the
    // mutual informations that size the split are invariant under padding D.
    PureState theta1 = purify(canon, "D");
    const LinearMapOperator dil = stinespring_dilation(ch.channel(), "E");
    const double i_aed = mutual_information(
        apply_map(dil, theta1, dim_cap).density(), {a}, {"E", "D"});
    const double i_as = mutual_information(canon, {a}, side);

    const TypicalProjector typical(partial_trace(canon, {a}), n, dn, a,
                                   a + "typ", dim_cap);
    const long typ_dim = typical.typical_dim();

    long dim_bt, dim_ah, dim_r;
    if (sizes) {
        dim_r = sizes->dim_r;
        dim_bt = sizes->dim_bt;
        dim_ah = sizes->dim_ah;
        if (dim_r < 1 || dim_bt < 1 || dim_ah < 1 ||
            dim_r * dim_bt * dim_ah != typ_dim)
            throw std::invalid_argument(
                "split sizes must be positive and multiply to the typical "
                "dimension " +
                std::to_string(typ_dim));
    } else {
        dim_bt = detail::divisor_at_least(
            typ_dim, detail::pow2_ceil(0.5 * n * i_aed + 2.0 * n * dn));
        dim_ah = detail::divisor_at_least(
            typ_dim / dim_bt, detail::pow2_ceil(0.5 * n * i_as + 2.0 * n * dn));
        dim_r = typ_dim / (dim_bt * dim_ah);
    }

    // Pad sigma's purifier until the encoder isometry can be completed: it
    // maps (Rp, At, Sp^n) into (Ah, A'^n, D^n) and needs at least as much
    // room on the output side.
    long sp_dim = 1, ap_dim = 1;
    for (const auto& l : enc) sp_dim *= ch.side_state().layout().dim_of(l);
    for (const auto& l : msg) ap_dim *= canon.layout().dim_of(l);
    long d_dim = theta1.layout().dim_of("D");
    const auto encoder_fits = [&](long dd) {
        return static_cast<double>(dim_r) * dim_bt *
                   std::pow(static_cast<double>(sp_dim), n) <=
               static_cast<double>(dim_ah) *
                       std::pow(static_cast<double>(ap_dim) * dd, n) +
                   0.5;
    };
    while (!encoder_fits(d_dim)) {
        ++d_dim;
        if (d_dim > dim_cap)
            throw std::invalid_argument(
                "purifier padding exceeded the dimension cap");
    }
    if (d_dim > theta1.layout().dim_of("D"))
        theta1 = pad_subsystem(theta1, "D", d_dim, dim_cap);
    const DensityOperator junk1 =
        marginal(apply_map(dil, theta1, dim_cap), {"E", "D"});

    // n-fold input purification, compressed onto the typical block.
    const std::vector<std::string> theta_labels = theta1.layout().labels();
    PureState big = relabel_subsystems(theta1, detail::copy_renames(theta_labels, 1));
    for (int i = 2; i <= n; ++i)
        big = tensor_product(
            big, relabel_subsystems(theta1, detail::copy_renames(theta_labels, i)),
            dim_cap);
    PureState compressed = apply_map(typical.compressor(), big, dim_cap);
    const double mass = compressed.amplitudes().squaredNorm();
    if (mass < 1e-6)
        throw std::runtime_error(
            "typical projection retained negligible weight; raise delta or n");
    compressed = PureState::unchecked(compressed.layout(),
                                      compressed.amplitudes() / std::sqrt(mass));

    // Random three-way split of the typical block.
    HaarSampler local = sampler.derived(sampler.stream(), typ_dim);
    const LinearMapOperator u_split(
        MapKind::unitary, SubsystemLayout({{a + "typ", typ_dim}}),
        SubsystemLayout({{"R", dim_r}, {"Bt", dim_bt}, {"Ah", dim_ah}}),
        local.draw());
    const PureState split = apply_map(u_split, compressed, dim_cap);

    // How well (R, Bt) already decouples from the side systems.
    std::vector<std::string> side_copies;
    for (int i = 1; i <= n; ++i)
        for (const auto& l : side) side_copies.push_back(l + std::to_string(i));
    DensityOperator side_target =
        tensor_product(detail::mixed_block("R", dim_r),
                       detail::mixed_block("Bt", dim_bt), dim_cap);
    for (int i = 1; i <= n; ++i)
        side_target = tensor_product(
            side_target,
            relabel_subsystems(ch.side_marginal(), detail::copy_renames(side, i)),
            dim_cap);
    std::vector<std::string> keep_in{"R", "Bt"};
    keep_in.insert(keep_in.end(), side_copies.begin(), side_copies.end());
    const double eq_input = trace_distance(marginal(split, keep_in), side_target);

    // Send every copy through the dilated channel.
    const auto dilation_copy = [&](int i) {
        return relabel_subsystems(
            dil, detail::copy_renames(dil.in_layout().labels(), i),
            detail::copy_renames(dil.out_layout().labels(), i));
    };
    PureState omega = split;
    for (int i = 1; i <= n; ++i)
        omega = apply_map(dilation_copy(i), omega, dim_cap);

    // How well (R, Ah) decouples from the channel environments.
    DensityOperator junk_target =
        tensor_product(detail::mixed_block("R", dim_r),
                       detail::mixed_block("Ah", dim_ah), dim_cap);
    std::vector<std::string> keep_out{"R", "Ah"};
    for (int i = 1; i <= n; ++i) {
        junk_target = tensor_product(
            junk_target,
            relabel_subsystems(junk1, detail::copy_renames({"E", "D"}, i)),
            dim_cap);
        keep_out.push_back("E" + std::to_string(i));
        keep_out.push_back("D" + std::to_string(i));
    }
    const double eq_output =
        trace_distance(marginal(omega, keep_out), junk_target);

    // Encoder: complete the isometry matching the reference input (message
    // pair, shared entanglement, side copies) to the split state.
    const PureState phi_in =
        detail::reference_input(ch, n, dim_r, dim_bt, dim_cap);
    const UhlmannResult enc_match = uhlmann_partial_isometry(split, phi_in);
    const LinearMapOperator w_enc = enc_match.completed;
    const double eq_encoder =
        trace_distance(apply_map(w_enc, phi_in, dim_cap), split);

    // Decoder target: recovered pairs next to a purification of the
    // accumulated channel junk.
    DensityOperator junk_n =
        relabel_subsystems(junk1, detail::copy_renames({"E", "D"}, 1));
    for (int i = 2; i <= n; ++i)
        junk_n = tensor_product(
            junk_n, relabel_subsystems(junk1, detail::copy_renames({"E", "D"}, i)),
            dim_cap);
    PureState xi = purify(junk_n, "G");
    long b_dim = 1;
    for (const auto& l : outs) b_dim *= ch.channel().out_layout().dim_of(l);
    {
        const double needed = static_cast<double>(dim_bt) *
                              std::pow(static_cast<double>(b_dim), n);
        const double room =
            static_cast<double>(dim_r) * dim_ah * xi.layout().dim_of("G");
        if (needed > room + 0.5) {
            const long g_dim = static_cast<long>(std::ceil(
                needed / (static_cast<double>(dim_r) * dim_ah) - 1e-9));
            xi = pad_subsystem(xi, "G", g_dim, dim_cap);
        }
    }
    PureState phi_out =
        tensor_product(maximally_entangled("R", "Bb", dim_r),
                       maximally_entangled("Ah", "Bh", dim_ah), dim_cap);
    phi_out = tensor_product(phi_out, xi, dim_cap);
    const UhlmannResult dec_match = uhlmann_partial_isometry(phi_out, omega);
    const LinearMapOperator v_dec = dec_match.completed;
    const double eq_decoder =
        trace_distance(apply_map(v_dec, omega, dim_cap), phi_out);

    // End-to-end run: encode the reference input, transmit, decode.
    PureState chain = apply_map(w_enc, phi_in, dim_cap);
    for (int i = 1; i <= n; ++i)
        chain = apply_map(dilation_copy(i), chain, dim_cap);
    chain = apply_map(v_dec, chain, dim_cap);
    const double eq_chain = trace_distance(chain, phi_out);

    const PureState ideal =
        tensor_product(maximally_entangled("R", "Bb", dim_r),
                       maximally_entangled("Ah", "Bh", dim_ah), dim_cap);
    const double eps_achieved = trace_distance(
        marginal(chain, {"R", "Bb", "Ah", "Bh"}), ideal.density());

    std::vector<std::string> residual_order{"G"};
    for (int i = 1; i <= n; ++i) {
        residual_order.push_back("E" + std::to_string(i));
        residual_order.push_back("D" + std::to_string(i));
    }
    DensityOperator residual =
        permute_subsystems(marginal(chain, residual_order), residual_order);

    return CodeArtifacts{
        .n = n,
        .u_split = u_split,
        .w_enc = w_enc,
        .v_dec = v_dec,
        .dim_r = dim_r,
        .dim_bt = dim_bt,
        .dim_ah = dim_ah,
        .log_dim_r = std::log2(static_cast<double>(dim_r)),
        .log_dim_bt = std::log2(static_cast<double>(dim_bt)),
        .log_dim_ah = std::log2(static_cast<double>(dim_ah)),
        .typical_dim = typ_dim,
        .typical_mass = mass,
        .delta = dn,
        .input_decouple_distance = eq_input,
        .output_decouple_distance = eq_output,
        .encoder_match_distance = eq_encoder,
        .decoder_match_distance = eq_decoder,
        .end_to_end_distance = eq_chain,
        .epsilon_achieved = eps_achieved,
        .residual_state = residual,
        .seed = sampler.seed(),
    };
}

/// Re-run a code defined only by its encoder and decoder isometries and
/// report the achieved error: the trace distance between the (R, Bb, Ah, Bh)
/// marginal after transmission and the two ideal maximally entangled pairs.
/// `log_dim_r` must match the encoder's message-reference size.
inline double evaluate_code(const LinearMapOperator& w_enc,
                            const LinearMapOperator& v_dec,
                            const SideInfoChannel& ch, int n, double log_dim_r,
                            long dim_cap = SubsystemLayout::default_dim_cap) {
    if (n < 1) throw std::invalid_argument("blocklength must be at least 1");
    if (!w_enc.in_layout().has("Rp") || !w_enc.in_layout().has("At"))
        throw std::invalid_argument("encoder must consume Rp and At");
    for (int i = 1; i <= n; ++i)
        for (const auto& l : ch.encoder_labels())
            if (!w_enc.in_layout().has(l + std::to_string(i)))
                throw std::invalid_argument("encoder is missing side copy '" + l +
                                            std::to_string(i) + "'");
    if (!v_dec.in_layout().has("Bt"))
        throw std::invalid_argument("decoder must consume Bt");
    for (const auto& l : {"Bb", "Bh"})
        if (!v_dec.out_layout().has(l))
            throw std::invalid_argument(std::string("decoder must produce ") + l);

    const long dim_r = w_enc.in_layout().dim_of("Rp");
    const long dim_bt = w_enc.in_layout().dim_of("At");
    if (v_dec.in_layout().dim_of("Bt") != dim_bt)
        throw std::invalid_argument(
            "decoder's Bt does not match the encoder's At");
    if (v_dec.out_layout().dim_of("Bb") != dim_r)
        throw std::invalid_argument(
            "decoder's Bb does not match the message size");
    if (std::abs(std::log2(static_cast<double>(dim_r)) - log_dim_r) > 1e-9)
        throw std::invalid_argument("encoder message size disagrees with the "
                                    "requested rate");

    const PureState phi_in =
        detail::reference_input(ch, n, dim_r, dim_bt, dim_cap);
    PureState chain = apply_map(w_enc, phi_in, dim_cap);
    const LinearMapOperator dil = stinespring_dilation(ch.channel(), "E");
    for (int i = 1; i <= n; ++i) {
        const LinearMapOperator dil_i = relabel_subsystems(
            dil, detail::copy_renames(dil.in_layout().labels(), i),
            detail::copy_renames(dil.out_layout().labels(), i));
        chain = apply_map(dil_i, chain, dim_cap);
    }
    chain = apply_map(v_dec, chain, dim_cap);

    const long dim_ah = v_dec.out_layout().dim_of("Bh");
    PureState ideal = maximally_entangled("R", "Bb", dim_r);
    if (w_enc.out_layout().has("Ah")) {
        if (w_enc.out_layout().dim_of("Ah") != dim_ah)
            throw std::invalid_argument(
                "encoder's Ah does not match the decoder's Bh");
        ideal = tensor_product(ideal, maximally_entangled("Ah", "Bh", dim_ah),
                               dim_cap);
        return trace_distance(marginal(chain, {"R", "Bb", "Ah", "Bh"}),
                              ideal.density());
    }
    if (dim_ah != 1)
        throw std::invalid_argument(
            "decoder recovers entanglement the encoder never kept");
    return trace_distance(marginal(chain, {"R", "Bb"}), ideal.density());
}

/// Net entanglement book-keeping for n uses of the channel on input sigma.
/// All entries are in qubits (log base 2).
struct EntanglementReport {
    double consumed;          ///< (n/2) I(A; E D): shared pairs burned by the encoder
    double recovered;         ///< (n/2) I(A; S): pairs handed back via Ah/Bh
    double net;               ///< consumed - recovered
    double coherent_info;     ///< single-copy I(A>B) through the channel
    double unassisted_rate;   ///< (1/2) I(A>B)
    double log_r_asymptotic;  ///< n times the one-shot rate of sigma
    double ledger_residual;   ///< |log_r - consumed + recovered - n I(A>B)|
};

/// The identity log|R| = n I(A>B) + consumed - recovered holds exactly on the
/// purified single copy; the residual is reported so drift is visible.
inline EntanglementReport entanglement_accounting(const DensityOperator& sigma,
                                                  const SideInfoChannel& ch,
                                                  int n) {
    if (n < 1) throw std::invalid_argument("blocklength must be at least 1");
    auto [canon, a] = detail::canonical_input(sigma, ch);
    detail::check_side_marginal(canon, ch);
    const PureState theta1 = purify(canon, "D");
    const LinearMapOperator dil = stinespring_dilation(ch.channel(), "E");
    const PureState omega1 = apply_map(dil, theta1);
    const DensityOperator omega_rho = omega1.density();

    const double i_aed = mutual_information(omega_rho, {a}, {"E", "D"});
    const double i_as = mutual_information(canon, {a}, ch.side_labels());
    const double i_ab =
        mutual_information(omega_rho, {a}, ch.channel().out_layout().labels());
    const double coherent = coherent_information(
        apply_channel(ch.channel(), canon), {a},
        ch.channel().out_layout().labels());

    EntanglementReport report;
    report.consumed = 0.5 * n * i_aed;
    report.recovered = 0.5 * n * i_as;
    report.net = report.consumed - report.recovered;
    report.coherent_info = coherent;
    report.unassisted_rate = 0.5 * coherent;
    report.log_r_asymptotic = n * (0.5 * i_ab - 0.5 * i_as);
    report.ledger_residual = std::abs(report.log_r_asymptotic - report.consumed +
                                      report.recovered - n * coherent);
    return report;
}

/// A perfect straight-wire code for the trivial-side identity channel at
/// blocklength n: the encoder routes 2^n message levels onto the n qubit
/// inputs and the decoder routes the n outputs back.  Useful as an exact
/// fixed point for the converse ledger.
struct CodePair {
    LinearMapOperator w_enc;
    LinearMapOperator v_dec;
};

inline CodePair identity_wiring_code(int n) {
    if (n < 1 || n > 12)
        throw std::invalid_argument("blocklength out of range for wiring code");
    const long r = 1L << n;
    std::vector<Subsystem> w_in{{"Rp", r}, {"At", 1}};
    std::vector<Subsystem> w_out;
    for (int i = 1; i <= n; ++i) w_in.push_back({"Sp" + std::to_string(i), 1});
    for (int i = 1; i <= n; ++i) w_out.push_back({"Ap" + std::to_string(i), 2});
    w_out.push_back({"Ah", 1});
    std::vector<Subsystem> v_in{{"Bt", 1}};
    std::vector<Subsystem> v_out{{"Bb", r}, {"Bh", 1}, {"G", 1}};
    for (int i = 1; i <= n; ++i) v_in.push_back({"B" + std::to_string(i), 2});
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(r, r);
    return CodePair{
        LinearMapOperator(MapKind::unitary, SubsystemLayout(w_in),
                          SubsystemLayout(w_out), eye),
        LinearMapOperator(MapKind::unitary, SubsystemLayout(v_in),
                          SubsystemLayout(v_out), eye),
    };
}

/// Per-step entries of the converse ledger.  Each residual should vanish to
/// numerical precision on any encoder; `slack` is the correlation the new
/// output picks up with the previous ones and is the exact gap of the step
/// inequality, so `step_residual` checks the two against each other.
struct ConverseStep {
    int i = 0;
    double chain_out_residual = 0.0;   ///< chain rule over (B^{i-1}, B_i)
    double chain_side_residual = 0.0;  ///< chain rule over (S^{i-1}, S_i)
    double side_drop_residual = 0.0;   ///< dropping S_i from the conditioner
    double prev_out_residual = 0.0;    ///< rewriting the previous step's term
    double out_split_residual = 0.0;   ///< splitting I(X_i; B_i)
    double side_split_residual = 0.0;  ///< splitting I(X_i; S_i)
    double slack = 0.0;                ///< I(B^{i-1}; B_i) >= 0
    double step_residual = 0.0;        ///< |step gap - slack|
};

/// Full converse ledger for a rate-Q, error-epsilon code: the continuity
/// lower bound on the message information, the chain-rule decomposition down
/// to per-copy terms, and the per-step identities with their slacks.
struct ConverseLedger {
    int n = 0;
    double q = 0.0;
    double epsilon = 0.0;

    double d_raw = 0.0;       ///< continuity penalty 3 eps Q / 2 + 3 eps log2(eps) / n
    double d_clamped = 0.0;   ///< max(d_raw, 0)
    double threshold_raw = 0.0;
    double threshold_clamped = 0.0;
    double message_information = 0.0;  ///< I(R; Bt B^n) after all n uses
    bool threshold_raw_met = false;
    bool threshold_clamped_met = false;

    double message_ebit_independence = 0.0;  ///< I(R; Bt), zero for any encoder
    double decomposition_residual = 0.0;     ///< chain rule over (Bt, B^n)
    double grouping_margin = 0.0;            ///< I(R Bt; B^n) - I(R; B^n | Bt) >= 0
    double side_independence = 0.0;          ///< I(R Bt; S^n) before the channel

    double chain_lhs = 0.0;  ///< I(R Bt; B^n) - I(R Bt; S^n)
    double chain_rhs = 0.0;  ///< telescoped per-copy differences
    double chain_gap = 0.0;  ///< rhs - lhs >= 0
    double chain_slack_residual = 0.0;  ///< |gap - sum of step slacks|

    std::vector<ConverseStep> steps;
};

/// Evaluate the converse chain for the code (w_enc, v_dec) on the given
/// channel at rate q and error epsilon.  The decoder only fixes the claimed
/// rate's meaning; every information quantity lives on the encoded state and
/// its images under 0..n channel uses.  Side-system quantities are taken on
/// the pre-channel state, where all side copies still exist; their joint
/// marginal with (R, Bt) is untouched by the channel, so this matches any
/// intermediate state on which they are still defined.
inline ConverseLedger converse_chain_check(
    const LinearMapOperator& w_enc, const LinearMapOperator& v_dec,
    const SideInfoChannel& ch, int n, double q, double epsilon,
    long dim_cap = SubsystemLayout::default_dim_cap) {
    if (n < 1) throw std::invalid_argument("blocklength must be at least 1");
    if (epsilon < 0.0) throw std::invalid_argument("epsilon must be nonnegative");
    if (!w_enc.in_layout().has("Rp") || !w_enc.in_layout().has("At"))
        throw std::invalid_argument("encoder must consume Rp and At");
    if (!v_dec.in_layout().has("Bt"))
        throw std::invalid_argument("decoder must consume Bt");
    const long dim_r = w_enc.in_layout().dim_of("Rp");
    const long dim_bt = w_enc.in_layout().dim_of("At");

    const PureState phi_in =
        detail::reference_input(ch, n, dim_r, dim_bt, dim_cap);
    const PureState encoded_full = apply_map(w_enc, phi_in, dim_cap);

    // Drop the encoder's private systems (Ah and the purifier copies); the
    // chain only ever looks at R, Bt, the side copies, and the channel
    // inputs/outputs, and tracing spectators early keeps dimensions down.
    std::vector<std::string> keep;
    for (const auto& s : encoded_full.layout().subsystems()) {
        if (s.label == "R" || s.label == "Bt") {
            keep.push_back(s.label);
            continue;
        }
        bool used = false;
        for (int i = 1; i <= n && !used; ++i) {
            for (const auto& l : ch.channel().in_layout().labels())
                if (s.label == l + std::to_string(i)) {
                    used = true;
                    break;
                }
        }
        if (used) keep.push_back(s.label);
    }
    std::vector<DensityOperator> stages;
    stages.reserve(static_cast<std::size_t>(n) + 1);
    stages.push_back(marginal(encoded_full, keep));
    for (int i = 1; i <= n; ++i)
        stages.push_back(apply_channel(detail::channel_copy(ch.channel(), i),
                                       stages.back(), dim_cap));
    const DensityOperator& sigma0 = stages.front();
    const DensityOperator& final_state = stages.back();

    const std::vector<std::string> side = ch.side_labels();
    const std::vector<std::string> outs = ch.channel().out_layout().labels();
    const auto side_block = [&](int lo, int hi) {
        std::vector<std::string> v;
        for (int i = lo; i <= hi; ++i)
            for (const auto& l : side) v.push_back(l + std::to_string(i));
        return v;
    };
    const auto out_block = [&](int lo, int hi) {
        std::vector<std::string> v;
        for (int i = lo; i <= hi; ++i)
            for (const auto& l : outs) v.push_back(l + std::to_string(i));
        return v;
    };
    const auto join = [](std::vector<std::string> a,
                         const std::vector<std::string>& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };

    ConverseLedger ledger;
    ledger.n = n;
    ledger.q = q;
    ledger.epsilon = epsilon;
    ledger.d_raw = 1.5 * epsilon * q +
                   (epsilon > 0.0 ? 3.0 * epsilon * std::log2(epsilon) / n : 0.0);
    ledger.d_clamped = std::max(ledger.d_raw, 0.0);
    ledger.threshold_raw = 2.0 * n * (q - ledger.d_raw);
    ledger.threshold_clamped = 2.0 * n * (q - ledger.d_clamped);

    const std::vector<std::string> all_outs = out_block(1, n);
    const std::vector<std::string> all_sides = side_block(1, n);
    ledger.message_information =
        mutual_information(final_state, {"R"}, join({"Bt"}, all_outs));
    ledger.threshold_raw_met =
        ledger.message_information >= ledger.threshold_raw - 1e-8;
    ledger.threshold_clamped_met =
        ledger.message_information >= ledger.threshold_clamped - 1e-8;

    ledger.message_ebit_independence =
        mutual_information(final_state, {"R"}, {"Bt"});
    ledger.decomposition_residual = std::abs(
        ledger.message_information - ledger.message_ebit_independence -
        conditional_mutual_information(final_state, {"R"}, all_outs, {"Bt"}));
    ledger.grouping_margin =
        mutual_information(final_state, {"R", "Bt"}, all_outs) -
        conditional_mutual_information(final_state, {"R"}, all_outs, {"Bt"});
    ledger.side_independence =
        mutual_information(sigma0, {"R", "Bt"}, all_sides);

    ledger.chain_lhs = mutual_information(final_state, {"R", "Bt"}, all_outs) -
                       ledger.side_independence;
    ledger.chain_rhs = 0.0;
    for (int i = 1; i <= n; ++i) {
        const std::vector<std::string> x_i =
            join(join({"R", "Bt"}, out_block(1, i - 1)), side_block(i + 1, n));
        ledger.chain_rhs +=
            mutual_information(stages[static_cast<std::size_t>(i)], x_i,
                               out_block(i, i)) -
            mutual_information(stages[static_cast<std::size_t>(i - 1)], x_i,
                               side_block(i, i));
    }
    ledger.chain_gap = ledger.chain_rhs - ledger.chain_lhs;

    double slack_total = 0.0;
    for (int i = 2; i <= n; ++i) {
        const DensityOperator& w_i = stages[static_cast<std::size_t>(i)];
        const DensityOperator& w_prev = stages[static_cast<std::size_t>(i - 1)];
        const std::vector<std::string> y_i = join({"R", "Bt"}, side_block(i + 1, n));
        const std::vector<std::string> y_prev = join(y_i, side_block(i, i));
        const std::vector<std::string> x_i = join(join({"R", "Bt"}, out_block(1, i - 1)),
                                                  side_block(i + 1, n));
        const std::vector<std::string> b_past = out_block(1, i - 1);
        const std::vector<std::string> b_new = out_block(i, i);
        const std::vector<std::string> s_past = side_block(1, i - 1);
        const std::vector<std::string> s_new = side_block(i, i);

        ConverseStep step;
        step.i = i;
        step.chain_out_residual = std::abs(
            mutual_information(w_i, y_i, join(b_past, b_new)) -
            mutual_information(w_i, y_i, b_past) -
            conditional_mutual_information(w_i, y_i, b_new, b_past));
        step.chain_side_residual = std::abs(
            mutual_information(sigma0, y_i, join(s_past, s_new)) -
            mutual_information(sigma0, y_i, s_new) -
            conditional_mutual_information(sigma0, y_i, s_past, s_new));
        step.side_drop_residual = std::abs(
            mutual_information(sigma0, y_prev, s_past) -
            conditional_mutual_information(sigma0, y_i, s_past, s_new));
        step.prev_out_residual = std::abs(
            mutual_information(w_prev, y_prev, b_past) -
            mutual_information(w_prev, s_new, b_past) -
            conditional_mutual_information(w_prev, y_i, b_past, s_new));
        step.out_split_residual = std::abs(
            mutual_information(w_i, x_i, b_new) -
            mutual_information(w_i, b_past, b_new) -
            conditional_mutual_information(w_i, y_i, b_new, b_past));
        step.side_split_residual = std::abs(
            mutual_information(w_prev, x_i, s_new) -
            mutual_information(w_prev, b_past, s_new) -
            conditional_mutual_information(w_prev, y_i, s_new, b_past));
        step.slack = mutual_information(w_i, b_past, b_new);

        const double lhs_step = mutual_information(w_i, y_i, join(b_past, b_new)) -
                                mutual_information(sigma0, y_i, join(s_past, s_new));
        const double rhs_step =
            mutual_information(w_prev, y_prev, b_past) -
            mutual_information(sigma0, y_prev, s_past) +
            mutual_information(w_i, x_i, b_new) -
            mutual_information(w_prev, x_i, s_new);
        step.step_residual = std::abs((rhs_step - lhs_step) - step.slack);
        slack_total += step.slack;
        ledger.steps.push_back(step);
    }
    ledger.chain_slack_residual = std::abs(ledger.chain_gap - slack_total);
    return ledger;
}

} // namespace qgp
