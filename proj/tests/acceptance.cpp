// Release checklist.  Each numbered check probes one headline numerical
// claim at its stated tolerance and prints a single PASS/FAIL line; the
// process exits nonzero if any check fails.  Checks with an explicit runtime
// budget time themselves and fail when over budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "qgp/capacity.hpp"
#include "qgp/channel.hpp"
#include "qgp/coding.hpp"
#include "qgp/decoupling.hpp"
#include "qgp/entropy.hpp"
#include "qgp/haar.hpp"
#include "qgp/rng.hpp"
#include "qgp/tensor_ops.hpp"
#include "qgp/typicality.hpp"

using namespace qgp;

namespace {

int failures = 0;

void report(int idx, bool ok, const std::string& detail) {
    std::printf("%s  criterion %2d: %s\n", ok ? "PASS" : "FAIL", idx,
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ =
        std::chrono::steady_clock::now();
};

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return buf;
}

PureState random_pure(CounterRng& rng, SubsystemLayout layout) {
    Eigen::VectorXcd v(layout.total_dim());
    for (long i = 0; i < v.size(); ++i) v(i) = rng.complex_gaussian();
    v.normalize();
    return PureState(std::move(layout), std::move(v));
}

// sigma = Phi^{AA'} (x) side marginal: the canonical feasible input for a
// qubit-message channel.
DensityOperator entangled_input(const SideInfoChannel& ch) {
    return tensor_product(maximally_entangled("A", "Ap", 2).density(),
                          ch.side_marginal());
}

// Pure sigma on (A, A', S) with S-marginal exactly I/4: a local rotation of
// the maximally entangled (AA'):S state.
DensityOperator feasible_pure_input(const Eigen::MatrixXcd& u) {
    Eigen::VectorXcd amps(16);
    for (int j = 0; j < 4; ++j)
        for (int s = 0; s < 4; ++s) amps(4 * j + s) = u(j, s) / 2.0;
    return PureState(SubsystemLayout({{"A", 2}, {"Ap", 2}, {"S", 4}}),
                     std::move(amps))
        .density();
}

// --------------------------------------------------------------------------
// 1. random-unitary decoupling bound, Monte Carlo mean within 3 standard
//    errors of the analytic right-hand side

void criterion_1() {
    const Timer timer;
    struct Triple {
        long dim_a, dim_transmitted, dim_r;
    };
    const std::vector<Triple> triples = {
        {4, 2, 2}, {8, 2, 2}, {8, 4, 2}, {4, 2, 4}};
    bool ok = true;
    double worst_margin = -1e9;
    std::uint64_t stream = 100;
    for (const auto& t : triples) {
        for (int rep = 0; rep < 5; ++rep) {
            CounterRng rng(424242, stream);
            const PureState psi = random_pure(
                rng,
                SubsystemLayout({{"A", t.dim_a}, {"B", 2}, {"R", t.dim_r}}));
            const DecouplingReport rep_out = fqsw_bound_check(
                psi, "A", {"R"}, t.dim_a / t.dim_transmitted,
                t.dim_transmitted, HaarSampler(424242, t.dim_a, stream + 1),
                500);
            const double margin =
                rep_out.lhs_mean -
                (rep_out.rhs_bound + 3.0 * rep_out.std_error);
            worst_margin = std::max(worst_margin, margin);
            ok = ok && margin <= 0.0;
            stream += 2;
        }
    }
    const double elapsed = timer.seconds();
    ok = ok && elapsed < 120.0;
    report(1, ok,
           fmt("decoupling bound on 4 dimension triples x 5 states x 500 "
               "samples; worst mean-vs-bound margin %+.3e, %.1f s (budget "
               "120 s)",
               worst_margin, elapsed));
}

// --------------------------------------------------------------------------
// 2. mutual-information exchange identity on random tripartite mixed states

void criterion_2() {
    const Timer timer;
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const long d1 = 2 + (k & 1), d2 = 2 + ((k >> 1) & 1),
                   d3 = 2 + ((k >> 2) & 1);
        CounterRng rng(31337, 500 + static_cast<std::uint64_t>(k));
        const PureState psi = random_pure(
            rng, SubsystemLayout(
                     {{"X", d1}, {"Y", d2}, {"Z", d3}, {"P", d1 * d2 * d3}}));
        const DensityOperator rho = marginal(psi, {"X", "Y", "Z"});
        worst = std::max(worst, check_mi_identity(rho, {"X"}, {"Y"}, {"Z"}));
    }
    const double elapsed = timer.seconds();
    const bool ok = worst < 1e-8 && elapsed < 60.0;
    report(2, ok,
           fmt("exchange identity on 200 random tripartite states, dims in "
               "{2,3}; worst residual %.3e (tol 1e-8), %.1f s",
               worst, elapsed));
}

// --------------------------------------------------------------------------
// 3. converse ledger on the perfect two-use wiring code, plus a negative
//    control that keeps the identities but loses the threshold

void criterion_3() {
    const SideInfoChannel ch = identity_side_channel();
    const CodePair wiring = identity_wiring_code(2);
    const ConverseLedger led =
        converse_chain_check(wiring.w_enc, wiring.v_dec, ch, 2, 1.0, 0.0);

    double worst_residual = std::abs(led.decomposition_residual);
    worst_residual = std::max(worst_residual, std::abs(led.chain_slack_residual));
    worst_residual =
        std::max(worst_residual, std::abs(led.message_ebit_independence));
    worst_residual = std::max(worst_residual, std::abs(led.side_independence));
    double worst_slack_violation = 0.0;
    for (const ConverseStep& st : led.steps) {
        for (double v : {st.chain_out_residual, st.chain_side_residual,
                         st.side_drop_residual, st.prev_out_residual,
                         st.out_split_residual, st.side_split_residual,
                         st.step_residual})
            worst_residual = std::max(worst_residual, std::abs(v));
        worst_slack_violation = std::max(worst_slack_violation, -st.slack);
    }
    const double equality_gap =
        std::abs(led.message_information - led.threshold_clamped);
    const double threshold_value_gap = std::abs(led.threshold_clamped - 4.0);

    bool ok = led.threshold_clamped_met && threshold_value_gap <= 1e-8 &&
              equality_gap <= 1e-8 && worst_residual < 1e-8 &&
              worst_slack_violation <= 1e-8;

    // negative control: a Haar-random leaking encoder satisfies every state
    // identity yet falls short of the threshold
    const Eigen::MatrixXcd w_mat = HaarSampler(99, 16, 0).draw().leftCols(4);
    const LinearMapOperator w_rand(
        MapKind::isometry,
        SubsystemLayout({{"Rp", 4}, {"At", 1}, {"Sp1", 1}, {"Sp2", 1}}),
        SubsystemLayout({{"Ap1", 2}, {"Ap2", 2}, {"D1", 2}, {"D2", 2}}),
        w_mat);
    const ConverseLedger neg =
        converse_chain_check(w_rand, wiring.v_dec, ch, 2, 1.0, 0.0);
    double neg_worst = std::abs(neg.chain_slack_residual);
    for (const ConverseStep& st : neg.steps)
        for (double v : {st.chain_out_residual, st.chain_side_residual,
                         st.side_drop_residual, st.prev_out_residual,
                         st.out_split_residual, st.side_split_residual,
                         st.step_residual})
            neg_worst = std::max(neg_worst, std::abs(v));
    ok = ok && neg_worst < 1e-8 && !neg.threshold_raw_met;

    report(3, ok,
           fmt("converse on the perfect n=2 wiring code: threshold %.9f met "
               "with equality gap %.2e, worst identity residual %.2e, slack "
               "floor %.2e; negative control identities %.2e with threshold "
               "unmet",
               led.threshold_clamped, equality_gap, worst_residual,
               -worst_slack_violation, neg_worst));
}

// --------------------------------------------------------------------------
// 4. revealed-Pauli channel carries one qubit per use: closed-form witness
//    rate, then the optimizer rediscovers it from scratch

void criterion_4() {
    const Timer timer;
    const SideInfoChannel ch = pauli_reveal_channel();
    const double witness = gp_rate(pauli_precorrection_state(), ch);
    const CapacityResult res =
        optimize_capacity(ch, 2, 4, 20, HaarSampler(20250823, 2, 1));
    const double elapsed = timer.seconds();
    const bool ok = std::abs(witness - 1.0) <= 1e-9 && res.rate >= 0.95 &&
                    elapsed < 300.0;
    report(4, ok,
           fmt("revealed-Pauli witness rate %.12f (target 1 +- 1e-9); "
               "optimizer with dim_A=2, env_dim=4, 20 restarts reached "
               "%.4f (need >= 0.95), %.1f s (budget 300 s)",
               witness, res.rate, elapsed));
}

// --------------------------------------------------------------------------
// 5. no feasible pure input approaches the witness rate

void criterion_5() {
    HaarSampler hs(5150, 4, 0);
    const SideInfoChannel ch = pauli_reveal_channel();
    double best = -1e9;
    for (int k = 0; k < 500; ++k)
        best = std::max(best, gp_rate(feasible_pure_input(hs.draw()), ch));
    const bool ok = best < 1.0 - 1e-3;
    report(5, ok,
           fmt("500 feasible pure inputs on the revealed-Pauli channel: "
               "maximum rate %.6f stays below 1 - 1e-3",
               best));
}

// --------------------------------------------------------------------------
// 6. defective-memory family: endpoints, interior point, monotone grid

void criterion_6() {
    const Timer timer;
    const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> rates;
    for (double p : grid) {
        const SideInfoChannel ch = defective_memory_channel(p, 0.0);
        rates.push_back(
            optimize_capacity(ch, 2, 4, 6, HaarSampler(20250823, 2, 1)).rate);
    }
    bool monotone = true;
    for (std::size_t i = 1; i < rates.size(); ++i)
        monotone = monotone && rates[i] <= rates[i - 1] + 0.02;
    const bool ok = std::abs(rates.front() - 1.0) <= 0.02 &&
                    rates.back() <= 1e-6 &&
                    rates[2] > rates.back() && rates[2] < rates.front() &&
                    monotone;
    report(6, ok,
           fmt("defective memory rates over p = {0, .25, .5, .75, 1}: "
               "%.4f %.4f %.4f %.4f %.2e; endpoints 1.0 +- 0.02 and <= 1e-6, "
               "interior strict, monotone within 0.02, %.1f s",
               rates[0], rates[1], rates[2], rates[3], rates[4],
               timer.seconds()));
}

// --------------------------------------------------------------------------
// 7. typical projector: census equals the classical enumeration, dimension
//    bound exact, gentle measurement on every tested instance

void criterion_7() {
    const auto make_base = [](const std::vector<double>& p) {
        const long d = static_cast<long>(p.size());
        Eigen::MatrixXcd diag = Eigen::MatrixXcd::Zero(d, d);
        for (long i = 0; i < d; ++i) diag(i, i) = p[static_cast<std::size_t>(i)];
        return DensityOperator(SubsystemLayout({{"A", d}}), diag);
    };

    const TypicalProjector pinned(make_base({0.7, 0.3}), 8, 0.15, "A", "Atyp");
    const ClassicalTypicalSet classical =
        classical_typical_set({0.7, 0.3}, 8, 0.15);
    bool ok = pinned.typical_dim() ==
              static_cast<long>(classical.sequences.size());
    const long pinned_count = pinned.typical_dim();

    struct Instance {
        std::vector<double> p;
        int n;
        double eps;
    };
    const std::vector<Instance> instances = {
        {{0.7, 0.3}, 8, 0.15}, {{0.7, 0.3}, 12, 0.1}, {{0.9, 0.1}, 8, 0.1},
        {{0.5, 0.5}, 6, 0.1},  {{0.6, 0.3, 0.1}, 5, 0.12},
    };
    double worst_gentle_margin = -1e9;
    bool property2 = true, gentle_ok = true;
    for (const auto& inst : instances) {
        const TypicalProjector tp(make_base(inst.p), inst.n, inst.eps, "A",
                                  "Atyp");
        property2 =
            property2 && static_cast<double>(tp.typical_dim()) <=
                             std::pow(2.0, inst.n * (tp.base_entropy() + inst.eps));
        const GentleMeasurementReport g = gentle_measurement_check(tp);
        gentle_ok = gentle_ok && g.post_distance <= g.bound;
        worst_gentle_margin =
            std::max(worst_gentle_margin, g.post_distance - g.bound);
    }
    ok = ok && property2 && gentle_ok;
    report(7, ok,
           fmt("typical census (0.7,0.3) n=8 eps=0.15: quantum %ld == "
               "classical %zu; dimension bound exact and gentle measurement "
               "hold on all 5 instances (worst margin %+.2e)",
               pinned_count, classical.sequences.size(), worst_gentle_margin));
}

// --------------------------------------------------------------------------
// 8. Uhlmann alignment: overlap equals the nuclear norm and beats random
//    isometry search on every pair

void criterion_8() {
    double worst_gap = 0.0;
    double worst_lead = 1e9;
    bool ok = true;
    for (int k = 0; k < 100; ++k) {
        CounterRng rng(778899, 2000 + static_cast<std::uint64_t>(k));
        const PureState psi =
            random_pure(rng, SubsystemLayout({{"A", 3}, {"B", 4}}));
        const PureState phi =
            random_pure(rng, SubsystemLayout({{"A", 3}, {"C", 3}}));
        const UhlmannResult res = uhlmann_partial_isometry(psi, phi);

        Eigen::MatrixXcd cross = Eigen::MatrixXcd::Zero(4, 3);
        for (long a = 0; a < 3; ++a)
            for (long b = 0; b < 4; ++b)
                for (long c = 0; c < 3; ++c)
                    cross(b, c) += std::conj(psi.amplitudes()(a * 4 + b)) *
                                   phi.amplitudes()(a * 3 + c);
        const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(cross);
        const double nuclear = svd.singularValues().sum();
        worst_gap =
            std::max(worst_gap, std::abs(res.achieved_overlap - nuclear));

        HaarSampler search(778899, 4, 3000 + static_cast<std::uint64_t>(k));
        double random_best = 0.0;
        for (int s = 0; s < 1000; ++s) {
            const Eigen::MatrixXcd v = search.draw().leftCols(3);
            random_best = std::max(
                random_best, std::abs((v.array() * cross.array()).sum()));
        }
        worst_lead = std::min(worst_lead, res.achieved_overlap - random_best);
        ok = ok && std::abs(res.achieved_overlap - nuclear) <= 1e-10 &&
             res.achieved_overlap >= random_best - 1e-12;
    }
    report(8, ok,
           fmt("Uhlmann overlap vs nuclear norm on 100 pairs: worst gap "
               "%.2e (tol 1e-10); lead over best of 1000 random isometries "
               ">= %.3e on every pair",
               worst_gap, worst_lead));
}

// --------------------------------------------------------------------------
// 9. code pipeline consistency: evaluator matches the builder, the noiseless
//    smoke code is exact, and the pinned-seed build reproduces bit for bit

void criterion_9() {
    const SideInfoChannel ident = identity_side_channel();
    const CodeArtifacts smoke =
        build_code(entangled_input(ident), ident, 1,
                   HaarSampler(20250823, 2, 3), CodeSizes{2, 1, 1});
    const double smoke_eval =
        evaluate_code(smoke.w_enc, smoke.v_dec, ident, 1, smoke.log_dim_r);
    bool ok = smoke.epsilon_achieved < 1e-9 &&
              std::abs(smoke_eval - smoke.epsilon_achieved) <= 1e-10;

    const SideInfoChannel pauli = pauli_reveal_channel();
    const CodeArtifacts art =
        build_code(pauli_precorrection_state(), pauli, 1,
                   HaarSampler(20250823, 2, 7), CodeSizes{2, 1, 1});
    const double art_eval =
        evaluate_code(art.w_enc, art.v_dec, pauli, 1, art.log_dim_r);
    ok = ok && std::abs(art_eval - art.epsilon_achieved) <= 1e-10;

    // pinned-seed regression: values recorded from this build configuration
    // must reproduce exactly, bit for bit
    const bool pinned =
        art.epsilon_achieved == 3.7999552310577712e-16 &&
        art.encoder_match_distance == 0.0 &&
        art.end_to_end_distance == 5.1619136559035694e-08 &&
        art.typical_mass == 0.99999999999999978 &&
        art.u_split.matrix()(0, 0) ==
            std::complex<double>(-0.49767499415432392, 0.096452354457565892) &&
        art.w_enc.matrix()(0, 0) ==
            std::complex<double>(-0.16872022402956605, 0.84531061126458062);
    ok = ok && pinned;

    report(9, ok,
           fmt("evaluator matches builder within 1e-10 (smoke gap %.2e, "
               "pinned gap %.2e); smoke epsilon %.2e < 1e-9; pinned-seed "
               "revealed-Pauli build reproduces bit-exactly: %s",
               std::abs(smoke_eval - smoke.epsilon_achieved),
               std::abs(art_eval - art.epsilon_achieved),
               smoke.epsilon_achieved, pinned ? "yes" : "no"));
}

// --------------------------------------------------------------------------
// 10. CLI determinism: identical seed and config give byte-identical reports

std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void criterion_10() {
    namespace fs = std::filesystem;
    const fs::path scratch = "acceptance_scratch";
    fs::create_directories(scratch);
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"capacity",
         "--seed 777 capacity builtin:identity --restarts 2 --iters 100"},
        {"decouple", "--seed 777 --samples 30 decouple"},
        {"code", "--seed 777 code builtin:pauli_reveal --sigma witness --n 1"},
        {"typicality",
         "--seed 777 typicality --p 0.7,0.3 --n 8 --epsilon 0.15"},
        {"verify", "--seed 777 --samples 4 verify"},
    };
    bool ok = true;
    std::string first_diff = "none";
    for (const auto& [tag, args] : commands) {
        std::string bytes[2];
        for (int round = 0; round < 2; ++round) {
            const fs::path out =
                scratch / (tag + "_" + std::to_string(round) + ".json");
            const std::string cmd = std::string(QGP_CLI_PATH) + " " + args +
                                    " > " + out.string() + " 2> /dev/null";
            const int rc = std::system(cmd.c_str());
            if (!WIFEXITED(rc) || WEXITSTATUS(rc) != 0) {
                ok = false;
                if (first_diff == "none") first_diff = tag + " (exit)";
            }
            bytes[round] = read_file(out);
        }
        if (bytes[0].empty() || bytes[0] != bytes[1]) {
            ok = false;
            if (first_diff == "none") first_diff = tag;
        }
    }
    report(10, ok,
           fmt("all 5 cli commands rerun byte-identically under a fixed "
               "seed (first difference: %s)",
               first_diff.c_str()));
}

} // namespace

int main() {
    std::printf("release acceptance checklist\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    if (failures == 0) {
        std::printf("all 10 criteria passed\n");
        return 0;
    }
    std::printf("%d criteria FAILED\n", failures);
    return 1;
}
