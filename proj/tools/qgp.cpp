// Command-line surface: channel ingestion, experiment commands, JSON/CSV
// report emission.  Every report is a pure function of (seed, config), so
// reruns are byte-identical; nothing time- or host-dependent is written.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "qgp/capacity.hpp"
#include "qgp/channel.hpp"
#include "qgp/coding.hpp"
#include "qgp/decoupling.hpp"
#include "qgp/entropy.hpp"
#include "qgp/haar.hpp"
#include "qgp/rng.hpp"
#include "qgp/serialize.hpp"
#include "qgp/tensor_ops.hpp"
#include "qgp/typicality.hpp"
#include "qgp/version.hpp"

namespace {

using qgp::Json;

struct GlobalOpts {
    std::uint64_t seed = 20250823;
    int samples = 500;
    std::string out;            // empty: primary report goes to stdout
    std::string format = "json";
    long cap = qgp::SubsystemLayout::default_dim_cap;
    std::string schedule = "n^-1/4";
};

// ---------------------------------------------------------------------------
// output plumbing

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file '" + path + "'");
    f << bytes;
    if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

std::string out_stem(const std::string& out) {
    if (out.size() > 5 && out.compare(out.size() - 5, 5, ".json") == 0)
        return out.substr(0, out.size() - 5);
    return out;
}

void emit_primary(const GlobalOpts& g, const std::string& bytes) {
    if (g.out.empty())
        std::cout << bytes;
    else
        write_file(g.out, bytes);
}

// ---------------------------------------------------------------------------
// channel sources: a spec file path, or builtin:<name>?<key=value&...>

std::map<std::string, double> parse_query(const std::string& query,
                                           const std::string& name) {
    std::map<std::string, double> params;
    std::stringstream ss(query);
    std::string item;
    while (std::getline(ss, item, '&')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("builtin channel '" + name +
                                     "': parameter '" + item +
                                     "' is not key=value");
        const std::string key = item.substr(0, eq);
        try {
            std::size_t used = 0;
            const std::string text = item.substr(eq + 1);
            const double v = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            params[key] = v;
        } catch (const std::exception&) {
            throw std::runtime_error("builtin channel '" + name +
                                     "': parameter '" + key +
                                     "' is not a number");
        }
    }
    return params;
}

std::pair<qgp::SideInfoChannel, Json> load_channel(const std::string& src,
                                                   long cap) {
    Json desc;
    desc["source"] = src;
    if (src.rfind("builtin:", 0) == 0) {
        const std::string rest = src.substr(8);
        const auto q = rest.find('?');
        const std::string name = rest.substr(0, q);
        auto params = q == std::string::npos
                          ? std::map<std::string, double>{}
                          : parse_query(rest.substr(q + 1), name);
        const auto take = [&](const char* key, double dflt) {
            const auto it = params.find(key);
            if (it == params.end()) return dflt;
            const double v = it->second;
            params.erase(it);
            return v;
        };
        std::optional<qgp::SideInfoChannel> ch;
        desc["name"] = name;
        if (name == "pauli_reveal") {
            ch = qgp::pauli_reveal_channel();
        } else if (name == "defective_memory") {
            const double p = take("p", 0.5);
            const double depol = take("depol", 0.0);
            desc["p"] = p;
            desc["depol"] = depol;
            ch = qgp::defective_memory_channel(p, depol);
        } else if (name == "identity") {
            ch = qgp::identity_side_channel();
        } else {
            throw std::runtime_error("unknown builtin channel '" + name + "'");
        }
        if (!params.empty())
            throw std::runtime_error("builtin channel '" + name +
                                     "': unknown parameter '" +
                                     params.begin()->first + "'");
        return {std::move(*ch), std::move(desc)};
    }

    std::ifstream f(src, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read channel spec '" + src + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    const std::string text = buf.str();
    const qgp::ChannelSpecFile spec = qgp::parse_channel_spec(text);
    desc["name"] = spec.name;
    desc["spec_hash"] = qgp::hash_hex(qgp::fnv1a(text));
    return {qgp::to_side_info_channel(spec, cap), std::move(desc)};
}

// ---------------------------------------------------------------------------
// input states for the code builder

qgp::DensityOperator make_sigma(const std::string& kind,
                                const qgp::SideInfoChannel& ch, long cap) {
    const auto& in = ch.channel().in_layout();
    if (kind == "witness") {
        if (ch.message_labels().size() != 1 || ch.side_labels().size() != 1 ||
            in.dim_of(ch.message_labels()[0]) != 2 ||
            in.dim_of(ch.side_labels()[0]) != 4)
            throw std::runtime_error(
                "sigma source 'witness' needs a qubit message block and a "
                "four-dimensional channel-held block");
        qgp::DensityOperator w = qgp::pauli_precorrection_state();
        std::map<std::string, std::string> renames;
        if (ch.message_labels()[0] != "Ap")
            renames["Ap"] = ch.message_labels()[0];
        if (ch.side_labels()[0] != "S") renames["S"] = ch.side_labels()[0];
        if (!renames.empty()) w = relabel_subsystems(w, renames);
        return w;
    }

    long msg_dim = 1;
    std::vector<qgp::Subsystem> msg_subs;
    for (const auto& l : ch.message_labels()) {
        msg_subs.push_back({l, in.dim_of(l)});
        msg_dim *= in.dim_of(l);
    }
    if (kind == "entangled") {
        std::vector<qgp::Subsystem> subs{{"A", msg_dim}};
        subs.insert(subs.end(), msg_subs.begin(), msg_subs.end());
        const qgp::SubsystemLayout layout(subs, cap);
        Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(layout.total_dim());
        for (long m = 0; m < msg_dim; ++m)
            amps(m * msg_dim + m) = 1.0 / std::sqrt(double(msg_dim));
        return tensor_product(qgp::PureState(layout, amps).density(),
                              ch.side_marginal(), cap);
    }
    if (kind == "product") {
        const auto mixed = [&](std::vector<qgp::Subsystem> subs) {
            return qgp::DensityOperator::maximally_mixed(
                qgp::SubsystemLayout(std::move(subs), cap));
        };
        return tensor_product(
            tensor_product(mixed({{"A", msg_dim}}), mixed(msg_subs), cap),
            ch.side_marginal(), cap);
    }
    throw std::runtime_error("unknown sigma source '" + kind +
                             "' (expected entangled, product or witness)");
}

// ---------------------------------------------------------------------------
// commands

int cmd_capacity(const GlobalOpts& g, const std::string& channel_src,
                 long dim_a, long env_dim, int restarts, int iters) {
    auto [ch, chdesc] = load_channel(channel_src, g.cap);
    Json config;
    config["command"] = "capacity";
    config["channel"] = std::move(chdesc);
    config["dim_a"] = dim_a;
    config["env_dim"] = env_dim;
    config["restarts"] = restarts;
    config["max_iters"] = iters;
    config["cap"] = g.cap;

    const qgp::CapacityResult res = qgp::optimize_capacity(
        ch, dim_a, env_dim, restarts, qgp::HaarSampler(g.seed, 2, 1), iters,
        g.cap);

    if (g.format == "csv") {
        emit_primary(g, qgp::capacity_trace_csv(res));
        return 0;
    }
    Json report = qgp::report_envelope("capacity", g.seed, config);
    report["result"] = qgp::to_json(res);
    emit_primary(g, qgp::dump_json(report));
    if (!g.out.empty())
        write_file(out_stem(g.out) + "_trace.csv", qgp::capacity_trace_csv(res));
    return 0;
}

int cmd_decouple(const GlobalOpts& g, long dim_a, long dim_ahat, long dim_r,
                 long dim_b) {
    if (dim_ahat < 1 || dim_a % dim_ahat != 0)
        throw std::runtime_error(
            "the transmitted dimension must divide the rotated dimension");
    const long kept = dim_a / dim_ahat;
    Json config;
    config["command"] = "decouple";
    config["dim_a"] = dim_a;
    config["dim_ahat"] = dim_ahat;
    config["dim_r"] = dim_r;
    config["dim_b"] = dim_b;
    config["samples"] = g.samples;
    config["cap"] = g.cap;

    const qgp::SubsystemLayout layout(
        {{"A", dim_a}, {"B", dim_b}, {"R", dim_r}}, g.cap);
    qgp::CounterRng rng(g.seed, 1);
    Eigen::VectorXcd amps(layout.total_dim());
    for (long i = 0; i < amps.size(); ++i) amps(i) = rng.complex_gaussian();
    amps.normalize();
    const qgp::PureState psi(layout, amps);

    const qgp::DecouplingReport rep = qgp::fqsw_bound_check(
        psi, "A", {"R"}, kept, dim_ahat, qgp::HaarSampler(g.seed, dim_a, 2),
        g.samples);

    if (g.format == "csv") {
        emit_primary(g, qgp::decoupling_samples_csv(rep));
        return 0;
    }
    Json report = qgp::report_envelope("decouple", g.seed, config);
    report["result"] = qgp::to_json(rep);
    emit_primary(g, qgp::dump_json(report));
    if (!g.out.empty())
        write_file(out_stem(g.out) + "_samples.csv",
                   qgp::decoupling_samples_csv(rep));
    return 0;
}

int cmd_code(const GlobalOpts& g, const std::string& channel_src,
             const std::string& sigma_kind, int n,
             const std::string& sizes_text, double delta, bool has_delta) {
    auto [ch, chdesc] = load_channel(channel_src, g.cap);
    Json config;
    config["command"] = "code";
    config["channel"] = std::move(chdesc);
    config["sigma"] = sigma_kind;
    config["n"] = n;
    config["cap"] = g.cap;

    std::optional<qgp::CodeSizes> sizes;
    if (!sizes_text.empty()) {
        long v[3];
        std::stringstream ss(sizes_text);
        std::string item;
        int got = 0;
        while (std::getline(ss, item, ',') && got < 3) {
            try {
                v[got++] = std::stol(item);
            } catch (const std::exception&) {
                throw std::runtime_error("--sizes expects three integers r,bt,ah");
            }
        }
        if (got != 3 || ss.rdbuf()->in_avail() > 0)
            throw std::runtime_error("--sizes expects three integers r,bt,ah");
        sizes = qgp::CodeSizes{v[0], v[1], v[2]};
        config["sizes"] = Json::array({v[0], v[1], v[2]});
    }
    std::optional<double> delta_opt;
    if (has_delta) {
        delta_opt = delta;
        config["delta"] = delta;
    } else {
        config["epsilon_schedule"] = g.schedule;
        delta_opt = qgp::epsilon_schedule(g.schedule).value(n);
    }

    const qgp::DensityOperator sigma = make_sigma(sigma_kind, ch, g.cap);
    const qgp::CodeArtifacts art =
        qgp::build_code(sigma, ch, n, qgp::HaarSampler(g.seed, 2, 3), sizes,
                        delta_opt, g.cap);
    const double eval_eps = qgp::evaluate_code(art.w_enc, art.v_dec, ch, n,
                                               art.log_dim_r, g.cap);
    const qgp::EntanglementReport acct =
        qgp::entanglement_accounting(sigma, ch, n);
    const qgp::ConverseLedger ledger =
        qgp::converse_chain_check(art.w_enc, art.v_dec, ch, n,
                                  art.log_dim_r / n, art.epsilon_achieved,
                                  g.cap);

    if (g.format == "csv") {
        emit_primary(g, qgp::ledger_csv(ledger));
        return 0;
    }
    Json report = qgp::report_envelope("code", g.seed, config);
    Json result;
    result["artifacts"] = qgp::to_json(art);
    result["evaluator_epsilon"] = eval_eps;
    result["accounting"] = qgp::to_json(acct);
    result["converse"] = qgp::to_json(ledger);
    report["result"] = std::move(result);
    emit_primary(g, qgp::dump_json(report));
    if (!g.out.empty())
        write_file(out_stem(g.out) + "_ledger.csv", qgp::ledger_csv(ledger));
    return 0;
}

int cmd_typicality(const GlobalOpts& g, const std::string& spectrum_text, int n,
                   double epsilon, bool has_epsilon) {
    std::vector<double> p;
    std::stringstream ss(spectrum_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            p.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw std::runtime_error("--p expects a comma-separated spectrum");
        }
    }
    if (p.size() < 2)
        throw std::runtime_error("--p expects at least two probabilities");
    double sum = 0.0;
    for (double x : p) {
        if (x <= 0.0)
            throw std::runtime_error("spectrum entries must be positive");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::runtime_error("spectrum must sum to one");

    const double eps =
        has_epsilon ? epsilon : qgp::epsilon_schedule(g.schedule).value(n);
    Json config;
    config["command"] = "typicality";
    config["spectrum"] = p;
    config["n"] = n;
    config["epsilon"] = eps;
    if (!has_epsilon) config["epsilon_schedule"] = g.schedule;
    config["cap"] = g.cap;

    Eigen::MatrixXcd diag =
        Eigen::MatrixXcd::Zero(static_cast<long>(p.size()),
                               static_cast<long>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i)
        diag(static_cast<long>(i), static_cast<long>(i)) = p[i];
    const qgp::DensityOperator base(
        qgp::SubsystemLayout({{"A", static_cast<long>(p.size())}}), diag);
    const qgp::TypicalProjector tp(base, n, eps, "A", "Atyp", g.cap);
    const qgp::ClassicalTypicalSet classical =
        qgp::classical_typical_set(p, n, eps);
    const qgp::GentleMeasurementReport gentle =
        qgp::gentle_measurement_check(tp);

    const double dim_bound = std::pow(2.0, n * (tp.base_entropy() + eps));
    Json result;
    result["n"] = n;
    result["epsilon"] = eps;
    result["entropy"] = tp.base_entropy();
    result["typical_dim"] = tp.typical_dim();
    result["typical_mass"] = tp.mass();
    result["dim_bound"] = dim_bound;
    result["dim_within_bound"] =
        static_cast<double>(tp.typical_dim()) <= dim_bound;
    result["classical_count"] = static_cast<long>(classical.sequences.size());
    result["count_matches"] =
        tp.typical_dim() == static_cast<long>(classical.sequences.size());
    result["classical_mass"] = classical.total_probability;
    result["gentle_mass"] = gentle.mass;
    result["gentle_post_distance"] = gentle.post_distance;
    result["gentle_bound"] = gentle.bound;
    result["gentle_within_bound"] = gentle.post_distance <= gentle.bound + 1e-12;

    if (g.format == "csv") {
        std::string csv =
            "n,epsilon,entropy,typical_dim,typical_mass,dim_bound,"
            "classical_count,gentle_post_distance,gentle_bound\n";
        csv += std::to_string(n);
        for (double v :
             {eps, tp.base_entropy(), double(tp.typical_dim()), tp.mass(),
              dim_bound, double(classical.sequences.size()),
              gentle.post_distance, gentle.bound}) {
            csv += ',';
            csv += qgp::csv_number(v);
        }
        csv += '\n';
        emit_primary(g, csv);
        return 0;
    }
    Json report = qgp::report_envelope("typicality", g.seed, config);
    report["result"] = std::move(result);
    emit_primary(g, qgp::dump_json(report));
    return 0;
}

// ---------------------------------------------------------------------------
// verify: randomized identity suites with failure replay

struct CaseOutcome {
    bool pass = false;
    double residual = 0.0;
};

constexpr std::uint64_t verify_stream_base = 0x51000000ull;

CaseOutcome mi_identity_case(std::uint64_t seed, int k, bool injected) {
    const long d1 = 2 + (k & 1), d2 = 2 + ((k >> 1) & 1), d3 = 2 + ((k >> 2) & 1);
    const qgp::SubsystemLayout layout(
        {{"X", d1}, {"Y", d2}, {"Z", d3}, {"P", d1 * d2 * d3}});
    qgp::CounterRng rng(seed, verify_stream_base + static_cast<std::uint64_t>(k));
    Eigen::VectorXcd amps(layout.total_dim());
    for (long i = 0; i < amps.size(); ++i) amps(i) = rng.complex_gaussian();
    amps.normalize();
    qgp::DensityOperator rho =
        marginal(qgp::PureState(layout, amps), {"X", "Y", "Z"});
    if (injected) {
        // corrupt one matrix entry past positivity, bypassing the validating
        // constructor; the spectral band check downstream must flag it
        Eigen::MatrixXcd m = rho.matrix();
        m(1, 0) += 0.5;
        rho = qgp::DensityOperator::unchecked(rho.layout(), std::move(m));
    }
    const double residual = qgp::check_mi_identity(rho, {"X"}, {"Y"}, {"Z"});
    return {residual < 1e-8, residual};
}

CaseOutcome uhlmann_case(std::uint64_t seed, int k) {
    qgp::CounterRng rng(seed,
                        verify_stream_base + 0x10000ull + static_cast<std::uint64_t>(k));
    const auto draw = [&](const qgp::SubsystemLayout& layout) {
        Eigen::VectorXcd amps(layout.total_dim());
        for (long i = 0; i < amps.size(); ++i) amps(i) = rng.complex_gaussian();
        amps.normalize();
        return qgp::PureState(layout, amps);
    };
    const qgp::PureState psi =
        draw(qgp::SubsystemLayout({{"A", 3}, {"B", 4}}));
    const qgp::PureState phi =
        draw(qgp::SubsystemLayout({{"A", 3}, {"C", 3}}));
    const qgp::UhlmannResult res = qgp::uhlmann_partial_isometry(psi, phi);

    Eigen::MatrixXcd cross = Eigen::MatrixXcd::Zero(4, 3);
    for (long b = 0; b < 4; ++b)
        for (long c = 0; c < 3; ++c)
            for (long a = 0; a < 3; ++a)
                cross(b, c) += std::conj(psi.amplitudes()(a * 4 + b)) *
                               phi.amplitudes()(a * 3 + c);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(cross);
    const double nuclear = svd.singularValues().sum();

    const qgp::PureState moved =
        permute_subsystems(apply_map(res.completed, phi),
                           psi.layout().labels());
    const double realised =
        std::abs(psi.amplitudes().dot(moved.amplitudes()));
    const double residual = std::max(std::abs(res.achieved_overlap - nuclear),
                                     std::abs(realised - res.achieved_overlap));
    return {residual < 1e-10, residual};
}

CaseOutcome typicality_case(const GlobalOpts& g, int k) {
    static const std::vector<std::vector<double>> spectra = {
        {0.7, 0.3}, {0.9, 0.1}, {0.5, 0.5}};
    const int n = (k % 2 == 0) ? 4 : 8;
    const std::vector<double>& p = spectra[static_cast<std::size_t>(k / 2) %
                                           spectra.size()];
    const double eps = qgp::epsilon_schedule(g.schedule).value(n);
    Eigen::MatrixXcd diag = Eigen::MatrixXcd::Zero(2, 2);
    diag(0, 0) = p[0];
    diag(1, 1) = p[1];
    const qgp::DensityOperator base(qgp::SubsystemLayout({{"A", 2}}), diag);
    const qgp::TypicalProjector tp(base, n, eps, "A", "Atyp", g.cap);
    const qgp::ClassicalTypicalSet classical =
        qgp::classical_typical_set(p, n, eps);
    const qgp::GentleMeasurementReport gentle =
        qgp::gentle_measurement_check(tp);

    const double dim_bound = std::pow(2.0, n * (tp.base_entropy() + eps));
    const bool count_ok =
        tp.typical_dim() == static_cast<long>(classical.sequences.size());
    const bool bound_ok = static_cast<double>(tp.typical_dim()) <= dim_bound;
    const bool gentle_ok = gentle.post_distance <= gentle.bound + 1e-12;
    const double mass_gap = std::abs(tp.mass() - classical.total_probability);
    const bool mass_ok = mass_gap < 1e-12;
    const double residual = count_ok && bound_ok && gentle_ok ? mass_gap : 1.0;
    return {count_ok && bound_ok && gentle_ok && mass_ok, residual};
}

CaseOutcome converse_case(const GlobalOpts& g) {
    const qgp::CodePair wiring = qgp::identity_wiring_code(2);
    const qgp::ConverseLedger ledger = qgp::converse_chain_check(
        wiring.w_enc, wiring.v_dec, qgp::identity_side_channel(), 2, 1.0, 0.0,
        g.cap);
    double residual =
        std::abs(ledger.message_information - ledger.threshold_clamped);
    residual = std::max(residual, std::abs(ledger.message_ebit_independence));
    residual = std::max(residual, std::abs(ledger.side_independence));
    residual = std::max(residual, std::abs(ledger.chain_slack_residual));
    for (const auto& s : ledger.steps) {
        for (double v : {s.chain_out_residual, s.chain_side_residual,
                         s.side_drop_residual, s.prev_out_residual,
                         s.out_split_residual, s.side_split_residual,
                         s.step_residual})
            residual = std::max(residual, std::abs(v));
        residual = std::max(residual, std::max(0.0, -s.slack));
    }
    return {residual < 1e-8 && ledger.threshold_clamped_met, residual};
}

CaseOutcome run_verify_case(const GlobalOpts& g, const std::string& suite,
                            int k, bool injected) {
    if (suite == "mi_identity") return mi_identity_case(g.seed, k, injected);
    if (suite == "uhlmann") return uhlmann_case(g.seed, k);
    if (suite == "typicality") return typicality_case(g, k);
    if (suite == "converse") return converse_case(g);
    throw std::runtime_error("unknown verify suite '" + suite + "'");
}

int cmd_verify(const GlobalOpts& g, bool inject_failure) {
    Json config;
    config["command"] = "verify";
    config["samples"] = g.samples;
    config["epsilon_schedule"] = g.schedule;
    config["cap"] = g.cap;
    config["inject_failure"] = inject_failure;

    struct Suite {
        std::string name;
        int cases = 0;
        int injected_at = -1; // case index that gets the broken state
    };
    std::vector<Suite> suites = {
        {"mi_identity", g.samples, inject_failure ? g.samples - 1 : -1},
        {"uhlmann", 100, -1},
        {"typicality", 6, -1},
        {"converse", 1, -1},
    };

    Json suite_reports = Json::array();
    bool all_pass = true;
    std::optional<Json> first_failure;
    for (const auto& suite : suites) {
        int failures = 0;
        double max_residual = 0.0;
        for (int k = 0; k < suite.cases; ++k) {
            const bool injected = k == suite.injected_at;
            CaseOutcome outcome;
            std::string error;
            try {
                outcome = run_verify_case(g, suite.name, k, injected);
            } catch (const std::exception& e) {
                // a throwing case is itself a detected violation
                outcome = {false, -1.0};
                error = e.what();
            }
            max_residual = std::max(max_residual, outcome.residual);
            if (!outcome.pass) {
                ++failures;
                if (!first_failure) {
                    Json replay;
                    replay["suite"] = suite.name;
                    replay["case"] = k;
                    replay["seed"] = g.seed;
                    replay["injected"] = injected;
                    replay["residual"] = outcome.residual;
                    if (!error.empty()) replay["error"] = error;
                    first_failure = std::move(replay);
                }
            }
        }
        Json sj;
        sj["name"] = suite.name;
        sj["cases"] = suite.cases;
        sj["failures"] = failures;
        sj["max_residual"] = max_residual;
        sj["pass"] = failures == 0;
        suite_reports.push_back(std::move(sj));
        all_pass = all_pass && failures == 0;
    }

    Json report = qgp::report_envelope("verify", g.seed, config);
    Json result;
    result["suites"] = std::move(suite_reports);
    result["pass"] = all_pass;
    if (first_failure) result["first_failure"] = *first_failure;
    report["result"] = std::move(result);
    emit_primary(g, qgp::dump_json(report));

    if (!all_pass) {
        const std::string replay_path =
            (g.out.empty() ? std::string("qgp") : out_stem(g.out)) +
            "_replay.json";
        write_file(replay_path, qgp::dump_json(*first_failure));
        std::cerr << "verify: contract violation; replay case written to "
                  << replay_path << "\n";
        return 1;
    }
    return 0;
}

int cmd_replay(const GlobalOpts& g, const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read replay file '" + path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    Json replay;
    try {
        replay = Json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("replay file '" + path + "': " + e.what());
    }
    if (!replay.contains("suite") || !replay.contains("case") ||
        !replay.contains("seed"))
        throw std::runtime_error("replay file '" + path +
                                 "' is missing suite/case/seed");
    GlobalOpts local = g;
    local.seed = replay["seed"].get<std::uint64_t>();
    const std::string suite = replay["suite"].get<std::string>();
    const int k = replay["case"].get<int>();
    const bool injected =
        replay.contains("injected") && replay["injected"].get<bool>();

    CaseOutcome outcome;
    std::string error;
    try {
        outcome = run_verify_case(local, suite, k, injected);
    } catch (const std::exception& e) {
        outcome = {false, -1.0};
        error = e.what();
    }
    Json config;
    config["command"] = "verify";
    config["replay_of"] = replay;
    Json report = qgp::report_envelope("verify_replay", local.seed, config);
    Json result;
    result["suite"] = suite;
    result["case"] = k;
    result["injected"] = injected;
    result["residual"] = outcome.residual;
    if (!error.empty()) result["error"] = error;
    result["pass"] = outcome.pass;
    report["result"] = std::move(result);
    emit_primary(g, qgp::dump_json(report));
    return outcome.pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    GlobalOpts g;
    if (const char* env = std::getenv("QGP_SEED")) {
        try {
            std::size_t used = 0;
            const std::string text = env;
            g.seed = std::stoull(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
        } catch (const std::exception&) {
            std::cerr << "error: QGP_SEED is not an unsigned integer\n";
            return 2;
        }
    }

    CLI::App app{"Experiment toolkit for channels with transmitter side "
                 "information: capacity search, decoupling experiments, code "
                 "construction and identity verification."};
    app.set_version_flag("--version", qgp::tool_version);
    app.require_subcommand(1);
    app.add_option("--seed", g.seed,
                   "base seed for all randomness (env QGP_SEED as fallback)")
        ->capture_default_str();
    app.add_option("--samples", g.samples, "Monte Carlo sample count")
        ->capture_default_str();
    app.add_option("--out", g.out,
                   "primary report path (stdout if omitted); auxiliary CSVs "
                   "are written next to it");
    app.add_option("--format", g.format, "primary report format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    app.add_option("--cap", g.cap, "total-dimension guard for layouts")
        ->capture_default_str();
    app.add_option("--epsilon-schedule", g.schedule,
                   "typicality width schedule (n^-1/4, n^-1/3, n^-1/2, "
                   "const:<x>)")
        ->capture_default_str();

    std::function<int()> action;

    auto* cap_cmd = app.add_subcommand(
        "capacity", "search for the best constrained input state");
    cap_cmd->fallthrough();
    std::string cap_channel;
    long cap_dim_a = 2, cap_env_dim = 4;
    int cap_restarts = 20, cap_iters = 10000;
    cap_cmd->add_option("channel", cap_channel,
                        "spec file or builtin:<name>?<k=v&...>")
        ->required();
    cap_cmd->add_option("--dim-a", cap_dim_a, "retained-system dimension")
        ->capture_default_str();
    cap_cmd->add_option("--env-dim", cap_env_dim, "search ancilla dimension")
        ->capture_default_str();
    cap_cmd->add_option("--restarts", cap_restarts, "independent restarts")
        ->capture_default_str();
    cap_cmd->add_option("--iters", cap_iters, "steps per restart")
        ->capture_default_str();
    cap_cmd->callback([&] {
        action = [&, cap_channel, cap_dim_a, cap_env_dim, cap_restarts,
                  cap_iters] {
            return cmd_capacity(g, cap_channel, cap_dim_a, cap_env_dim,
                                cap_restarts, cap_iters);
        };
    });

    auto* dec_cmd = app.add_subcommand(
        "decouple", "Monte Carlo check of the random-unitary decoupling bound");
    dec_cmd->fallthrough();
    long dec_a = 4, dec_ahat = 2, dec_r = 2, dec_b = 2;
    dec_cmd->add_option("--dim-a", dec_a, "rotated-system dimension")
        ->capture_default_str();
    dec_cmd->add_option("--dim-ahat", dec_ahat,
                        "transmitted (traced-out) dimension; must divide dim-a")
        ->capture_default_str();
    dec_cmd->add_option("--dim-r", dec_r, "reference dimension")
        ->capture_default_str();
    dec_cmd->add_option("--dim-b", dec_b, "bystander dimension")
        ->capture_default_str();
    dec_cmd->callback([&] {
        action = [&, dec_a, dec_ahat, dec_r, dec_b] {
            return cmd_decouple(g, dec_a, dec_ahat, dec_r, dec_b);
        };
    });

    auto* code_cmd = app.add_subcommand(
        "code", "build and grade a finite-blocklength code");
    code_cmd->fallthrough();
    std::string code_channel, code_sigma = "entangled", code_sizes;
    int code_n = 1;
    double code_delta = 0.0;
    code_cmd->add_option("channel", code_channel,
                         "spec file or builtin:<name>?<k=v&...>")
        ->required();
    code_cmd->add_option("--sigma", code_sigma,
                         "input state source (entangled, product, witness)")
        ->capture_default_str();
    code_cmd->add_option("--n", code_n, "blocklength")->capture_default_str();
    code_cmd->add_option("--sizes", code_sizes,
                         "override split dimensions as r,bt,ah");
    auto* delta_opt =
        code_cmd->add_option("--delta", code_delta,
                             "typicality width (default: schedule value)");
    code_cmd->callback([&, delta_opt] {
        const bool has_delta = delta_opt->count() > 0;
        action = [&, code_channel, code_sigma, code_n, code_sizes, code_delta,
                  has_delta] {
            return cmd_code(g, code_channel, code_sigma, code_n, code_sizes,
                            code_delta, has_delta);
        };
    });

    auto* typ_cmd = app.add_subcommand(
        "typicality", "typical-subspace census for a product spectrum");
    typ_cmd->fallthrough();
    std::string typ_p = "0.7,0.3";
    int typ_n = 8;
    double typ_eps = 0.0;
    typ_cmd->add_option("--p", typ_p, "eigenvalue spectrum, comma separated")
        ->capture_default_str();
    typ_cmd->add_option("--n", typ_n, "number of copies")->capture_default_str();
    auto* eps_opt = typ_cmd->add_option(
        "--epsilon", typ_eps, "typicality width (default: schedule value)");
    typ_cmd->callback([&, eps_opt] {
        const bool has_eps = eps_opt->count() > 0;
        action = [&, typ_p, typ_n, typ_eps, has_eps] {
            return cmd_typicality(g, typ_p, typ_n, typ_eps, has_eps);
        };
    });

    auto* ver_cmd = app.add_subcommand(
        "verify", "run the randomized identity and typicality suites");
    ver_cmd->fallthrough();
    bool inject = false;
    std::string replay_path;
    ver_cmd->add_flag("--inject-failure", inject,
                      "corrupt one case to demonstrate failure handling");
    ver_cmd->add_option("--replay", replay_path,
                        "re-run a single failing case from a replay file");
    ver_cmd->callback([&] {
        action = [&, inject, replay_path] {
            if (!replay_path.empty()) return cmd_replay(g, replay_path);
            return cmd_verify(g, inject);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        return action();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
