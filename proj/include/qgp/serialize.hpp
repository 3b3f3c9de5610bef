#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qgp/capacity.hpp"
#include "qgp/channel.hpp"
#include "qgp/coding.hpp"
#include "qgp/decoupling.hpp"
#include "qgp/hashing.hpp"
#include "qgp/layout.hpp"
#include "qgp/linear_map.hpp"
#include "qgp/state.hpp"
#include "qgp/version.hpp"

namespace qgp {

// JSON in and out for reports and channel spec files.  Emission goes through
// a custom writer so every double is printed with 17 significant digits:
// reparse recovers the exact bits, and identical runs produce identical
// bytes, which is what regression pinning and report diffing rely on.

using Json = nlohmann::ordered_json;

namespace detail {

inline void dump_json_to(const Json& j, std::string& out) {
    using value_t = nlohmann::detail::value_t;
    switch (j.type()) {
        case value_t::object: {
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                out += Json(it.key()).dump();
                out += ':';
                dump_json_to(it.value(), out);
            }
            out += '}';
            break;
        }
        case value_t::array: {
            out += '[';
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += ',';
                first = false;
                dump_json_to(v, out);
            }
            out += ']';
            break;
        }
        case value_t::string:
            out += j.dump(); // handles escaping
            break;
        case value_t::boolean:
            out += j.get<bool>() ? "true" : "false";
            break;
        case value_t::number_integer:
            out += std::to_string(j.get<std::int64_t>());
            break;
        case value_t::number_unsigned:
            out += std::to_string(j.get<std::uint64_t>());
            break;
        case value_t::number_float: {
            double v = j.get<double>();
            if (!std::isfinite(v))
                throw std::invalid_argument("non-finite number in JSON report");
            if (v == 0.0) v = 0.0; // canonical zero sign, keeps reruns stable
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out += buf;
            break;
        }
        case value_t::null:
            out += "null";
            break;
        default:
            throw std::logic_error("unsupported JSON node type");
    }
}

} // namespace detail

inline std::string dump_json(const Json& j) {
    std::string out;
    detail::dump_json_to(j, out);
    out += '\n';
    return out;
}

// ---------------------------------------------------------------------------
// value encoders

inline Json complex_to_json(const std::complex<double>& z) {
    return Json::array({z.real(), z.imag()});
}

inline Json matrix_to_json(const Eigen::MatrixXcd& m) {
    Json rows = Json::array();
    for (long i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (long j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json vector_to_json(const Eigen::VectorXcd& v) {
    Json entries = Json::array();
    for (long i = 0; i < v.size(); ++i) entries.push_back(complex_to_json(v(i)));
    return entries;
}

inline Json layout_to_json(const SubsystemLayout& layout) {
    Json subs = Json::array();
    for (const auto& s : layout.subsystems())
        subs.push_back(Json::array({s.label, s.dim}));
    return subs;
}

inline const char* map_kind_name(MapKind kind) {
    switch (kind) {
        case MapKind::unitary: return "unitary";
        case MapKind::isometry: return "isometry";
        case MapKind::partial_isometry: return "partial_isometry";
        case MapKind::projector: return "projector";
    }
    throw std::logic_error("unknown map kind");
}

inline Json linear_map_to_json(const LinearMapOperator& op) {
    Json j;
    j["kind"] = map_kind_name(op.kind());
    j["in_layout"] = layout_to_json(op.in_layout());
    j["out_layout"] = layout_to_json(op.out_layout());
    j["matrix"] = matrix_to_json(op.matrix());
    return j;
}

inline Json density_to_json(const DensityOperator& rho) {
    Json j;
    j["layout"] = layout_to_json(rho.layout());
    j["matrix"] = matrix_to_json(rho.matrix());
    return j;
}

// ---------------------------------------------------------------------------
// report payloads

inline Json to_json(const CapacityResult& r) {
    Json j;
    j["rate"] = r.rate;
    j["classical_rate"] = r.classical_rate;
    j["rate_is_lower_bound"] = true;
    j["iterations"] = r.iterations;
    j["restarts"] = r.restarts;
    j["dims_used"] = Json::array({r.dims_used.first, r.dims_used.second});
    j["seed"] = r.seed;
    Json trace = Json::array();
    for (const auto& [it, rate] : r.trace)
        trace.push_back(Json::array({it, rate}));
    j["trace"] = std::move(trace);
    j["best_sigma"] = density_to_json(r.best_sigma);
    return j;
}

inline Json to_json(const CodeArtifacts& a) {
    Json j;
    j["n"] = a.n;
    j["log_dim_r"] = a.log_dim_r;
    j["log_dim_bt"] = a.log_dim_bt;
    j["log_dim_ah"] = a.log_dim_ah;
    j["dim_r"] = a.dim_r;
    j["dim_bt"] = a.dim_bt;
    j["dim_ah"] = a.dim_ah;
    j["typical_dim"] = a.typical_dim;
    j["typical_mass"] = a.typical_mass;
    j["delta"] = a.delta;
    j["input_decouple_distance"] = a.input_decouple_distance;
    j["output_decouple_distance"] = a.output_decouple_distance;
    j["encoder_match_distance"] = a.encoder_match_distance;
    j["decoder_match_distance"] = a.decoder_match_distance;
    j["end_to_end_distance"] = a.end_to_end_distance;
    j["epsilon_achieved"] = a.epsilon_achieved;
    j["seed"] = a.seed;
    j["u_split"] = linear_map_to_json(a.u_split);
    j["w_enc"] = linear_map_to_json(a.w_enc);
    j["v_dec"] = linear_map_to_json(a.v_dec);
    j["residual_state"] = density_to_json(a.residual_state);
    return j;
}

inline Json to_json(const EntanglementReport& r) {
    Json j;
    j["consumed"] = r.consumed;
    j["recovered"] = r.recovered;
    j["net"] = r.net;
    j["coherent_info"] = r.coherent_info;
    j["unassisted_rate"] = r.unassisted_rate;
    j["log_r_asymptotic"] = r.log_r_asymptotic;
    j["ledger_residual"] = r.ledger_residual;
    return j;
}

inline Json to_json(const ConverseStep& s) {
    Json j;
    j["i"] = s.i;
    j["chain_out_residual"] = s.chain_out_residual;
    j["chain_side_residual"] = s.chain_side_residual;
    j["side_drop_residual"] = s.side_drop_residual;
    j["prev_out_residual"] = s.prev_out_residual;
    j["out_split_residual"] = s.out_split_residual;
    j["side_split_residual"] = s.side_split_residual;
    j["slack"] = s.slack;
    j["step_residual"] = s.step_residual;
    return j;
}

inline Json to_json(const ConverseLedger& l) {
    Json j;
    j["n"] = l.n;
    j["q"] = l.q;
    j["epsilon"] = l.epsilon;
    j["d_raw"] = l.d_raw;
    j["d_clamped"] = l.d_clamped;
    j["threshold_raw"] = l.threshold_raw;
    j["threshold_clamped"] = l.threshold_clamped;
    j["message_information"] = l.message_information;
    j["threshold_raw_met"] = l.threshold_raw_met;
    j["threshold_clamped_met"] = l.threshold_clamped_met;
    j["message_ebit_independence"] = l.message_ebit_independence;
    j["decomposition_residual"] = l.decomposition_residual;
    j["grouping_margin"] = l.grouping_margin;
    j["side_independence"] = l.side_independence;
    j["chain_lhs"] = l.chain_lhs;
    j["chain_rhs"] = l.chain_rhs;
    j["chain_gap"] = l.chain_gap;
    j["chain_slack_residual"] = l.chain_slack_residual;
    Json steps = Json::array();
    for (const auto& s : l.steps) steps.push_back(to_json(s));
    j["steps"] = std::move(steps);
    return j;
}

inline Json to_json(const DecouplingReport& r) {
    Json j;
    j["dim_a"] = r.dim_a;
    j["dim_dropped"] = r.dim_dropped;
    j["dim_kept"] = r.dim_kept;
    j["dim_r"] = r.dim_r;
    j["n_samples"] = r.n_samples;
    j["lhs_mean"] = r.lhs_mean;
    j["lhs_max"] = r.lhs_max;
    j["rhs_bound"] = r.rhs_bound;
    j["purity"] = r.purity;
    j["std_error"] = r.std_error;
    j["mean_within_bound"] = r.mean_within_bound;
    j["any_sample_within_bound"] = r.any_sample_within_bound;
    j["seed"] = r.seed;
    Json values = Json::array();
    for (double v : r.lhs_values) values.push_back(v);
    j["lhs_values"] = std::move(values);
    return j;
}

inline Json to_json(const ConcentrationReport& r) {
    Json j;
    j["decoupling"] = to_json(r.decoupling);
    j["std_dev"] = r.std_dev;
    j["outlier_fraction"] = r.outlier_fraction;
    return j;
}

inline Json to_json(const IidDecouplingReport& r) {
    Json j;
    j["n"] = r.n;
    j["epsilon"] = r.epsilon;
    j["typical_dim"] = r.typical_dim;
    j["typical_mass"] = r.typical_mass;
    j["dim_kept"] = r.dim_kept;
    j["dim_dropped"] = r.dim_dropped;
    j["mutual_information"] = r.mutual_information;
    j["distance"] = r.distance;
    j["seed"] = r.seed;
    return j;
}

// ---------------------------------------------------------------------------
// report envelope

inline std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

/// Common header of every emitted report: reruns with the same (seed, config)
/// pair must be byte-identical, so nothing time- or host-dependent goes here.
inline Json report_envelope(const std::string& report_type, std::uint64_t seed,
                            const Json& config) {
    Json j;
    j["tool"] = "qgp";
    j["version"] = tool_version;
    j["report_type"] = report_type;
    j["seed"] = seed;
    j["config_hash"] = hash_hex(fnv1a(dump_json(config)));
    j["config"] = config;
    return j;
}

// ---------------------------------------------------------------------------
// CSV writers (all columns named; doubles again at 17 significant digits)

inline std::string csv_number(double v) {
    if (!std::isfinite(v))
        throw std::invalid_argument("non-finite number in CSV report");
    if (v == 0.0) v = 0.0;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string capacity_trace_csv(const CapacityResult& r) {
    std::string out = "iteration,rate\n";
    for (const auto& [it, rate] : r.trace) {
        out += std::to_string(it);
        out += ',';
        out += csv_number(rate);
        out += '\n';
    }
    return out;
}

inline std::string decoupling_samples_csv(const DecouplingReport& r) {
    std::string out = "sample,lhs_squared_deviation\n";
    for (std::size_t i = 0; i < r.lhs_values.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += csv_number(r.lhs_values[i]);
        out += '\n';
    }
    return out;
}

inline std::string ledger_csv(const ConverseLedger& l) {
    std::string out =
        "step,chain_out_residual,chain_side_residual,side_drop_residual,"
        "prev_out_residual,out_split_residual,side_split_residual,slack,"
        "step_residual\n";
    for (const auto& s : l.steps) {
        out += std::to_string(s.i);
        for (double v : {s.chain_out_residual, s.chain_side_residual,
                         s.side_drop_residual, s.prev_out_residual,
                         s.out_split_residual, s.side_split_residual, s.slack,
                         s.step_residual}) {
            out += ',';
            out += csv_number(v);
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// channel spec files

/// On-disk description of a side-information channel: subsystem layouts for
/// the encoder-filled input block, the channel-held block, its purifier and
/// the output; Kraus matrices; and the joint side-state amplitudes.
struct ChannelSpecFile {
    std::string name;
    std::vector<Subsystem> message;       ///< input block the encoder fills
    std::vector<Subsystem> side;          ///< channel-held block
    std::vector<Subsystem> side_purifier; ///< transmitter's purifying block
    std::vector<Subsystem> output;
    std::vector<Eigen::MatrixXcd> kraus;
    Eigen::VectorXcd side_state; ///< on side (x) side_purifier
    std::map<std::string, std::string> metadata;
};

inline bool operator==(const ChannelSpecFile& a, const ChannelSpecFile& b) {
    if (a.name != b.name || a.message != b.message || a.side != b.side ||
        a.side_purifier != b.side_purifier || a.output != b.output ||
        a.metadata != b.metadata)
        return false;
    if (a.kraus.size() != b.kraus.size()) return false;
    for (std::size_t i = 0; i < a.kraus.size(); ++i)
        if (a.kraus[i].rows() != b.kraus[i].rows() ||
            a.kraus[i].cols() != b.kraus[i].cols() || a.kraus[i] != b.kraus[i])
            return false;
    return a.side_state.size() == b.side_state.size() &&
           a.side_state == b.side_state;
}

inline Json to_json(const ChannelSpecFile& spec) {
    Json j;
    j["name"] = spec.name;
    Json layouts;
    layouts["message"] = layout_to_json(SubsystemLayout(spec.message));
    layouts["side"] = layout_to_json(SubsystemLayout(spec.side));
    layouts["side_purifier"] =
        layout_to_json(SubsystemLayout(spec.side_purifier));
    layouts["output"] = layout_to_json(SubsystemLayout(spec.output));
    j["layouts"] = std::move(layouts);
    Json kraus = Json::array();
    for (const auto& k : spec.kraus) kraus.push_back(matrix_to_json(k));
    j["kraus"] = std::move(kraus);
    j["side_state"] = vector_to_json(spec.side_state);
    Json meta = Json::object();
    for (const auto& [k, v] : spec.metadata) meta[k] = v;
    j["metadata"] = std::move(meta);
    return j;
}

inline std::string serialize_channel_spec(const ChannelSpecFile& spec) {
    return dump_json(to_json(spec));
}

namespace detail {

[[noreturn]] inline void spec_error(const std::string& path,
                                    const std::string& what) {
    throw std::runtime_error("channel spec: " + path + ": " + what);
}

inline const Json& spec_field(const Json& j, const char* key,
                              const std::string& path) {
    if (!j.is_object()) spec_error(path, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) spec_error(path, std::string("missing field '") + key + "'");
    return *it;
}

inline std::string spec_string(const Json& j, const std::string& path) {
    if (!j.is_string()) spec_error(path, "expected a string");
    return j.get<std::string>();
}

inline double spec_number(const Json& j, const std::string& path) {
    if (!j.is_number()) spec_error(path, "expected a number");
    return j.get<double>();
}

inline std::complex<double> spec_complex(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2)
        spec_error(path, "expected a [re, im] pair");
    return {spec_number(j[0], path + "[0]"), spec_number(j[1], path + "[1]")};
}

inline std::vector<Subsystem> spec_layout(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty())
        spec_error(path, "expected a non-empty array of [label, dim] pairs");
    std::vector<Subsystem> subs;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        const Json& entry = j[i];
        if (!entry.is_array() || entry.size() != 2)
            spec_error(p, "expected a [label, dim] pair");
        Subsystem s;
        s.label = spec_string(entry[0], p + "[0]");
        if (!entry[1].is_number_integer() && !entry[1].is_number_unsigned())
            spec_error(p + "[1]", "expected an integer dimension");
        s.dim = entry[1].get<long>();
        if (s.dim < 1) spec_error(p + "[1]", "dimension must be positive");
        subs.push_back(std::move(s));
    }
    return subs;
}

inline Eigen::MatrixXcd spec_matrix(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty())
        spec_error(path, "expected a non-empty array of rows");
    const std::size_t rows = j.size();
    std::size_t cols = 0;
    Eigen::MatrixXcd m;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::string rp = path + "[" + std::to_string(r) + "]";
        const Json& row = j[r];
        if (!row.is_array() || row.empty())
            spec_error(rp, "expected a non-empty row array");
        if (r == 0) {
            cols = row.size();
            m.resize(static_cast<long>(rows), static_cast<long>(cols));
        } else if (row.size() != cols) {
            spec_error(rp, "ragged matrix: expected " + std::to_string(cols) +
                               " columns, got " + std::to_string(row.size()));
        }
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<long>(r), static_cast<long>(c)) =
                spec_complex(row[c], rp + "[" + std::to_string(c) + "]");
    }
    return m;
}

} // namespace detail

inline ChannelSpecFile parse_channel_spec(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        detail::spec_error("(document)", e.what());
    }
    ChannelSpecFile spec;
    spec.name = detail::spec_string(detail::spec_field(j, "name", "$"), "name");
    const Json& layouts = detail::spec_field(j, "layouts", "$");
    spec.message = detail::spec_layout(
        detail::spec_field(layouts, "message", "layouts"), "layouts.message");
    spec.side = detail::spec_layout(detail::spec_field(layouts, "side", "layouts"),
                                    "layouts.side");
    spec.side_purifier = detail::spec_layout(
        detail::spec_field(layouts, "side_purifier", "layouts"),
        "layouts.side_purifier");
    spec.output = detail::spec_layout(
        detail::spec_field(layouts, "output", "layouts"), "layouts.output");

    long in_dim = 1, out_dim = 1, side_dim = 1, purifier_dim = 1;
    for (const auto& s : spec.message) in_dim *= s.dim;
    for (const auto& s : spec.side) {
        in_dim *= s.dim;
        side_dim *= s.dim;
    }
    for (const auto& s : spec.side_purifier) purifier_dim *= s.dim;
    for (const auto& s : spec.output) out_dim *= s.dim;

    const Json& kraus = detail::spec_field(j, "kraus", "$");
    if (!kraus.is_array() || kraus.empty())
        detail::spec_error("kraus", "expected a non-empty array of matrices");
    for (std::size_t i = 0; i < kraus.size(); ++i) {
        const std::string p = "kraus[" + std::to_string(i) + "]";
        Eigen::MatrixXcd k = detail::spec_matrix(kraus[i], p);
        if (k.rows() != out_dim || k.cols() != in_dim)
            detail::spec_error(p, "expected shape " + std::to_string(out_dim) +
                                      "x" + std::to_string(in_dim) + ", got " +
                                      std::to_string(k.rows()) + "x" +
                                      std::to_string(k.cols()));
        spec.kraus.push_back(std::move(k));
    }

    const Json& side = detail::spec_field(j, "side_state", "$");
    if (!side.is_array() ||
        side.size() != static_cast<std::size_t>(side_dim * purifier_dim))
        detail::spec_error("side_state",
                           "expected " + std::to_string(side_dim * purifier_dim) +
                               " amplitude pairs");
    spec.side_state.resize(side_dim * purifier_dim);
    for (std::size_t i = 0; i < side.size(); ++i)
        spec.side_state(static_cast<long>(i)) = detail::spec_complex(
            side[i], "side_state[" + std::to_string(i) + "]");

    if (const auto it = j.find("metadata"); it != j.end()) {
        if (!it->is_object()) detail::spec_error("metadata", "expected an object");
        for (const auto& [k, v] : it->items())
            spec.metadata[k] = detail::spec_string(v, "metadata." + k);
    }
    return spec;
}

/// Build the runnable channel from a parsed spec; physicality violations
/// (non-CPTP Kraus set, unnormalised side state) surface with the field name.
inline SideInfoChannel to_side_info_channel(
    const ChannelSpecFile& spec, long dim_cap = SubsystemLayout::default_dim_cap) {
    std::vector<Subsystem> in_subs = spec.message;
    in_subs.insert(in_subs.end(), spec.side.begin(), spec.side.end());
    std::vector<Subsystem> side_subs = spec.side;
    side_subs.insert(side_subs.end(), spec.side_purifier.begin(),
                     spec.side_purifier.end());
    try {
        KrausChannel channel(spec.kraus, SubsystemLayout(in_subs, dim_cap),
                             SubsystemLayout(spec.output, dim_cap));
        PureState side_state(SubsystemLayout(side_subs, dim_cap),
                             spec.side_state);
        return SideInfoChannel(std::move(channel), std::move(side_state));
    } catch (const std::exception& e) {
        throw std::runtime_error("channel spec '" + spec.name +
                                 "': " + e.what());
    }
}

/// Inverse of to_side_info_channel for report emission and spec round-trips.
inline ChannelSpecFile channel_spec_for(
    const SideInfoChannel& ch, const std::string& name,
    std::map<std::string, std::string> metadata = {}) {
    ChannelSpecFile spec;
    spec.name = name;
    const SubsystemLayout& in = ch.channel().in_layout();
    for (const auto& s : in.subsystems()) {
        const bool is_side =
            std::find(ch.side_labels().begin(), ch.side_labels().end(),
                      s.label) != ch.side_labels().end();
        (is_side ? spec.side : spec.message).push_back(s);
    }
    for (const auto& s : ch.side_state().layout().subsystems()) {
        const bool is_side =
            std::find(ch.side_labels().begin(), ch.side_labels().end(),
                      s.label) != ch.side_labels().end();
        if (!is_side) spec.side_purifier.push_back(s);
    }
    spec.output = ch.channel().out_layout().subsystems();
    spec.kraus = ch.channel().kraus();
    spec.side_state = ch.side_state().amplitudes();
    spec.metadata = std::move(metadata);
    return spec;
}

} // namespace qgp
