#pragma once

// Typical sets and typical projectors.  The classical set is computed by
// exhaustive enumeration (guarded); the quantum projector lives in the
// eigenbasis of the base state, with eigenvalues grouped to 1e-12 so that
// typicality depends only on the spectrum.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qgp/layout.hpp"
#include "qgp/linear_map.hpp"
#include "qgp/state.hpp"
#include "qgp/tensor_ops.hpp"

namespace qgp {

struct ClassicalTypicalSet {
    int n = 0;
    double epsilon = 0.0;
    double entropy = 0.0; // of the source distribution, in bits
    int alphabet_size = 0;
    // Sequences as base-|alphabet| codes, first symbol most significant.
    std::vector<std::uint64_t> sequences;
    double total_probability = 0.0;
};

namespace detail {

/// Depth-first walk over sequences with running log-probability; zero-mass
/// branches are pruned whole.
template <typename Visitor>
inline void walk_sequences(const std::vector<double>& p, int n, Visitor&& visit) {
    const int a = static_cast<int>(p.size());
    std::vector<int> digits(static_cast<std::size_t>(n), 0);
    std::vector<double> log_acc(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> prob_acc(static_cast<std::size_t>(n) + 1, 1.0);
    int depth = 0;
    digits[0] = -1;
    while (depth >= 0) {
        if (++digits[depth] >= a) {
            --depth;
            continue;
        }
        const double px = p[digits[depth]];
        if (px <= 0.0) continue;
        log_acc[depth + 1] = log_acc[depth] + std::log2(px);
        prob_acc[depth + 1] = prob_acc[depth] * px;
        if (depth + 1 == n) {
            visit(digits, log_acc[depth + 1], prob_acc[depth + 1]);
        } else {
            digits[++depth] = -1;
        }
    }
}

inline double shannon_entropy(const std::vector<double>& p) {
    double h = 0.0;
    for (double x : p)
        if (x > 0.0) h -= x * std::log2(x);
    return h;
}

} // namespace detail

/// All sequences with |-(1/n) log2 Pr - H| <= epsilon, by direct enumeration.
inline ClassicalTypicalSet classical_typical_set(
    const std::vector<double>& p, int n, double epsilon,
    std::uint64_t enumeration_guard = (1ull << 22)) {
    if (p.empty()) throw std::invalid_argument("empty distribution");
    double sum = 0.0;
    for (double x : p) {
        if (x < -1e-12) throw std::invalid_argument("negative probability");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("probabilities sum to " + std::to_string(sum));
    if (n < 1) throw std::invalid_argument("n must be positive");
    if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
    double total = 1.0;
    for (int i = 0; i < n; ++i) {
        total *= static_cast<double>(p.size());
        if (total > static_cast<double>(enumeration_guard))
            throw std::invalid_argument("sequence count exceeds enumeration guard");
    }

    ClassicalTypicalSet set;
    set.n = n;
    set.epsilon = epsilon;
    set.alphabet_size = static_cast<int>(p.size());
    set.entropy = detail::shannon_entropy(p);
    detail::walk_sequences(p, n, [&](const std::vector<int>& digits, double log_p,
                                     double prob) {
        if (std::abs(-log_p / n - set.entropy) <= epsilon) {
            std::uint64_t code = 0;
            for (int d : digits) code = code * p.size() + static_cast<std::uint64_t>(d);
            set.sequences.push_back(code);
            set.total_probability += prob;
        }
    });
    return set;
}

/// Projector onto the span of eigenbasis product states of rho^{⊗n} whose
/// eigenvalue sequences are epsilon-typical, together with the compressor
/// partial isometry onto a fresh subsystem of dimension typical_dim.
class TypicalProjector {
public:
    TypicalProjector(const DensityOperator& base, int n, double epsilon,
                     const std::string& copy_prefix = "A",
                     const std::string& compressed_label = "Atyp",
                     long dim_cap = SubsystemLayout::default_dim_cap)
        : base_(base), n_(n), epsilon_(epsilon) {
        if (n < 1) throw std::invalid_argument("n must be positive");
        if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
        const long d = base.dim();
        std::vector<Subsystem> copies;
        for (int i = 1; i <= n; ++i)
            copies.push_back({copy_prefix + std::to_string(i), d});
        SubsystemLayout big(copies, dim_cap); // enforces the cap

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(base.matrix());
        // Eigenvalues descending, grouped within 1e-12 to erase basis
        // ambiguity inside degenerate subspaces.
        std::vector<double> lambda(static_cast<std::size_t>(d));
        for (long i = 0; i < d; ++i) lambda[i] = es.eigenvalues()(d - 1 - i);
        std::vector<double> grouped = lambda;
        std::size_t g0 = 0;
        for (std::size_t i = 1; i <= lambda.size(); ++i) {
            if (i == lambda.size() || std::abs(lambda[i] - lambda[g0]) > 1e-12) {
                double mean = 0.0;
                for (std::size_t j = g0; j < i; ++j) mean += lambda[j];
                mean /= static_cast<double>(i - g0);
                for (std::size_t j = g0; j < i; ++j) grouped[j] = mean;
                g0 = i;
            }
        }
        for (double& x : grouped)
            if (x < 0.0) x = 0.0;

        const double h = detail::shannon_entropy(grouped);
        entropy_ = h;

        std::vector<std::vector<int>> typical;
        detail::walk_sequences(grouped, n, [&](const std::vector<int>& digits,
                                               double log_p, double prob) {
            if (std::abs(-log_p / n - h) <= epsilon) {
                typical.push_back(digits);
                mass_ += prob;
            }
        });
        typical_dim_ = static_cast<long>(typical.size());

        // Compressor rows: conjugated product eigenvectors (largest
        // eigenvalue first, i.e. descending index order as above).
        const long big_dim = big.total_dim();
        Eigen::MatrixXcd comp(typical_dim_, big_dim);
        Eigen::VectorXcd row;
        for (long t = 0; t < typical_dim_; ++t) {
            row = es.eigenvectors().col(d - 1 - typical[t][0]);
            for (int i = 1; i < n; ++i)
                row = kron(row, Eigen::VectorXcd(
                                    es.eigenvectors().col(d - 1 - typical[t][i])));
            comp.row(t) = row.adjoint();
        }

        if (typical_dim_ > 0) {
            compressor_.emplace(MapKind::partial_isometry, big,
                                SubsystemLayout({{compressed_label, typical_dim_}}),
                                comp);
            projector_.emplace(MapKind::projector, big, big,
                               (comp.adjoint() * comp).eval());
        } else {
            projector_.emplace(MapKind::projector, big, big,
                               Eigen::MatrixXcd::Zero(big_dim, big_dim));
        }
    }

    const DensityOperator& base_state() const { return base_; }
    int n() const { return n_; }
    double epsilon() const { return epsilon_; }
    double base_entropy() const { return entropy_; }
    long typical_dim() const { return typical_dim_; }
    /// tr[Π ρ^{⊗n}], evaluated analytically from the spectrum.
    double mass() const { return mass_; }

    const LinearMapOperator& projector() const { return *projector_; }

    /// Partial isometry A^n -> compressed label with C C† = I and C†C = Π.
    const LinearMapOperator& compressor() const {
        if (!compressor_)
            throw std::logic_error("typical set is empty; no compressor exists");
        return *compressor_;
    }

private:
    DensityOperator base_;
    int n_;
    double epsilon_;
    double entropy_ = 0.0;
    long typical_dim_ = 0;
    double mass_ = 0.0;
    std::optional<LinearMapOperator> projector_;
    std::optional<LinearMapOperator> compressor_;
};

struct GentleMeasurementReport {
    double mass = 0.0;
    double post_distance = 0.0;
    double bound = 0.0; // 2 sqrt(1 - mass)
};

/// Distance between the renormalised projected state and the original power
/// state.  Because the projector is diagonal in the eigenbasis of ρ^{⊗n}, the
/// difference operator is diagonal there too and the distance is exactly
/// 2(1 - mass), which respects the gentle-measurement bound 2 sqrt(1 - mass).
inline GentleMeasurementReport gentle_measurement_check(const TypicalProjector& tp) {
    const double m = tp.mass();
    if (m < 1e-12)
        throw std::invalid_argument("typical mass is degenerate (< 1e-12)");
    GentleMeasurementReport report;
    report.mass = m;
    report.post_distance = 2.0 * (1.0 - m);
    report.bound = 2.0 * std::sqrt(std::max(0.0, 1.0 - m));
    return report;
}

/// Block-length-dependent typicality parameter δ_n used for code sizing.
struct EpsilonSchedule {
    std::string name;
    std::function<double(int)> value;
};

inline EpsilonSchedule epsilon_schedule(const std::string& name) {
    if (name == "n^-1/4")
        return {name, [](int n) { return std::pow(static_cast<double>(n), -0.25); }};
    if (name == "n^-1/3")
        return {name, [](int n) { return std::pow(static_cast<double>(n), -1.0 / 3.0); }};
    if (name == "n^-1/2")
        return {name, [](int n) { return std::pow(static_cast<double>(n), -0.5); }};
    if (name.rfind("const:", 0) == 0) {
        const double v = std::stod(name.substr(6));
        if (v <= 0.0) throw std::invalid_argument("constant schedule must be positive");
        return {name, [v](int) { return v; }};
    }
    throw std::invalid_argument("unknown epsilon schedule '" + name + "'");
}

inline EpsilonSchedule default_epsilon_schedule() { return epsilon_schedule("n^-1/4"); }

} // namespace qgp
