#pragma once

// Entropic quantities in bits (base-2 logarithms throughout; rates are qubits
// per channel use).  Every operation reduces to the queried subsystems first
// and then diagonalises; there is no caching, so calls are pure functions.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "qgp/hashing.hpp"
#include "qgp/state.hpp"
#include "qgp/tensor_ops.hpp"

namespace qgp {

namespace detail {

inline void check_disjoint(const std::vector<std::vector<std::string>>& sets) {
    for (std::size_t i = 0; i < sets.size(); ++i)
        for (std::size_t j = i + 1; j < sets.size(); ++j)
            for (const auto& l : sets[i])
                for (const auto& m : sets[j])
                    if (l == m)
                        throw std::invalid_argument("label sets overlap on '" + l +
                                                    "'");
}

inline std::vector<std::string> set_union(
    std::initializer_list<const std::vector<std::string>*> sets) {
    std::vector<std::string> out;
    for (const auto* s : sets) out.insert(out.end(), s->begin(), s->end());
    return out;
}

} // namespace detail

/// -Σ λ log2 λ of the reduced state on `subsystems` (empty set gives 0).
/// Eigenvalues in [-neg_tol, 0] are treated as roundoff and clamped to zero;
/// anything more negative raises.
inline double von_neumann_entropy(const DensityOperator& rho,
                                  const std::vector<std::string>& subsystems,
                                  double neg_tol = 1e-9) {
    if (subsystems.empty()) return 0.0;
    const DensityOperator reduced = subsystems.size() == rho.layout().count()
                                        ? rho
                                        : partial_trace(rho, subsystems);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(reduced.matrix(),
                                                       Eigen::EigenvaluesOnly);
    double sum = 0.0;
    for (long i = 0; i < es.eigenvalues().size(); ++i) {
        const double lam = es.eigenvalues()(i);
        if (lam < -neg_tol)
            throw std::invalid_argument("state has eigenvalue " +
                                        std::to_string(lam) +
                                        " beyond the numerical-noise band");
        if (lam > 0.0) sum -= lam * std::log2(lam);
    }
    return std::max(sum, 0.0);
}

inline double von_neumann_entropy(const DensityOperator& rho) {
    return von_neumann_entropy(rho, rho.layout().labels());
}

/// I(A;B) = H(A) + H(B) - H(AB).
inline double mutual_information(const DensityOperator& rho,
                                 const std::vector<std::string>& a,
                                 const std::vector<std::string>& b) {
    detail::check_disjoint({a, b});
    return von_neumann_entropy(rho, a) + von_neumann_entropy(rho, b) -
           von_neumann_entropy(rho, detail::set_union({&a, &b}));
}

/// I(A;B|C) = H(AC) + H(BC) - H(ABC) - H(C); non-negative by strong
/// subadditivity (up to roundoff).
inline double conditional_mutual_information(const DensityOperator& rho,
                                             const std::vector<std::string>& a,
                                             const std::vector<std::string>& b,
                                             const std::vector<std::string>& c) {
    detail::check_disjoint({a, b, c});
    return von_neumann_entropy(rho, detail::set_union({&a, &c})) +
           von_neumann_entropy(rho, detail::set_union({&b, &c})) -
           von_neumann_entropy(rho, detail::set_union({&a, &b, &c})) -
           von_neumann_entropy(rho, c);
}

/// I(A>B) = H(B) - H(AB).
inline double coherent_information(const DensityOperator& rho,
                                   const std::vector<std::string>& a,
                                   const std::vector<std::string>& b) {
    detail::check_disjoint({a, b});
    return von_neumann_entropy(rho, b) -
           von_neumann_entropy(rho, detail::set_union({&a, &b}));
}

/// Residual of the exchange identity
///   I(A;B) - I(A;B|C) = I(A;C) - I(A;C|B),
/// which holds on every state; the returned absolute residual should vanish
/// to numerical precision.
inline double check_mi_identity(const DensityOperator& rho,
                                const std::vector<std::string>& a,
                                const std::vector<std::string>& b,
                                const std::vector<std::string>& c) {
    detail::check_disjoint({a, b, c});
    const double lhs = mutual_information(rho, a, b) -
                       conditional_mutual_information(rho, a, b, c);
    const double rhs = mutual_information(rho, a, c) -
                       conditional_mutual_information(rho, a, c, b);
    return std::abs(lhs - rhs);
}

/// A computed quantity bundled with enough context to audit it later.
struct EntropyReport {
    std::string quantity_name;
    double value = 0.0;
    std::uint64_t state_fingerprint = 0;
    std::vector<std::vector<std::string>> subsystem_args;
};

inline EntropyReport report_entropy(const DensityOperator& rho,
                                    const std::vector<std::string>& subsystems) {
    return {"von_neumann_entropy", von_neumann_entropy(rho, subsystems),
            state_fingerprint(rho), {subsystems}};
}

inline EntropyReport report_mutual_information(const DensityOperator& rho,
                                               const std::vector<std::string>& a,
                                               const std::vector<std::string>& b) {
    return {"mutual_information", mutual_information(rho, a, b),
            state_fingerprint(rho), {a, b}};
}

inline EntropyReport report_conditional_mutual_information(
    const DensityOperator& rho, const std::vector<std::string>& a,
    const std::vector<std::string>& b, const std::vector<std::string>& c) {
    return {"conditional_mutual_information",
            conditional_mutual_information(rho, a, b, c), state_fingerprint(rho),
            {a, b, c}};
}

inline EntropyReport report_coherent_information(const DensityOperator& rho,
                                                 const std::vector<std::string>& a,
                                                 const std::vector<std::string>& b) {
    return {"coherent_information", coherent_information(rho, a, b),
            state_fingerprint(rho), {a, b}};
}

} // namespace qgp
