#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qgp/haar.hpp"
#include "qgp/typicality.hpp"
#include "test_helpers.hpp"

using namespace qgp;
using qgp_test::random_unitary;

namespace {

DensityOperator diag_base(const std::vector<double>& probs) {
    const long d = static_cast<long>(probs.size());
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
    for (long i = 0; i < d; ++i) m(i, i) = probs[i];
    return DensityOperator(SubsystemLayout({{"A", d}}), m);
}

Eigen::MatrixXcd kron_power(const Eigen::MatrixXcd& m, int n) {
    Eigen::MatrixXcd out = m;
    for (int i = 1; i < n; ++i) out = kron(out, m);
    return out;
}

} // namespace

TEST_CASE("haar samples are unitary and reproducible") {
    HaarSampler s(99, 4);
    const Eigen::MatrixXcd u = s.draw();
    CHECK((u.adjoint() * u - Eigen::MatrixXcd::Identity(4, 4))
              .cwiseAbs()
              .maxCoeff() < 1e-12);

    HaarSampler s2(99, 4);
    const Eigen::MatrixXcd u2 = s2.draw();
    CHECK((u - u2).cwiseAbs().maxCoeff() == 0.0);

    // Distinct streams and later draws differ.
    const Eigen::MatrixXcd u3 = s.draw();
    CHECK((u - u3).cwiseAbs().maxCoeff() > 1e-3);
    HaarSampler s3 = s.derived(7);
    CHECK((u - s3.draw()).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("haar first moment at d=4") {
    HaarSampler s(2718, 4);
    const int samples = 5000;
    double mean = 0.0;
    for (int i = 0; i < samples; ++i) mean += std::norm(s.draw()(0, 0));
    mean /= samples;
    CHECK(std::abs(mean - 0.25) < 0.02);
}

TEST_CASE("haar left invariance in the first moment") {
    CounterRng helper(314, 0);
    const Eigen::MatrixXcd v = random_unitary(helper, 3);
    HaarSampler s(1618, 3);
    const int samples = 2000;
    double plain = 0.0, rotated = 0.0;
    for (int i = 0; i < samples; ++i) {
        const Eigen::MatrixXcd u = s.draw();
        plain += std::norm(u(0, 0));
        rotated += std::norm((v * u)(0, 0));
    }
    plain /= samples;
    rotated /= samples;
    // Both estimate 1/d; agreement within Monte Carlo error.
    CHECK(std::abs(plain - rotated) < 0.03);
    CHECK(std::abs(plain - 1.0 / 3.0) < 0.03);
}

TEST_CASE("haar_unitary wraps a draw with a layout") {
    HaarSampler s(55, 6);
    const LinearMapOperator u = haar_unitary(s, SubsystemLayout({{"X", 2}, {"Y", 3}}));
    CHECK(u.kind() == MapKind::unitary);
    CHECK(u.in_layout().total_dim() == 6);
    CHECK_THROWS_AS(haar_unitary(s, SubsystemLayout({{"X", 5}})),
                    std::invalid_argument);
}

TEST_CASE("classical typical sets") {
    SECTION("uniform bits: everything is typical") {
        const auto set = classical_typical_set({0.5, 0.5}, 6, 0.01);
        CHECK(set.sequences.size() == 64u);
        CHECK(std::abs(set.total_probability - 1.0) < 1e-12);
        CHECK(std::abs(set.entropy - 1.0) < 1e-12);
    }

    SECTION("deterministic source: one constant sequence") {
        const auto set = classical_typical_set({0.0, 1.0}, 5, 0.1);
        REQUIRE(set.sequences.size() == 1u);
        // Code of (1,1,1,1,1) base 2 = 31.
        CHECK(set.sequences[0] == 31u);
        CHECK(std::abs(set.total_probability - 1.0) < 1e-12);
    }

    SECTION("bernoulli(0.3), n=10: matches the count-of-ones rule") {
        const int n = 10;
        const double eps = 0.2;
        const auto set = classical_typical_set({0.7, 0.3}, n, eps);

        // Independent oracle: membership depends only on the number of ones.
        const double h = -(0.3 * std::log2(0.3) + 0.7 * std::log2(0.7));
        std::size_t count = 0;
        double prob = 0.0;
        for (int k = 0; k <= n; ++k) {
            const double log_p = k * std::log2(0.3) + (n - k) * std::log2(0.7);
            if (std::abs(-log_p / n - h) <= eps) {
                double binom = 1.0;
                for (int i = 0; i < k; ++i)
                    binom = binom * (n - i) / (i + 1);
                count += static_cast<std::size_t>(std::llround(binom));
                prob += binom * std::pow(0.3, k) * std::pow(0.7, n - k);
            }
        }
        CHECK(set.sequences.size() == count);
        CHECK(std::abs(set.total_probability - prob) < 1e-10);
    }

    SECTION("guards and validation") {
        CHECK_THROWS_AS(classical_typical_set({0.25, 0.25, 0.25, 0.25}, 12, 0.1),
                        std::invalid_argument); // 4^12 > 2^22
        CHECK_THROWS_AS(classical_typical_set({0.5, 0.4}, 3, 0.1),
                        std::invalid_argument);
        CHECK_THROWS_AS(classical_typical_set({0.5, 0.5}, 3, 0.0),
                        std::invalid_argument);
    }
}

TEST_CASE("typical projector reference cases") {
    SECTION("pure base state") {
        const TypicalProjector tp(diag_base({1.0, 0.0}), 3, 0.1);
        CHECK(tp.typical_dim() == 1);
        CHECK(std::abs(tp.mass() - 1.0) < 1e-12);
        // Projects onto |000>.
        Eigen::MatrixXcd p = tp.projector().matrix();
        CHECK(std::abs(p(0, 0).real() - 1.0) < 1e-12);
        CHECK(p.cwiseAbs().sum() < 1.0 + 1e-9);
    }

    SECTION("maximally mixed base: full projector") {
        const TypicalProjector tp(
            DensityOperator::maximally_mixed(SubsystemLayout({{"A", 2}})), 5, 0.05);
        CHECK(tp.typical_dim() == 32);
        CHECK(std::abs(tp.mass() - 1.0) < 1e-12);
        CHECK((tp.projector().matrix() - Eigen::MatrixXcd::Identity(32, 32))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
    }

    SECTION("(0.7, 0.3) spectrum reduces to the classical set") {
        const TypicalProjector tp(diag_base({0.7, 0.3}), 8, 0.15);
        const auto classical = classical_typical_set({0.7, 0.3}, 8, 0.15);
        CHECK(tp.typical_dim() == static_cast<long>(classical.sequences.size()));
        CHECK(std::abs(tp.mass() - classical.total_probability) < 1e-12);
    }

    SECTION("zero eigenvalues are pruned") {
        const TypicalProjector tp(diag_base({0.5, 0.5, 0.0}), 4, 0.05);
        CHECK(tp.typical_dim() == 16);
        CHECK(std::abs(tp.mass() - 1.0) < 1e-12);
    }

    SECTION("cap is enforced") {
        CHECK_THROWS_AS(TypicalProjector(diag_base({0.7, 0.3}), 13, 0.1),
                        std::invalid_argument);
    }
}

TEST_CASE("typical projector structure") {
    CounterRng rng(61, 0);
    // Non-diagonal base: rotate a spectrum into a random basis.
    const Eigen::MatrixXcd u = random_unitary(rng, 2);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
    m(0, 0) = 0.8;
    m(1, 1) = 0.2;
    const DensityOperator base(SubsystemLayout({{"A", 2}}),
                               (u * m * u.adjoint()).eval());
    const int n = 4;
    const TypicalProjector tp(base, n, 0.25);

    const Eigen::MatrixXcd p = tp.projector().matrix();
    const Eigen::MatrixXcd rho_n = kron_power(base.matrix(), n);

    SECTION("commutes with the power state") {
        CHECK((p * rho_n - rho_n * p).cwiseAbs().maxCoeff() < 1e-12);
    }

    SECTION("mass matches the dense trace") {
        CHECK(std::abs((p * rho_n).trace().real() - tp.mass()) < 1e-12);
    }

    SECTION("property-2 dimension bound") {
        CHECK(static_cast<double>(tp.typical_dim()) <=
              std::pow(2.0, n * (tp.base_entropy() + tp.epsilon())) + 1e-9);
    }

    SECTION("compressor is a coisometry onto the typical subspace") {
        const Eigen::MatrixXcd c = tp.compressor().matrix();
        CHECK((c * c.adjoint() -
               Eigen::MatrixXcd::Identity(tp.typical_dim(), tp.typical_dim()))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
        CHECK((c.adjoint() * c - p).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(tp.compressor().out_layout().labels() ==
              std::vector<std::string>({"Atyp"}));
    }

    SECTION("projector layout uses indexed copies") {
        CHECK(tp.projector().in_layout().labels() ==
              std::vector<std::string>({"A1", "A2", "A3", "A4"}));
    }
}

TEST_CASE("gentle measurement") {
    SECTION("maximally mixed base: nothing is disturbed") {
        const TypicalProjector tp(
            DensityOperator::maximally_mixed(SubsystemLayout({{"A", 2}})), 4, 0.1);
        const auto rep = gentle_measurement_check(tp);
        CHECK(std::abs(rep.mass - 1.0) < 1e-12);
        CHECK(rep.post_distance < 1e-12);
    }

    SECTION("post distance matches the dense computation") {
        const DensityOperator base = diag_base({0.8, 0.2});
        const int n = 4;
        const TypicalProjector tp(base, n, 0.25);
        const auto rep = gentle_measurement_check(tp);

        const Eigen::MatrixXcd rho_n = kron_power(base.matrix(), n);
        const Eigen::MatrixXcd p = tp.projector().matrix();
        const Eigen::MatrixXcd projected = (p * rho_n * p) / rep.mass;
        CHECK(std::abs(trace_norm(projected - rho_n) - rep.post_distance) < 1e-10);
    }

    SECTION("bound holds on a lossy instance") {
        const TypicalProjector tp(diag_base({0.9, 0.1}), 6, 0.3);
        const auto rep = gentle_measurement_check(tp);
        CHECK(rep.mass < 1.0);
        CHECK(rep.post_distance <= rep.bound + 1e-9);
    }

    SECTION("mass trend improves with block length") {
        for (const auto& spectrum :
             std::vector<std::vector<double>>{{0.7, 0.3}, {0.9, 0.1}}) {
            const TypicalProjector small(diag_base(spectrum), 2, 0.3);
            const TypicalProjector large(diag_base(spectrum), 10, 0.3);
            CHECK(large.mass() >= small.mass() - 1e-12);
        }
    }
}

TEST_CASE("epsilon schedules") {
    CHECK(std::abs(epsilon_schedule("n^-1/4").value(16) - 0.5) < 1e-12);
    CHECK(std::abs(epsilon_schedule("n^-1/3").value(8) - 0.5) < 1e-12);
    CHECK(std::abs(epsilon_schedule("n^-1/2").value(4) - 0.5) < 1e-12);
    CHECK(std::abs(epsilon_schedule("const:0.2").value(99) - 0.2) < 1e-15);
    CHECK(default_epsilon_schedule().name == "n^-1/4");
    CHECK_THROWS_AS(epsilon_schedule("bogus"), std::invalid_argument);
    CHECK_THROWS_AS(epsilon_schedule("const:-1"), std::invalid_argument);
}
