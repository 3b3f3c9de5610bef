#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "qgp/tensor_ops.hpp"
#include "test_helpers.hpp"

using namespace qgp;
using qgp_test::random_density;
using qgp_test::random_pure;
using qgp_test::random_unitary;

namespace {
const std::complex<double> I1(0.0, 1.0);
}

TEST_CASE("layout basics and guard rails") {
    SubsystemLayout layout({{"A", 2}, {"B", 3}, {"C", 4}});
    CHECK(layout.total_dim() == 24);
    CHECK(layout.dim_of("B") == 3);
    CHECK(layout.strides() == std::vector<long>({12, 4, 1}));

    CHECK_THROWS_AS(SubsystemLayout({{"A", 2}, {"A", 3}}), std::invalid_argument);
    CHECK_THROWS_AS(SubsystemLayout({{"A", 0}}), std::invalid_argument);
    CHECK_THROWS_AS(SubsystemLayout({{"", 2}}), std::invalid_argument);
    CHECK_THROWS_AS(SubsystemLayout({{"A", 4096}, {"B", 2}}), std::invalid_argument);
    CHECK_NOTHROW(SubsystemLayout({{"A", 4096}}));
}

TEST_CASE("index encode/decode round trip") {
    SubsystemLayout layout({{"A", 3}, {"B", 2}, {"C", 5}});
    const auto dims = layout.dims();
    const auto strides = layout.strides();
    std::vector<long> digits;
    for (long f = 0; f < layout.total_dim(); ++f) {
        decode_index(dims, f, digits);
        REQUIRE(encode_index(strides, digits) == f);
    }
    // First subsystem is most significant: flat 0..4 all have A-digit 0.
    decode_index(dims, 4, digits);
    CHECK(digits == std::vector<long>({0, 0, 4}));
    decode_index(dims, 10, digits);
    CHECK(digits == std::vector<long>({1, 0, 0}));
}

TEST_CASE("maximally entangled state has maximally mixed marginals") {
    for (long d : {1L, 2L, 3L, 4L}) {
        const PureState phi = maximally_entangled("A", "B", d);
        REQUIRE(std::abs(phi.norm() - 1.0) < 1e-14);
        const DensityOperator ma = marginal(phi, {"A"});
        const Eigen::MatrixXcd expect =
            Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d);
        CHECK((ma.matrix() - expect).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("partial trace of a product state recovers the factor") {
    CounterRng rng(11, 0);
    const DensityOperator rho_a = random_density(rng, SubsystemLayout({{"A", 3}}));
    const DensityOperator rho_b = random_density(rng, SubsystemLayout({{"B", 4}}));
    const DensityOperator prod = tensor_product(rho_a, rho_b);
    CHECK(std::abs(prod.trace_real() - 1.0) < 1e-12);

    const DensityOperator back = partial_trace(prod, {"A"});
    CHECK((back.matrix() - rho_a.matrix()).cwiseAbs().maxCoeff() < 1e-12);
    const DensityOperator back_b = partial_trace(prod, {"B"});
    CHECK((back_b.matrix() - rho_b.matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("partial trace is independent of tracing order") {
    CounterRng rng(12, 0);
    const PureState psi =
        random_pure(rng, SubsystemLayout({{"A", 2}, {"B", 3}, {"C", 2}}));
    const DensityOperator rho = psi.density();
    const DensityOperator two_step =
        partial_trace(partial_trace(rho, {"A", "B"}), {"A"});
    const DensityOperator one_step = partial_trace(rho, {"A"});
    CHECK((two_step.matrix() - one_step.matrix()).cwiseAbs().maxCoeff() < 1e-12);

    // marginal() on the pure state agrees with the dense path.
    const DensityOperator direct = marginal(psi, {"A"});
    CHECK((direct.matrix() - one_step.matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("partial trace keeps subsystems in layout order") {
    CounterRng rng(13, 0);
    const DensityOperator rho =
        random_density(rng, SubsystemLayout({{"A", 2}, {"B", 2}, {"C", 2}}));
    const DensityOperator kept = partial_trace(rho, {"C", "A"});
    CHECK(kept.layout().labels() == std::vector<std::string>({"A", "C"}));
    CHECK_THROWS_AS(partial_trace(rho, {}), std::invalid_argument);
    CHECK_THROWS_AS(partial_trace(rho, {"X"}), std::invalid_argument);
}

TEST_CASE("permutation composes and inverts") {
    CounterRng rng(14, 0);
    const PureState psi =
        random_pure(rng, SubsystemLayout({{"A", 2}, {"B", 3}, {"C", 4}}));
    const PureState p1 = permute_subsystems(psi, {"C", "A", "B"});
    CHECK(p1.layout().labels() == std::vector<std::string>({"C", "A", "B"}));
    const PureState p2 = permute_subsystems(p1, {"A", "B", "C"});
    CHECK((p2.amplitudes() - psi.amplitudes()).cwiseAbs().maxCoeff() == 0.0);

    // Permutation acts on density operators consistently with pure states.
    const DensityOperator d1 = permute_subsystems(psi.density(), {"C", "A", "B"});
    CHECK((d1.matrix() - p1.density().matrix()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("permutation agrees with hand-computed swap") {
    // |01> on (A,B) becomes |10> on (B,A).
    SubsystemLayout ab({{"A", 2}, {"B", 2}});
    const PureState psi = PureState::basis_state(ab, 1); // A=0, B=1
    const PureState swapped = permute_subsystems(psi, {"B", "A"});
    CHECK(std::abs(swapped.amplitudes()(2) - 1.0) < 1e-15); // B=1, A=0
}

TEST_CASE("tensor products multiply traces and forbid label collisions") {
    CounterRng rng(15, 0);
    const PureState a = random_pure(rng, SubsystemLayout({{"A", 2}}));
    const PureState b = random_pure(rng, SubsystemLayout({{"B", 3}}));
    const PureState ab = tensor_product(a, b);
    CHECK(std::abs(ab.norm() - 1.0) < 1e-12);
    CHECK_THROWS_AS(tensor_product(a, a), std::invalid_argument);

    // Composite pattern states of the kind used by the coding layer are
    // normalised products of entangled pairs.
    const PureState pattern = tensor_product(
        tensor_product(maximally_entangled("R", "Rp", 4),
                       maximally_entangled("At", "Bt", 2)),
        random_pure(rng, SubsystemLayout({{"S", 2}, {"Sp", 2}})));
    CHECK(std::abs(pattern.norm() - 1.0) < 1e-12);
    CHECK(std::abs(pattern.density().trace_real() - 1.0) < 1e-12);
}

TEST_CASE("trace distance basics") {
    // Pinned value: || |0><0| - I/2 ||_1 = 1.
    SubsystemLayout a({{"A", 2}});
    const DensityOperator pure0 = PureState::basis_state(a, 0).density();
    const DensityOperator mixed = DensityOperator::maximally_mixed(a);
    CHECK(std::abs(trace_distance(pure0, mixed) - 1.0) < 1e-12);

    // Orthogonal pure states sit at the maximal distance 2.
    const DensityOperator pure1 = PureState::basis_state(a, 1).density();
    CHECK(std::abs(trace_distance(pure0, pure1) - 2.0) < 1e-12);
    CHECK(trace_distance(pure0, pure0) == 0.0);
}

TEST_CASE("trace distance is a metric and permutation invariant") {
    CounterRng rng(16, 0);
    SubsystemLayout layout({{"A", 2}, {"B", 3}});
    for (int trial = 0; trial < 20; ++trial) {
        const DensityOperator x = random_density(rng, layout);
        const DensityOperator y = random_density(rng, layout);
        const DensityOperator z = random_density(rng, layout);
        const double dxy = trace_distance(x, y);
        const double dyx = trace_distance(y, x);
        CHECK(std::abs(dxy - dyx) < 1e-12);
        CHECK(dxy >= 0.0);
        CHECK(dxy <= 2.0 + 1e-12);
        CHECK(trace_distance(x, z) <= dxy + trace_distance(y, z) + 1e-10);

        const DensityOperator y_perm = permute_subsystems(y, {"B", "A"});
        CHECK(std::abs(trace_distance(x, y_perm) - dxy) < 1e-10);
    }
}

TEST_CASE("pure-state distance matches the density computation") {
    CounterRng rng(17, 0);
    SubsystemLayout layout({{"A", 2}, {"B", 2}});
    for (int trial = 0; trial < 10; ++trial) {
        const PureState psi = random_pure(rng, layout);
        const PureState phi = random_pure(rng, layout);
        const double direct = trace_distance(psi, phi);
        const double dense = trace_distance(psi.density(), phi.density());
        CHECK(std::abs(direct - dense) < 1e-10);
        CHECK(std::abs(fidelity_pure(psi, phi) -
                       std::abs(psi.amplitudes().dot(phi.amplitudes()))) < 1e-14);
    }
}

TEST_CASE("purification has minimal reference and round trips") {
    CounterRng rng(18, 0);
    SubsystemLayout layout({{"A", 2}, {"B", 2}});
    const DensityOperator rho = random_density(rng, layout);
    const PureState psi = purify(rho, "Ref");
    CHECK(psi.layout().labels() == std::vector<std::string>({"A", "B", "Ref"}));
    CHECK(psi.layout().dim_of("Ref") == 4); // full rank Wishart sample

    const DensityOperator back = marginal(psi, {"A", "B"});
    CHECK(trace_distance(back, rho) < 1e-10);

    // A rank-2 state purifies with a 2-dimensional reference.
    Eigen::MatrixXcd low = Eigen::MatrixXcd::Zero(4, 4);
    low(0, 0) = 0.75;
    low(3, 3) = 0.25;
    const DensityOperator rank2(layout, low);
    const PureState psi2 = purify(rank2, "Ref");
    CHECK(psi2.layout().dim_of("Ref") == 2);
    CHECK(trace_distance(marginal(psi2, {"A", "B"}), rank2) < 1e-12);

    CHECK_THROWS_AS(purify(rho, "A"), std::invalid_argument);
}

TEST_CASE("apply_map acts on the targeted subsystems only") {
    CounterRng rng(19, 0);
    SubsystemLayout abc({{"A", 2}, {"B", 3}, {"C", 2}});
    const PureState psi = random_pure(rng, abc);

    // Unitary on B alone, cross-checked against a hand-built kron.
    const Eigen::MatrixXcd u = random_unitary(rng, 3);
    const LinearMapOperator ub(MapKind::unitary, SubsystemLayout({{"B", 3}}),
                               SubsystemLayout({{"B", 3}}), u);
    const PureState mapped = apply_map(ub, psi);
    CHECK(mapped.layout().labels() == std::vector<std::string>({"A", "B", "C"}));

    const Eigen::MatrixXcd full =
        kron(kron(Eigen::MatrixXcd::Identity(2, 2), u),
             Eigen::MatrixXcd::Identity(2, 2));
    CHECK((mapped.amplitudes() - full * psi.amplitudes()).cwiseAbs().maxCoeff() <
          1e-12);

    // Applying on the density operator matches conjugation.
    const DensityOperator drho = apply_map(ub, psi.density());
    CHECK((drho.matrix() - mapped.density().matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("apply_map substitutes output subsystems in place") {
    CounterRng rng(20, 0);
    SubsystemLayout abc({{"A", 2}, {"B", 2}, {"C", 3}});
    const PureState psi = random_pure(rng, abc);

    // Isometry B -> (X,Y) of dimensions 2 -> 4.
    Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(4, 2);
    v(0, 0) = 1.0;
    v(3, 1) = 1.0;
    const LinearMapOperator iso(MapKind::isometry, SubsystemLayout({{"B", 2}}),
                                SubsystemLayout({{"X", 2}, {"Y", 2}}), v);
    const PureState out = apply_map(iso, psi);
    CHECK(out.layout().labels() == std::vector<std::string>({"A", "X", "Y", "C"}));
    CHECK(std::abs(out.norm() - 1.0) < 1e-12);

    // Unitary spectrum preservation on the density side.
    const Eigen::MatrixXcd u = random_unitary(rng, 12);
    const LinearMapOperator whole(MapKind::unitary, abc, abc, u);
    const DensityOperator rho = random_density(rng, abc);
    const DensityOperator rotated = apply_map(whole, rho);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e1(rho.matrix(),
                                                       Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e2(rotated.matrix(),
                                                       Eigen::EigenvaluesOnly);
    CHECK((e1.eigenvalues() - e2.eigenvalues()).cwiseAbs().maxCoeff() < 1e-10);

    // Errors: unknown target, dimension mismatch, output collision.
    const LinearMapOperator bad_dim(MapKind::unitary, SubsystemLayout({{"B", 3}}),
                                    SubsystemLayout({{"B", 3}}),
                                    Eigen::MatrixXcd::Identity(3, 3));
    CHECK_THROWS_AS(apply_map(bad_dim, psi), std::invalid_argument);
    const LinearMapOperator bad_label(MapKind::unitary, SubsystemLayout({{"Q", 2}}),
                                      SubsystemLayout({{"Q", 2}}),
                                      Eigen::MatrixXcd::Identity(2, 2));
    CHECK_THROWS_AS(apply_map(bad_label, psi), std::invalid_argument);
    const LinearMapOperator collide(MapKind::unitary, SubsystemLayout({{"B", 2}}),
                                    SubsystemLayout({{"C", 2}}),
                                    Eigen::MatrixXcd::Identity(2, 2));
    CHECK_THROWS_AS(apply_map(collide, psi), std::invalid_argument);
}

TEST_CASE("linear map kinds are validated") {
    SubsystemLayout a2({{"A", 2}});
    SubsystemLayout b4({{"X", 4}});
    CHECK_THROWS_AS(LinearMapOperator(MapKind::unitary, a2, a2,
                                      Eigen::MatrixXcd::Ones(2, 2)),
                    std::invalid_argument);
    Eigen::MatrixXcd half_iso = Eigen::MatrixXcd::Zero(4, 2);
    half_iso(0, 0) = 1.0;
    half_iso(1, 1) = 1.0;
    CHECK_NOTHROW(LinearMapOperator(MapKind::isometry, a2, b4, half_iso));
    CHECK_THROWS_AS(LinearMapOperator(MapKind::isometry, a2, b4,
                                      0.5 * half_iso),
                    std::invalid_argument);
    // A projector onto |0> is a valid partial isometry but not an isometry.
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(2, 2);
    p(0, 0) = 1.0;
    CHECK_NOTHROW(LinearMapOperator(MapKind::projector, a2, a2, p));
    CHECK_NOTHROW(LinearMapOperator(MapKind::partial_isometry, a2, a2, p));
    CHECK_THROWS_AS(LinearMapOperator(MapKind::unitary, a2, a2, p),
                    std::invalid_argument);
}

TEST_CASE("state validation rejects malformed inputs") {
    SubsystemLayout a({{"A", 2}});
    Eigen::VectorXcd unnorm(2);
    unnorm << 1.0, 1.0;
    CHECK_THROWS_AS(PureState(a, unnorm), std::invalid_argument);

    Eigen::MatrixXcd not_herm(2, 2);
    not_herm << 0.5, 0.5, -0.5, 0.5;
    CHECK_THROWS_AS(DensityOperator(a, not_herm), std::invalid_argument);

    Eigen::MatrixXcd neg(2, 2);
    neg << 1.5, 0.0, 0.0, -0.5;
    CHECK_THROWS_AS(DensityOperator(a, neg), std::invalid_argument);

    Eigen::MatrixXcd wrong_trace = Eigen::MatrixXcd::Identity(2, 2);
    CHECK_THROWS_AS(DensityOperator(a, wrong_trace), std::invalid_argument);
}

TEST_CASE("pad_subsystem embeds amplitudes and preserves overlaps") {
    CounterRng rng(21, 0);
    SubsystemLayout ab({{"A", 2}, {"B", 2}});
    const PureState psi = random_pure(rng, ab);
    const PureState padded = pad_subsystem(psi, "B", 5);
    CHECK(padded.layout().dim_of("B") == 5);
    CHECK(std::abs(padded.norm() - 1.0) < 1e-12);
    // Marginal on A is untouched.
    CHECK(trace_distance(marginal(padded, {"A"}), marginal(psi, {"A"})) < 1e-12);
    CHECK_THROWS_AS(pad_subsystem(psi, "B", 1), std::invalid_argument);
}

TEST_CASE("relabelling preserves content") {
    CounterRng rng(22, 0);
    const PureState psi = random_pure(rng, SubsystemLayout({{"A", 2}, {"B", 3}}));
    const PureState renamed = relabel_subsystems(psi, {{"A", "A1"}, {"B", "B1"}});
    CHECK(renamed.layout().labels() == std::vector<std::string>({"A1", "B1"}));
    CHECK((renamed.amplitudes() - psi.amplitudes()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uhlmann: identical purifications give the identity") {
    CounterRng rng(23, 0);
    const PureState psi =
        random_pure(rng, SubsystemLayout({{"A", 3}, {"B", 2}}));
    const PureState phi = relabel_subsystems(psi, {{"B", "C"}});
    const auto res = uhlmann_partial_isometry(psi, phi);
    CHECK(std::abs(res.achieved_overlap - 1.0) < 1e-10);
    const PureState mapped = apply_map(res.completed, phi);
    CHECK(trace_distance(mapped, psi) < 1e-9);
}

TEST_CASE("uhlmann: purifications of the same state are connected") {
    CounterRng rng(24, 0);
    SubsystemLayout a({{"A", 3}});
    const DensityOperator rho = random_density(rng, a);
    const PureState psi = purify(rho, "B");
    // Rotate the reference of a second copy by a random unitary.
    PureState phi = relabel_subsystems(purify(rho, "C"), {});
    const Eigen::MatrixXcd u = random_unitary(rng, phi.layout().dim_of("C"));
    const LinearMapOperator uc(MapKind::unitary,
                               SubsystemLayout({{"C", phi.layout().dim_of("C")}}),
                               SubsystemLayout({{"C", phi.layout().dim_of("C")}}), u);
    phi = apply_map(uc, phi);

    const auto res = uhlmann_partial_isometry(psi, phi);
    CHECK(std::abs(res.achieved_overlap - 1.0) < 1e-9);
    CHECK(trace_distance(apply_map(res.completed, phi), psi) < 1e-8);
}

TEST_CASE("uhlmann: overlap equals the nuclear norm and beats random search") {
    CounterRng rng(25, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const PureState psi =
            random_pure(rng, SubsystemLayout({{"A", 3}, {"B", 4}}));
        const PureState phi =
            random_pure(rng, SubsystemLayout({{"A", 3}, {"C", 3}}));
        const auto res = uhlmann_partial_isometry(psi, phi);

        // Nuclear norm recomputed from scratch.
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(4, 3);
        for (long b = 0; b < 4; ++b)
            for (long c = 0; c < 3; ++c)
                for (long a = 0; a < 3; ++a)
                    m(b, c) += std::conj(psi.amplitudes()(a * 4 + b)) *
                               phi.amplitudes()(a * 3 + c);
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
        CHECK(std::abs(res.achieved_overlap - svd.singularValues().sum()) < 1e-10);

        // Realised overlap of the returned isometry matches the report.
        const PureState moved = apply_map(res.completed, phi);
        const PureState aligned = permute_subsystems(moved, psi.layout().labels());
        CHECK(std::abs(std::abs(psi.amplitudes().dot(aligned.amplitudes())) -
                       res.achieved_overlap) < 1e-10);

        // 200 random isometries never do better.
        for (int k = 0; k < 200; ++k) {
            const Eigen::MatrixXcd w = random_unitary(rng, 4).leftCols(3);
            const LinearMapOperator cand(MapKind::isometry,
                                         SubsystemLayout({{"C", 3}}),
                                         SubsystemLayout({{"B", 4}}), w);
            const PureState cand_moved =
                permute_subsystems(apply_map(cand, phi), psi.layout().labels());
            const double got =
                std::abs(psi.amplitudes().dot(cand_moved.amplitudes()));
            CHECK(got <= res.achieved_overlap + 1e-9);
        }
    }
}

TEST_CASE("uhlmann rejects an oversized purifying system") {
    CounterRng rng(26, 0);
    const PureState psi = random_pure(rng, SubsystemLayout({{"A", 2}, {"B", 2}}));
    const PureState phi = random_pure(rng, SubsystemLayout({{"A", 2}, {"C", 3}}));
    CHECK_THROWS_AS(uhlmann_partial_isometry(psi, phi), std::invalid_argument);
}
