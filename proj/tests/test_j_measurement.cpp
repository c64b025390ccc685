#include <doctest.h>

#include <cmath>

#include "singlet/j_measurement.hpp"
#include "singlet/linalg.hpp"

using namespace singlet;

namespace {

// dense helper for the slow reference checks
std::vector<cplx> apply_dense(const std::vector<cplx>& m, const StateVector& psi) {
    const std::size_t d = psi.dim();
    std::vector<cplx> out(d, cplx{0, 0});
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) out[r] += m[r * d + c] * psi.amp(c);
    return out;
}

double dense_trace(const std::vector<cplx>& m, std::size_t d) {
    double t = 0;
    for (std::size_t i = 0; i < d; ++i) t += m[i * d + i].real();
    return t;
}

} // namespace

TEST_CASE("projector pair structure") {
    const JProjectorPair p = j_projectors({0, 1}, 2);

    // ranks: singlet 1, triplet 3
    CHECK(dense_trace(p.dense_j0(), 4) == doctest::Approx(1.0));
    CHECK(dense_trace(p.dense_j1(), 4) == doctest::Approx(3.0));

    // idempotent, orthogonal, complete (dense reference path)
    const auto j0 = p.dense_j0();
    const auto j1 = p.dense_j1();
    const auto j0j0 = linalg::matmul(j0, j0, 4);
    const auto j0j1 = linalg::matmul(j0, j1, 4);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            CHECK(std::abs(j0j0[r * 4 + c] - j0[r * 4 + c]) < 1e-12);
            CHECK(std::abs(j0j1[r * 4 + c]) < 1e-12);
            const cplx id = r == c ? cplx{1, 0} : cplx{0, 0};
            CHECK(std::abs(j0[r * 4 + c] + j1[r * 4 + c] - id) < 1e-12);
        }

    CHECK_THROWS_AS(j_projectors({1, 1}, 2), InvalidPairError);
    CHECK_THROWS_AS(j_projectors({0, 3}, 2), InvalidPairError);
}

TEST_CASE("J1 restricted to the pair equals (I + SWAP)/2") {
    const JProjectorPair p = j_projectors({0, 1}, 2);
    // SWAP in the pair-local basis (index = bit(a) + 2*bit(b))
    const double swap[16] = {1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1};
    for (int i = 0; i < 16; ++i) {
        const double id = (i % 4 == i / 4) ? 1.0 : 0.0;
        CHECK(std::abs(p.j1_kernel[i] - 0.5 * (id + swap[i])) < 1e-12);
    }
}

TEST_CASE("projectors on (0,2) commute with operators on qubit 1") {
    const JProjectorPair p = j_projectors({0, 2}, 3);
    const auto j0 = p.dense_j0();
    Rng rng(2);
    const Mat2 u = haar_unitary_2x2(rng);
    // dense u on qubit 1 of 3
    std::vector<cplx> um(64, cplx{0, 0});
    for (std::size_t r = 0; r < 8; ++r)
        for (std::size_t c = 0; c < 8; ++c) {
            if ((r & 0b101) != (c & 0b101)) continue;
            um[r * 8 + c] = u[((r >> 1) & 1) * 2 + ((c >> 1) & 1)];
        }
    const auto ab = linalg::matmul(j0, um, 8);
    const auto ba = linalg::matmul(um, j0, 8);
    for (int i = 0; i < 64; ++i) CHECK(std::abs(ab[i] - ba[i]) < 1e-12);
}

TEST_CASE("outcome probabilities on the named states") {
    CHECK(j_outcome_probabilities(ket("01"), {0, 1}).first == doctest::Approx(0.5));
    CHECK(j_outcome_probabilities(psi_minus_state(), {0, 1}).first == doctest::Approx(1.0));
    CHECK(j_outcome_probabilities(ket("00"), {0, 1}).first == doctest::Approx(0.0));
    CHECK_THROWS_AS(j_outcome_probabilities(ket("00"), {0, 0}), InvalidPairError);
}

TEST_CASE("completeness: p0 + p1 = 1 on random states") {
    Rng rng(4);
    for (int t = 0; t < 200; ++t) {
        const int n = 2 + static_cast<int>(rng.next_below(3));
        const StateVector psi = random_state_vector(n, rng);
        const int qa = static_cast<int>(rng.next_below(n));
        int qb = static_cast<int>(rng.next_below(n - 1));
        if (qb >= qa) ++qb;
        const auto [p0, p1] = j_outcome_probabilities(psi, {qa, qb});
        CHECK(std::abs(p0 + p1 - 1.0) < 1e-12);

        // the density-matrix path agrees with the pure path
        const auto [q0, q1] = j_outcome_probabilities(to_density(psi), {qa, qb});
        CHECK(q0 == doctest::Approx(p0).epsilon(1e-12));
    }
}

TEST_CASE("kernel projection matches the dense reference path") {
    Rng rng(6);
    for (int t = 0; t < 10; ++t) {
        const StateVector psi = random_state_vector(3, rng);
        const QubitPair pair{0, 2};
        const JPostselect fast = postselect_j(psi, pair, JOutcome::J1);
        auto slow = apply_dense(j_projectors(pair, 3).dense_j1(), psi);
        StateVector slow_post(3, std::move(slow));
        slow_post.normalize();
        CHECK(fidelity(fast.post, slow_post) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("measure_j on eigenstates and product states") {
    Rng rng(8);

    const JMeasurement singlet = measure_j(psi_minus_state(), {0, 1}, rng);
    CHECK(singlet.outcome == JOutcome::J0);
    CHECK(singlet.record.probability == doctest::Approx(1.0));
    CHECK(fidelity(singlet.post, psi_minus_state()) == doctest::Approx(1.0));

    // |01>, J1 branch -> psi+; |+->, J1 branch -> phi-
    CHECK(fidelity(postselect_j(ket("01"), {0, 1}, JOutcome::J1).post, psi_plus_state()) ==
          doctest::Approx(1.0));
    CHECK(fidelity(postselect_j(ket("+-"), {0, 1}, JOutcome::J1).post, phi_minus_state()) ==
          doctest::Approx(1.0));
}

TEST_CASE("measure_j is deterministic given the seed and repeatable") {
    for (int n : {2, 3}) {
        Rng r1(55), r2(55);
        const StateVector psi = random_state_vector(n, r1);
        const StateVector psi2 = random_state_vector(n, r2);
        const JMeasurement a = measure_j(psi, {0, 1}, r1);
        const JMeasurement b = measure_j(psi2, {0, 1}, r2);
        CHECK(a.outcome == b.outcome);
        CHECK(fidelity(a.post, b.post) == doctest::Approx(1.0));

        // measuring the same pair again repeats the outcome with certainty
        const JMeasurement again = measure_j(a.post, {0, 1}, r1);
        CHECK(again.outcome == a.outcome);
        CHECK(again.record.probability == doctest::Approx(1.0));
    }
}

TEST_CASE("postselect_j rejects impossible branches") {
    const JPostselect keep = postselect_j(ket("00"), {0, 1}, JOutcome::J1);
    CHECK(keep.probability == doctest::Approx(1.0));
    CHECK(fidelity(keep.post, ket("00")) == doctest::Approx(1.0));

    CHECK(postselect_j(ket("rl"), {0, 1}, JOutcome::J1).probability == doctest::Approx(0.5));
    CHECK(fidelity(postselect_j(ket("rl"), {0, 1}, JOutcome::J1).post, phi_plus_state()) ==
          doctest::Approx(1.0));

    CHECK_THROWS_AS(postselect_j(psi_minus_state(), {0, 1}, JOutcome::J1), ImpossibleBranchError);
}

TEST_CASE("measuring a pair leaves the average reduced state elsewhere unchanged") {
    Rng rng(10);
    for (int t = 0; t < 10; ++t) {
        const StateVector psi = random_state_vector(3, rng);
        const DensityMatrix rho = to_density(psi);
        const std::array<int, 1> keep{2};
        const DensityMatrix before = partial_trace(rho, keep);

        const auto [p0, p1] = j_outcome_probabilities(rho, {0, 1});
        std::vector<cplx> avg(4, cplx{0, 0});
        if (p0 > kZeroProbabilityTol) {
            const DensityMatrix r0 = partial_trace(postselect_j(rho, {0, 1}, JOutcome::J0).post, keep);
            for (int i = 0; i < 4; ++i) avg[i] += p0 * r0.entries()[i];
        }
        if (p1 > kZeroProbabilityTol) {
            const DensityMatrix r1 = partial_trace(postselect_j(rho, {0, 1}, JOutcome::J1).post, keep);
            for (int i = 0; i < 4; ++i) avg[i] += p1 * r1.entries()[i];
        }
        for (int i = 0; i < 4; ++i) CHECK(std::abs(avg[i] - before.entries()[i]) < 1e-12);
    }
}

TEST_CASE("rotational invariance of outcome probabilities") {
    Rng rng(12);
    for (int t = 0; t < 100; ++t) {
        const int n = 2 + static_cast<int>(rng.next_below(3));
        const StateVector psi = random_state_vector(n, rng);
        const Mat2 u = haar_unitary_2x2(rng);
        StateVector rotated = psi;
        for (int q = 0; q < n; ++q) rotated = apply_single_qubit_unitary(rotated, u, q);
        const double before = j_outcome_probabilities(psi, {0, n - 1}).first;
        const double after = j_outcome_probabilities(rotated, {0, n - 1}).first;
        CHECK(std::abs(before - after) < 1e-10);
    }
}

TEST_CASE("pair order does not matter") {
    Rng rng(14);
    const StateVector psi = random_state_vector(3, rng);
    const auto ab = j_outcome_probabilities(psi, {0, 2});
    const auto ba = j_outcome_probabilities(psi, {2, 0});
    CHECK(ab.first == doctest::Approx(ba.first).epsilon(1e-14));
    CHECK(fidelity(postselect_j(psi, {0, 2}, JOutcome::J1).post,
                   postselect_j(psi, {2, 0}, JOutcome::J1).post) == doctest::Approx(1.0));
}
