#include <doctest.h>

#include <cmath>

#include "singlet/linalg.hpp"
#include "singlet/state.hpp"

#ifdef SINGLET_HAVE_EIGEN
#include <Eigen/Dense>
#endif

using namespace singlet;

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
}

TEST_CASE("ket strings follow the little-endian convention") {
    // leftmost character is qubit 0 = least significant index bit
    const StateVector s = ket("01");
    CHECK(s.amp(2).real() == doctest::Approx(1.0)); // q0=0, q1=1 -> index 0b10
    CHECK(std::abs(s.amp(0)) == 0.0);
    CHECK(std::abs(s.amp(1)) == 0.0);

    const StateVector plus = ket("+");
    CHECK(plus.amp(0).real() == doctest::Approx(kInvSqrt2));
    CHECK(plus.amp(1).real() == doctest::Approx(kInvSqrt2));

    const StateVector r = ket("r");
    CHECK(r.amp(1).imag() == doctest::Approx(kInvSqrt2));

    CHECK_THROWS_AS(ket("2"), std::invalid_argument);
    CHECK_THROWS_AS(ket(""), std::invalid_argument);
}

TEST_CASE("density_from_bloch at the poles and center") {
    const DensityMatrix zplus = density_from_bloch({0, 0, 1});
    CHECK(zplus.at(0, 0).real() == doctest::Approx(1.0));
    CHECK(std::abs(zplus.at(1, 1)) == doctest::Approx(0.0));

    const DensityMatrix mixed = density_from_bloch({0, 0, 0});
    CHECK(mixed.at(0, 0).real() == doctest::Approx(0.5));
    CHECK(mixed.at(1, 1).real() == doctest::Approx(0.5));
    CHECK(std::abs(mixed.at(0, 1)) == doctest::Approx(0.0));

    CHECK_THROWS_AS(density_from_bloch({1.1, 0, 0}), InvalidBlochError);
}

TEST_CASE("density_from_bloch eigenvalues are (1 +- |r|)/2") {
    const BlochVector r{0.3, -0.4, 0.5};
    const DensityMatrix rho = density_from_bloch(r);
    rho.validate();

    // |r| = sqrt(0.5); frozen from the eigendecomposition oracle below
    const double lo = 0.14644660940672624;
    const double hi = 0.85355339059327373;
    const auto values = linalg::hermitian_eigenvalues(rho.entries(), 2);
    CHECK(values[0] == doctest::Approx(lo).epsilon(1e-12));
    CHECK(values[1] == doctest::Approx(hi).epsilon(1e-12));

#ifdef SINGLET_HAVE_EIGEN
    Eigen::Matrix2cd m;
    m << rho.at(0, 0), rho.at(0, 1), rho.at(1, 0), rho.at(1, 1);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(m);
    CHECK(es.eigenvalues()(0) == doctest::Approx(lo).epsilon(1e-12));
    CHECK(es.eigenvalues()(1) == doctest::Approx(hi).epsilon(1e-12));
#endif
}

TEST_CASE("bloch_from_density inverts density_from_bloch") {
    const BlochVector in{0.1, 0.2, 0.3};
    const BlochVector out = bloch_from_density(density_from_bloch(in));
    CHECK(out.x == doctest::Approx(in.x).epsilon(1e-14));
    CHECK(out.y == doctest::Approx(in.y).epsilon(1e-14));
    CHECK(out.z == doctest::Approx(in.z).epsilon(1e-14));

    const BlochVector center = bloch_from_density(maximally_mixed(1));
    CHECK(center.length() == doctest::Approx(0.0));

    const BlochVector plus = bloch_from_density(to_density(ket("+")));
    CHECK(plus.x == doctest::Approx(1.0));
    CHECK(plus.y == doctest::Approx(0.0));
    CHECK(plus.z == doctest::Approx(0.0));

    CHECK_THROWS_AS(bloch_from_density(maximally_mixed(2)), InvalidStateError);
}

TEST_CASE("bloch round trip on 1e4 random vectors") {
    Rng rng(99);
    double worst = 0.0;
    for (int t = 0; t < 10000; ++t) {
        const BlochVector in = random_bloch_vector(rng);
        const BlochVector out = bloch_from_density(density_from_bloch(in));
        worst = std::max({worst, std::abs(out.x - in.x), std::abs(out.y - in.y),
                          std::abs(out.z - in.z)});
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("tensor products") {
    CHECK(fidelity(tensor(ket("0"), ket("1")), ket("01")) == doctest::Approx(1.0));

    const DensityMatrix m4 = tensor(maximally_mixed(1), maximally_mixed(1));
    for (int i = 0; i < 4; ++i) CHECK(m4.at(i, i).real() == doctest::Approx(0.25));

    // psi- x phi+ has exactly four nonzero amplitudes, +-1/2
    const StateVector s = tensor(psi_minus_state(), phi_plus_state());
    CHECK(s.amp(2).real() == doctest::Approx(0.5));   // "0100"
    CHECK(s.amp(14).real() == doctest::Approx(0.5));  // "0111"
    CHECK(s.amp(1).real() == doctest::Approx(-0.5));  // "1000"
    CHECK(s.amp(13).real() == doctest::Approx(-0.5)); // "1011"
    int nonzero = 0;
    for (std::size_t i = 0; i < s.dim(); ++i)
        if (std::abs(s.amp(i)) > 1e-15) ++nonzero;
    CHECK(nonzero == 4);

    CHECK_THROWS_AS(tensor(std::span<const QuantumState>{}), std::invalid_argument);

    // a mixed part forces a mixed result
    const QuantumState parts[2] = {QuantumState(ket("0")), QuantumState(maximally_mixed(1))};
    CHECK_FALSE(tensor(std::span<const QuantumState>(parts, 2)).is_pure());
}

TEST_CASE("partial trace") {
    const std::array<int, 1> keep0{0};
    const DensityMatrix half = partial_trace(psi_minus_state(), keep0);
    CHECK(half.at(0, 0).real() == doctest::Approx(0.5));
    CHECK(half.at(1, 1).real() == doctest::Approx(0.5));
    CHECK(std::abs(half.at(0, 1)) == doctest::Approx(0.0));

    // tracing out nothing returns the same state as a matrix
    const std::array<int, 2> keep_all{0, 1};
    const DensityMatrix full = partial_trace(psi_minus_state(), keep_all);
    const DensityMatrix promoted = to_density(psi_minus_state());
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            CHECK(std::abs(full.at(r, c) - promoted.at(r, c)) < 1e-14);

    const std::array<int, 1> bad{5};
    CHECK_THROWS_AS(partial_trace(psi_minus_state(), bad), std::invalid_argument);
    CHECK_THROWS_AS(partial_trace(psi_minus_state(), std::span<const int>{}),
                    std::invalid_argument);
}

TEST_CASE("partial_trace of tensor recovers the first factor") {
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        const StateVector a = random_state_vector(2, rng);
        const StateVector b = random_state_vector(2, rng);
        const StateVector joint = tensor(a, b);
        const std::array<int, 2> keep{0, 1};
        const DensityMatrix red = partial_trace(joint, keep);
        CHECK(fidelity(a, red) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("fidelity basics") {
    CHECK(fidelity(ket("0"), ket("0")) == doctest::Approx(1.0));
    CHECK(fidelity(ket("0"), ket("1")) == doctest::Approx(0.0));

    // global phase invariance
    StateVector phased(1, std::vector<cplx>{std::polar(1.0, 1.234), cplx{0, 0}});
    CHECK(fidelity(ket("0"), phased) == doctest::Approx(1.0));
    CHECK(approx_equal_up_to_phase(ket("0"), phased));

    CHECK_THROWS_AS(fidelity(ket("0"), ket("00")), std::invalid_argument);
}

TEST_CASE("fidelity is symmetric and unitarily invariant") {
    Rng rng(17);
    for (int t = 0; t < 10; ++t) {
        const StateVector a = random_state_vector(3, rng);
        const StateVector b = random_state_vector(3, rng);
        CHECK(fidelity(a, b) == doctest::Approx(fidelity(b, a)).epsilon(1e-12));
        const Mat2 u = haar_unitary_2x2(rng);
        const int q = static_cast<int>(rng.next_below(3));
        CHECK(fidelity(apply_single_qubit_unitary(a, u, q), apply_single_qubit_unitary(b, u, q)) ==
              doctest::Approx(fidelity(a, b)).epsilon(1e-10));
        CHECK(fidelity(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("mixed-state fidelity reduces to the pure overlap") {
    Rng rng(23);
    const StateVector a = random_state_vector(2, rng);
    const StateVector b = random_state_vector(2, rng);
    const double pure = fidelity(a, b);
    CHECK(fidelity(to_density(a), b) == doctest::Approx(pure).epsilon(1e-10));
    CHECK(fidelity(to_density(a), to_density(b)) == doctest::Approx(pure).epsilon(1e-8));
    CHECK(fidelity(to_density(a), to_density(a)) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("single-qubit unitaries preserve norm and trace") {
    Rng rng(5);
    const StateVector psi = random_state_vector(3, rng);
    const Mat2 u = haar_unitary_2x2(rng);
    CHECK(apply_single_qubit_unitary(psi, u, 1).is_normalized());

    const DensityMatrix rho = partial_trace(random_state_vector(4, rng), std::array<int, 2>{0, 2});
    const DensityMatrix rotated = apply_single_qubit_unitary(rho, u, 0);
    CHECK(rotated.trace_real() == doctest::Approx(1.0).epsilon(1e-12));
    rotated.validate();

    CHECK(fidelity(apply_single_qubit_unitary(ket("0"), kPauliX, 0), ket("1")) ==
          doctest::Approx(1.0));

    const Mat2 not_unitary{cplx{1, 0}, cplx{0, 0}, cplx{0, 0}, cplx{2, 0}};
    CHECK_THROWS_AS(apply_single_qubit_unitary(psi, not_unitary, 0), std::invalid_argument);
}

TEST_CASE("collective rotation leaves the singlet invariant") {
    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
        const Mat2 u = haar_unitary_2x2(rng);
        StateVector s = psi_minus_state();
        s = apply_single_qubit_unitary(s, u, 0);
        s = apply_single_qubit_unitary(s, u, 1);
        CHECK(approx_equal_up_to_phase(s, psi_minus_state()));
    }
}

TEST_CASE("measure_single_qubit") {
    Rng rng(11);
    const Basis1Q comp = Basis1Q::computational();

    // |0> measured in the computational basis: outcome 0 with probability 1
    const SingleQubitMeasurement m0 = measure_single_qubit(ket("0"), 0, comp, rng);
    CHECK(m0.outcome == 0);
    CHECK(m0.probability == doctest::Approx(1.0));

    // |+> gives each outcome with probability 1/2 (exact branch analysis)
    CHECK(postselect_single_qubit(ket("+"), 0, comp, 0).probability == doctest::Approx(0.5));
    CHECK(postselect_single_qubit(ket("+"), 0, comp, 1).probability == doctest::Approx(0.5));

    // sampled statistics
    int ones = 0;
    for (int t = 0; t < 4000; ++t)
        ones += measure_single_qubit(ket("+"), 0, comp, rng).outcome;
    CHECK(std::abs(ones / 4000.0 - 0.5) < 4.0 * std::sqrt(0.25 / 4000.0));

    const Basis1Q bad{{cplx{1, 0}, cplx{0, 0}}, {cplx{1, 0}, cplx{0, 0}}};
    CHECK_THROWS_AS(measure_single_qubit(ket("0"), 0, bad, rng), std::invalid_argument);

    // density-matrix path agrees with the pure path
    const SingleQubitMeasurementDm md =
        measure_single_qubit(to_density(ket("+")), 0, Basis1Q::plus_minus(), rng);
    CHECK(md.outcome == 0);
    CHECK(md.probability == doctest::Approx(1.0));
}

TEST_CASE("measure_and_remove drops the collapsed qubit") {
    Rng rng(13);
    const StateVector joint = tensor(ket("+"), psi_minus_state());
    const RemovedQubitMeasurement m = measure_and_remove(joint, 0, Basis1Q::plus_minus(), rng);
    CHECK(m.outcome == 0);
    CHECK(m.post.n_qubits() == 2);
    CHECK(fidelity(m.post, psi_minus_state()) == doctest::Approx(1.0));

    CHECK_THROWS_AS(postselect_and_remove(joint, 0, Basis1Q::plus_minus(), 1),
                    ImpossibleBranchError);
}

TEST_CASE("contract_pair and factor_product") {
    // contracting the singlet off psi- x |0> leaves |0>
    const StateVector joint = tensor(psi_minus_state(), ket("0"));
    const std::array<cplx, 4> singlet{cplx{0, 0}, cplx{-kInvSqrt2, 0}, cplx{kInvSqrt2, 0},
                                      cplx{0, 0}};
    StateVector rest = contract_pair(joint, 0, 1, singlet);
    CHECK(rest.norm() == doctest::Approx(1.0));
    CHECK(fidelity(rest, ket("0")) == doctest::Approx(1.0));

    auto split = factor_product(tensor(ket("+"), psi_minus_state()), 1);
    REQUIRE(split.has_value());
    CHECK(fidelity(split->first, ket("+")) == doctest::Approx(1.0));
    CHECK(fidelity(split->second, psi_minus_state()) == doctest::Approx(1.0));

    CHECK_FALSE(factor_product(psi_minus_state(), 1).has_value());
}

TEST_CASE("state validation rejects malformed input") {
    CHECK_THROWS_AS(StateVector(2, std::vector<cplx>(3)), InvalidStateError);
    std::vector<cplx> nan_amp{cplx{std::nan(""), 0}, cplx{0, 0}};
    CHECK_THROWS_AS(StateVector(1, std::move(nan_amp)), InvalidStateError);

    // non-PSD matrix fails validation
    std::vector<cplx> m{cplx{1.5, 0}, cplx{0, 0}, cplx{0, 0}, cplx{-0.5, 0}};
    CHECK_THROWS_AS(DensityMatrix(1, std::move(m)).validate(), InvalidStateError);

    ghz_state(3, -1); // smoke: valid
    CHECK_THROWS_AS(ghz_state(3, 2), std::invalid_argument);
}

#ifdef SINGLET_HAVE_EIGEN
TEST_CASE("jacobi eigensystem matches Eigen on random Hermitian matrices") {
    Rng rng(31);
    for (int dim : {2, 4, 8}) {
        std::vector<cplx> a(dim * dim);
        for (int r = 0; r < dim; ++r) {
            a[r * dim + r] = rng.next_gaussian();
            for (int c = r + 1; c < dim; ++c) {
                a[r * dim + c] = cplx{rng.next_gaussian(), rng.next_gaussian()};
                a[c * dim + r] = std::conj(a[r * dim + c]);
            }
        }
        const auto mine = linalg::hermitian_eigenvalues(a, dim);
        Eigen::MatrixXcd m(dim, dim);
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c) m(r, c) = a[r * dim + c];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
        for (int k = 0; k < dim; ++k)
            CHECK(mine[k] == doctest::Approx(es.eigenvalues()(k)).epsilon(1e-10));
    }
}
#endif

TEST_CASE("rng streams are independent and reproducible") {
    Rng a = Rng::stream(42, 0);
    Rng b = Rng::stream(42, 0);
    Rng c = Rng::stream(42, 1);
    CHECK(a.next_u64() == b.next_u64());
    CHECK(a.next_u64() == b.next_u64());
    CHECK(Rng::stream(42, 0).next_u64() != c.next_u64());

    Rng g(1);
    for (int i = 0; i < 1000; ++i) {
        const double d = g.next_double();
        CHECK(d >= 0.0);
        CHECK(d < 1.0);
    }
}
