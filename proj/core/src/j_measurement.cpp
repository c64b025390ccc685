#include "singlet/j_measurement.hpp"

#include <cmath>

namespace singlet {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

void require_pair(QubitPair pair, int n_qubits) {
    if (pair.a == pair.b) throw InvalidPairError("qubit pair with equal indices");
    if (pair.a < 0 || pair.a >= n_qubits || pair.b < 0 || pair.b >= n_qubits)
        throw InvalidPairError("qubit pair index out of range");
}

// singlet ket in the pair-local basis, index = bit(a) + 2*bit(b)
std::array<cplx, 4> singlet_ket() {
    return {cplx{0, 0}, cplx{-kInvSqrt2, 0}, cplx{kInvSqrt2, 0}, cplx{0, 0}};
}

// Streams over all 4-amplitude groups of the pair; f(i00, i10, i01, i11).
template <typename F>
void for_each_pair_group(std::size_t dim, QubitPair pair, F&& f) {
    const std::size_t bit_a = std::size_t{1} << pair.a;
    const std::size_t bit_b = std::size_t{1} << pair.b;
    const std::size_t both = bit_a | bit_b;
    for (std::size_t i = 0; i < dim; ++i) {
        if (i & both) continue;
        f(i, i | bit_a, i | bit_b, i | both);
    }
}

// In-place J projection of the requested outcome (not renormalized).
void project_j(std::vector<cplx>& amps, QubitPair pair, JOutcome which) {
    for_each_pair_group(amps.size(), pair, [&](std::size_t i00, std::size_t i10, std::size_t i01,
                                               std::size_t i11) {
        const cplx s = kInvSqrt2 * (amps[i01] - amps[i10]); // <psi-| component
        if (which == JOutcome::J0) {
            amps[i00] = 0;
            amps[i11] = 0;
            amps[i01] = kInvSqrt2 * s;
            amps[i10] = -kInvSqrt2 * s;
        } else {
            amps[i01] -= kInvSqrt2 * s;
            amps[i10] += kInvSqrt2 * s;
        }
    });
}

// rho -> K rho K^dag for a pair-local 4x4 kernel.
std::vector<cplx> apply_pair_kernel(const DensityMatrix& rho, const std::array<cplx, 16>& k,
                                    QubitPair pair) {
    const std::size_t d = rho.dim();
    std::vector<cplx> m(rho.entries().begin(), rho.entries().end());
    const std::size_t bit_a = std::size_t{1} << pair.a;
    const std::size_t bit_b = std::size_t{1} << pair.b;
    const std::array<std::size_t, 4> off{0, bit_a, bit_b, bit_a | bit_b};
    // rows
    for (std::size_t r = 0; r < d; ++r) {
        if (r & (bit_a | bit_b)) continue;
        for (std::size_t c = 0; c < d; ++c) {
            cplx v[4];
            for (int i = 0; i < 4; ++i) v[i] = m[(r | off[i]) * d + c];
            for (int i = 0; i < 4; ++i) {
                cplx s{0, 0};
                for (int j = 0; j < 4; ++j) s += k[i * 4 + j] * v[j];
                m[(r | off[i]) * d + c] = s;
            }
        }
    }
    // columns
    for (std::size_t c = 0; c < d; ++c) {
        if (c & (bit_a | bit_b)) continue;
        for (std::size_t r = 0; r < d; ++r) {
            cplx v[4];
            for (int j = 0; j < 4; ++j) v[j] = m[r * d + (c | off[j])];
            for (int j = 0; j < 4; ++j) {
                cplx s{0, 0};
                for (int i = 0; i < 4; ++i) s += v[i] * std::conj(k[j * 4 + i]);
                m[r * d + (c | off[j])] = s;
            }
        }
    }
    return m;
}

double trace_real(const std::vector<cplx>& m, std::size_t d) {
    double t = 0.0;
    for (std::size_t i = 0; i < d; ++i) t += m[i * d + i].real();
    return t;
}

} // namespace

JProjectorPair j_projectors(QubitPair pair, int n_qubits) {
    require_pair(pair, n_qubits);
    JProjectorPair out;
    out.pair = pair;
    out.n_qubits = n_qubits;
    const auto s = singlet_ket();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            out.j0_kernel[i * 4 + j] = s[i] * std::conj(s[j]);
            out.j1_kernel[i * 4 + j] = (i == j ? cplx{1, 0} : cplx{0, 0}) - out.j0_kernel[i * 4 + j];
        }
    return out;
}

namespace {
std::vector<cplx> densify(const JProjectorPair& p, const std::array<cplx, 16>& kernel) {
    const std::size_t d = std::size_t{1} << p.n_qubits;
    const std::size_t bit_a = std::size_t{1} << p.pair.a;
    const std::size_t bit_b = std::size_t{1} << p.pair.b;
    auto local = [&](std::size_t idx) {
        return static_cast<int>(((idx & bit_a) ? 1 : 0) + ((idx & bit_b) ? 2 : 0));
    };
    std::vector<cplx> m(d * d, cplx{0, 0});
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) {
            if ((r & ~(bit_a | bit_b)) != (c & ~(bit_a | bit_b))) continue;
            m[r * d + c] = kernel[local(r) * 4 + local(c)];
        }
    return m;
}
} // namespace

std::vector<cplx> JProjectorPair::dense_j0() const { return densify(*this, j0_kernel); }
std::vector<cplx> JProjectorPair::dense_j1() const { return densify(*this, j1_kernel); }

std::pair<double, double> j_outcome_probabilities(const StateVector& psi, QubitPair pair) {
    require_pair(pair, psi.n_qubits());
    double p0 = 0.0;
    const auto amps = psi.amplitudes();
    for_each_pair_group(psi.dim(), pair, [&](std::size_t, std::size_t i10, std::size_t i01,
                                             std::size_t) {
        const cplx s = kInvSqrt2 * (amps[i01] - amps[i10]);
        p0 += std::norm(s);
    });
    return {p0, 1.0 - p0};
}

std::pair<double, double> j_outcome_probabilities(const DensityMatrix& rho, QubitPair pair) {
    require_pair(pair, rho.n_qubits());
    // p0 = <psi-| rho_pair |psi-> over every group: tr(J0 rho) touches only
    // the pair-diagonal blocks.
    const std::size_t d = rho.dim();
    const std::size_t bit_a = std::size_t{1} << pair.a;
    const std::size_t bit_b = std::size_t{1} << pair.b;
    double p0 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        if (i & (bit_a | bit_b)) continue;
        const std::size_t i01 = i | bit_b; // bit(a)=0, bit(b)=1
        const std::size_t i10 = i | bit_a;
        p0 += 0.5 * (rho.at(i01, i01).real() + rho.at(i10, i10).real()) -
              rho.at(i01, i10).real();
    }
    return {p0, 1.0 - p0};
}

JMeasurement measure_j(const StateVector& psi, QubitPair pair, Rng& rng, int step_index) {
    const auto [p0, p1] = j_outcome_probabilities(psi, pair);
    const double draw = rng.next_double() + test_hooks::j_sampling_bias;
    const JOutcome outcome = draw < p0 ? JOutcome::J0 : JOutcome::J1;
    std::vector<cplx> amps(psi.amplitudes().begin(), psi.amplitudes().end());
    project_j(amps, pair, outcome);
    StateVector post(psi.n_qubits(), std::move(amps));
    post.normalize();
    const double p = outcome == JOutcome::J0 ? p0 : p1;
    return {outcome, std::move(post), MeasurementRecord{pair, outcome, p, step_index}};
}

JMeasurementDm measure_j(const DensityMatrix& rho, QubitPair pair, Rng& rng, int step_index) {
    const auto [p0, p1] = j_outcome_probabilities(rho, pair);
    const double draw = rng.next_double() + test_hooks::j_sampling_bias;
    const JOutcome outcome = draw < p0 ? JOutcome::J0 : JOutcome::J1;
    const double p = outcome == JOutcome::J0 ? p0 : p1;
    if (p < kZeroProbabilityTol) throw ImpossibleBranchError("sampled a zero-probability branch");
    const JProjectorPair proj = j_projectors(pair, rho.n_qubits());
    auto m = apply_pair_kernel(rho, outcome == JOutcome::J0 ? proj.j0_kernel : proj.j1_kernel, pair);
    // renormalize by the projected trace itself so round-off does not
    // accumulate across repeated postselection
    const double tr = trace_real(m, rho.dim());
    for (cplx& e : m) e /= tr;
    return {outcome, DensityMatrix(rho.n_qubits(), std::move(m)),
            MeasurementRecord{pair, outcome, p, step_index}};
}

JPostselect postselect_j(const StateVector& psi, QubitPair pair, JOutcome want) {
    const auto [p0, p1] = j_outcome_probabilities(psi, pair);
    const double p = want == JOutcome::J0 ? p0 : p1;
    if (p < kZeroProbabilityTol) throw ImpossibleBranchError("postselect_j: branch probability ~ 0");
    std::vector<cplx> amps(psi.amplitudes().begin(), psi.amplitudes().end());
    project_j(amps, pair, want);
    StateVector post(psi.n_qubits(), std::move(amps));
    post.normalize();
    return {std::move(post), p};
}

JPostselectDm postselect_j(const DensityMatrix& rho, QubitPair pair, JOutcome want) {
    const auto [p0, p1] = j_outcome_probabilities(rho, pair);
    const double p = want == JOutcome::J0 ? p0 : p1;
    if (p < kZeroProbabilityTol) throw ImpossibleBranchError("postselect_j: branch probability ~ 0");
    const JProjectorPair proj = j_projectors(pair, rho.n_qubits());
    auto m = apply_pair_kernel(rho, want == JOutcome::J0 ? proj.j0_kernel : proj.j1_kernel, pair);
    const double tr = trace_real(m, rho.dim());
    for (cplx& e : m) e /= tr;
    return {DensityMatrix(rho.n_qubits(), std::move(m)), p};
}

} // namespace singlet
