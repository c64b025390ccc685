#pragma once

// The singlet/triplet ("J") projective measurement on a qubit pair:
// J0 projects onto the singlet (total spin 0), J1 = I - J0 onto the triplet
// subspace. Restricted to the pair, J1 equals (I + SWAP)/2. The measurement
// is rotationally invariant: probabilities are unchanged under any U applied
// collectively to every qubit.
//
// Projectors are applied as pair-local 4x4 kernels contracted into the full
// register; the dense 2^n x 2^n matrices exist only as a slow reference path
// for oracle tests.

#include <array>
#include <utility>
#include <vector>

#include "singlet/rng.hpp"
#include "singlet/state.hpp"

namespace singlet {

enum class JOutcome { J0, J1 };

struct QubitPair {
    int a = 0;
    int b = 1;
};

struct MeasurementRecord {
    QubitPair pair;
    JOutcome outcome = JOutcome::J0;
    double probability = 0.0;
    int step_index = 0;
};

struct JProjectorPair {
    QubitPair pair;
    int n_qubits = 0;
    // pair-local kernels, indexed by bit(pair.a) + 2*bit(pair.b)
    std::array<cplx, 16> j0_kernel;
    std::array<cplx, 16> j1_kernel;

    // reference materialization on the full space (oracle tests only)
    std::vector<cplx> dense_j0() const;
    std::vector<cplx> dense_j1() const;
};

/// Throws InvalidPairError for equal or out-of-range indices.
JProjectorPair j_projectors(QubitPair pair, int n_qubits);

/// (p0, p1) with p0 + p1 = 1: Born probabilities of the two outcomes.
std::pair<double, double> j_outcome_probabilities(const StateVector& psi, QubitPair pair);
std::pair<double, double> j_outcome_probabilities(const DensityMatrix& rho, QubitPair pair);

struct JMeasurement {
    JOutcome outcome = JOutcome::J0;
    StateVector post;
    MeasurementRecord record;
};

struct JMeasurementDm {
    JOutcome outcome = JOutcome::J0;
    DensityMatrix post;
    MeasurementRecord record;
};

/// Samples the outcome with Born probabilities (one uniform draw against p0)
/// and returns the projected, renormalized post-state. Deterministic given
/// the rng state.
JMeasurement measure_j(const StateVector& psi, QubitPair pair, Rng& rng, int step_index = 0);
JMeasurementDm measure_j(const DensityMatrix& rho, QubitPair pair, Rng& rng, int step_index = 0);

struct JPostselect {
    StateVector post;
    double probability = 0.0;
};

struct JPostselectDm {
    DensityMatrix post;
    double probability = 0.0;
};

/// Exact branch analysis without sampling. Throws ImpossibleBranchError when
/// the requested branch has probability below the zero-probability threshold.
JPostselect postselect_j(const StateVector& psi, QubitPair pair, JOutcome want);
JPostselectDm postselect_j(const DensityMatrix& rho, QubitPair pair, JOutcome want);

namespace test_hooks {
/// Shifts the sampling threshold used by measure_j and the Monte-Carlo
/// Bernoulli draws. Exists so the verification suite can prove it notices a
/// tampered probability; must be 0 in normal operation.
inline double j_sampling_bias = 0.0;
} // namespace test_hooks

} // namespace singlet
