#pragma once

// Cluster states with redundant encoding, probabilistic fusion, Pauli-frame
// tracking, and the abstract (counter-level) growth walker.
//
// A logical cluster qubit is backed by one or more physical qubits; logical
// |0>/|1> are carried by two marker strings that are orthogonal at every
// position (the canonical choice is |0^a> / |1^a>). Clusters that differ only
// by Pauli operations are treated as equivalent; the difference is recorded
// classically in a per-logical-qubit frame and never applied to amplitudes
// except inside equivalence checks.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "singlet/protocols.hpp"
#include "singlet/state.hpp"

namespace singlet {

struct RedundantLogicalQubit {
    std::vector<int> physical;        // indices into the backing register;
                                      // fusion and trimming measure the last
    std::vector<uint8_t> marker0;     // one bit per physical qubit
    std::vector<uint8_t> marker1;     // complement of marker0 at every position
    bool frame_x = false;             // logical X correction pending
    bool frame_z = false;             // logical Z correction pending

    int redundancy() const { return static_cast<int>(physical.size()); }
};

class ClusterState {
public:
    ClusterState() = default;

    /// Frame-free cluster with canonical markers |0^a>/|1^a>.
    static ClusterState ideal(int n_logical, const std::vector<std::pair<int, int>>& edges,
                              const std::vector<int>& redundancy);

    /// Frame-free cluster with explicit marker strings (marker0 per logical
    /// qubit; marker1 is the bitwise complement).
    static ClusterState ideal_with_markers(int n_logical,
                                           const std::vector<std::pair<int, int>>& edges,
                                           const std::vector<std::vector<uint8_t>>& marker0);

    int n_logical() const { return static_cast<int>(logicals_.size()); }
    int n_physical() const { return backing_.n_qubits(); }
    int redundancy(int logical) const { return logicals_.at(logical).redundancy(); }

    const RedundantLogicalQubit& logical(int i) const { return logicals_.at(i); }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const StateVector& backing() const { return backing_; }

    /// False once a logical qubit has been measured out: the state then leaves
    /// the family that the Pauli frame can describe.
    bool frame_valid() const { return frame_valid_; }

    /// The encoded graph state for the current bookkeeping, frame not applied.
    StateVector ideal_encoded_state() const;

    /// Backing with the recorded frame undone; equals ideal_encoded_state up
    /// to global phase whenever frame_valid().
    StateVector frame_corrected_backing() const;

    /// Checks backing == frame * ideal within tol (fidelity test).
    bool check_frame(double tol = 1e-9) const;

    friend struct ClusterOps;

private:
    StateVector backing_;
    std::vector<RedundantLogicalQubit> logicals_;
    std::vector<std::pair<int, int>> edges_;
    bool frame_valid_ = true;
};

// --- Pauli equivalence ------------------------------------------------------------

struct PauliString {
    std::string ops; // one of I X Y Z per qubit, ops[q] acts on qubit q

    StateVector apply(const StateVector& psi) const;
};

/// Searches for a Pauli string with fidelity(P s1, s2) >= 1 - 1e-9 (global
/// phase ignored). Requires equal qubit counts <= 12. The search anchors on
/// the amplitude support of the states and prunes qubit-by-qubit, so sparse
/// (encoded-cluster-like) inputs resolve in near-linear time.
std::optional<PauliString> pauli_equivalent(const StateVector& s1, const StateVector& s2);

// --- construction and fusion --------------------------------------------------------

struct TwoQubitClusterResult {
    ClusterState cluster; // 2 logical qubits, redundancy 1 each
    long long attempts = 0;
    // outcomes of the two single-qubit measurements of the accepted attempt
    int z_outcome = 0;
    int x_outcome = 0;
};

/// The four-qubit recipe: singlet x phi+, J on the cross pairs, accept the
/// double-J1 branch (probability 1/2), then measure one qubit in the
/// computational and one in the |+-> basis. Every outcome branch yields the
/// two-qubit cluster up to a recorded Pauli frame.
TwoQubitClusterResult make_two_qubit_cluster(Rng& rng, long long max_attempts = 1000);

enum class FusionTag { FusedJ0, FusedJ1, Failure };

struct FusionOutcome {
    FusionTag tag = FusionTag::Failure;

    // FusedJ0 / FusedJ1: the single merged cluster and the merged qubit index.
    std::optional<ClusterState> merged;
    int merged_logical = -1;

    // Failure: both clusters survive with one marker qubit fewer on the fused
    // side. A side whose fused qubit had redundancy 1 comes back with that
    // logical qubit measured out (exhausted) and its frame tracking stopped.
    std::optional<ClusterState> left;
    std::optional<ClusterState> right;
    bool left_exhausted = false;
    bool right_exhausted = false;

    int consumed_physical = 0; // physical qubits measured away (always 2)
    // J1 branch: marker count of the merge between the J-measurement and the
    // mandatory |+-> projections (a+b); the returned merged cluster holds
    // a+b-2 after those projections.
    int pre_trim_redundancy = 0;
    std::array<int, 2> plus_minus_outcomes{-1, -1}; // J1 branches only
    std::vector<MeasurementRecord> records;
};

/// One fusion attempt between logical qubit qa of a and qb of b: J-measure one
/// marker qubit from each encoding; J0 (prob 1/4) merges directly, J1 followed
/// by anticorrelated |+-> outcomes (joint prob 1/4) merges, correlated
/// outcomes (prob 1/2) fail and cost one marker qubit per side.
/// Merged cluster layout: a's logical qubits keep their indices with the
/// merged qubit at qa; b's follow in order, skipping qb.
FusionOutcome fuse(const ClusterState& a, int qa, const ClusterState& b, int qb, Rng& rng);

struct FusionBranchProbabilities {
    double p_j0 = 0.0;              // 1/4
    double p_j1_anticorrelated = 0.0; // 1/4 (merge-completing |+-> outcomes)
    double p_failure = 0.0;         // 1/2
    // exact joint probability and post-state of each J1 |+-> combination,
    // indexed sa + 2*sb, on the register minus the measured pair
    std::array<double, 4> pm_probability{};
    std::array<StateVector, 4> pm_post;
};

/// Exact postselection analysis of one fusion (no sampling).
FusionBranchProbabilities fusion_branch_probabilities(const ClusterState& a, int qa,
                                                      const ClusterState& b, int qb);

/// A GHZ resource viewed as a single-vertex cluster with redundancy n.
ClusterState ghz_as_cluster(const GhzResource& ghz);

/// One fusion attempt of a GHZ resource onto logical qubit q (raising its
/// redundancy per fuse semantics).
FusionOutcome add_redundancy(const ClusterState& cluster, int q, const GhzResource& ghz, Rng& rng);

struct AddRedundancyResult {
    ClusterState cluster;
    int logical = -1;
    long long attempts = 0;
    long long ghz_consumed = 0;
};

/// Offline retry loop: failures discard the damaged attempt and restart from
/// the original cluster with a fresh GHZ from the factory.
template <typename GhzFactory>
AddRedundancyResult add_redundancy_retrying(const ClusterState& cluster, int q,
                                            GhzFactory&& fresh_ghz, Rng& rng,
                                            long long max_attempts = 1000) {
    AddRedundancyResult out;
    for (long long attempt = 1; attempt <= max_attempts; ++attempt) {
        GhzResource ghz = fresh_ghz(rng);
        FusionOutcome fo = add_redundancy(cluster, q, ghz, rng);
        ++out.attempts;
        ++out.ghz_consumed;
        if (fo.tag != FusionTag::Failure) {
            out.cluster = std::move(*fo.merged);
            out.logical = fo.merged_logical;
            return out;
        }
    }
    throw std::runtime_error("add_redundancy_retrying: attempt cap exceeded");
}

struct TrimResult {
    ClusterState cluster;
    int outcome = 0; // |+-> outcome of the removed qubit
};

/// Measures the last physical qubit of q's encoding in |+->; both outcomes
/// reduce the redundancy by one, up to a Z recorded in the frame. Throws
/// CannotTrimError at redundancy 1.
TrimResult remove_redundancy(const ClusterState& cluster, int q, Rng& rng);

// --- abstract growth walker -----------------------------------------------------------

struct GrowthPolicy {
    int refresh_threshold = 2; // refresh the chain end from GHZ when below
    int ghz_size = 4;          // GHZ resource used by refreshes
    long long max_steps = 100000;
    bool die_on_exhaustion = true; // a measured-out chain qubit ends the trial
    // branch probabilities; overridable for degenerate-walk tests
    double p_fuse_j0 = 0.25;
    double p_fuse_j1_anti = 0.25;
};

struct GrowthStats {
    long long trials = 0;
    double mean_final_size = 0.0;
    double success_fraction = 0.0;
    std::map<std::string, long long> resource_counts;
};

/// Counter-level growth simulation driven only by the verified branch
/// probabilities: fusion success 1/2 (merged redundancy a+b-2 on the J0
/// branch, a+b on the J1 branch), failure 1/2 losing one marker per side.
/// No amplitudes are stored.
GrowthStats grow_abstract(int target_logical_size, int init_redundancy, const GrowthPolicy& policy,
                          Rng& rng, long long trials = 1);

struct BranchComparison {
    std::string branch;
    long long walker_count = 0;
    long long exact_count = 0;
    double walker_freq = 0.0;
    double exact_freq = 0.0;
    double sigma = 0.0; // binomial standard error of the difference
    bool pass = false;  // |diff| <= 4 sigma
};

struct ValidationReport {
    long long trials = 0;
    std::vector<BranchComparison> branches;
    bool pass = false;
};

/// Runs the abstract walker and the exact state-level growth side by side and
/// compares per-branch frequencies within 4 binomial standard errors.
ValidationReport validate_abstract_vs_exact(int init_redundancy, int target_logical_size,
                                            long long trials, Rng& rng);

} // namespace singlet
