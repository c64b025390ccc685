#pragma once

// Protocols built from J-measurements and mixed single-qubit supplies:
// probabilistic spin-flip, iterated purification, preparation of arbitrary
// pure states from three linearly independent supplies, Bell/GHZ creation,
// and programmable single-qubit measurement via a pairing tournament.

#include <array>
#include <optional>
#include <vector>

#include "singlet/j_measurement.hpp"
#include "singlet/rng.hpp"
#include "singlet/state.hpp"

namespace singlet {

/// A supply of identically prepared (generally mixed) single-qubit states.
struct SupplySpec {
    BlochVector bloch;
    long long count_available = 0;
};

// --- spin flip ----------------------------------------------------------------

struct SpinFlipBranch {
    double probability = 0.0; // J1 branch probability; always exactly 3/4
    DensityMatrix flipped;    // Bloch vector -r/3
};

/// Exact J1-branch analysis of the flip: couple the input to half a singlet,
/// J-measure, keep the untouched singlet qubit.
SpinFlipBranch spin_flip_branch(const DensityMatrix& rho);

/// Sampled version; empty on the J0 branch (probability 1/4).
std::optional<DensityMatrix> spin_flip(const DensityMatrix& rho, Rng& rng);

// --- purification ----------------------------------------------------------------

/// P(r) = (3 + r^2)/4, the probability of the J1 outcome on a pair of copies.
double purify_success_probability(double r);
/// r' = 4r / (3 + r^2), the Bloch-length recursion of one J1 step.
double purify_recurrence(double r);
/// Closed-form conservative bound R_n = ((3/4)^n (1-r0)/r0 + 1)^-1, R_n <= r_n.
double purify_closed_form(double r0, int n);

struct PurificationSchedule {
    double r0 = 0.0;
    double epsilon = 0.0;
    int steps = 0; // ceil(log((1-eps)(1-r0)/(eps r0)) / log(4/3)), clamped to >= 0
    std::vector<double> predicted_lengths;  // R_0..R_n (conservative closed form)
    std::vector<double> recurrence_lengths; // r_0..r_n (exact recursion)
    std::vector<double> step_success_probs; // P(r_0)..P(r_{n-1})
    double yield_lower_bound = 0.0;         // eta = (r0 eps)^3 r0
    // The simplified step count 3 log(1/(eps r0)) with natural log. Reported
    // only; the solved bound above is authoritative. heuristic_sufficient
    // records whether R_ceil(heuristic) >= 1 - eps actually holds.
    double heuristic_steps = 0.0;
    bool heuristic_sufficient = false;
};

/// Throws UnpurifiableError for r0 = 0 and std::invalid_argument for
/// out-of-range r0/epsilon.
PurificationSchedule purification_schedule(double r0, double epsilon);

struct PurifyStepOutcome {
    double success_prob = 0.0; // (3 + r^2)/4
    DensityMatrix post;        // one surviving qubit of a J1 pair
};

/// One state-level purification step: two copies, postselect J1, trace out
/// one side. The recursion and probability above are properties of the
/// result, not inputs to it.
PurifyStepOutcome purify_step(const DensityMatrix& rho);

struct PurifyStepStat {
    int step = 0;
    long long pairs = 0;
    long long successes = 0;
    double success_prob = 0.0; // exact P at this step
    double r_exact = 0.0;      // Bloch length after this step (state-level)
    double r_bound = 0.0;      // R_{step+1}
};

struct PurifyResult {
    DensityMatrix state; // exact state shared by every survivor
    long long initial_qubits = 0;
    long long survivors = 0;
    double survivor_fraction = 0.0;
    double achieved_length = 0.0;
    PurificationSchedule schedule;
    std::vector<PurifyStepStat> steps;
};

/// Supply ran out mid-protocol; carries the statistics gathered so far.
class InsufficientSupplyError : public std::runtime_error {
public:
    InsufficientSupplyError(const std::string& msg, PurifyResult partial_stats)
        : std::runtime_error(msg), partial(std::move(partial_stats)) {}
    PurifyResult partial;
};

/// Monte-Carlo pairing with keep-one-per-pair accounting: each round pairs the
/// survivors, keeps one qubit of each J1 pair (so survivors stay independent),
/// and tracks the exact shared state alongside the counts.
PurifyResult purify(const SupplySpec& supply, double epsilon, Rng& rng);

/// Same protocol from an explicit initial state (used by prepare_pure).
PurifyResult purify_from_state(const DensityMatrix& rho0, long long available, double epsilon,
                               Rng& rng);

// --- arbitrary pure-state preparation ----------------------------------------------

struct SixVertices {
    // supplies first, then their spin-flipped images -r/3
    std::array<BlochVector, 6> vertices;
    // radius of the largest origin-centered sphere inside the hull, computed
    // as the minimum origin-to-facet distance over the exact facet enumeration
    double inscribed_radius = 0.0;
};

/// Throws DegenerateSuppliesError when the three supply Bloch vectors fail the
/// determinant test (|det| <= 1e-9).
SixVertices six_vertices(const std::array<SupplySpec, 3>& supplies);

struct PreparedPure {
    DensityMatrix state;
    BlochVector direction;              // target direction (unit)
    double bloch_length = 0.0;          // achieved length along direction
    double fidelity_with_target = 0.0;  // (1 + r)/2 for an aligned output
    std::array<double, 6> mixture_weights{}; // convex weights over the vertices
    bool passthrough = false;           // target matched a supply direction
    SixVertices geometry;
    PurifyResult purification;
    long long supply_consumed = 0;
    long long flip_attempts = 0;
};

/// Mixes vertex states to reach s*u (u = target direction, s = inscribed
/// radius), then purifies along u. Output Bloch length >= 1 - epsilon, hence
/// fidelity (1 + r)/2 >= 1 - epsilon/2 with the target.
PreparedPure prepare_pure(const StateVector& target, const std::array<SupplySpec, 3>& supplies,
                          double epsilon, Rng& rng);

// --- Bell and GHZ creation -----------------------------------------------------------

enum class BellKind { psi_minus, psi_plus, phi_minus, phi_plus };

struct BellRecipe {
    StateVector input; // 2-qubit product input
    JOutcome want;     // postselected outcome; probability 1/2 in every recipe
};

BellRecipe bell_recipe(BellKind kind);
StateVector bell_target(BellKind kind);

struct BellResult {
    StateVector state;
    long long attempts = 0;
};

/// Retries the recipe on fresh inputs until the wanted branch occurs
/// (geometric, expected attempts 2).
BellResult make_bell(BellKind kind, Rng& rng, long long max_attempts = 1000);

struct GhzResource {
    int n_qubits = 0;
    int sign = +1; // state = (|0^n> + sign |1^n>)/sqrt(2)
    StateVector state;
    long long attempts = 0; // J-measurement rounds spent, all branches
};

/// n = 2 reduces to a Bell recipe; n = 4 is the direct two-pair recipe;
/// other sizes are reached by fusing GHZ resources and trimming with |+->
/// measurements.
GhzResource make_ghz(int n_qubits, Rng& rng, long long max_attempts = 10000);

// --- programmable measurement ----------------------------------------------------------

/// Tournament pairing rounds in 0-based labels: round r measures pairs
/// (k, 2^r + k) for k = 0..2^r-1; qubit 0 is the input, 2^n - 1 ancillas
/// follow. Total measurements sum to 2^n - 1.
std::vector<std::vector<QubitPair>> program_schedule(int n);

enum class ProgOutcome { phi, phi_perp };

struct ProgMeasurement {
    ProgOutcome declared = ProgOutcome::phi;
    StateVector post; // full joint state, ancillas included
    int measurements_done = 0;
    std::vector<MeasurementRecord> records;
};

/// Measures `input_qubit` of `joint` in the basis {phi, phi_perp} using
/// 2^n - 1 program copies of phi (appended internally) and only
/// J-measurements: any J0 declares phi_perp, all J1 declares phi. Does not
/// collapse the measured qubit like an ideal projective measurement, but
/// collapses any remote system entangled with it with fidelity 1 - 1/2^n.
ProgMeasurement programmable_measurement(const StateVector& joint, int input_qubit,
                                         const StateVector& phi, int n, Rng& rng);

/// Orthogonal complement (-conj(b), conj(a)) of a 1-qubit pure state (a, b).
StateVector orthogonal_state(const StateVector& phi);

/// Exact probability that an input prepared in phi_perp survives every round
/// with J1 and is wrongly declared phi; equals 1/2^n.
double programmable_error_probability(const StateVector& phi, int n);

/// Exact probability that an input prepared in phi is ever declared phi_perp;
/// equals 0.
double programmable_false_perp_probability(const StateVector& phi, int n);

/// Round-by-round exact runner for inspecting the all-J1 trajectory.
class TournamentState {
public:
    /// Appends the 2^n - 1 program copies to `joint`.
    TournamentState(const StateVector& joint, int input_qubit, const StateVector& phi, int n);

    int rounds() const { return n_; }
    int round() const { return round_; }
    const StateVector& joint_state() const { return state_; }
    /// Pair schedule in joint-state qubit indices, one vector per round.
    const std::vector<std::vector<QubitPair>>& schedule() const { return schedule_; }

    /// Postselects J1 on every pair of the next round; returns the joint
    /// probability of that round given the history.
    double advance_all_j1();

private:
    int n_ = 0;
    int round_ = 0;
    StateVector state_;
    std::vector<std::vector<QubitPair>> schedule_;
};

struct RemoteCollapseReport {
    double p_declared_phi = 0.0;     // (1 + 1/2^n)/2 on the canonical input
    double fidelity_phi_branch = 0.0;  // remote vs ideal |0>, = 2^n/(2^n+1)
    double fidelity_perp_branch = 0.0; // remote vs ideal |1>, = 1 exactly
};

/// Exact analysis of the canonical entangled input
/// (|phi>|0> + |phi_perp>|1>)/sqrt(2): how well the remote qubit collapses
/// compared with an ideal {phi, phi_perp} measurement.
RemoteCollapseReport remote_collapse_analysis(const StateVector& phi, int n);

} // namespace singlet
