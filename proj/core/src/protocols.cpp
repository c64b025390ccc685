#include "singlet/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "singlet/cluster.hpp"

namespace singlet {

namespace {

bool biased_bernoulli(Rng& rng, double p) {
    return rng.next_double() + test_hooks::j_sampling_bias < p;
}

void require_pure_1q(const StateVector& s, const char* what) {
    if (s.n_qubits() != 1) throw InvalidStateError(std::string(what) + ": need a 1-qubit state");
    if (!s.is_normalized()) throw InvalidStateError(std::string(what) + ": not normalized");
}

} // namespace

// --- spin flip -----------------------------------------------------------------

SpinFlipBranch spin_flip_branch(const DensityMatrix& rho) {
    if (rho.n_qubits() != 1) throw InvalidStateError("spin_flip: need a 1-qubit state");
    const DensityMatrix joint = tensor(rho, to_density(psi_minus_state()));
    const JPostselectDm j1 = postselect_j(joint, {0, 1}, JOutcome::J1);
    const std::array<int, 1> keep{2};
    return {j1.probability, partial_trace(j1.post, keep)};
}

std::optional<DensityMatrix> spin_flip(const DensityMatrix& rho, Rng& rng) {
    if (rho.n_qubits() != 1) throw InvalidStateError("spin_flip: need a 1-qubit state");
    const DensityMatrix joint = tensor(rho, to_density(psi_minus_state()));
    const JMeasurementDm m = measure_j(joint, {0, 1}, rng);
    if (m.outcome == JOutcome::J0) return std::nullopt;
    const std::array<int, 1> keep{2};
    return partial_trace(m.post, keep);
}

// --- purification ----------------------------------------------------------------

double purify_success_probability(double r) { return (3.0 + r * r) / 4.0; }

double purify_recurrence(double r) { return 4.0 * r / (3.0 + r * r); }

double purify_closed_form(double r0, int n) {
    return 1.0 / (std::pow(0.75, n) * (1.0 - r0) / r0 + 1.0);
}

PurificationSchedule purification_schedule(double r0, double epsilon) {
    if (!(epsilon > 0.0) || !(epsilon < 1.0))
        throw std::invalid_argument("purification_schedule: epsilon must be in (0,1)");
    if (r0 < 0.0 || r0 > 1.0 + kStructureTol)
        throw std::invalid_argument("purification_schedule: r0 must be in (0,1]");
    if (r0 < kZeroProbabilityTol)
        throw UnpurifiableError("maximally mixed input has no direction to purify along");

    PurificationSchedule sch;
    sch.r0 = r0;
    sch.epsilon = epsilon;

    int n = 0;
    if (1.0 - r0 > 0.0) {
        const double arg = (1.0 - epsilon) * (1.0 - r0) / (epsilon * r0);
        if (arg > 1.0) n = static_cast<int>(std::ceil(std::log(arg) / std::log(4.0 / 3.0)));
    }
    sch.steps = std::max(0, n);

    sch.predicted_lengths.resize(sch.steps + 1);
    sch.recurrence_lengths.resize(sch.steps + 1);
    sch.step_success_probs.resize(sch.steps);
    double r = r0;
    for (int k = 0; k <= sch.steps; ++k) {
        sch.predicted_lengths[k] = purify_closed_form(r0, k);
        sch.recurrence_lengths[k] = r;
        if (k < sch.steps) {
            sch.step_success_probs[k] = purify_success_probability(r);
            r = purify_recurrence(r);
        }
    }

    sch.yield_lower_bound = std::pow(r0 * epsilon, 3) * r0;
    sch.heuristic_steps = 3.0 * std::log(1.0 / (epsilon * r0));
    const int hsteps = std::max(0, static_cast<int>(std::ceil(sch.heuristic_steps)));
    sch.heuristic_sufficient = purify_closed_form(r0, hsteps) >= 1.0 - epsilon;
    return sch;
}

PurifyStepOutcome purify_step(const DensityMatrix& rho) {
    if (rho.n_qubits() != 1) throw InvalidStateError("purify_step: need a 1-qubit state");
    const DensityMatrix pair = tensor(rho, rho);
    const JPostselectDm j1 = postselect_j(pair, {0, 1}, JOutcome::J1);
    const std::array<int, 1> keep{0};
    return {j1.probability, partial_trace(j1.post, keep)};
}

namespace {

long long demand_estimate(const PurificationSchedule& sch) {
    double per_qubit_yield = 1.0;
    for (int k = 0; k < sch.steps; ++k)
        per_qubit_yield *= purify_success_probability(sch.predicted_lengths[k]) / 2.0;
    const double d = std::ceil(4.0 / per_qubit_yield);
    return d > 1e15 ? static_cast<long long>(1e15) : static_cast<long long>(d);
}

} // namespace

PurifyResult purify_from_state(const DensityMatrix& rho0, long long available, double epsilon,
                               Rng& rng) {
    const double r0 = bloch_from_density(rho0).length();
    PurificationSchedule sch = purification_schedule(r0, epsilon);

    PurifyResult out;
    out.schedule = sch;
    out.initial_qubits = available;
    out.state = rho0;
    out.achieved_length = r0;

    if (available < demand_estimate(sch))
        throw InsufficientSupplyError("supply below the schedule demand estimate", out);

    long long survivors = available;
    DensityMatrix state = rho0;
    for (int k = 0; k < sch.steps; ++k) {
        const PurifyStepOutcome step = purify_step(state);
        const long long pairs = survivors / 2;
        long long successes = 0;
        for (long long i = 0; i < pairs; ++i)
            if (biased_bernoulli(rng, step.success_prob)) ++successes;

        state = step.post;
        survivors = successes; // keep one qubit per successful pair
        const double r_exact = bloch_from_density(state).length();
        out.steps.push_back({k, pairs, successes, step.success_prob, r_exact,
                             sch.predicted_lengths[k + 1]});
        out.state = state;
        out.achieved_length = r_exact;
        out.survivors = survivors;
        out.survivor_fraction =
            static_cast<double>(survivors) / static_cast<double>(available);

        if (survivors == 0 && k + 1 < sch.steps)
            throw InsufficientSupplyError("supply exhausted mid-purification", out);
    }
    out.survivors = survivors;
    out.survivor_fraction = static_cast<double>(survivors) / static_cast<double>(available);
    return out;
}

PurifyResult purify(const SupplySpec& supply, double epsilon, Rng& rng) {
    if (supply.count_available < 0) throw std::invalid_argument("purify: negative supply count");
    return purify_from_state(density_from_bloch(supply.bloch), supply.count_available, epsilon,
                             rng);
}

// --- six vertices and pure-state preparation ------------------------------------------

namespace {

double hull_inscribed_radius(const std::array<BlochVector, 6>& v) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j)
            for (int k = j + 1; k < 6; ++k) {
                const BlochVector n = cross(v[j] - v[i], v[k] - v[i]);
                const double nl = n.length();
                if (nl < 1e-12) continue;
                double lo = 0.0, hi = 0.0;
                for (int p = 0; p < 6; ++p) {
                    const double s = n.dot(v[p] - v[i]) / nl;
                    lo = std::min(lo, s);
                    hi = std::max(hi, s);
                }
                const double tol = 1e-9;
                if (lo >= -tol || hi <= tol) // all points on one side: hull facet
                    best = std::min(best, std::abs(n.dot(v[i])) / nl);
            }
    return best;
}

// Solves A x = b for a 4x4 system by Gaussian elimination with partial
// pivoting; returns false if (numerically) singular.
bool solve4(double a[4][4], double b[4], double x[4]) {
    int perm[4] = {0, 1, 2, 3};
    for (int col = 0; col < 4; ++col) {
        int piv = col;
        for (int r = col + 1; r < 4; ++r)
            if (std::abs(a[perm[r]][col]) > std::abs(a[perm[piv]][col])) piv = r;
        std::swap(perm[col], perm[piv]);
        const double d = a[perm[col]][col];
        if (std::abs(d) < 1e-13) return false;
        for (int r = col + 1; r < 4; ++r) {
            const double f = a[perm[r]][col] / d;
            for (int c = col; c < 4; ++c) a[perm[r]][c] -= f * a[perm[col]][c];
            b[perm[r]] -= f * b[perm[col]];
        }
    }
    for (int col = 3; col >= 0; --col) {
        double s = b[perm[col]];
        for (int c = col + 1; c < 4; ++c) s -= a[perm[col]][c] * x[c];
        x[col] = s / a[perm[col]][col];
    }
    return true;
}

// Barycentric weights of `t` over the best containing 4-vertex tetrahedron:
// enumerates all 15 in lexicographic order and keeps the one maximizing the
// minimum weight (strictly, so ties resolve to the lexicographically first).
std::array<double, 6> tetrahedron_mixture(const std::array<BlochVector, 6>& v,
                                          const BlochVector& t) {
    std::array<double, 6> best{};
    double best_min_weight = -1.0;
    bool found = false;
    for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j)
            for (int k = j + 1; k < 6; ++k)
                for (int l = k + 1; l < 6; ++l) {
                    const int idx[4] = {i, j, k, l};
                    double a[4][4], b[4] = {t.x, t.y, t.z, 1.0}, x[4];
                    for (int c = 0; c < 4; ++c) {
                        a[0][c] = v[idx[c]].x;
                        a[1][c] = v[idx[c]].y;
                        a[2][c] = v[idx[c]].z;
                        a[3][c] = 1.0;
                    }
                    if (!solve4(a, b, x)) continue;
                    const double minw = std::min(std::min(x[0], x[1]), std::min(x[2], x[3]));
                    if (minw < -1e-12) continue; // tetrahedron does not contain t
                    if (minw > best_min_weight) {
                        best_min_weight = minw;
                        best = {};
                        for (int c = 0; c < 4; ++c) best[idx[c]] = std::max(0.0, x[c]);
                        found = true;
                    }
                }
    if (!found) throw std::logic_error("no tetrahedron contains the target point");
    double sum = 0.0;
    for (double w : best) sum += w;
    for (double& w : best) w /= sum;
    return best;
}

} // namespace

SixVertices six_vertices(const std::array<SupplySpec, 3>& supplies) {
    const BlochVector r1 = supplies[0].bloch, r2 = supplies[1].bloch, r3 = supplies[2].bloch;
    const double det = r1.dot(cross(r2, r3));
    if (std::abs(det) <= 1e-9)
        throw DegenerateSuppliesError("supply Bloch vectors are linearly dependent");
    SixVertices out;
    out.vertices = {r1, r2, r3, r1.scaled(-1.0 / 3.0), r2.scaled(-1.0 / 3.0),
                    r3.scaled(-1.0 / 3.0)};
    out.inscribed_radius = hull_inscribed_radius(out.vertices);
    return out;
}

PreparedPure prepare_pure(const StateVector& target, const std::array<SupplySpec, 3>& supplies,
                          double epsilon, Rng& rng) {
    require_pure_1q(target, "prepare_pure");
    const BlochVector u = bloch_from_density(to_density(target)).normalized();

    PreparedPure out;
    out.direction = u;
    out.geometry = six_vertices(supplies);

    // A supply already pointing along the target needs no mixing.
    int aligned = -1;
    for (int i = 0; i < 3; ++i)
        if (supplies[i].bloch.normalized().dot(u) >= 1.0 - 1e-9) aligned = i;

    DensityMatrix rho0(1);
    long long available = 0;
    if (aligned >= 0) {
        out.passthrough = true;
        out.mixture_weights[aligned] = 1.0;
        rho0 = density_from_bloch(supplies[aligned].bloch);
        available = supplies[aligned].count_available;
        out.supply_consumed = 0; // debited by the purification accounting below
    } else {
        const double s = out.geometry.inscribed_radius;
        out.mixture_weights = tetrahedron_mixture(out.geometry.vertices, u.scaled(s));
        std::vector<cplx> mix(4, cplx{0, 0});
        for (int vtx = 0; vtx < 6; ++vtx) {
            if (out.mixture_weights[vtx] == 0.0) continue;
            const DensityMatrix part = density_from_bloch(out.geometry.vertices[vtx]);
            for (int e = 0; e < 4; ++e)
                mix[e] += out.mixture_weights[vtx] * part.entries()[e];
        }
        rho0 = DensityMatrix(1, std::move(mix));

        // Draw the initial mixed qubits: a flipped vertex costs a geometric
        // number of supply qubits (spin-flip succeeds w.p. 3/4 per attempt).
        const PurificationSchedule sch = purification_schedule(s, epsilon);
        double yield = 1.0;
        for (int k = 0; k < sch.steps; ++k)
            yield *= purify_success_probability(sch.predicted_lengths[k]) / 2.0;
        available = static_cast<long long>(std::min(1e15, std::ceil(4.0 / yield)));

        std::array<long long, 3> debit{0, 0, 0};
        for (long long q = 0; q < available; ++q) {
            double draw = rng.next_double();
            int vtx = 0;
            while (vtx < 5 && draw >= out.mixture_weights[vtx]) {
                draw -= out.mixture_weights[vtx];
                ++vtx;
            }
            const int supply_idx = vtx % 3;
            if (vtx < 3) {
                debit[supply_idx] += 1;
            } else {
                long long tries = 1;
                while (!biased_bernoulli(rng, 0.75)) ++tries;
                debit[supply_idx] += tries;
                out.flip_attempts += tries;
            }
        }
        for (int i = 0; i < 3; ++i) {
            out.supply_consumed += debit[i];
            if (debit[i] > supplies[i].count_available) {
                PurifyResult partial;
                partial.schedule = sch;
                throw InsufficientSupplyError("prepare_pure: supply exhausted while mixing",
                                              partial);
            }
        }
    }

    out.purification = purify_from_state(rho0, available, epsilon, rng);
    out.state = out.purification.state;
    const BlochVector achieved = bloch_from_density(out.state);
    out.bloch_length = achieved.dot(u);
    out.fidelity_with_target = fidelity(target, out.state);
    return out;
}

// --- Bell and GHZ ---------------------------------------------------------------------

BellRecipe bell_recipe(BellKind kind) {
    switch (kind) {
        case BellKind::psi_minus: return {ket("01"), JOutcome::J0};
        case BellKind::psi_plus: return {ket("01"), JOutcome::J1};
        case BellKind::phi_minus: return {ket("+-"), JOutcome::J1};
        case BellKind::phi_plus: return {ket("rl"), JOutcome::J1};
    }
    throw std::invalid_argument("unknown Bell kind");
}

StateVector bell_target(BellKind kind) {
    switch (kind) {
        case BellKind::psi_minus: return psi_minus_state();
        case BellKind::psi_plus: return psi_plus_state();
        case BellKind::phi_minus: return phi_minus_state();
        case BellKind::phi_plus: return phi_plus_state();
    }
    throw std::invalid_argument("unknown Bell kind");
}

BellResult make_bell(BellKind kind, Rng& rng, long long max_attempts) {
    const BellRecipe recipe = bell_recipe(kind);
    for (long long attempt = 1; attempt <= max_attempts; ++attempt) {
        const JMeasurement m = measure_j(recipe.input, {0, 1}, rng);
        if (m.outcome == recipe.want) return {m.post, attempt};
    }
    throw std::runtime_error("make_bell: attempt cap exceeded");
}

namespace {

GhzResource make_ghz4(Rng& rng, long long max_attempts, long long& attempts_accum) {
    const StateVector input = tensor(phi_plus_state(), phi_minus_state());
    for (long long attempt = 1; attempt <= max_attempts; ++attempt) {
        ++attempts_accum;
        const JMeasurement m1 = measure_j(input, {0, 2}, rng);
        if (m1.outcome != JOutcome::J1) continue;
        const JMeasurement m2 = measure_j(m1.post, {1, 3}, rng);
        if (m2.outcome != JOutcome::J1) continue;
        return {4, -1, m2.post, attempt};
    }
    throw std::runtime_error("make_ghz: base recipe attempt cap exceeded");
}

GhzResource trim_ghz(GhzResource g, Rng& rng) {
    const RemovedQubitMeasurement m =
        measure_and_remove(g.state, g.n_qubits - 1, Basis1Q::plus_minus(), rng);
    return {g.n_qubits - 1, m.outcome == 1 ? -g.sign : g.sign, m.post, g.attempts + 1};
}

GhzResource ghz_from_single_vertex(const ClusterState& c) {
    const RedundantLogicalQubit& lq = c.logical(0);
    for (uint8_t bit : lq.marker0)
        if (bit != lq.marker0.front())
            throw std::logic_error("ghz growth produced non-canonical markers");
    GhzResource g;
    g.n_qubits = lq.redundancy();
    g.sign = lq.frame_z ? -1 : +1;
    g.state = c.backing();
    return g;
}

} // namespace

GhzResource make_ghz(int n_qubits, Rng& rng, long long max_attempts) {
    if (n_qubits < 2) throw std::invalid_argument("make_ghz: need at least two qubits");
    long long attempts = 0;

    if (n_qubits == 2) {
        const BellResult b = make_bell(BellKind::phi_plus, rng, max_attempts);
        return {2, +1, b.state, b.attempts};
    }

    GhzResource cur = make_ghz4(rng, max_attempts, attempts);
    std::vector<GhzResource> pool;
    auto fresh = [&]() {
        if (!pool.empty()) {
            GhzResource g = pool.back();
            pool.pop_back();
            return g;
        }
        return make_ghz4(rng, max_attempts, attempts);
    };

    // Grow by fusing GHZ resources: the J1 branch merges canonically; the J0
    // branch is twisted (|0^{a-1} 1^{b-1}> markers), so trim the donated part
    // back off; a failure shrinks both sides by one.
    while (cur.n_qubits < n_qubits) {
        if (++attempts > max_attempts) throw std::runtime_error("make_ghz: attempt cap exceeded");
        const GhzResource other = fresh();
        FusionOutcome fo = fuse(ghz_as_cluster(cur), 0, ghz_as_cluster(other), 0, rng);
        switch (fo.tag) {
            case FusionTag::FusedJ1:
                cur = ghz_from_single_vertex(*fo.merged);
                break;
            case FusionTag::FusedJ0: {
                ClusterState m = std::move(*fo.merged);
                for (int t = 0; t < other.n_qubits - 1; ++t)
                    m = remove_redundancy(m, 0, rng).cluster;
                cur = ghz_from_single_vertex(m);
                break;
            }
            case FusionTag::Failure: {
                cur = ghz_from_single_vertex(*fo.left);
                GhzResource salvage = ghz_from_single_vertex(*fo.right);
                if (salvage.n_qubits >= 2) pool.push_back(std::move(salvage));
                break;
            }
        }
        if (cur.n_qubits < 2) cur = fresh();
    }

    while (cur.n_qubits > n_qubits) cur = trim_ghz(std::move(cur), rng);
    cur.attempts = attempts;
    return cur;
}

// --- programmable measurement ------------------------------------------------------------

std::vector<std::vector<QubitPair>> program_schedule(int n) {
    if (n < 1) throw std::invalid_argument("program_schedule: n must be >= 1");
    std::vector<std::vector<QubitPair>> rounds(n);
    for (int r = 0; r < n; ++r) {
        rounds[r].reserve(std::size_t{1} << r);
        for (int k = 0; k < (1 << r); ++k) rounds[r].push_back({k, (1 << r) + k});
    }
    return rounds;
}

namespace {

std::vector<std::vector<QubitPair>> joint_schedule(int n_orig, int input_qubit, int n) {
    auto local = program_schedule(n);
    auto map = [&](int t) { return t == 0 ? input_qubit : n_orig + t - 1; };
    for (auto& round : local)
        for (QubitPair& p : round) p = {map(p.a), map(p.b)};
    return local;
}

StateVector append_program_copies(const StateVector& joint, const StateVector& phi, int n) {
    StateVector acc = joint;
    const int copies = (1 << n) - 1;
    for (int i = 0; i < copies; ++i) acc = tensor(acc, phi);
    return acc;
}

} // namespace

StateVector orthogonal_state(const StateVector& phi) {
    require_pure_1q(phi, "orthogonal_state");
    return StateVector(1, std::vector<cplx>{-std::conj(phi.amp(1)), std::conj(phi.amp(0))});
}

ProgMeasurement programmable_measurement(const StateVector& joint, int input_qubit,
                                         const StateVector& phi, int n, Rng& rng) {
    require_pure_1q(phi, "programmable_measurement");
    if (n < 1) throw std::invalid_argument("programmable_measurement: n must be >= 1");
    if (input_qubit < 0 || input_qubit >= joint.n_qubits())
        throw InvalidPairError("programmable_measurement: input qubit out of range");

    ProgMeasurement out;
    out.post = append_program_copies(joint, phi, n);
    const auto schedule = joint_schedule(joint.n_qubits(), input_qubit, n);
    for (const auto& round : schedule) {
        for (QubitPair pr : round) {
            JMeasurement m = measure_j(out.post, pr, rng, out.measurements_done);
            ++out.measurements_done;
            out.records.push_back(m.record);
            out.post = std::move(m.post);
            if (m.outcome == JOutcome::J0) {
                out.declared = ProgOutcome::phi_perp;
                return out;
            }
        }
    }
    out.declared = ProgOutcome::phi;
    return out;
}

TournamentState::TournamentState(const StateVector& joint, int input_qubit,
                                 const StateVector& phi, int n)
    : n_(n) {
    require_pure_1q(phi, "TournamentState");
    if (n < 1) throw std::invalid_argument("TournamentState: n must be >= 1");
    if (input_qubit < 0 || input_qubit >= joint.n_qubits())
        throw InvalidPairError("TournamentState: input qubit out of range");
    state_ = append_program_copies(joint, phi, n);
    schedule_ = joint_schedule(joint.n_qubits(), input_qubit, n);
}

double TournamentState::advance_all_j1() {
    if (round_ >= n_) throw std::logic_error("TournamentState: no rounds left");
    double p = 1.0;
    for (QubitPair pr : schedule_[round_]) {
        JPostselect ps = postselect_j(state_, pr, JOutcome::J1);
        p *= ps.probability;
        state_ = std::move(ps.post);
    }
    ++round_;
    return p;
}

namespace {

double all_j1_probability(const StateVector& input_1q, const StateVector& phi, int n) {
    TournamentState ts(input_1q, 0, phi, n);
    double p = 1.0;
    for (int r = 0; r < n; ++r) p *= ts.advance_all_j1();
    return p;
}

} // namespace

double programmable_error_probability(const StateVector& phi, int n) {
    return all_j1_probability(orthogonal_state(phi), phi, n);
}

double programmable_false_perp_probability(const StateVector& phi, int n) {
    // declaring phi_perp at any point is exactly the complement of the all-J1
    // trajectory
    return 1.0 - all_j1_probability(phi, phi, n);
}

RemoteCollapseReport remote_collapse_analysis(const StateVector& phi, int n) {
    require_pure_1q(phi, "remote_collapse_analysis");
    const StateVector perp = orthogonal_state(phi);

    // (|phi>|0> + |phi_perp>|1>)/sqrt(2); system qubit 0, remote qubit 1
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    std::vector<cplx> amps(4);
    amps[0] = inv_sqrt2 * phi.amp(0);
    amps[1] = inv_sqrt2 * phi.amp(1);
    amps[2] = inv_sqrt2 * perp.amp(0);
    amps[3] = inv_sqrt2 * perp.amp(1);
    const StateVector entangled(2, std::move(amps));

    TournamentState ts(entangled, 0, phi, n);
    double p_phi = 1.0;
    for (int r = 0; r < n; ++r) p_phi *= ts.advance_all_j1();

    const std::array<int, 1> remote{1};
    const DensityMatrix rho_phi = partial_trace(ts.joint_state(), remote);

    RemoteCollapseReport out;
    out.p_declared_phi = p_phi;
    out.fidelity_phi_branch = fidelity(ket("0"), rho_phi);

    // The tournament never touches the remote qubit, so its unconditional
    // marginal stays I/2; the declared-perp conditional follows by linearity.
    std::vector<cplx> perp_m(4);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
            const cplx id = r == c ? cplx{0.5, 0} : cplx{0, 0};
            perp_m[r * 2 + c] = (id - p_phi * rho_phi.at(r, c)) / (1.0 - p_phi);
        }
    out.fidelity_perp_branch = fidelity(ket("1"), DensityMatrix(1, std::move(perp_m)));
    return out;
}

} // namespace singlet
