#include "singlet/cluster.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace singlet {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// singlet ket in the (qa, qb) pair-local basis, index = bit(qa) + 2*bit(qb)
const std::array<cplx, 4> kSinglet4{cplx{0, 0}, cplx{-kInvSqrt2, 0}, cplx{kInvSqrt2, 0},
                                    cplx{0, 0}};

// --- support-anchored Pauli witness search -----------------------------------

// Solves w . row = rhs over GF(2), rows added incrementally.
struct Gf2Solver {
    std::array<std::uint32_t, 32> row{};
    std::array<std::uint8_t, 32> rhs{};
    std::array<bool, 32> used{};

    bool add(std::uint32_t m, int r) {
        for (int b = 31; b >= 0; --b) {
            if (!((m >> b) & 1u)) continue;
            if (!used[b]) {
                used[b] = true;
                row[b] = m;
                rhs[b] = static_cast<std::uint8_t>(r);
                return true;
            }
            m ^= row[b];
            r ^= rhs[b];
        }
        return r == 0; // an all-zero row is consistent only with rhs 0
    }

    std::uint32_t solve() const {
        std::uint32_t w = 0;
        for (int b = 0; b < 32; ++b) {
            if (!used[b]) continue; // free bit: leave 0
            const std::uint32_t rest = row[b] & ~(std::uint32_t{1} << b);
            const int parity = std::popcount(rest & w) & 1;
            if ((parity ^ rhs[b]) & 1) w |= std::uint32_t{1} << b;
        }
        return w;
    }
};

std::optional<PauliString> pauli_witness(const StateVector& s1, const StateVector& s2,
                                         double tol) {
    const int n = s1.n_qubits();
    const std::size_t dim = s1.dim();

    constexpr double kSupportCut = 1e-7;
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < dim; ++i)
        if (std::abs(s1.amp(i)) > kSupportCut) support.push_back(i);
    if (support.empty()) return std::nullopt;

    std::size_t anchor2 = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double a = std::abs(s2.amp(i));
        if (a > best) {
            best = a;
            anchor2 = i;
        }
    }
    if (best <= kSupportCut) return std::nullopt;

    constexpr double kPruneTol = 1e-6;
    for (const std::size_t j0 : support) {
        const std::size_t xmask = j0 ^ anchor2;

        bool ok = true;
        for (std::size_t i = 0; i < dim && ok; ++i)
            if (std::abs(std::abs(s1.amp(i)) - std::abs(s2.amp(i ^ xmask))) > kPruneTol) ok = false;
        if (!ok) continue;

        // phase ratios on the support must look like c * (-1)^(w.i)
        const cplx r0 = s2.amp(support.front() ^ xmask) / s1.amp(support.front());
        Gf2Solver solver;
        for (const std::size_t i : support) {
            const cplx ratio = s2.amp(i ^ xmask) / s1.amp(i) / r0;
            int sign;
            if (std::abs(ratio - 1.0) < kPruneTol) {
                sign = 0;
            } else if (std::abs(ratio + 1.0) < kPruneTol) {
                sign = 1;
            } else {
                ok = false;
                break;
            }
            if (!solver.add(static_cast<std::uint32_t>(i ^ support.front()), sign)) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        const std::uint32_t wmask = solver.solve();

        PauliString p;
        p.ops.assign(n, 'I');
        for (int q = 0; q < n; ++q) {
            const bool x = (xmask >> q) & 1;
            const bool w = (wmask >> q) & 1;
            p.ops[q] = x ? (w ? 'Y' : 'X') : (w ? 'Z' : 'I');
        }

        const StateVector candidate = p.apply(s1);
        if (fidelity(candidate, s2) >= 1.0 - tol) return p;
    }
    return std::nullopt;
}

} // namespace

StateVector PauliString::apply(const StateVector& psi) const {
    if (static_cast<int>(ops.size()) != psi.n_qubits())
        throw std::invalid_argument("PauliString::apply: length mismatch");
    std::size_t xmask = 0, wmask = 0;
    int y_count = 0;
    for (std::size_t q = 0; q < ops.size(); ++q) {
        switch (ops[q]) {
            case 'I': break;
            case 'X': xmask |= std::size_t{1} << q; break;
            case 'Z': wmask |= std::size_t{1} << q; break;
            case 'Y':
                xmask |= std::size_t{1} << q;
                wmask |= std::size_t{1} << q;
                ++y_count;
                break;
            default: throw std::invalid_argument("PauliString::apply: bad op");
        }
    }
    const cplx i_pow[4] = {cplx{1, 0}, cplx{0, 1}, cplx{-1, 0}, cplx{0, -1}};
    const cplx global = i_pow[y_count % 4];
    std::vector<cplx> out(psi.dim());
    for (std::size_t i = 0; i < psi.dim(); ++i) {
        const double sign = (std::popcount(i & wmask) & 1) ? -1.0 : 1.0;
        out[i ^ xmask] = global * sign * psi.amp(i);
    }
    return StateVector(psi.n_qubits(), std::move(out));
}

std::optional<PauliString> pauli_equivalent(const StateVector& s1, const StateVector& s2) {
    if (s1.n_qubits() != s2.n_qubits())
        throw std::invalid_argument("pauli_equivalent: qubit count mismatch");
    if (s1.n_qubits() > 12)
        throw std::invalid_argument("pauli_equivalent: supported up to 12 qubits");
    return pauli_witness(s1, s2, 1e-9);
}

// --- ClusterState -------------------------------------------------------------

ClusterState ClusterState::ideal(int n_logical, const std::vector<std::pair<int, int>>& edges,
                                 const std::vector<int>& redundancy) {
    std::vector<std::vector<uint8_t>> markers(n_logical);
    for (int l = 0; l < n_logical; ++l) {
        if (redundancy.at(l) < 1) throw std::invalid_argument("redundancy must be >= 1");
        markers[l].assign(redundancy[l], 0);
    }
    return ideal_with_markers(n_logical, edges, markers);
}

ClusterState ClusterState::ideal_with_markers(int n_logical,
                                              const std::vector<std::pair<int, int>>& edges,
                                              const std::vector<std::vector<uint8_t>>& marker0) {
    if (n_logical < 1 || static_cast<int>(marker0.size()) != n_logical)
        throw std::invalid_argument("ideal_with_markers: bad logical count");
    ClusterState c;
    int next_physical = 0;
    for (int l = 0; l < n_logical; ++l) {
        RedundantLogicalQubit lq;
        if (marker0[l].empty()) throw std::invalid_argument("redundancy must be >= 1");
        for (uint8_t bit : marker0[l]) {
            lq.physical.push_back(next_physical++);
            lq.marker0.push_back(bit);
            lq.marker1.push_back(bit ^ 1);
        }
        c.logicals_.push_back(std::move(lq));
    }
    for (auto [u, v] : edges) {
        if (u == v || u < 0 || v < 0 || u >= n_logical || v >= n_logical)
            throw std::invalid_argument("ideal_with_markers: bad edge");
        c.edges_.emplace_back(u, v);
    }
    c.backing_ = c.ideal_encoded_state();
    return c;
}

StateVector ClusterState::ideal_encoded_state() const {
    const int L = n_logical();
    int total = 0;
    for (const auto& lq : logicals_) total += lq.redundancy();

    std::vector<cplx> amps(std::size_t{1} << total, cplx{0, 0});
    const double norm = std::pow(2.0, -0.5 * L);
    for (std::size_t z = 0; z < (std::size_t{1} << L); ++z) {
        int sign = 0;
        for (auto [u, v] : edges_)
            if (((z >> u) & 1) && ((z >> v) & 1)) sign ^= 1;
        std::size_t idx = 0;
        for (int l = 0; l < L; ++l) {
            const RedundantLogicalQubit& lq = logicals_[l];
            const std::vector<uint8_t>& m = ((z >> l) & 1) ? lq.marker1 : lq.marker0;
            for (std::size_t p = 0; p < lq.physical.size(); ++p)
                if (m[p]) idx |= std::size_t{1} << lq.physical[p];
        }
        amps[idx] = sign ? -norm : norm;
    }
    return StateVector(total, std::move(amps));
}

StateVector ClusterState::frame_corrected_backing() const {
    std::size_t xmask = 0, zmask = 0;
    for (const auto& lq : logicals_) {
        if (lq.frame_x)
            for (int p : lq.physical) xmask ^= std::size_t{1} << p;
        if (lq.frame_z) zmask ^= std::size_t{1} << lq.physical.front();
    }
    std::vector<cplx> out(backing_.dim());
    for (std::size_t i = 0; i < backing_.dim(); ++i) {
        const double sign = (std::popcount(i & zmask) & 1) ? -1.0 : 1.0;
        out[i ^ xmask] = sign * backing_.amp(i);
    }
    return StateVector(backing_.n_qubits(), std::move(out));
}

bool ClusterState::check_frame(double tol) const {
    if (!frame_valid_) return false;
    return fidelity(frame_corrected_backing(), ideal_encoded_state()) >= 1.0 - tol;
}

// Internal mutation helpers (friend of ClusterState).
struct ClusterOps {
    static StateVector& backing(ClusterState& c) { return c.backing_; }
    static std::vector<RedundantLogicalQubit>& logicals(ClusterState& c) { return c.logicals_; }
    static std::vector<std::pair<int, int>>& edges(ClusterState& c) { return c.edges_; }
    static void set_frame_valid(ClusterState& c, bool v) { c.frame_valid_ = v; }

    // Swap markers wherever an X frame is pending; the backing is unchanged,
    // only the bookkeeping convention rotates.
    static void absorb_frame_x(ClusterState& c) {
        for (auto& lq : c.logicals_) {
            if (!lq.frame_x) continue;
            std::swap(lq.marker0, lq.marker1);
            lq.frame_x = false;
        }
    }

    // Renumber physical indices after `removed` was measured away.
    static void shift_physicals(ClusterState& c, int removed) {
        for (auto& lq : c.logicals_)
            for (int& p : lq.physical)
                if (p > removed) --p;
    }

    // Drop the marker slot of physical qubit `removed` from its logical qubit
    // (call before shift_physicals).
    static void drop_marker_slot(ClusterState& c, int logical, int removed) {
        auto& lq = c.logicals_[logical];
        for (std::size_t s = 0; s < lq.physical.size(); ++s) {
            if (lq.physical[s] != removed) continue;
            lq.physical.erase(lq.physical.begin() + s);
            lq.marker0.erase(lq.marker0.begin() + s);
            lq.marker1.erase(lq.marker1.begin() + s);
            return;
        }
        throw std::logic_error("drop_marker_slot: physical qubit not found");
    }

    // Remove an exhausted logical qubit from the bookkeeping entirely.
    static void remove_logical(ClusterState& c, int logical) {
        c.logicals_.erase(c.logicals_.begin() + logical);
        std::vector<std::pair<int, int>> kept;
        for (auto [u, v] : c.edges_) {
            if (u == logical || v == logical) continue;
            kept.emplace_back(u > logical ? u - 1 : u, v > logical ? v - 1 : v);
        }
        c.edges_ = std::move(kept);
        c.frame_valid_ = false;
    }

    // Recomputes every frame bit by matching the backing against the ideal
    // encoding; throws if the state left the Pauli-trackable family.
    static void recover_frame(ClusterState& c) {
        for (auto& lq : c.logicals_) {
            lq.frame_x = false;
            lq.frame_z = false;
        }
        const StateVector ideal = c.ideal_encoded_state();
        const auto witness = pauli_witness(ideal, c.backing_, 1e-9);
        if (!witness)
            throw InvalidStateError("cluster backing is not Pauli-equivalent to its encoding");
        for (std::size_t l = 0; l < c.logicals_.size(); ++l) {
            auto& lq = c.logicals_[l];
            int x_count = 0, w_count = 0;
            for (int p : lq.physical) {
                const char op = witness->ops[p];
                if (op == 'X' || op == 'Y') ++x_count;
                if (op == 'Z' || op == 'Y') ++w_count;
            }
            if (x_count != 0 && x_count != lq.redundancy())
                throw InvalidStateError("witness flips only part of a marker string");
            lq.frame_x = x_count == lq.redundancy();
            lq.frame_z = (w_count & 1) != 0;
        }
        c.frame_valid_ = true;
    }
};

// --- two-qubit cluster construction ----------------------------------------------

TwoQubitClusterResult make_two_qubit_cluster(Rng& rng, long long max_attempts) {
    const StateVector input = tensor(psi_minus_state(), phi_plus_state());
    for (long long attempt = 1; attempt <= max_attempts; ++attempt) {
        const JMeasurement m1 = measure_j(input, {0, 2}, rng);
        if (m1.outcome != JOutcome::J1) continue;
        const JMeasurement m2 = measure_j(m1.post, {1, 3}, rng);
        if (m2.outcome != JOutcome::J1) continue;

        // qubit 0 in the computational basis, qubit 3 in |+->; qubits 1,2
        // remain and carry the cluster
        const RemovedQubitMeasurement mz =
            measure_and_remove(m2.post, 0, Basis1Q::computational(), rng);
        const RemovedQubitMeasurement mx =
            measure_and_remove(mz.post, 2, Basis1Q::plus_minus(), rng);

        ClusterState c = ClusterState::ideal(2, {{0, 1}}, {1, 1});
        ClusterOps::backing(c) = mx.post;
        ClusterOps::recover_frame(c);
        return {std::move(c), attempt, mz.outcome, mx.outcome};
    }
    throw std::runtime_error("make_two_qubit_cluster: attempt cap exceeded");
}

// --- fusion -------------------------------------------------------------------------

namespace {

struct JointBookkeeping {
    ClusterState joint; // logicals of a, then b's (physicals shifted)
    int la = 0;
    int pa = 0, pb = 0;     // measured physical indices in the joint register
    int alpha = 0, beta = 0; // marker0 bit at the measured position
};

JointBookkeeping make_joint(const ClusterState& a_in, int qa, const ClusterState& b_in, int qb) {
    if (&a_in == &b_in) throw std::invalid_argument("fuse: clusters must be distinct objects");
    if (!a_in.frame_valid() || !b_in.frame_valid())
        throw InvalidStateError("fuse: cluster no longer tracks a Pauli frame");
    if (qa < 0 || qa >= a_in.n_logical() || qb < 0 || qb >= b_in.n_logical())
        throw std::invalid_argument("fuse: logical index out of range");

    ClusterState a = a_in, b = b_in;
    ClusterOps::absorb_frame_x(a);
    ClusterOps::absorb_frame_x(b);

    JointBookkeeping jb;
    jb.la = a.n_logical();
    const int na = a.n_physical();

    ClusterState& j = jb.joint;
    ClusterOps::backing(j) = tensor(a.backing(), b.backing());
    auto& logicals = ClusterOps::logicals(j);
    for (int l = 0; l < a.n_logical(); ++l) logicals.push_back(a.logical(l));
    for (int l = 0; l < b.n_logical(); ++l) {
        RedundantLogicalQubit lq = b.logical(l);
        for (int& p : lq.physical) p += na;
        logicals.push_back(std::move(lq));
    }
    auto& edges = ClusterOps::edges(j);
    edges = a.edges();
    for (auto [u, v] : b.edges()) edges.emplace_back(jb.la + u, jb.la + v);

    const RedundantLogicalQubit& lqa = logicals[qa];
    const RedundantLogicalQubit& lqb = logicals[jb.la + qb];
    jb.pa = lqa.physical.back();
    jb.pb = lqb.physical.back();
    jb.alpha = lqa.marker0.back();
    jb.beta = lqb.marker0.back();
    return jb;
}

// Merge bookkeeping after the measured pair has been removed from the state:
// builds the merged cluster from the joint bookkeeping. `twisted` selects the
// (X Y_perp / X_perp Y) pairing; exhausted merges (no marker qubit left)
// come back degraded.
ClusterState finish_merge(JointBookkeeping&& jb, int qa, int qb, bool twisted,
                          const StateVector& post, int& merged_index_out) {
    ClusterState& j = jb.joint;
    const int jqb = jb.la + qb;
    auto& logicals = ClusterOps::logicals(j);

    // merged marker strings: a's remainder, then b's remainder (swapped when
    // twisted)
    RedundantLogicalQubit merged;
    const RedundantLogicalQubit& lqa = logicals[qa];
    const RedundantLogicalQubit& lqb = logicals[jqb];
    for (std::size_t s = 0; s + 1 < lqa.physical.size(); ++s) {
        merged.physical.push_back(lqa.physical[s]);
        merged.marker0.push_back(lqa.marker0[s]);
        merged.marker1.push_back(lqa.marker1[s]);
    }
    for (std::size_t s = 0; s + 1 < lqb.physical.size(); ++s) {
        merged.physical.push_back(lqb.physical[s]);
        merged.marker0.push_back(twisted ? lqb.marker1[s] : lqb.marker0[s]);
        merged.marker1.push_back(twisted ? lqb.marker0[s] : lqb.marker1[s]);
    }

    // vertex relabeling: merged sits at qa; b's vertices follow a's, skipping qb
    auto remap = [&](int v) {
        if (v == qa || v == jqb) return qa;
        if (v < jb.la) return v;
        const int t = v - jb.la;
        return jb.la + (t < qb ? t : t - 1);
    };
    auto& edges = ClusterOps::edges(j);
    for (auto& [u, v] : edges) {
        u = remap(u);
        v = remap(v);
    }
    logicals[qa] = std::move(merged);
    logicals.erase(logicals.begin() + jqb);

    ClusterOps::backing(j) = post;
    const int pa = jb.pa, pb = jb.pb;
    for (int removed : {std::max(pa, pb), std::min(pa, pb)}) ClusterOps::shift_physicals(j, removed);

    merged_index_out = qa;
    if (logicals[qa].physical.empty()) {
        // a+b-2 == 0: the merged vertex was measured out entirely
        ClusterOps::remove_logical(j, qa);
        merged_index_out = -1;
        return std::move(j);
    }
    ClusterOps::recover_frame(j);
    return std::move(j);
}

ClusterState split_side(const ClusterState& src, int fused_logical, int measured_physical,
                        const StateVector& factor, bool& exhausted) {
    ClusterState side = src; // bookkeeping copy (already frame_x-absorbed)
    ClusterOps::backing(side) = factor;
    ClusterOps::drop_marker_slot(side, fused_logical, measured_physical);
    ClusterOps::shift_physicals(side, measured_physical);
    if (ClusterOps::logicals(side)[fused_logical].physical.empty()) {
        ClusterOps::remove_logical(side, fused_logical);
        exhausted = true;
    } else {
        ClusterOps::recover_frame(side);
        exhausted = false;
    }
    return side;
}

} // namespace

FusionOutcome fuse(const ClusterState& a, int qa, const ClusterState& b, int qb, Rng& rng) {
    // keep frame_x-absorbed copies of both sides for the failure split
    ClusterState a_abs = a, b_abs = b;
    ClusterOps::absorb_frame_x(a_abs);
    ClusterOps::absorb_frame_x(b_abs);
    JointBookkeeping jb = make_joint(a, qa, b, qb);
    const int na = a.n_physical();

    FusionOutcome out;
    out.consumed_physical = 2;

    const JMeasurement jm = measure_j(jb.joint.backing(), {jb.pa, jb.pb}, rng);
    out.records.push_back(jm.record);

    if (jm.outcome == JOutcome::J0) {
        // the measured pair factors out as the residual singlet
        StateVector rest = contract_pair(jm.post, jb.pa, jb.pb, kSinglet4);
        const double w = rest.norm();
        if (std::abs(w - 1.0) > 1e-9)
            throw InvalidStateError("fuse: J0 residual singlet failed to factor out");
        rest.normalize();
        const bool twisted = (jb.alpha ^ jb.beta ^ 1) != 0;
        out.tag = FusionTag::FusedJ0;
        out.merged = finish_merge(std::move(jb), qa, qb, twisted, rest, out.merged_logical);
        return out;
    }

    // J1: the merge holds a+b markers until the mandatory |+-> projections
    out.pre_trim_redundancy =
        a.logical(qa).redundancy() + b.logical(qb).redundancy();
    const RemovedQubitMeasurement ma =
        measure_and_remove(jm.post, jb.pa, Basis1Q::plus_minus(), rng);
    const int pb_adj = jb.pb > jb.pa ? jb.pb - 1 : jb.pb;
    const RemovedQubitMeasurement mb =
        measure_and_remove(ma.post, pb_adj, Basis1Q::plus_minus(), rng);
    out.plus_minus_outcomes = {ma.outcome, mb.outcome};

    // The surviving junk piece sits in the psi+ sector whatever the pending
    // frames are, so anticorrelated outcomes always complete the merge.
    const bool anticorrelated = ma.outcome != mb.outcome;
    if (anticorrelated) {
        const bool twisted = (jb.alpha ^ jb.beta) != 0;
        out.tag = FusionTag::FusedJ1;
        out.merged = finish_merge(std::move(jb), qa, qb, twisted, mb.post, out.merged_logical);
        return out;
    }

    // failure: the state factors across the two clusters, one marker qubit
    // short on each side
    out.tag = FusionTag::Failure;
    auto factors = factor_product(mb.post, na - 1);
    if (!factors) throw InvalidStateError("fuse: failure branch did not factor into two clusters");
    out.left = split_side(a_abs, qa, a_abs.logical(qa).physical.back(), factors->first,
                          out.left_exhausted);
    out.right = split_side(b_abs, qb, b_abs.logical(qb).physical.back(), factors->second,
                           out.right_exhausted);
    return out;
}

FusionBranchProbabilities fusion_branch_probabilities(const ClusterState& a, int qa,
                                                      const ClusterState& b, int qb) {
    JointBookkeeping jb = make_joint(a, qa, b, qb);
    FusionBranchProbabilities out;
    const auto [p0, p1] = j_outcome_probabilities(jb.joint.backing(), {jb.pa, jb.pb});
    out.p_j0 = p0;

    const JPostselect j1 = postselect_j(jb.joint.backing(), {jb.pa, jb.pb}, JOutcome::J1);
    const Basis1Q pm = Basis1Q::plus_minus();
    const int pb_adj = jb.pb > jb.pa ? jb.pb - 1 : jb.pb;
    for (int sa = 0; sa < 2; ++sa) {
        const RemovedQubitMeasurement ma = postselect_and_remove(j1.post, jb.pa, pm, sa);
        for (int sb = 0; sb < 2; ++sb) {
            double prob = 0.0;
            StateVector post;
            try {
                const RemovedQubitMeasurement mb = postselect_and_remove(ma.post, pb_adj, pm, sb);
                prob = j1.probability * ma.probability * mb.probability;
                post = mb.post;
            } catch (const ImpossibleBranchError&) {
                prob = 0.0;
            }
            const int idx = sa + 2 * sb;
            out.pm_probability[idx] = prob;
            out.pm_post[idx] = std::move(post);
            if (sa != sb)
                out.p_j1_anticorrelated += prob;
            else
                out.p_failure += prob;
        }
    }
    return out;
}

ClusterState ghz_as_cluster(const GhzResource& ghz) {
    if (ghz.n_qubits < 1) throw std::invalid_argument("ghz_as_cluster: empty resource");
    ClusterState c = ClusterState::ideal(1, {}, {ghz.n_qubits});
    ClusterOps::backing(c) = ghz.state;
    ClusterOps::recover_frame(c);
    return c;
}

FusionOutcome add_redundancy(const ClusterState& cluster, int q, const GhzResource& ghz,
                             Rng& rng) {
    if (ghz.n_qubits < 2)
        throw std::invalid_argument("add_redundancy: GHZ resource needs at least 2 qubits");
    const ClusterState gc = ghz_as_cluster(ghz);
    return fuse(cluster, q, gc, 0, rng);
}

TrimResult remove_redundancy(const ClusterState& cluster, int q, Rng& rng) {
    if (!cluster.frame_valid())
        throw InvalidStateError("remove_redundancy: cluster no longer tracks a Pauli frame");
    if (q < 0 || q >= cluster.n_logical())
        throw std::invalid_argument("remove_redundancy: logical index out of range");
    if (cluster.redundancy(q) < 2)
        throw CannotTrimError("remove_redundancy: logical qubit has a single physical qubit");

    ClusterState c = cluster;
    ClusterOps::absorb_frame_x(c);
    const int p = c.logical(q).physical.back();
    const RemovedQubitMeasurement m =
        measure_and_remove(c.backing(), p, Basis1Q::plus_minus(), rng);
    ClusterOps::backing(c) = m.post;
    ClusterOps::drop_marker_slot(c, q, p);
    ClusterOps::shift_physicals(c, p);
    ClusterOps::recover_frame(c);
    return {std::move(c), m.outcome};
}

// --- abstract growth walker -------------------------------------------------------

namespace {

void bump(std::map<std::string, long long>& counts, const std::string& key, long long by = 1) {
    counts[key] += by;
}

struct WalkerTrialResult {
    bool success = false;
    int final_size = 0;
};

WalkerTrialResult walker_trial(int target, int m, const GrowthPolicy& pol, Rng& rng,
                               std::map<std::string, long long>& counts) {
    std::vector<int> chain{1, m}; // redundancy per chain qubit; back() is the end
    long long steps = 0;
    const double p_success = pol.p_fuse_j0 + pol.p_fuse_j1_anti;
    if (p_success > 1.0 + 1e-12) throw std::invalid_argument("growth policy probabilities > 1");

    while (static_cast<int>(chain.size()) < target) {
        if (++steps > pol.max_steps) return {false, static_cast<int>(chain.size())};

        // refresh the end from GHZ resources while it is below threshold
        while (chain.back() < pol.refresh_threshold) {
            bump(counts, "ghz_consumed");
            const double d = rng.next_double();
            if (d < pol.p_fuse_j0) {
                bump(counts, "refresh_j0");
                chain.back() += pol.ghz_size - 2;
            } else if (d < p_success) {
                bump(counts, "refresh_j1_anti");
                chain.back() += pol.ghz_size; // spec counter: a+b before trimming
            } else {
                bump(counts, "refresh_failure");
                chain.back() -= 1;
                if (chain.back() == 0) {
                    bump(counts, "end_exhausted");
                    if (pol.die_on_exhaustion) return {false, static_cast<int>(chain.size()) - 1};
                    chain.pop_back();
                    if (chain.size() < 2) return {false, static_cast<int>(chain.size())};
                }
            }
            if (++steps > pol.max_steps) return {false, static_cast<int>(chain.size())};
        }

        // fuse a fresh redundantly encoded two-qubit cluster onto the end
        bump(counts, "fresh_clusters");
        const double d = rng.next_double();
        if (d < p_success) {
            const bool j0 = d < pol.p_fuse_j0;
            bump(counts, j0 ? "fusion_j0" : "fusion_j1_anti");
            const int merged = chain.back() + m + (j0 ? -2 : 0); // spec counters
            if (merged == 0) {
                bump(counts, "merged_exhausted");
                if (pol.die_on_exhaustion) return {false, static_cast<int>(chain.size())};
                chain.pop_back();
                if (chain.size() < 2) return {false, static_cast<int>(chain.size())};
                continue;
            }
            bump(counts, "trims", merged - 1); // interior qubits are trimmed to 1
            chain.back() = 1;
            chain.push_back(m);
        } else {
            bump(counts, "fusion_failure");
            chain.back() -= 1;
            if (chain.back() == 0) {
                bump(counts, "end_exhausted");
                if (pol.die_on_exhaustion) return {false, static_cast<int>(chain.size()) - 1};
                chain.pop_back();
                if (chain.size() < 2) return {false, static_cast<int>(chain.size())};
            }
        }
    }
    return {true, static_cast<int>(chain.size())};
}

} // namespace

GrowthStats grow_abstract(int target_logical_size, int init_redundancy, const GrowthPolicy& policy,
                          Rng& rng, long long trials) {
    if (init_redundancy < 1) throw std::invalid_argument("grow_abstract: redundancy must be >= 1");
    if (target_logical_size < 2) throw std::invalid_argument("grow_abstract: target must be >= 2");
    if (trials < 1) throw std::invalid_argument("grow_abstract: trials must be >= 1");

    GrowthStats out;
    out.trials = trials;
    const std::uint64_t base = rng.next_u64();
    long long successes = 0;
    double size_sum = 0.0;
    for (long long t = 0; t < trials; ++t) {
        Rng trial_rng = Rng::stream(base, static_cast<std::uint64_t>(t));
        const WalkerTrialResult r =
            walker_trial(target_logical_size, init_redundancy, policy, trial_rng,
                         out.resource_counts);
        successes += r.success ? 1 : 0;
        size_sum += r.final_size;
    }
    out.success_fraction = static_cast<double>(successes) / static_cast<double>(trials);
    out.mean_final_size = size_sum / static_cast<double>(trials);
    return out;
}

// --- exact cross-validation ----------------------------------------------------------

namespace {

bool exact_growth_trial(int target, int m, const GrowthPolicy& pol, Rng& rng,
                        std::map<std::string, long long>& counts) {
    ClusterState chain = ClusterState::ideal(2, {{0, 1}}, {1, m});
    int end = 1;
    long long steps = 0;

    while (chain.n_logical() < target) {
        if (++steps > pol.max_steps) return false;

        while (chain.redundancy(end) < pol.refresh_threshold) {
            bump(counts, "ghz_consumed");
            GhzResource ghz{pol.ghz_size, +1, ghz_state(pol.ghz_size, +1), 0};
            FusionOutcome fo = add_redundancy(chain, end, ghz, rng);
            if (fo.tag == FusionTag::FusedJ0) {
                bump(counts, "refresh_j0");
                chain = std::move(*fo.merged);
                end = fo.merged_logical;
            } else if (fo.tag == FusionTag::FusedJ1) {
                bump(counts, "refresh_j1_anti");
                chain = std::move(*fo.merged);
                end = fo.merged_logical;
            } else {
                bump(counts, "refresh_failure");
                if (fo.left_exhausted) {
                    bump(counts, "end_exhausted");
                    return false; // die_on_exhaustion
                }
                chain = std::move(*fo.left);
            }
            if (++steps > pol.max_steps) return false;
        }

        bump(counts, "fresh_clusters");
        ClusterState fresh = ClusterState::ideal(2, {{0, 1}}, {m, m});
        FusionOutcome fo = fuse(chain, end, fresh, 0, rng);
        if (fo.tag == FusionTag::Failure) {
            bump(counts, "fusion_failure");
            if (fo.left_exhausted) {
                bump(counts, "end_exhausted");
                return false;
            }
            chain = std::move(*fo.left);
            continue;
        }
        bump(counts, fo.tag == FusionTag::FusedJ0 ? "fusion_j0" : "fusion_j1_anti");
        if (fo.merged_logical < 0) {
            bump(counts, "merged_exhausted");
            return false;
        }
        chain = std::move(*fo.merged);
        int merged = fo.merged_logical;
        while (chain.redundancy(merged) > 1) {
            bump(counts, "trims");
            chain = remove_redundancy(chain, merged, rng).cluster;
        }
        // the fresh cluster's free qubit is the new end: it was appended after
        // a's logicals, skipping the fused one
        end = chain.n_logical() - 1;
    }
    return true;
}

BranchComparison compare_branch(const std::string& name, double expected, long long wc,
                                long long wn, long long ec, long long en) {
    BranchComparison out;
    out.branch = name;
    out.walker_count = wc;
    out.exact_count = ec;
    out.walker_freq = wn > 0 ? static_cast<double>(wc) / static_cast<double>(wn) : 0.0;
    out.exact_freq = en > 0 ? static_cast<double>(ec) / static_cast<double>(en) : 0.0;
    // binomial standard error of the frequency difference around the expected
    // branch probability
    const double ve = en > 0 ? expected * (1.0 - expected) / static_cast<double>(en) : 0.0;
    const double vw = wn > 0 ? expected * (1.0 - expected) / static_cast<double>(wn) : 0.0;
    out.sigma = std::sqrt(ve + vw);
    const double sigma_e = std::sqrt(std::max(ve, 1e-300));
    out.pass = std::abs(out.exact_freq - expected) <= 4.0 * sigma_e &&
               std::abs(out.walker_freq - out.exact_freq) <= 4.0 * std::max(out.sigma, 1e-300);
    return out;
}

} // namespace

ValidationReport validate_abstract_vs_exact(int init_redundancy, int target_logical_size,
                                            long long trials, Rng& rng) {
    if (init_redundancy < 1 || init_redundancy > 3)
        throw std::invalid_argument("validate_abstract_vs_exact: redundancy must be 1..3");
    if (target_logical_size < 2 || target_logical_size > 4)
        throw std::invalid_argument("validate_abstract_vs_exact: target must be 2..4");

    GrowthPolicy pol; // defaults; both sides share it

    ValidationReport out;
    out.trials = trials;

    std::map<std::string, long long> walker_counts;
    std::map<std::string, long long> exact_counts;
    const std::uint64_t base_w = rng.next_u64();
    const std::uint64_t base_e = rng.next_u64();
    for (long long t = 0; t < trials; ++t) {
        Rng wrng = Rng::stream(base_w, static_cast<std::uint64_t>(t));
        walker_trial(target_logical_size, init_redundancy, pol, wrng, walker_counts);
        Rng erng = Rng::stream(base_e, static_cast<std::uint64_t>(t));
        exact_growth_trial(target_logical_size, init_redundancy, pol, erng, exact_counts);
    }

    auto total = [](const std::map<std::string, long long>& counts,
                    std::initializer_list<const char*> keys) {
        long long t = 0;
        for (const char* k : keys)
            if (auto it = counts.find(k); it != counts.end()) t += it->second;
        return t;
    };

    const long long wf = total(walker_counts, {"fusion_j0", "fusion_j1_anti", "fusion_failure"});
    const long long ef = total(exact_counts, {"fusion_j0", "fusion_j1_anti", "fusion_failure"});
    const long long wr = total(walker_counts, {"refresh_j0", "refresh_j1_anti", "refresh_failure"});
    const long long er = total(exact_counts, {"refresh_j0", "refresh_j1_anti", "refresh_failure"});

    out.branches.push_back(compare_branch("fusion_j0", 0.25, walker_counts["fusion_j0"], wf,
                                          exact_counts["fusion_j0"], ef));
    out.branches.push_back(compare_branch("fusion_j1_anti", 0.25, walker_counts["fusion_j1_anti"],
                                          wf, exact_counts["fusion_j1_anti"], ef));
    out.branches.push_back(compare_branch("fusion_failure", 0.5, walker_counts["fusion_failure"],
                                          wf, exact_counts["fusion_failure"], ef));
    if (wr > 0 && er > 0) {
        out.branches.push_back(compare_branch("refresh_j0", 0.25, walker_counts["refresh_j0"], wr,
                                              exact_counts["refresh_j0"], er));
        out.branches.push_back(compare_branch("refresh_j1_anti", 0.25,
                                              walker_counts["refresh_j1_anti"], wr,
                                              exact_counts["refresh_j1_anti"], er));
        out.branches.push_back(compare_branch("refresh_failure", 0.5,
                                              walker_counts["refresh_failure"], wr,
                                              exact_counts["refresh_failure"], er));
    }
    out.pass = std::all_of(out.branches.begin(), out.branches.end(),
                           [](const BranchComparison& b) { return b.pass; });
    return out;
}

} // namespace singlet
