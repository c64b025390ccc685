#include "singlet/state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "singlet/linalg.hpp"

namespace singlet {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

void require_finite(std::span<const cplx> xs, const char* what) {
    for (const cplx& x : xs) {
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
            throw InvalidStateError(std::string(what) + ": non-finite amplitude");
    }
}

void require_qubit_index(int q, int n) {
    if (q < 0 || q >= n) throw InvalidPairError("qubit index out of range");
}

std::vector<int> canonical_keep(std::span<const int> keep, int n) {
    if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep set");
    std::vector<int> ks(keep.begin(), keep.end());
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    for (int q : ks) require_qubit_index(q, n);
    return ks;
}

} // namespace

// --- StateVector -------------------------------------------------------------

StateVector::StateVector(int n_qubits) : StateVector(n_qubits, std::size_t{0}) {}

StateVector::StateVector(int n_qubits, std::size_t basis_index) : n_qubits_(n_qubits) {
    if (n_qubits < 0 || n_qubits > 26) throw InvalidStateError("unsupported qubit count");
    amps_.assign(std::size_t{1} << n_qubits, cplx{0, 0});
    if (basis_index >= amps_.size()) throw InvalidStateError("basis index out of range");
    amps_[basis_index] = 1.0;
}

StateVector::StateVector(int n_qubits, std::vector<cplx> amplitudes)
    : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
    if (n_qubits < 0 || n_qubits > 26) throw InvalidStateError("unsupported qubit count");
    if (amps_.size() != (std::size_t{1} << n_qubits))
        throw InvalidStateError("amplitude vector size is not 2^n");
    require_finite(amps_, "StateVector");
}

double StateVector::norm_squared() const {
    double s = 0.0;
    for (const cplx& a : amps_) s += std::norm(a);
    return s;
}

double StateVector::norm() const { return std::sqrt(norm_squared()); }

bool StateVector::is_normalized(double tol) const { return std::abs(norm_squared() - 1.0) <= tol; }

void StateVector::normalize() {
    const double n = norm();
    if (n < kZeroProbabilityTol) throw InvalidStateError("cannot normalize a (near-)zero vector");
    for (cplx& a : amps_) a /= n;
}

// --- DensityMatrix -----------------------------------------------------------

DensityMatrix::DensityMatrix(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 0 || n_qubits > 13) throw InvalidStateError("unsupported qubit count");
    dim_ = std::size_t{1} << n_qubits;
    m_.assign(dim_ * dim_, cplx{0, 0});
    m_[0] = 1.0;
}

DensityMatrix::DensityMatrix(int n_qubits, std::vector<cplx> entries)
    : n_qubits_(n_qubits), m_(std::move(entries)) {
    if (n_qubits < 0 || n_qubits > 13) throw InvalidStateError("unsupported qubit count");
    dim_ = std::size_t{1} << n_qubits;
    if (m_.size() != dim_ * dim_) throw InvalidStateError("density matrix size is not 2^n x 2^n");
    require_finite(m_, "DensityMatrix");
}

double DensityMatrix::trace_real() const {
    double t = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) t += m_[i * dim_ + i].real();
    return t;
}

void DensityMatrix::scale(double f) {
    for (cplx& e : m_) e *= f;
}

bool DensityMatrix::is_hermitian(double tol) const {
    for (std::size_t r = 0; r < dim_; ++r)
        for (std::size_t c = r; c < dim_; ++c)
            if (std::abs(m_[r * dim_ + c] - std::conj(m_[c * dim_ + r])) > tol) return false;
    return true;
}

double DensityMatrix::min_eigenvalue() const {
    const auto values = linalg::hermitian_eigenvalues(m_, static_cast<int>(dim_));
    return values.front();
}

void DensityMatrix::validate(double tol) const {
    if (!is_hermitian(tol)) throw InvalidStateError("density matrix is not Hermitian");
    if (std::abs(trace_real() - 1.0) > tol) throw InvalidStateError("density matrix trace != 1");
    if (min_eigenvalue() < -tol) throw InvalidStateError("density matrix has a negative eigenvalue");
}

// --- QuantumState ------------------------------------------------------------

int QuantumState::n_qubits() const {
    return is_pure() ? vector().n_qubits() : matrix().n_qubits();
}

DensityMatrix to_density(const StateVector& psi) {
    const std::size_t d = psi.dim();
    std::vector<cplx> m(d * d);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) m[r * d + c] = psi.amp(r) * std::conj(psi.amp(c));
    return DensityMatrix(psi.n_qubits(), std::move(m));
}

DensityMatrix to_density(const QuantumState& s) {
    return s.is_pure() ? to_density(s.vector()) : s.matrix();
}

// --- named states ------------------------------------------------------------

StateVector ket(std::string_view s) {
    if (s.empty()) throw std::invalid_argument("ket: empty string");
    StateVector psi(0, std::vector<cplx>{cplx{1, 0}});
    for (std::size_t q = 0; q < s.size(); ++q) {
        std::array<cplx, 2> one;
        switch (s[q]) {
            case '0': one = {cplx{1, 0}, cplx{0, 0}}; break;
            case '1': one = {cplx{0, 0}, cplx{1, 0}}; break;
            case '+': one = {cplx{kInvSqrt2, 0}, cplx{kInvSqrt2, 0}}; break;
            case '-': one = {cplx{kInvSqrt2, 0}, cplx{-kInvSqrt2, 0}}; break;
            case 'r': one = {cplx{kInvSqrt2, 0}, cplx{0, kInvSqrt2}}; break;
            case 'l': one = {cplx{kInvSqrt2, 0}, cplx{0, -kInvSqrt2}}; break;
            default: throw std::invalid_argument("ket: unknown character");
        }
        psi = tensor(psi, StateVector(1, std::vector<cplx>{one[0], one[1]}));
    }
    return psi;
}

namespace {
// amplitudes by ket string (leftmost char = qubit 0): "00" -> index 0,
// "10" -> index 1, "01" -> index 2, "11" -> index 3
StateVector two_qubit(cplx k00, cplx k10, cplx k01, cplx k11) {
    return StateVector(2, std::vector<cplx>{k00, k10, k01, k11});
}
} // namespace

StateVector psi_minus_state() { return two_qubit(0, {-kInvSqrt2, 0}, {kInvSqrt2, 0}, 0); }
StateVector psi_plus_state() { return two_qubit(0, {kInvSqrt2, 0}, {kInvSqrt2, 0}, 0); }
StateVector phi_minus_state() { return two_qubit({kInvSqrt2, 0}, 0, 0, {-kInvSqrt2, 0}); }
StateVector phi_plus_state() { return two_qubit({kInvSqrt2, 0}, 0, 0, {kInvSqrt2, 0}); }

StateVector ghz_state(int n_qubits, int sign) {
    if (n_qubits < 1) throw std::invalid_argument("ghz_state: need at least one qubit");
    if (sign != 1 && sign != -1) throw std::invalid_argument("ghz_state: sign must be +-1");
    StateVector psi(n_qubits);
    psi.amp(0) = kInvSqrt2;
    psi.amp((std::size_t{1} << n_qubits) - 1) = sign * kInvSqrt2;
    return psi;
}

DensityMatrix maximally_mixed(int n_qubits) {
    DensityMatrix rho(n_qubits);
    const std::size_t d = rho.dim();
    std::vector<cplx> m(d * d, cplx{0, 0});
    for (std::size_t i = 0; i < d; ++i) m[i * d + i] = 1.0 / static_cast<double>(d);
    return DensityMatrix(n_qubits, std::move(m));
}

// --- Bloch correspondence ------------------------------------------------------

DensityMatrix density_from_bloch(const BlochVector& r) {
    if (r.length_squared() > 1.0 + kStructureTol)
        throw InvalidBlochError("Bloch vector outside the unit ball");
    std::vector<cplx> m(4);
    m[0] = 0.5 * (1.0 + r.z);
    m[1] = 0.5 * cplx{r.x, -r.y};
    m[2] = 0.5 * cplx{r.x, r.y};
    m[3] = 0.5 * (1.0 - r.z);
    return DensityMatrix(1, std::move(m));
}

BlochVector bloch_from_density(const DensityMatrix& rho) {
    if (rho.n_qubits() != 1) throw InvalidStateError("bloch_from_density: not a 1-qubit state");
    if (!rho.is_hermitian()) throw InvalidStateError("bloch_from_density: not Hermitian");
    if (std::abs(rho.trace_real() - 1.0) > kStructureTol)
        throw InvalidStateError("bloch_from_density: trace != 1");
    BlochVector r;
    r.x = 2.0 * rho.at(1, 0).real();
    r.y = 2.0 * rho.at(1, 0).imag();
    r.z = rho.at(0, 0).real() - rho.at(1, 1).real();
    return r;
}

// --- composition ----------------------------------------------------------------

StateVector tensor(const StateVector& a, const StateVector& b) {
    const int n = a.n_qubits() + b.n_qubits();
    std::vector<cplx> out(std::size_t{1} << n);
    const std::size_t da = a.dim();
    for (std::size_t ib = 0; ib < b.dim(); ++ib) {
        const cplx bb = b.amp(ib);
        const std::size_t base = ib * da;
        for (std::size_t ia = 0; ia < da; ++ia) out[base + ia] = a.amp(ia) * bb;
    }
    return StateVector(n, std::move(out));
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
    const int n = a.n_qubits() + b.n_qubits();
    const std::size_t da = a.dim(), db = b.dim(), d = da * db;
    std::vector<cplx> out(d * d);
    for (std::size_t rb = 0; rb < db; ++rb)
        for (std::size_t cb = 0; cb < db; ++cb) {
            const cplx bb = b.at(rb, cb);
            for (std::size_t ra = 0; ra < da; ++ra)
                for (std::size_t ca = 0; ca < da; ++ca)
                    out[(rb * da + ra) * d + (cb * da + ca)] = a.at(ra, ca) * bb;
        }
    return DensityMatrix(n, std::move(out));
}

QuantumState tensor(std::span<const QuantumState> parts) {
    if (parts.empty()) throw std::invalid_argument("tensor: empty list");
    const bool all_pure =
        std::all_of(parts.begin(), parts.end(), [](const QuantumState& p) { return p.is_pure(); });
    if (all_pure) {
        StateVector acc = parts[0].vector();
        for (std::size_t i = 1; i < parts.size(); ++i) acc = tensor(acc, parts[i].vector());
        return QuantumState(std::move(acc));
    }
    DensityMatrix acc = to_density(parts[0]);
    for (std::size_t i = 1; i < parts.size(); ++i) acc = tensor(acc, to_density(parts[i]));
    return QuantumState(std::move(acc));
}

// --- partial trace ---------------------------------------------------------------

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep) {
    const int n = rho.n_qubits();
    const std::vector<int> ks = canonical_keep(keep, n);
    const int k = static_cast<int>(ks.size());
    std::vector<int> env;
    for (int q = 0; q < n; ++q)
        if (!std::binary_search(ks.begin(), ks.end(), q)) env.push_back(q);

    auto place = [](std::size_t pattern, const std::vector<int>& qubits) {
        std::size_t idx = 0;
        for (std::size_t b = 0; b < qubits.size(); ++b)
            if (pattern & (std::size_t{1} << b)) idx |= std::size_t{1} << qubits[b];
        return idx;
    };

    const std::size_t dk = std::size_t{1} << k;
    const std::size_t de = std::size_t{1} << env.size();
    std::vector<cplx> out(dk * dk, cplx{0, 0});
    for (std::size_t r = 0; r < dk; ++r) {
        const std::size_t rbase = place(r, ks);
        for (std::size_t c = 0; c < dk; ++c) {
            const std::size_t cbase = place(c, ks);
            cplx s{0, 0};
            for (std::size_t e = 0; e < de; ++e) {
                const std::size_t eoff = place(e, env);
                s += rho.at(rbase | eoff, cbase | eoff);
            }
            out[r * dk + c] = s;
        }
    }
    return DensityMatrix(k, std::move(out));
}

DensityMatrix partial_trace(const StateVector& psi, std::span<const int> keep) {
    const int n = psi.n_qubits();
    const std::vector<int> ks = canonical_keep(keep, n);
    const int k = static_cast<int>(ks.size());
    std::vector<int> env;
    for (int q = 0; q < n; ++q)
        if (!std::binary_search(ks.begin(), ks.end(), q)) env.push_back(q);

    auto place = [](std::size_t pattern, const std::vector<int>& qubits) {
        std::size_t idx = 0;
        for (std::size_t b = 0; b < qubits.size(); ++b)
            if (pattern & (std::size_t{1} << b)) idx |= std::size_t{1} << qubits[b];
        return idx;
    };

    const std::size_t dk = std::size_t{1} << k;
    const std::size_t de = std::size_t{1} << env.size();
    std::vector<cplx> out(dk * dk, cplx{0, 0});
    for (std::size_t e = 0; e < de; ++e) {
        const std::size_t eoff = place(e, env);
        for (std::size_t r = 0; r < dk; ++r) {
            const cplx ar = psi.amp(place(r, ks) | eoff);
            if (ar == cplx{0, 0}) continue;
            for (std::size_t c = 0; c < dk; ++c)
                out[r * dk + c] += ar * std::conj(psi.amp(place(c, ks) | eoff));
        }
    }
    return DensityMatrix(k, std::move(out));
}

DensityMatrix partial_trace(const QuantumState& s, std::span<const int> keep) {
    return s.is_pure() ? partial_trace(s.vector(), keep) : partial_trace(s.matrix(), keep);
}

// --- fidelity ---------------------------------------------------------------------

double fidelity(const StateVector& a, const StateVector& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
    cplx overlap{0, 0};
    for (std::size_t i = 0; i < a.dim(); ++i) overlap += std::conj(a.amp(i)) * b.amp(i);
    return std::norm(overlap);
}

double fidelity(const StateVector& a, const DensityMatrix& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
    cplx s{0, 0};
    for (std::size_t r = 0; r < a.dim(); ++r) {
        cplx row{0, 0};
        for (std::size_t c = 0; c < a.dim(); ++c) row += b.at(r, c) * a.amp(c);
        s += std::conj(a.amp(r)) * row;
    }
    return s.real();
}

double fidelity(const DensityMatrix& a, const StateVector& b) { return fidelity(b, a); }

double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
    const int d = static_cast<int>(a.dim());
    const auto ra = linalg::hermitian_sqrt(a.entries(), d);
    const auto inner = linalg::matmul(linalg::matmul(ra, b.entries(), d), ra, d);
    const auto values = linalg::hermitian_eigenvalues(inner, d);
    double s = 0.0;
    for (double v : values) s += std::sqrt(std::max(0.0, v));
    return s * s;
}

double fidelity(const QuantumState& a, const QuantumState& b) {
    if (a.is_pure() && b.is_pure()) return fidelity(a.vector(), b.vector());
    if (a.is_pure()) return fidelity(a.vector(), b.matrix());
    if (b.is_pure()) return fidelity(b.vector(), a.matrix());
    return fidelity(a.matrix(), b.matrix());
}

bool approx_equal_up_to_phase(const StateVector& a, const StateVector& b, double tol) {
    return a.dim() == b.dim() && std::abs(fidelity(a, b) - 1.0) <= tol;
}

// --- single-qubit operations --------------------------------------------------------

bool is_unitary(const Mat2& u, double tol) {
    // U^dag U == I entrywise
    const cplx c00 = std::conj(u[0]) * u[0] + std::conj(u[2]) * u[2];
    const cplx c01 = std::conj(u[0]) * u[1] + std::conj(u[2]) * u[3];
    const cplx c11 = std::conj(u[1]) * u[1] + std::conj(u[3]) * u[3];
    return std::abs(c00 - 1.0) <= tol && std::abs(c01) <= tol && std::abs(c11 - 1.0) <= tol;
}

StateVector apply_single_qubit_unitary(const StateVector& psi, const Mat2& u, int q) {
    require_qubit_index(q, psi.n_qubits());
    if (!is_unitary(u)) throw std::invalid_argument("apply_single_qubit_unitary: not unitary");
    std::vector<cplx> out(psi.amplitudes().begin(), psi.amplitudes().end());
    const std::size_t bit = std::size_t{1} << q;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i & bit) continue;
        const cplx a0 = out[i];
        const cplx a1 = out[i | bit];
        out[i] = u[0] * a0 + u[1] * a1;
        out[i | bit] = u[2] * a0 + u[3] * a1;
    }
    return StateVector(psi.n_qubits(), std::move(out));
}

DensityMatrix apply_single_qubit_unitary(const DensityMatrix& rho, const Mat2& u, int q) {
    require_qubit_index(q, rho.n_qubits());
    if (!is_unitary(u)) throw std::invalid_argument("apply_single_qubit_unitary: not unitary");
    const std::size_t d = rho.dim();
    const std::size_t bit = std::size_t{1} << q;
    std::vector<cplx> m(rho.entries().begin(), rho.entries().end());
    // rows: rho <- U rho
    for (std::size_t r = 0; r < d; ++r) {
        if (r & bit) continue;
        for (std::size_t c = 0; c < d; ++c) {
            const cplx a0 = m[r * d + c];
            const cplx a1 = m[(r | bit) * d + c];
            m[r * d + c] = u[0] * a0 + u[1] * a1;
            m[(r | bit) * d + c] = u[2] * a0 + u[3] * a1;
        }
    }
    // columns: rho <- rho U^dag
    for (std::size_t c = 0; c < d; ++c) {
        if (c & bit) continue;
        for (std::size_t r = 0; r < d; ++r) {
            const cplx a0 = m[r * d + c];
            const cplx a1 = m[r * d + (c | bit)];
            m[r * d + c] = a0 * std::conj(u[0]) + a1 * std::conj(u[1]);
            m[r * d + (c | bit)] = a0 * std::conj(u[2]) + a1 * std::conj(u[3]);
        }
    }
    return DensityMatrix(rho.n_qubits(), std::move(m));
}

Basis1Q Basis1Q::computational() {
    return {{cplx{1, 0}, cplx{0, 0}}, {cplx{0, 0}, cplx{1, 0}}};
}

Basis1Q Basis1Q::plus_minus() {
    return {{cplx{kInvSqrt2, 0}, cplx{kInvSqrt2, 0}}, {cplx{kInvSqrt2, 0}, cplx{-kInvSqrt2, 0}}};
}

bool Basis1Q::is_orthonormal(double tol) const {
    const double n0 = std::norm(b0[0]) + std::norm(b0[1]);
    const double n1 = std::norm(b1[0]) + std::norm(b1[1]);
    const cplx ip = std::conj(b0[0]) * b1[0] + std::conj(b0[1]) * b1[1];
    return std::abs(n0 - 1.0) <= tol && std::abs(n1 - 1.0) <= tol && std::abs(ip) <= tol;
}

namespace {

// Unnormalized projection of qubit q onto basis state `which`; returns the
// branch probability and leaves the projected (unnormalized) amplitudes in
// `out`.
double project_1q(const StateVector& psi, int q, const Basis1Q& basis, int which,
                  std::vector<cplx>& out) {
    const std::array<cplx, 2>& b = which == 0 ? basis.b0 : basis.b1;
    const std::size_t bit = std::size_t{1} << q;
    out.assign(psi.dim(), cplx{0, 0});
    double p = 0.0;
    for (std::size_t i = 0; i < psi.dim(); ++i) {
        if (i & bit) continue;
        // overlap <b| (component of psi on qubit q)
        const cplx ov = std::conj(b[0]) * psi.amp(i) + std::conj(b[1]) * psi.amp(i | bit);
        p += std::norm(ov);
        out[i] = ov * b[0];
        out[i | bit] = ov * b[1];
    }
    return p;
}

void require_basis(const Basis1Q& basis) {
    if (!basis.is_orthonormal()) throw std::invalid_argument("measurement basis not orthonormal");
}

} // namespace

SingleQubitMeasurement measure_single_qubit(const StateVector& psi, int q, const Basis1Q& basis,
                                            Rng& rng) {
    require_qubit_index(q, psi.n_qubits());
    require_basis(basis);
    std::vector<cplx> proj0;
    const double p0 = project_1q(psi, q, basis, 0, proj0);
    const int outcome = rng.next_double() < p0 ? 0 : 1;
    std::vector<cplx> chosen;
    double p = p0;
    if (outcome == 0) {
        chosen = std::move(proj0);
    } else {
        p = project_1q(psi, q, basis, 1, chosen);
    }
    StateVector post(psi.n_qubits(), std::move(chosen));
    post.normalize();
    return {outcome, p, std::move(post)};
}

SingleQubitMeasurementDm measure_single_qubit(const DensityMatrix& rho, int q, const Basis1Q& basis,
                                              Rng& rng) {
    require_qubit_index(q, rho.n_qubits());
    require_basis(basis);
    // Project via the 1-qubit unitary trick: P_b = |b><b| applied on rows and
    // columns, probability from the trace.
    auto project = [&](int which) {
        const std::array<cplx, 2>& b = which == 0 ? basis.b0 : basis.b1;
        const std::size_t d = rho.dim();
        const std::size_t bit = std::size_t{1} << q;
        std::vector<cplx> m(d * d, cplx{0, 0});
        for (std::size_t r = 0; r < d; ++r) {
            if (r & bit) continue;
            for (std::size_t c = 0; c < d; ++c) {
                if (c & bit) continue;
                cplx s{0, 0};
                s += std::conj(b[0]) * rho.at(r, c) * b[0];
                s += std::conj(b[0]) * rho.at(r, c | bit) * b[1];
                s += std::conj(b[1]) * rho.at(r | bit, c) * b[0];
                s += std::conj(b[1]) * rho.at(r | bit, c | bit) * b[1];
                m[r * d + c] = s * b[0] * std::conj(b[0]);
                m[r * d + (c | bit)] = s * b[0] * std::conj(b[1]);
                m[(r | bit) * d + c] = s * b[1] * std::conj(b[0]);
                m[(r | bit) * d + (c | bit)] = s * b[1] * std::conj(b[1]);
            }
        }
        return DensityMatrix(rho.n_qubits(), std::move(m));
    };
    DensityMatrix m0 = project(0);
    const double p0 = m0.trace_real();
    const int outcome = rng.next_double() < p0 ? 0 : 1;
    DensityMatrix chosen = outcome == 0 ? std::move(m0) : project(1);
    const double p = outcome == 0 ? p0 : chosen.trace_real();
    if (p < kZeroProbabilityTol) throw ImpossibleBranchError("sampled a zero-probability branch");
    chosen.scale(1.0 / p);
    return {outcome, p, std::move(chosen)};
}

Postselect1QResult postselect_single_qubit(const StateVector& psi, int q, const Basis1Q& basis,
                                           int which) {
    require_qubit_index(q, psi.n_qubits());
    require_basis(basis);
    std::vector<cplx> proj;
    const double p = project_1q(psi, q, basis, which, proj);
    if (p < kZeroProbabilityTol)
        throw ImpossibleBranchError("postselect_single_qubit: branch probability ~ 0");
    StateVector post(psi.n_qubits(), std::move(proj));
    post.normalize();
    return {std::move(post), p};
}

namespace {

// Removes qubit q after it has been collapsed onto |b>: contracts <b| against
// the state. The input amplitudes are the *unnormalized* projected branch.
StateVector drop_collapsed_qubit(const std::vector<cplx>& amps, int n, int q,
                                 const std::array<cplx, 2>& b, double p) {
    const std::size_t bit = std::size_t{1} << q;
    const std::size_t low_mask = bit - 1;
    std::vector<cplx> out(std::size_t{1} << (n - 1));
    for (std::size_t j = 0; j < out.size(); ++j) {
        const std::size_t i = ((j & ~low_mask) << 1) | (j & low_mask);
        out[j] = (std::conj(b[0]) * amps[i] + std::conj(b[1]) * amps[i | bit]) / std::sqrt(p);
    }
    return StateVector(n - 1, std::move(out));
}

} // namespace

RemovedQubitMeasurement measure_and_remove(const StateVector& psi, int q, const Basis1Q& basis,
                                           Rng& rng) {
    require_qubit_index(q, psi.n_qubits());
    require_basis(basis);
    std::vector<cplx> proj0;
    const double p0 = project_1q(psi, q, basis, 0, proj0);
    const int outcome = rng.next_double() < p0 ? 0 : 1;
    std::vector<cplx> proj;
    double p = p0;
    if (outcome == 0) {
        proj = std::move(proj0);
    } else {
        p = project_1q(psi, q, basis, 1, proj);
    }
    if (p < kZeroProbabilityTol) throw ImpossibleBranchError("sampled a zero-probability branch");
    const std::array<cplx, 2>& b = outcome == 0 ? basis.b0 : basis.b1;
    return {outcome, p, drop_collapsed_qubit(proj, psi.n_qubits(), q, b, p)};
}

RemovedQubitMeasurement postselect_and_remove(const StateVector& psi, int q, const Basis1Q& basis,
                                              int which) {
    require_qubit_index(q, psi.n_qubits());
    require_basis(basis);
    std::vector<cplx> proj;
    const double p = project_1q(psi, q, basis, which, proj);
    if (p < kZeroProbabilityTol)
        throw ImpossibleBranchError("postselect_and_remove: branch probability ~ 0");
    const std::array<cplx, 2>& b = which == 0 ? basis.b0 : basis.b1;
    return {which, p, drop_collapsed_qubit(proj, psi.n_qubits(), q, b, p)};
}

StateVector contract_pair(const StateVector& psi, int qa, int qb,
                          const std::array<cplx, 4>& ket4) {
    const int n = psi.n_qubits();
    require_qubit_index(qa, n);
    require_qubit_index(qb, n);
    if (qa == qb) throw InvalidPairError("contract_pair: equal indices");
    const std::size_t bit_a = std::size_t{1} << qa;
    const std::size_t bit_b = std::size_t{1} << qb;
    const int lo = std::min(qa, qb), hi = std::max(qa, qb);
    const std::size_t lo_mask = (std::size_t{1} << lo) - 1;
    const std::size_t mid_mask = ((std::size_t{1} << (hi - 1)) - 1) & ~lo_mask;

    std::vector<cplx> out(std::size_t{1} << (n - 2));
    for (std::size_t j = 0; j < out.size(); ++j) {
        // re-expand j into the full index with holes at lo and hi
        std::size_t i = (j & lo_mask) | ((j & mid_mask) << 1) |
                        ((j & ~(lo_mask | mid_mask)) << 2);
        cplx s{0, 0};
        for (int ba = 0; ba < 2; ++ba)
            for (int bb = 0; bb < 2; ++bb) {
                const std::size_t idx = i | (ba ? bit_a : 0) | (bb ? bit_b : 0);
                s += std::conj(ket4[ba + 2 * bb]) * psi.amp(idx);
            }
        out[j] = s;
    }
    return StateVector(n - 2, std::move(out));
}

std::optional<std::pair<StateVector, StateVector>> factor_product(const StateVector& psi,
                                                                  int n_left, double tol) {
    const int n = psi.n_qubits();
    if (n_left <= 0 || n_left >= n) throw std::invalid_argument("factor_product: bad partition");
    const std::size_t dl = std::size_t{1} << n_left;
    const std::size_t dr = std::size_t{1} << (n - n_left);

    // amplitude matrix M[ir][il] = psi[ir * dl + il]; product iff rank 1
    std::size_t best_r = 0;
    double best = -1.0;
    for (std::size_t ir = 0; ir < dr; ++ir) {
        double rownorm = 0.0;
        for (std::size_t il = 0; il < dl; ++il) rownorm += std::norm(psi.amp(ir * dl + il));
        if (rownorm > best) {
            best = rownorm;
            best_r = ir;
        }
    }
    if (best <= 0.0) return std::nullopt;

    std::vector<cplx> left(dl);
    const double inv = 1.0 / std::sqrt(best);
    for (std::size_t il = 0; il < dl; ++il) left[il] = psi.amp(best_r * dl + il) * inv;

    std::vector<cplx> right(dr);
    for (std::size_t ir = 0; ir < dr; ++ir) {
        cplx s{0, 0};
        for (std::size_t il = 0; il < dl; ++il) s += std::conj(left[il]) * psi.amp(ir * dl + il);
        right[ir] = s;
    }

    double residual = 0.0;
    for (std::size_t ir = 0; ir < dr; ++ir)
        for (std::size_t il = 0; il < dl; ++il)
            residual += std::norm(psi.amp(ir * dl + il) - left[il] * right[ir]);
    if (std::sqrt(residual) > tol) return std::nullopt;

    StateVector l(n_left, std::move(left));
    StateVector r(n - n_left, std::move(right));
    l.normalize();
    r.normalize();
    return std::make_pair(std::move(l), std::move(r));
}

// --- randomized helpers --------------------------------------------------------------

BlochVector random_bloch_vector(Rng& rng, double max_length) {
    // uniform direction x radius ~ cbrt(u) gives uniform density in the ball
    const double z = 2.0 * rng.next_double() - 1.0;
    const double phi = 2.0 * std::numbers::pi * rng.next_double();
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double r = max_length * std::cbrt(rng.next_double());
    return {r * s * std::cos(phi), r * s * std::sin(phi), r * z};
}

Mat2 haar_unitary_2x2(Rng& rng) {
    // uniform unit quaternion -> SU(2)
    double q0 = rng.next_gaussian(), q1 = rng.next_gaussian();
    double q2 = rng.next_gaussian(), q3 = rng.next_gaussian();
    const double invn = 1.0 / std::sqrt(q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3);
    q0 *= invn;
    q1 *= invn;
    q2 *= invn;
    q3 *= invn;
    return {cplx{q0, q1}, cplx{q2, q3}, cplx{-q2, q3}, cplx{q0, -q1}};
}

StateVector random_state_vector(int n_qubits, Rng& rng) {
    std::vector<cplx> amps(std::size_t{1} << n_qubits);
    for (cplx& a : amps) a = cplx{rng.next_gaussian(), rng.next_gaussian()};
    StateVector psi(n_qubits, std::move(amps));
    psi.normalize();
    return psi;
}

} // namespace singlet
