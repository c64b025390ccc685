#pragma once

// Dense multi-qubit states.
//
// Qubit ordering is little-endian and fixed globally: qubit 0 is the least
// significant bit of the amplitude index. Ket strings read left to right as
// qubit 0, qubit 1, ...  so ket("01") is the basis state with qubit 0 in |0>
// and qubit 1 in |1>, i.e. amplitude index 0b10 = 2.
//
// Pure protocols run on StateVector (practical up to ~20 qubits); anything
// that needs mixed inputs runs on DensityMatrix (up to ~10 qubits). A
// QuantumState handle knows which representation it holds; promoting a vector
// to a matrix is explicit (to_density).

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "singlet/bloch.hpp"
#include "singlet/errors.hpp"
#include "singlet/rng.hpp"

namespace singlet {

using cplx = std::complex<double>;

/// Default tolerance for structural checks (norm, trace, hermiticity,
/// unitarity, orthonormality).
inline constexpr double kStructureTol = 1e-10;
/// Default tolerance for exact round-trips (Bloch <-> density, recurrences).
inline constexpr double kRoundTripTol = 1e-12;
/// Branch probabilities below this are treated as impossible rather than as
/// round-off.
inline constexpr double kZeroProbabilityTol = 1e-14;

class StateVector {
public:
    StateVector() = default;

    /// |0...0> on n qubits.
    explicit StateVector(int n_qubits);

    /// Computational basis state with the given amplitude index.
    StateVector(int n_qubits, std::size_t basis_index);

    /// Takes ownership of 2^n amplitudes. Rejects wrong sizes and non-finite
    /// entries; does not normalize.
    StateVector(int n_qubits, std::vector<cplx> amplitudes);

    int n_qubits() const { return n_qubits_; }
    std::size_t dim() const { return amps_.size(); }

    std::span<const cplx> amplitudes() const { return amps_; }
    const cplx& amp(std::size_t i) const { return amps_[i]; }
    cplx& amp(std::size_t i) { return amps_[i]; }

    double norm_squared() const;
    double norm() const;
    bool is_normalized(double tol = kStructureTol) const;
    void normalize();

private:
    int n_qubits_ = 0;
    std::vector<cplx> amps_;
};

class DensityMatrix {
public:
    DensityMatrix() = default;

    /// |0...0><0...0| on n qubits.
    explicit DensityMatrix(int n_qubits);

    /// Takes ownership of a row-major 2^n x 2^n matrix. Rejects wrong sizes
    /// and non-finite entries.
    DensityMatrix(int n_qubits, std::vector<cplx> entries);

    int n_qubits() const { return n_qubits_; }
    std::size_t dim() const { return dim_; }

    const cplx& at(std::size_t row, std::size_t col) const { return m_[row * dim_ + col]; }
    cplx& at(std::size_t row, std::size_t col) { return m_[row * dim_ + col]; }
    std::span<const cplx> entries() const { return m_; }

    double trace_real() const;
    void scale(double f);

    bool is_hermitian(double tol = kStructureTol) const;
    double min_eigenvalue() const;

    /// Throws InvalidStateError unless Hermitian, trace 1 and PSD within tol.
    void validate(double tol = kStructureTol) const;

private:
    int n_qubits_ = 0;
    std::size_t dim_ = 0;
    std::vector<cplx> m_;
};

/// A state handle that knows whether it is pure or mixed.
class QuantumState {
public:
    QuantumState(StateVector sv) : rep_(std::move(sv)) {}
    QuantumState(DensityMatrix dm) : rep_(std::move(dm)) {}

    bool is_pure() const { return std::holds_alternative<StateVector>(rep_); }
    int n_qubits() const;

    const StateVector& vector() const { return std::get<StateVector>(rep_); }
    const DensityMatrix& matrix() const { return std::get<DensityMatrix>(rep_); }

private:
    std::variant<StateVector, DensityMatrix> rep_;
};

/// Explicit vector -> matrix promotion: |psi><psi|.
DensityMatrix to_density(const StateVector& psi);
/// Identity on QuantumState when already mixed.
DensityMatrix to_density(const QuantumState& s);

// --- named states -----------------------------------------------------------

/// Product basis state from a ket string over {0, 1, +, -, r, l}; leftmost
/// character is qubit 0. r/l are the circular states (|0> +- i|1>)/sqrt(2).
StateVector ket(std::string_view s);

StateVector psi_minus_state(); // (|01> - |10>)/sqrt(2), the singlet
StateVector psi_plus_state();  // (|01> + |10>)/sqrt(2)
StateVector phi_minus_state(); // (|00> - |11>)/sqrt(2)
StateVector phi_plus_state();  // (|00> + |11>)/sqrt(2)

/// (|0^n> + sign |1^n>)/sqrt(2); sign is +1 or -1.
StateVector ghz_state(int n_qubits, int sign);

DensityMatrix maximally_mixed(int n_qubits);

// --- Bloch correspondence ----------------------------------------------------

/// rho = (I + r.sigma)/2. Throws InvalidBlochError when |r| > 1 + 1e-10.
DensityMatrix density_from_bloch(const BlochVector& r);

/// Inverse of density_from_bloch; throws InvalidStateError for anything but a
/// valid 1-qubit density matrix.
BlochVector bloch_from_density(const DensityMatrix& rho);

// --- composition and reduction ------------------------------------------------

StateVector tensor(const StateVector& a, const StateVector& b);
DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);

/// Tensor product of an ordered list; qubit ordering is concatenation order.
/// If any part is mixed the result is mixed. Empty list throws.
QuantumState tensor(std::span<const QuantumState> parts);

/// Reduced density matrix over `keep` (indices deduplicated and sorted; the
/// kept qubits are renumbered 0..k-1 in ascending original order).
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep);
DensityMatrix partial_trace(const StateVector& psi, std::span<const int> keep);
DensityMatrix partial_trace(const QuantumState& s, std::span<const int> keep);

// --- fidelity -----------------------------------------------------------------

/// |<a|b>|^2 for pure states; <a|rho|a> pure-vs-mixed; Uhlmann
/// (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 mixed-vs-mixed. 1 iff equal up to
/// global phase in the pure case; symmetric in its arguments.
double fidelity(const StateVector& a, const StateVector& b);
double fidelity(const StateVector& a, const DensityMatrix& b);
double fidelity(const DensityMatrix& a, const StateVector& b);
double fidelity(const DensityMatrix& a, const DensityMatrix& b);
double fidelity(const QuantumState& a, const QuantumState& b);

bool approx_equal_up_to_phase(const StateVector& a, const StateVector& b,
                              double tol = kStructureTol);

// --- single-qubit operations ---------------------------------------------------

/// 2x2 matrix in row-major order {u00, u01, u10, u11}.
using Mat2 = std::array<cplx, 4>;

inline constexpr Mat2 kPauliX{cplx{0, 0}, cplx{1, 0}, cplx{1, 0}, cplx{0, 0}};
inline constexpr Mat2 kPauliY{cplx{0, 0}, cplx{0, -1}, cplx{0, 1}, cplx{0, 0}};
inline constexpr Mat2 kPauliZ{cplx{1, 0}, cplx{0, 0}, cplx{0, 0}, cplx{-1, 0}};

bool is_unitary(const Mat2& u, double tol = kStructureTol);

/// Applies u on qubit q. Throws for non-unitary u (within tol) or bad index.
StateVector apply_single_qubit_unitary(const StateVector& psi, const Mat2& u, int q);
DensityMatrix apply_single_qubit_unitary(const DensityMatrix& rho, const Mat2& u, int q);

/// An orthonormal single-qubit measurement basis {b0, b1}.
struct Basis1Q {
    std::array<cplx, 2> b0;
    std::array<cplx, 2> b1;

    static Basis1Q computational(); // {|0>, |1>}
    static Basis1Q plus_minus();    // {|+>, |->}

    bool is_orthonormal(double tol = kStructureTol) const;
};

struct SingleQubitMeasurement {
    int outcome = 0; // 0 -> collapsed onto b0, 1 -> onto b1
    double probability = 0.0;
    StateVector post; // measured qubit kept, collapsed onto the outcome state
};

/// Projective measurement of qubit q in the given basis, sampled with Born
/// probabilities. Deterministic given the rng state.
SingleQubitMeasurement measure_single_qubit(const StateVector& psi, int q,
                                            const Basis1Q& basis, Rng& rng);

struct SingleQubitMeasurementDm {
    int outcome = 0;
    double probability = 0.0;
    DensityMatrix post;
};

SingleQubitMeasurementDm measure_single_qubit(const DensityMatrix& rho, int q,
                                              const Basis1Q& basis, Rng& rng);

struct Postselect1QResult {
    StateVector post;
    double probability = 0.0;
};

/// Exact branch analysis: projects qubit q onto basis state `which` and
/// renormalizes. Throws ImpossibleBranchError below the zero-probability
/// threshold.
Postselect1QResult postselect_single_qubit(const StateVector& psi, int q,
                                           const Basis1Q& basis, int which);

struct RemovedQubitMeasurement {
    int outcome = 0;
    double probability = 0.0;
    StateVector post; // one qubit fewer; indices above q shift down by one
};

/// Measures qubit q and removes it from the register (the collapsed qubit
/// factors out exactly).
RemovedQubitMeasurement measure_and_remove(const StateVector& psi, int q,
                                           const Basis1Q& basis, Rng& rng);

RemovedQubitMeasurement postselect_and_remove(const StateVector& psi, int q,
                                              const Basis1Q& basis, int which);

/// Contracts a two-qubit ket against qubits (qa, qb): returns the state on the
/// remaining qubits with weight <ket|_{qa,qb} psi>. `ket4` is indexed by
/// bit(qa) + 2*bit(qb). The result is NOT renormalized; its squared norm is
/// the branch probability.
StateVector contract_pair(const StateVector& psi, int qa, int qb,
                          const std::array<cplx, 4>& ket4);

/// Splits a product state across the qubit partition (first `n_left` qubits |
/// rest). Returns nullopt if the state is not a product across that cut
/// (residual above tol).
std::optional<std::pair<StateVector, StateVector>>
factor_product(const StateVector& psi, int n_left, double tol = 1e-9);

// --- randomized helpers ---------------------------------------------------------

/// Uniform over the solid Bloch ball of the given radius.
BlochVector random_bloch_vector(Rng& rng, double max_length = 1.0);

/// Haar-random SU(2) element (via a uniform unit quaternion).
Mat2 haar_unitary_2x2(Rng& rng);

/// Haar-ish random pure state (normalized complex Gaussian amplitudes).
StateVector random_state_vector(int n_qubits, Rng& rng);

} // namespace singlet
