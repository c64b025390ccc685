#pragma once

#include <complex>
#include <span>
#include <vector>

namespace singlet {

using cplx = std::complex<double>;

namespace linalg {

/// Eigendecomposition of a small complex Hermitian matrix (cyclic Jacobi).
/// `vectors` is column-major: component i of eigenvector k sits at
/// vectors[k * dim + i]. Eigenvalues are sorted ascending.
struct EigenSystem {
    std::vector<double> values;
    std::vector<cplx> vectors;
};

EigenSystem hermitian_eigensystem(std::span<const cplx> a, int dim);

std::vector<double> hermitian_eigenvalues(std::span<const cplx> a, int dim);

/// Principal square root of a Hermitian PSD matrix. Small negative
/// eigenvalues from round-off are clamped to zero.
std::vector<cplx> hermitian_sqrt(std::span<const cplx> a, int dim);

/// C = A * B for dim x dim row-major matrices.
std::vector<cplx> matmul(std::span<const cplx> a, std::span<const cplx> b, int dim);

} // namespace linalg
} // namespace singlet
