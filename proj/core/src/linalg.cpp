#include "singlet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace singlet::linalg {

namespace {

double off_diagonal_norm(const std::vector<cplx>& a, int dim) {
    double s = 0.0;
    for (int p = 0; p < dim; ++p)
        for (int q = p + 1; q < dim; ++q) s += std::norm(a[p * dim + q]);
    return std::sqrt(s);
}

} // namespace

EigenSystem hermitian_eigensystem(std::span<const cplx> a_in, int dim) {
    if (static_cast<int>(a_in.size()) != dim * dim)
        throw std::invalid_argument("hermitian_eigensystem: size mismatch");

    std::vector<cplx> a(a_in.begin(), a_in.end());
    std::vector<cplx> v(static_cast<std::size_t>(dim) * dim, cplx{0, 0});
    for (int i = 0; i < dim; ++i) v[i * dim + i] = 1.0;

    // Cyclic Jacobi with complex rotations. Converges quadratically for
    // Hermitian input; 60 sweeps is far more than small matrices need.
    const double tol = 1e-14 * std::max(1.0, off_diagonal_norm(a, dim));
    for (int sweep = 0; sweep < 60; ++sweep) {
        if (off_diagonal_norm(a, dim) <= tol) break;
        for (int p = 0; p < dim; ++p) {
            for (int q = p + 1; q < dim; ++q) {
                const cplx apq = a[p * dim + q];
                const double abs_apq = std::abs(apq);
                if (abs_apq < 1e-300) continue;
                const double app = a[p * dim + p].real();
                const double aqq = a[q * dim + q].real();
                const double tau = (aqq - app) / (2.0 * abs_apq);
                const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const cplx phase = apq / abs_apq;
                const cplx gs = s * phase;           // G[p][q]
                const cplx gs_conj = std::conj(gs);  // -G[q][p]

                // A <- G^dag A G, acting on rows/columns p and q.
                for (int k = 0; k < dim; ++k) {
                    const cplx akp = a[k * dim + p];
                    const cplx akq = a[k * dim + q];
                    a[k * dim + p] = c * akp - gs_conj * akq;
                    a[k * dim + q] = c * akq + gs * akp;
                }
                for (int k = 0; k < dim; ++k) {
                    const cplx apk = a[p * dim + k];
                    const cplx aqk = a[q * dim + k];
                    a[p * dim + k] = c * apk - gs * aqk;
                    a[q * dim + k] = c * aqk + gs_conj * apk;
                }
                for (int k = 0; k < dim; ++k) {
                    const cplx vkp = v[k * dim + p];
                    const cplx vkq = v[k * dim + q];
                    v[k * dim + p] = c * vkp - gs_conj * vkq;
                    v[k * dim + q] = c * vkq + gs * vkp;
                }
            }
        }
    }

    EigenSystem out;
    out.values.resize(dim);
    std::vector<int> order(dim);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> diag(dim);
    for (int i = 0; i < dim; ++i) diag[i] = a[i * dim + i].real();
    std::sort(order.begin(), order.end(), [&](int i, int j) { return diag[i] < diag[j]; });

    out.vectors.resize(static_cast<std::size_t>(dim) * dim);
    for (int k = 0; k < dim; ++k) {
        out.values[k] = diag[order[k]];
        for (int i = 0; i < dim; ++i) out.vectors[k * dim + i] = v[i * dim + order[k]];
    }
    return out;
}

std::vector<double> hermitian_eigenvalues(std::span<const cplx> a, int dim) {
    return hermitian_eigensystem(a, dim).values;
}

std::vector<cplx> hermitian_sqrt(std::span<const cplx> a, int dim) {
    const EigenSystem es = hermitian_eigensystem(a, dim);
    std::vector<cplx> out(static_cast<std::size_t>(dim) * dim, cplx{0, 0});
    for (int k = 0; k < dim; ++k) {
        const double lam = std::max(0.0, es.values[k]);
        const double root = std::sqrt(lam);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                out[i * dim + j] += root * es.vectors[k * dim + i] * std::conj(es.vectors[k * dim + j]);
    }
    return out;
}

std::vector<cplx> matmul(std::span<const cplx> a, std::span<const cplx> b, int dim) {
    std::vector<cplx> c(static_cast<std::size_t>(dim) * dim, cplx{0, 0});
    for (int i = 0; i < dim; ++i)
        for (int k = 0; k < dim; ++k) {
            const cplx aik = a[i * dim + k];
            if (aik == cplx{0, 0}) continue;
            for (int j = 0; j < dim; ++j) c[i * dim + j] += aik * b[k * dim + j];
        }
    return c;
}

} // namespace singlet::linalg
