// Dense complex matrices just large enough for mode-space work (n <= ~20):
// multiplication, adjoints, a cyclic Jacobi eigensolver for Hermitian
// matrices, and the unitary exp(i*eps*H) built from that decomposition.
#pragma once

#include <cmath>
#include <vector>

#include "oamqkd/common.hpp"

namespace oamqkd {

struct CMatrix {
    int n = 0;
    std::vector<cplx> a;  // row-major n*n

    CMatrix() = default;
    explicit CMatrix(int dim) : n(dim), a(static_cast<size_t>(dim) * dim, cplx(0.0, 0.0)) {}

    cplx& operator()(int r, int c) { return a[static_cast<size_t>(r) * n + c]; }
    const cplx& operator()(int r, int c) const { return a[static_cast<size_t>(r) * n + c]; }

    static CMatrix identity(int dim) {
        CMatrix m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline CMatrix matmul(const CMatrix& x, const CMatrix& y) {
    CMatrix z(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int k = 0; k < x.n; ++k) {
            const cplx xik = x(i, k);
            if (xik == cplx(0.0, 0.0)) continue;
            for (int j = 0; j < x.n; ++j) z(i, j) += xik * y(k, j);
        }
    return z;
}

inline CMatrix adjoint(const CMatrix& x) {
    CMatrix z(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) z(j, i) = std::conj(x(i, j));
    return z;
}

inline std::vector<cplx> matvec(const CMatrix& x, const std::vector<cplx>& v) {
    std::vector<cplx> out(static_cast<size_t>(x.n), cplx(0.0, 0.0));
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) out[i] += x(i, j) * v[j];
    return out;
}

inline bool is_hermitian(const CMatrix& m, double tol = 1e-12) {
    for (int i = 0; i < m.n; ++i)
        for (int j = i; j < m.n; ++j)
            if (std::abs(m(i, j) - std::conj(m(j, i))) > tol) return false;
    return true;
}

struct HermitianEig {
    std::vector<double> values;
    CMatrix vectors;  // columns are eigenvectors, A = V diag(values) V^dagger
};

// Cyclic Jacobi with complex plane rotations. Fine for the small matrices here.
inline HermitianEig eig_hermitian(CMatrix m, double tol = 1e-14, int max_sweeps = 100) {
    const int n = m.n;
    CMatrix v = CMatrix::identity(n);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += std::norm(m(p, q));
        if (off < tol * tol) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const cplx apq = m(p, q);
                const double r = std::abs(apq);
                if (r < 1e-300) continue;
                const double phi = std::arg(apq);
                const double app = m(p, p).real();
                const double aqq = m(q, q).real();
                const double t = 0.5 * std::atan2(2.0 * r, app - aqq);
                const double c = std::cos(t);
                const double s = std::sin(t);
                const cplx eip(std::cos(phi), std::sin(phi));
                const cplx eim = std::conj(eip);
                // m <- J^dagger m J with J[pp]=c, J[pq]=-s*e^{i phi}, J[qp]=s*e^{-i phi}, J[qq]=c
                for (int k = 0; k < n; ++k) {
                    const cplx mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp + s * eim * mkq;
                    m(k, q) = -s * eip * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    const cplx mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk + s * eip * mqk;
                    m(q, k) = -s * eim * mpk + c * mqk;
                }
                for (int k = 0; k < n; ++k) {
                    const cplx vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp + s * eim * vkq;
                    v(k, q) = -s * eip * vkp + c * vkq;
                }
            }
        }
    }
    HermitianEig out;
    out.values.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) out.values[static_cast<size_t>(i)] = m(i, i).real();
    out.vectors = std::move(v);
    return out;
}

// exp(i * eps * H) for Hermitian H. Unitary to rounding by construction.
inline CMatrix expi_hermitian(const CMatrix& h, double eps) {
    if (!is_hermitian(h, 1e-9)) fail_precondition("expi_hermitian: matrix is not Hermitian");
    HermitianEig e = eig_hermitian(h);
    const int n = h.n;
    CMatrix d(n);
    for (int i = 0; i < n; ++i) {
        const double ang = eps * e.values[static_cast<size_t>(i)];
        d(i, i) = cplx(std::cos(ang), std::sin(ang));
    }
    return matmul(matmul(e.vectors, d), adjoint(e.vectors));
}

// Largest singular value, via the eigensystem of A^dagger A.
inline double spectral_norm(const CMatrix& m) {
    HermitianEig e = eig_hermitian(matmul(adjoint(m), m));
    double mx = 0.0;
    for (double lam : e.values) mx = std::max(mx, lam);
    return std::sqrt(std::max(mx, 0.0));
}

}  // namespace oamqkd
