#pragma once

#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "sqpc/core.hpp"

namespace sqpc {

using Rng = std::mt19937_64;

inline cplx complex_normal(Rng& rng) {
    std::normal_distribution<double> n(0.0, std::sqrt(0.5));
    double re = n(rng);
    double im = n(rng);
    return {re, im};
}

inline MatrixC random_complex(int rows, int cols, double scale, Rng& rng) {
    MatrixC m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = scale * complex_normal(rng);
    return m;
}

struct QRResult {
    MatrixC Q;  // m × min(m, n), orthonormal columns
    MatrixC R;  // min(m, n) × n, upper triangular with real nonnegative diagonal
};

// Thin QR with the phases of diag(R) pushed into Q.
inline QRResult thin_qr(const MatrixC& A) {
    const Eigen::Index m = A.rows(), n = A.cols(), k = std::min(m, n);
    Eigen::HouseholderQR<MatrixC> qr(A);
    QRResult out;
    out.Q = qr.householderQ() * MatrixC::Identity(m, k);
    out.R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < k; ++i) {
        cplx d = out.R(i, i);
        double a = std::abs(d);
        if (a == 0.0) continue;
        cplx ph = d / a;
        out.Q.col(i) *= ph;
        out.R.row(i) *= std::conj(ph);
        out.R(i, i) = a;
    }
    return out;
}

// Rows orthonormal, K1 ≤ K2.
inline MatrixC random_semi_unitary(int k1, int k2, Rng& rng) {
    require(k1 <= k2, ErrorKind::infeasible, "semi-unitary matrix needs rows <= cols");
    MatrixC g = random_complex(k2, k1, 1.0, rng);
    return thin_qr(g).Q.adjoint();
}

inline MatrixC random_unitary(int n, Rng& rng) { return random_semi_unitary(n, n, rng); }

// Polar factor (W W†)^{-1/2} W for a wide matrix with full row rank.
inline MatrixC project_semi_unitary(const MatrixC& W) {
    require(W.rows() <= W.cols(), ErrorKind::infeasible, "projection needs rows <= cols");
    MatrixC G = W * W.adjoint();
    Eigen::SelfAdjointEigenSolver<MatrixC> es(G);
    const VectorR& ev = es.eigenvalues();
    double top = ev.maxCoeff();
    if (!(ev.minCoeff() > 1e-14 * std::max(top, 1e-300)))
        throw Error(ErrorKind::numerical, "polar projection of rank-deficient matrix (min eigenvalue " +
                                              std::to_string(ev.minCoeff()) + ", max " + std::to_string(top) + ")");
    VectorR inv_sqrt = ev.cwiseSqrt().cwiseInverse();
    MatrixC S = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint();
    return S * W;
}

inline double semi_unitary_defect(const MatrixC& W) {
    MatrixC D = W * W.adjoint() - MatrixC::Identity(W.rows(), W.rows());
    return D.cwiseAbs().maxCoeff();
}

inline MatrixC kron(const MatrixC& A, const MatrixC& B) {
    MatrixC out(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

inline VectorC kron(const VectorC& a, const VectorC& b) {
    VectorC out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

// Row-major vec of a matrix: index i*cols + j.
inline VectorC vec_rows(const MatrixC& M) {
    VectorC v(M.size());
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) v(i * M.cols() + j) = M(i, j);
    return v;
}

inline MatrixC unvec_rows(const VectorC& v, Eigen::Index rows, Eigen::Index cols) {
    MatrixC M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = v(i * cols + j);
    return M;
}

}  // namespace sqpc
