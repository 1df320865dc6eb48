#pragma once

#include <numeric>

#include "sqpc/linalg.hpp"

namespace sqpc {

// I_outer ⊗ K^(m,n) ⊗ I_inner as an index map. K^(m,n) sends v ⊗ w to w ⊗ v for v ∈ ℂ^m, w ∈ ℂ^n,
// equivalently K^(m,n) vec(Aᵀ) = vec(A) for A ∈ ℂ^{m×n}.
struct PermutationSpec {
    int outer = 1;
    int m = 1;
    int n = 1;
    int inner = 1;

    static PermutationSpec commutation(int m, int n) { return {1, m, n, 1}; }
    // P^{mn}_{rs} = I_n ⊗ K^(s,m) ⊗ I_r
    static PermutationSpec P(int m, int n, int r, int s) { return {n, s, m, r}; }

    int size() const { return outer * m * n * inner; }
    PermutationSpec inverse() const { return {outer, n, m, inner}; }

    // map[p] = index of the source entry that lands at p.
    std::vector<int> index_map() const {
        std::vector<int> map(static_cast<std::size_t>(size()));
        const int mid = m * n;
        for (int o = 0; o < outer; ++o)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < m; ++i)
                    for (int t = 0; t < inner; ++t) {
                        const int dst = ((o * mid) + j * m + i) * inner + t;
                        const int src = ((o * mid) + i * n + j) * inner + t;
                        map[static_cast<std::size_t>(dst)] = src;
                    }
        return map;
    }
};

template <class Vec>
Vec apply_index_map(const std::vector<int>& map, const Vec& v) {
    require(static_cast<std::size_t>(v.size()) == map.size(), ErrorKind::input, "permutation length mismatch");
    Vec out(v.size());
    for (std::size_t p = 0; p < map.size(); ++p) out(static_cast<Eigen::Index>(p)) = v(map[p]);
    return out;
}

inline VectorC commutation_apply(const PermutationSpec& spec, const VectorC& v) {
    return apply_index_map(spec.index_map(), v);
}

inline std::vector<int> compose_maps(const std::vector<int>& outer, const std::vector<int>& inner) {
    // (outer ∘ inner): first apply inner, then outer.
    std::vector<int> out(outer.size());
    for (std::size_t p = 0; p < outer.size(); ++p) out[p] = inner[static_cast<std::size_t>(outer[p])];
    return out;
}

// Reorders the factors of a Kronecker product: output factor t is source factor order[t].
inline std::vector<int> factor_permutation(const std::vector<int>& dims, const std::vector<int>& order) {
    const std::size_t F = dims.size();
    require(order.size() == F, ErrorKind::input, "factor order length mismatch");
    int total = 1;
    for (int d : dims) total *= d;
    std::vector<int> src_stride(F, 1);
    for (std::size_t f = F - 1; f-- > 0;) src_stride[f] = src_stride[f + 1] * dims[f + 1];
    std::vector<int> map(static_cast<std::size_t>(total));
    std::vector<int> idx(F, 0);  // digits in output order
    for (int p = 0; p < total; ++p) {
        int rem = p, src = 0;
        for (std::size_t t = F; t-- > 0;) {
            const int d = dims[static_cast<std::size_t>(order[t])];
            idx[t] = rem % d;
            rem /= d;
        }
        for (std::size_t t = 0; t < F; ++t) src += idx[t] * src_stride[static_cast<std::size_t>(order[t])];
        map[static_cast<std::size_t>(p)] = src;
    }
    return map;
}

struct BlockMatrix {
    MatrixC M;
    std::vector<int> row_blocks;  // block sizes
    std::vector<int> col_blocks;

    static BlockMatrix trivial(const MatrixC& M) {
        return {M, {static_cast<int>(M.rows())}, {static_cast<int>(M.cols())}};
    }

    void validate() const {
        require(std::accumulate(row_blocks.begin(), row_blocks.end(), 0) == M.rows(), ErrorKind::input,
                "row blocks do not partition the rows");
        require(std::accumulate(col_blocks.begin(), col_blocks.end(), 0) == M.cols(), ErrorKind::input,
                "column blocks do not partition the columns");
    }

    int row_offset(std::size_t i) const { return std::accumulate(row_blocks.begin(), row_blocks.begin() + static_cast<long>(i), 0); }
    int col_offset(std::size_t j) const { return std::accumulate(col_blocks.begin(), col_blocks.begin() + static_cast<long>(j), 0); }

    MatrixC block(std::size_t i, std::size_t j) const {
        return M.block(row_offset(i), col_offset(j), row_blocks[i], col_blocks[j]);
    }
};

// Block (i,k),(j,l) of the result is A^{(i,j)} ⊗ B^{(k,l)}; block rows ordered i-major, columns j-major.
inline BlockMatrix tracy_singh(const BlockMatrix& A, const BlockMatrix& B) {
    A.validate();
    B.validate();
    BlockMatrix out;
    for (int ra : A.row_blocks)
        for (int rb : B.row_blocks) out.row_blocks.push_back(ra * rb);
    for (int ca : A.col_blocks)
        for (int cb : B.col_blocks) out.col_blocks.push_back(ca * cb);
    out.M.resize(A.M.rows() * B.M.rows(), A.M.cols() * B.M.cols());
    int r = 0;
    for (std::size_t i = 0; i < A.row_blocks.size(); ++i)
        for (std::size_t k = 0; k < B.row_blocks.size(); ++k) {
            int cpos = 0;
            const int h = A.row_blocks[i] * B.row_blocks[k];
            for (std::size_t j = 0; j < A.col_blocks.size(); ++j)
                for (std::size_t l = 0; l < B.col_blocks.size(); ++l) {
                    const int w = A.col_blocks[j] * B.col_blocks[l];
                    out.M.block(r, cpos, h, w) = kron(A.block(i, j), B.block(k, l));
                    cpos += w;
                }
            r += h;
        }
    return out;
}

// Row i of the result is a_i ⊗ b_i.
inline MatrixC face_split(const MatrixC& A, const MatrixC& B) {
    require(A.rows() == B.rows(), ErrorKind::input, "face-splitting product needs equal row counts");
    MatrixC out(A.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) out.row(i).segment(j * B.cols(), B.cols()) = A(i, j) * B.row(i);
    return out;
}

// Column permutation with (A ⊗ B)[:, map] = tracy_singh(A, B) for a single row block.
inline std::vector<int> tracy_singh_column_map(const std::vector<int>& a_cols, const std::vector<int>& b_cols) {
    const int nb = std::accumulate(b_cols.begin(), b_cols.end(), 0);
    std::vector<int> map;
    int aoff = 0;
    for (int ca : a_cols) {
        int boff = 0;
        for (int cb : b_cols) {
            for (int ja = 0; ja < ca; ++ja)
                for (int jb = 0; jb < cb; ++jb) map.push_back((aoff + ja) * nb + boff + jb);
            boff += cb;
        }
        aoff += ca;
    }
    return map;
}

}  // namespace sqpc
