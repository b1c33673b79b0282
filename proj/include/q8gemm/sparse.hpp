#pragma once

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "q8gemm/matrix.hpp"

namespace q8gemm {

/// Compressed-sparse-column store of the outlier weight entries.
struct SparseWeightCSC {
    std::vector<int32_t> col_ptr;  // size n_total + 1, nondecreasing
    std::vector<int32_t> row_idx;  // strictly increasing within each column
    std::vector<int8_t> values;
    int k_total = 0;
    int n_total = 0;

    int nnz() const { return static_cast<int>(values.size()); }
};

/// B decomposed as dense_small + sparse. dense_small holds only entries with
/// |v| < threshold; outliers keep their full original value in the sparse part.
struct SplitWeight {
    Matrix<int8_t> dense_small;
    SparseWeightCSC sparse;
    int threshold = 0;
};

/// Splits B so the dense residue is safe for 16-bit accumulation.
/// Preprocessing-only: done once per constant weight matrix.
inline SplitWeight split_outliers(MatrixView<const int8_t> b, int threshold) {
    if (threshold < 1) {
        throw std::invalid_argument("split_outliers: threshold must be >= 1");
    }
    if (b.rows < 1 || b.cols < 1) {
        throw std::invalid_argument("split_outliers: matrix must be non-empty");
    }

    SplitWeight sw;
    sw.threshold = threshold;
    sw.dense_small = Matrix<int8_t>(b.rows, b.cols, 0);
    sw.sparse.k_total = b.rows;
    sw.sparse.n_total = b.cols;
    sw.sparse.col_ptr.assign(b.cols + 1, 0);

    // Column-major walk builds the CSC arrays directly.
    for (int j = 0; j < b.cols; ++j) {
        for (int k = 0; k < b.rows; ++k) {
            const int8_t v = b(k, j);
            if (std::abs(static_cast<int>(v)) >= threshold) {
                sw.sparse.row_idx.push_back(k);
                sw.sparse.values.push_back(v);
            } else {
                sw.dense_small(k, j) = v;
            }
        }
        sw.sparse.col_ptr[j + 1] = sw.sparse.nnz();
    }
    return sw;
}

/// acc_block[i][j] += sum over sparse entries (k, col0+j) of A[row0+i][k] * v.
/// Runs as an output-pipeline stage while the block is cache-resident; the
/// dense partial result for the block must already be complete for all k.
inline void spmdm_block(MatrixView<const uint8_t> a, const SparseWeightCSC& sparse,
                        MatrixView<int32_t> acc_block, int row0, int col0) {
    if (row0 < 0 || col0 < 0 || row0 + acc_block.rows > a.rows ||
        col0 + acc_block.cols > sparse.n_total || a.cols != sparse.k_total) {
        throw std::invalid_argument("spmdm_block: block extents out of bounds");
    }
    for (int j = 0; j < acc_block.cols; ++j) {
        const int col = col0 + j;
        for (int32_t idx = sparse.col_ptr[col]; idx < sparse.col_ptr[col + 1]; ++idx) {
            const int k = sparse.row_idx[idx];
            const int32_t v = sparse.values[idx];
            for (int i = 0; i < acc_block.rows; ++i) {
                acc_block(i, j) += static_cast<int32_t>(a(row0 + i, k)) * v;
            }
        }
    }
}

/// Whole-matrix variant, for tests: returns A * sparse as a dense M x N matrix.
inline Matrix<int32_t> spmdm(MatrixView<const uint8_t> a, const SparseWeightCSC& sparse) {
    Matrix<int32_t> c(a.rows, sparse.n_total, 0);
    auto cv = view(c);
    spmdm_block(a, sparse, cv, 0, 0);
    return c;
}

}  // namespace q8gemm
