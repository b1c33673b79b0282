#pragma once

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "q8gemm/matrix.hpp"
#include "q8gemm/quant.hpp"

namespace q8gemm {

/// Cache-block and register-tile sizes. mcb/kcb shape the packed A block,
/// ncb/kcb the packed B blocks, mr/nr the microkernel tile.
struct BlockingParams {
    int mcb = 56;
    int ncb = 32;
    int kcb = 256;
    int mr = 14;
    int nr = 32;

    static BlockingParams defaults() { return BlockingParams{}; }

    void validate() const {
        if (mcb < 1 || ncb < 1 || kcb < 1 || mr < 1 || nr < 1) {
            throw std::invalid_argument("BlockingParams: all sizes must be >= 1");
        }
        if (mcb % mr != 0) {
            throw std::invalid_argument("BlockingParams: mcb must be a multiple of mr");
        }
        if (ncb % nr != 0) {
            throw std::invalid_argument("BlockingParams: ncb must be a multiple of nr");
        }
        if (kcb % 2 != 0) {
            throw std::invalid_argument("BlockingParams: kcb must be even (k is consumed in pairs)");
        }
    }
};

/// One mcb x kcb activation block reordered for the microkernel.
///
/// The buffer is a sequence of mr-row panels. Within a panel, each k pair
/// (k, k+1) stores an mr x 2 chunk: [row0 k0, row0 k1, row1 k0, row1 k1, ...].
/// Slots past rows_valid / k_valid are zero-filled; zeros contribute nothing
/// to dot products, and row offsets sum only the k_valid entries.
struct PackedActivationBlock {
    std::vector<uint8_t> data;
    int rows_valid = 0;
    int k_valid = 0;
    int mr = 0;
    int num_panels = 0;
    int k_pairs = 0;
    RowOffsets row_offsets;  // values empty when packed without offsets

    int panel_stride() const { return k_pairs * 2 * mr; }
    const uint8_t* panel(int p) const { return data.data() + static_cast<std::size_t>(p) * panel_stride(); }
};

/// The whole K x N weight matrix reordered as a (kc, jc) grid of kcb x ncb
/// blocks, each holding nr-column panels of 2 x nr k-pair chunks:
/// [k0 col0, k1 col0, k0 col1, k1 col1, ...]. Padding slots are zero.
/// Immutable after construction; shareable across concurrent executions.
struct PackedWeight {
    std::vector<int8_t> data;
    ColOffsets col_offsets;  // over the full K, from the original matrix
    BlockingParams blocking;
    int k_total = 0;
    int n_total = 0;
    int num_kblocks = 0;
    int num_jblocks = 0;
    int32_t max_abs = 0;  // largest |entry|; bounds the INT16 accumulation path

    int block_bytes() const { return blocking.kcb * blocking.ncb; }
    int panel_stride() const { return blocking.kcb * blocking.nr; }
    const int8_t* block(int ki, int ji) const {
        return data.data() +
               static_cast<std::size_t>(ki * num_jblocks + ji) * block_bytes();
    }
};

namespace detail {

inline PackedActivationBlock pack_a_block(MatrixView<const uint8_t> a, int ic, int kc,
                                          const BlockingParams& bp, bool with_row_offsets) {
    bp.validate();
    if (ic < 0 || ic >= a.rows || kc < 0 || kc >= a.cols) {
        throw std::invalid_argument("pack_a: block start out of bounds");
    }

    PackedActivationBlock out;
    out.rows_valid = std::min(bp.mcb, a.rows - ic);
    out.k_valid = std::min(bp.kcb, a.cols - kc);
    out.mr = bp.mr;
    out.num_panels = ceil_div(out.rows_valid, bp.mr);
    out.k_pairs = ceil_div(out.k_valid, 2);
    out.data.assign(static_cast<std::size_t>(out.num_panels) * out.panel_stride(), 0);
    if (with_row_offsets) {
        out.row_offsets.values.assign(out.rows_valid, 0);
        out.row_offsets.row_base = ic;
        out.row_offsets.k_span = out.k_valid;
    }

    // Single pass: each source row is read once, filling the packed chunks and
    // the row offset together.
    for (int p = 0; p < out.num_panels; ++p) {
        uint8_t* panel = out.data.data() + static_cast<std::size_t>(p) * out.panel_stride();
        const int row_limit = std::min(bp.mr, out.rows_valid - p * bp.mr);
        for (int ii = 0; ii < row_limit; ++ii) {
            const int row = ic + p * bp.mr + ii;
            int32_t sum = 0;
            for (int kp = 0; kp < out.k_pairs; ++kp) {
                uint8_t* chunk = panel + kp * 2 * bp.mr;
                const int k0 = kc + 2 * kp;
                const uint8_t a0 = a(row, k0);
                const uint8_t a1 = (k0 + 1 < kc + out.k_valid) ? a(row, k0 + 1) : 0;
                chunk[2 * ii + 0] = a0;
                chunk[2 * ii + 1] = a1;
                sum += a0;
                sum += a1;
            }
            if (with_row_offsets) {
                out.row_offsets.values[p * bp.mr + ii] = sum;
            }
        }
    }
    return out;
}

}  // namespace detail

/// Reorders one activation block and computes its row offsets in the same pass.
inline PackedActivationBlock pack_a_with_row_offsets(MatrixView<const uint8_t> a, int ic,
                                                     int kc, const BlockingParams& bp) {
    return detail::pack_a_block(a, ic, kc, bp, true);
}

/// Same layout, no offsets. For pipelines that skip the row-offset correction
/// (e.g. a symmetric B with zero point 0).
inline PackedActivationBlock pack_a_plain(MatrixView<const uint8_t> a, int ic, int kc,
                                          const BlockingParams& bp) {
    return detail::pack_a_block(a, ic, kc, bp, false);
}

/// Reorders the constant weight matrix once, ahead of all executions, and
/// precomputes its column offsets. Pure function of B and the blocking.
inline PackedWeight prepack_weights(MatrixView<const int8_t> b, const BlockingParams& bp) {
    bp.validate();
    if (b.rows < 1 || b.cols < 1) {
        throw std::invalid_argument("prepack_weights: matrix must be non-empty");
    }

    PackedWeight pw;
    pw.blocking = bp;
    pw.k_total = b.rows;
    pw.n_total = b.cols;
    pw.num_kblocks = ceil_div(b.rows, bp.kcb);
    pw.num_jblocks = ceil_div(b.cols, bp.ncb);
    pw.data.assign(static_cast<std::size_t>(pw.num_kblocks) * pw.num_jblocks * pw.block_bytes(), 0);
    pw.col_offsets = compute_col_offsets(b);

    const int num_jpanels = bp.ncb / bp.nr;
    for (int ki = 0; ki < pw.num_kblocks; ++ki) {
        const int kc = ki * bp.kcb;
        const int k_valid = std::min(bp.kcb, b.rows - kc);
        for (int ji = 0; ji < pw.num_jblocks; ++ji) {
            const int jc = ji * bp.ncb;
            const int n_valid = std::min(bp.ncb, b.cols - jc);
            int8_t* block = pw.data.data() +
                            static_cast<std::size_t>(ki * pw.num_jblocks + ji) * pw.block_bytes();
            for (int jp = 0; jp < num_jpanels; ++jp) {
                if (jp * bp.nr >= n_valid) break;
                int8_t* panel = block + static_cast<std::size_t>(jp) * pw.panel_stride();
                for (int kp = 0; kp < bp.kcb / 2; ++kp) {
                    if (2 * kp >= k_valid) break;
                    int8_t* chunk = panel + kp * 2 * bp.nr;
                    for (int jj = 0; jj < bp.nr; ++jj) {
                        const int col = jc + jp * bp.nr + jj;
                        if (col >= jc + n_valid) break;
                        const int k0 = kc + 2 * kp;
                        chunk[2 * jj + 0] = b(k0, col);
                        chunk[2 * jj + 1] = (k0 + 1 < kc + k_valid) ? b(k0 + 1, col) : 0;
                    }
                }
            }
        }
    }

    int32_t max_abs = 0;
    for (int k = 0; k < b.rows; ++k) {
        for (int j = 0; j < b.cols; ++j) {
            max_abs = std::max(max_abs, std::abs(static_cast<int32_t>(b(k, j))));
        }
    }
    pw.max_abs = max_abs;
    return pw;
}

/// Test-only inverse: reconstructs the original K x N matrix.
inline Matrix<int8_t> unpack_weight(const PackedWeight& pw) {
    Matrix<int8_t> b(pw.k_total, pw.n_total, 0);
    const BlockingParams& bp = pw.blocking;
    for (int ki = 0; ki < pw.num_kblocks; ++ki) {
        const int kc = ki * bp.kcb;
        const int k_valid = std::min(bp.kcb, pw.k_total - kc);
        for (int ji = 0; ji < pw.num_jblocks; ++ji) {
            const int jc = ji * bp.ncb;
            const int n_valid = std::min(bp.ncb, pw.n_total - jc);
            const int8_t* block = pw.block(ki, ji);
            for (int jp = 0; jp * bp.nr < n_valid; ++jp) {
                const int8_t* panel = block + static_cast<std::size_t>(jp) * pw.panel_stride();
                for (int kp = 0; 2 * kp < k_valid; ++kp) {
                    const int8_t* chunk = panel + kp * 2 * bp.nr;
                    for (int jj = 0; jj < bp.nr && jp * bp.nr + jj < n_valid; ++jj) {
                        const int col = jc + jp * bp.nr + jj;
                        b(kc + 2 * kp, col) = chunk[2 * jj + 0];
                        if (2 * kp + 1 < k_valid) {
                            b(kc + 2 * kp + 1, col) = chunk[2 * jj + 1];
                        }
                    }
                }
            }
        }
    }
    return b;
}

/// Test-only inverse: reconstructs the covered rows_valid x k_valid region.
inline Matrix<uint8_t> unpack_activation_block(const PackedActivationBlock& pa) {
    Matrix<uint8_t> a(pa.rows_valid, pa.k_valid, 0);
    for (int p = 0; p < pa.num_panels; ++p) {
        const uint8_t* panel = pa.panel(p);
        for (int ii = 0; ii < pa.mr && p * pa.mr + ii < pa.rows_valid; ++ii) {
            for (int kp = 0; kp < pa.k_pairs; ++kp) {
                const uint8_t* chunk = panel + kp * 2 * pa.mr;
                a(p * pa.mr + ii, 2 * kp) = chunk[2 * ii + 0];
                if (2 * kp + 1 < pa.k_valid) {
                    a(p * pa.mr + ii, 2 * kp + 1) = chunk[2 * ii + 1];
                }
            }
        }
    }
    return a;
}

}  // namespace q8gemm
