#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "q8gemm/dispatch.hpp"
#include "q8gemm/kernel.hpp"
#include "q8gemm/matrix.hpp"
#include "q8gemm/pack.hpp"
#include "q8gemm/pipeline.hpp"

namespace q8gemm {

/// The preallocated 32-bit intermediate for one row stripe: mcb rows by the
/// nr-padded output width. Zeroed before the first k block of each stripe.
struct AccumulatorBuffer {
    std::vector<int32_t> data;
    int rows = 0;
    int cols = 0;

    AccumulatorBuffer(int rows_, int cols_)
        : data(static_cast<std::size_t>(rows_) * cols_, 0), rows(rows_), cols(cols_) {}

    void zero() { std::fill(data.begin(), data.end(), 0); }
    MatrixView<int32_t> view() { return {data.data(), rows, cols, cols}; }
};

namespace detail {

struct StripeRange {
    int begin_block = 0;
    int end_block = 0;
};

// Contiguous row stripes aligned to mcb, balanced across workers.
inline StripeRange partition_stripes(int num_blocks, int thread_id, int num_threads) {
    const int base = num_blocks / num_threads;
    const int rem = num_blocks % num_threads;
    StripeRange r;
    r.begin_block = thread_id * base + std::min(thread_id, rem);
    r.end_block = r.begin_block + base + (thread_id < rem ? 1 : 0);
    return r;
}

}  // namespace detail

/// Runs the blocked GEMM over one worker's row stripes and applies the output
/// pipeline to each finished cache block.
///
/// A is packed on the fly inside the k loop (row offsets fused in when the
/// pipeline needs them); B is read prepacked and is never repacked. The engine
/// creates no threads: callers own their workers, and each call with a
/// distinct (thread_id, num_threads) touches a disjoint set of output rows, so
/// concurrent calls over the same PackedWeight and output are safe.
template <typename OutT>
void execute_gemm(MatrixView<const uint8_t> a, const PackedWeight& pw, MatrixView<OutT> out,
                  const OutputPipeline& pipeline, KernelVariant variant, int thread_id,
                  int num_threads, KernelCache* cache = nullptr) {
    const int m = a.rows;
    const int k = a.cols;
    const int n = pw.n_total;
    if (k != pw.k_total) {
        throw std::invalid_argument("execute_gemm: A columns must equal the packed weight K");
    }
    if (out.rows != m || out.cols != n) {
        throw std::invalid_argument("execute_gemm: output must be M x N");
    }
    if (num_threads < 1 || thread_id < 0 || thread_id >= num_threads) {
        throw std::invalid_argument("execute_gemm: thread_id must be in [0, num_threads)");
    }
    detail::check_writer_matches<OutT>(pipeline);

    const BlockingParams& bp = pw.blocking;
    if (variant == KernelVariant::kAccI16 && !i16_accumulation_exact(pw.max_abs, bp.kcb)) {
        throw std::invalid_argument(
            "execute_gemm: INT16 accumulation rejected: 255 * max|B| * kcb = " +
            std::to_string(255LL * pw.max_abs * bp.kcb) +
            " exceeds 32767; split outliers with a threshold satisfying "
            "255 * (T - 1) * kcb <= 32767 (see max_i16_split_threshold)");
    }

    // The B-side blocking is frozen into the packed layout; only the A side
    // adapts to the runtime M (this is where an M of 1 picks up its own tile).
    const int mr_eff = std::min(bp.mr, m);
    const int mcb_eff = std::min(bp.mcb, round_up(m, mr_eff));
    BlockingParams bp_a = bp;
    bp_a.mr = mr_eff;
    bp_a.mcb = mcb_eff;

    if (cache == nullptr) {
        cache = &KernelCache::process_cache();
    }
    const KernelDescriptor& desc =
        cache->get_or_build(classify_shape(m, n, k, variant, bp));

    const bool want_row_offsets = pipeline.needs_row_offsets();
    const int n_padded = round_up(n, bp.nr);
    const int num_mblocks = ceil_div(m, mcb_eff);
    const auto stripe = detail::partition_stripes(num_mblocks, thread_id, num_threads);

    AccumulatorBuffer c_buffer(mcb_eff, n_padded);
    std::vector<int16_t> tile16(static_cast<std::size_t>(mr_eff) * bp.nr, 0);
    std::vector<int32_t> row_offsets_acc(mcb_eff, 0);

    for (int mb = stripe.begin_block; mb < stripe.end_block; ++mb) {
        const int ic = mb * mcb_eff;
        const int rows_valid = std::min(mcb_eff, m - ic);
        c_buffer.zero();
        std::fill(row_offsets_acc.begin(), row_offsets_acc.end(), 0);

        for (int ki = 0; ki < pw.num_kblocks; ++ki) {
            const int kc = ki * bp.kcb;
            const PackedActivationBlock pa = want_row_offsets
                                                 ? pack_a_with_row_offsets(a, ic, kc, bp_a)
                                                 : pack_a_plain(a, ic, kc, bp_a);
            if (want_row_offsets) {
                for (int i = 0; i < rows_valid; ++i) {
                    row_offsets_acc[i] += pa.row_offsets.values[i];
                }
            }
            const bool last_k = (ki + 1 == pw.num_kblocks);

            for (int ji = 0; ji < pw.num_jblocks; ++ji) {
                const int jc = ji * bp.ncb;
                const int n_valid = std::min(bp.ncb, n - jc);
                const int8_t* b_block = pw.block(ki, ji);
                const int num_jpanels = ceil_div(n_valid, bp.nr);

                // Macro kernel: register tiles over the cache block.
                for (int ip = 0; ip < pa.num_panels; ++ip) {
                    for (int jp = 0; jp < num_jpanels; ++jp) {
                        int32_t* acc_tile = c_buffer.data.data() +
                                            static_cast<std::size_t>(ip) * mr_eff * n_padded +
                                            jc + jp * bp.nr;
                        const int8_t* b_panel =
                            b_block + static_cast<std::size_t>(jp) * pw.panel_stride();
                        if (variant == KernelVariant::kAccI32) {
                            desc.kernel_i32(pa.panel(ip), b_panel, acc_tile, n_padded, mr_eff,
                                            bp.nr, pa.k_pairs);
                        } else {
                            desc.kernel_i16(pa.panel(ip), b_panel, tile16.data(), bp.nr,
                                            mr_eff, bp.nr, pa.k_pairs);
                            spill_i16_to_i32(tile16.data(), bp.nr, acc_tile, n_padded, mr_eff,
                                             bp.nr);
                        }
                    }
                }

                if (last_k) {
                    // The block of C is complete for all k; process it while
                    // it is cache-resident.
                    MatrixView<int32_t> acc_block =
                        subview(c_buffer.view(), 0, jc, rows_valid, n_valid);
                    BlockContext ctx;
                    ctx.row0 = ic;
                    ctx.col0 = jc;
                    ctx.row_offsets = std::span<const int32_t>(row_offsets_acc.data(),
                                                               static_cast<std::size_t>(rows_valid));
                    ctx.a = a;
                    run_block(pipeline, acc_block, ctx, out);
                }
            }
        }
    }
}

}  // namespace q8gemm
