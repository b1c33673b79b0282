#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>

namespace q8gemm {

enum class KernelVariant {
    kAccI32,  // products widened straight to 32-bit accumulators
    kAccI16,  // pairwise saturating 16-bit accumulation, spilled per k block
};

/// Logical operation counts for the throughput ratio test: the INT16 kernel
/// performs two multiply-adds per accumulate step, the per-element INT32 path
/// performs one.
struct KernelCounters {
    uint64_t multiply_adds = 0;
    uint64_t accumulate_steps = 0;
};

inline int16_t saturate_i16(int32_t v) {
    return static_cast<int16_t>(std::clamp(v, -32768, 32767));
}

/// True when a full kcb block of pairwise sums cannot reach the int16_t
/// saturation bound: 255 * max|b| * kcb <= 32767.
constexpr bool i16_accumulation_exact(int32_t max_abs_b, int kcb) {
    return 255LL * max_abs_b * kcb <= 32767;
}

/// Largest outlier-split threshold T such that a dense residue with
/// |entries| <= T-1 keeps the INT16 path exact for the given kcb.
constexpr int max_i16_split_threshold(int kcb) {
    return 1 + 32767 / (255 * kcb);
}

namespace detail {

// MR_/NR_ == 0 means the extent is a runtime argument; a nonzero value bakes
// the extent in so the compiler can unroll and vectorize the tile.
template <int MR_, int NR_, bool kCounted>
inline void microkernel_i32_impl(const uint8_t* pa_panel, const int8_t* pb_panel,
                                 int32_t* acc, int acc_ld, int mr, int nr, int k_pairs,
                                 KernelCounters* counters) {
    const int m = MR_ > 0 ? MR_ : mr;
    const int n = NR_ > 0 ? NR_ : nr;
    assert(MR_ == 0 || MR_ == mr);
    assert(NR_ == 0 || NR_ == nr);
    for (int kp = 0; kp < k_pairs; ++kp) {
        const uint8_t* a_chunk = pa_panel + kp * 2 * m;
        const int8_t* b_chunk = pb_panel + kp * 2 * n;
        for (int i = 0; i < m; ++i) {
            const int32_t a0 = a_chunk[2 * i + 0];
            const int32_t a1 = a_chunk[2 * i + 1];
            int32_t* acc_row = acc + static_cast<std::ptrdiff_t>(i) * acc_ld;
            for (int j = 0; j < n; ++j) {
                // Per-element accumulation: one multiply-add per step.
                acc_row[j] += a0 * b_chunk[2 * j + 0];
                acc_row[j] += a1 * b_chunk[2 * j + 1];
                if constexpr (kCounted) {
                    counters->multiply_adds += 2;
                    counters->accumulate_steps += 2;
                }
            }
        }
    }
}

template <int MR_, int NR_, bool kCounted>
inline void microkernel_i16_impl(const uint8_t* pa_panel, const int8_t* pb_panel,
                                 int16_t* acc16, int acc_ld, int mr, int nr, int k_pairs,
                                 KernelCounters* counters) {
    const int m = MR_ > 0 ? MR_ : mr;
    const int n = NR_ > 0 ? NR_ : nr;
    assert(MR_ == 0 || MR_ == mr);
    assert(NR_ == 0 || NR_ == nr);
    for (int kp = 0; kp < k_pairs; ++kp) {
        const uint8_t* a_chunk = pa_panel + kp * 2 * m;
        const int8_t* b_chunk = pb_panel + kp * 2 * n;
        for (int i = 0; i < m; ++i) {
            const int32_t a0 = a_chunk[2 * i + 0];
            const int32_t a1 = a_chunk[2 * i + 1];
            int16_t* acc_row = acc16 + static_cast<std::ptrdiff_t>(i) * acc_ld;
            for (int j = 0; j < n; ++j) {
                // Both products are exact in 32 bits; the pair sum saturates
                // once, the running accumulator saturates once. No other
                // intermediate saturates.
                const int32_t pair = a0 * b_chunk[2 * j + 0] + a1 * b_chunk[2 * j + 1];
                const int16_t t = saturate_i16(pair);
                acc_row[j] = saturate_i16(static_cast<int32_t>(acc_row[j]) + t);
                if constexpr (kCounted) {
                    counters->multiply_adds += 2;
                    counters->accumulate_steps += 1;
                }
            }
        }
    }
}

}  // namespace detail

using MicrokernelI32Fn = void (*)(const uint8_t*, const int8_t*, int32_t*, int, int, int, int);
using MicrokernelI16Fn = void (*)(const uint8_t*, const int8_t*, int16_t*, int, int, int, int);

/// acc[i][j] += sum over the packed k pairs of a[i][k]*b[k][j], widened to 32
/// bits. Padded slots are zero and contribute nothing.
inline void microkernel_i32(const uint8_t* pa_panel, const int8_t* pb_panel, int32_t* acc,
                            int acc_ld, int mr, int nr, int k_pairs) {
    detail::microkernel_i32_impl<0, 0, false>(pa_panel, pb_panel, acc, acc_ld, mr, nr,
                                              k_pairs, nullptr);
}

/// Pairwise saturating 16-bit accumulation; see microkernel_i16_impl for the
/// exact saturation points. Saturation is silent; exactness is the caller's
/// concern via the outlier split.
inline void microkernel_i16(const uint8_t* pa_panel, const int8_t* pb_panel, int16_t* acc16,
                            int acc_ld, int mr, int nr, int k_pairs) {
    detail::microkernel_i16_impl<0, 0, false>(pa_panel, pb_panel, acc16, acc_ld, mr, nr,
                                              k_pairs, nullptr);
}

inline void microkernel_i32_counted(const uint8_t* pa_panel, const int8_t* pb_panel,
                                    int32_t* acc, int acc_ld, int mr, int nr, int k_pairs,
                                    KernelCounters& counters) {
    detail::microkernel_i32_impl<0, 0, true>(pa_panel, pb_panel, acc, acc_ld, mr, nr,
                                             k_pairs, &counters);
}

inline void microkernel_i16_counted(const uint8_t* pa_panel, const int8_t* pb_panel,
                                    int16_t* acc16, int acc_ld, int mr, int nr, int k_pairs,
                                    KernelCounters& counters) {
    detail::microkernel_i16_impl<0, 0, true>(pa_panel, pb_panel, acc16, acc_ld, mr, nr,
                                             k_pairs, &counters);
}

// Shape-specialized instances. The dispatch cache maps shape classes onto this
// small family; everything else takes the generic path.

inline void microkernel_i32_m1(const uint8_t* pa, const int8_t* pb, int32_t* acc, int acc_ld,
                               int mr, int nr, int k_pairs) {
    detail::microkernel_i32_impl<1, 0, false>(pa, pb, acc, acc_ld, mr, nr, k_pairs, nullptr);
}

inline void microkernel_i16_m1(const uint8_t* pa, const int8_t* pb, int16_t* acc, int acc_ld,
                               int mr, int nr, int k_pairs) {
    detail::microkernel_i16_impl<1, 0, false>(pa, pb, acc, acc_ld, mr, nr, k_pairs, nullptr);
}

inline void microkernel_i32_tile14x32(const uint8_t* pa, const int8_t* pb, int32_t* acc,
                                      int acc_ld, int mr, int nr, int k_pairs) {
    detail::microkernel_i32_impl<14, 32, false>(pa, pb, acc, acc_ld, mr, nr, k_pairs, nullptr);
}

inline void microkernel_i16_tile14x32(const uint8_t* pa, const int8_t* pb, int16_t* acc,
                                      int acc_ld, int mr, int nr, int k_pairs) {
    detail::microkernel_i16_impl<14, 32, false>(pa, pb, acc, acc_ld, mr, nr, k_pairs, nullptr);
}

/// Widens a 16-bit tile into the 32-bit accumulator and clears it. Called once
/// per kcb block on the INT16 path.
inline void spill_i16_to_i32(int16_t* acc16, int acc16_ld, int32_t* acc32, int acc32_ld,
                             int mr, int nr) {
    for (int i = 0; i < mr; ++i) {
        for (int j = 0; j < nr; ++j) {
            acc32[static_cast<std::ptrdiff_t>(i) * acc32_ld + j] +=
                acc16[static_cast<std::ptrdiff_t>(i) * acc16_ld + j];
            acc16[static_cast<std::ptrdiff_t>(i) * acc16_ld + j] = 0;
        }
    }
}

}  // namespace q8gemm
