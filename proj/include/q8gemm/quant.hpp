#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "q8gemm/matrix.hpp"

namespace q8gemm {

// Activations (A) are unsigned 8-bit, weights (B) are signed 8-bit, outputs (C)
// are unsigned 8-bit. This convention is fixed across the library.

/// Affine quantization constants for one tensor: x = scale * (q - zero_point).
struct QuantParams {
    double scale = 1.0;      // real units per quantum, > 0
    int32_t zero_point = 0;  // in the representable range of the 8-bit type
};

/// Per-row sums of a packed A block, restricted to the current k block.
struct RowOffsets {
    std::vector<int32_t> values;  // one per row of the block
    int row_base = 0;             // first global row covered
    int k_span = 0;               // number of k entries summed
};

/// Per-column sums of B over the full k dimension. Computed once at prepack time.
struct ColOffsets {
    std::vector<int32_t> values;
};

/// Everything needed to scale a 32-bit accumulator back to an 8-bit output.
struct RequantParams {
    double multiplier = 1.0;  // scale_a * scale_b / scale_c, > 0
    int32_t zp_a = 0;
    int32_t zp_b = 0;
    int32_t zp_c = 0;
    int32_t k_total = 1;
    std::vector<int32_t> bias;  // per output column, added pre-scaling; empty = none
};

inline long long round_half_away_from_zero(double x) {
    return std::llround(x);
}

namespace detail {

template <typename Q>
constexpr int qmin_of() {
    return std::is_signed_v<Q> ? -128 : 0;
}
template <typename Q>
constexpr int qmax_of() {
    return std::is_signed_v<Q> ? 127 : 255;
}

}  // namespace detail

/// Picks scale and zero point so that [min_val, max_val] (widened to include 0)
/// maps onto the 8-bit range and real 0.0 quantizes exactly to the zero point.
inline QuantParams choose_quant_params(double min_val, double max_val, bool is_signed) {
    if (!std::isfinite(min_val) || !std::isfinite(max_val)) {
        throw std::invalid_argument("choose_quant_params: range bounds must be finite");
    }
    if (min_val > max_val) {
        throw std::invalid_argument("choose_quant_params: min_val must be <= max_val");
    }
    min_val = std::min(min_val, 0.0);
    max_val = std::max(max_val, 0.0);

    const int qmin = is_signed ? -128 : 0;
    const int qmax = is_signed ? 127 : 255;

    QuantParams qp;
    qp.scale = (max_val == min_val) ? 1.0 : (max_val - min_val) / (qmax - qmin);
    const long long zp = round_half_away_from_zero(qmin - min_val / qp.scale);
    qp.zero_point = static_cast<int32_t>(std::clamp<long long>(zp, qmin, qmax));
    return qp;
}

/// q = clamp(round(x / scale) + zero_point). Saturates at the type bounds.
template <typename Q>
Q quantize(double x, const QuantParams& qp) {
    static_assert(sizeof(Q) == 1);
    const long long q = round_half_away_from_zero(x / qp.scale) + qp.zero_point;
    return static_cast<Q>(std::clamp<long long>(q, detail::qmin_of<Q>(), detail::qmax_of<Q>()));
}

/// x = scale * (q - zero_point).
inline double dequantize(int q, const QuantParams& qp) {
    return qp.scale * (q - qp.zero_point);
}

/// Column sums of a signed 8-bit matrix in 32-bit arithmetic.
inline ColOffsets compute_col_offsets(MatrixView<const int8_t> b) {
    if (b.rows < 1 || b.cols < 1) {
        throw std::invalid_argument("compute_col_offsets: matrix must be non-empty");
    }
    ColOffsets co;
    co.values.assign(b.cols, 0);
    for (int k = 0; k < b.rows; ++k) {
        for (int j = 0; j < b.cols; ++j) {
            co.values[j] += b(k, j);
        }
    }
    return co;
}

/// The zero-point-corrected accumulator: acc - zp_b*row_offset - zp_a*col_offset
/// + K*zp_a*zp_b + bias[col]. Multiplying this by scale_a*scale_b recovers the
/// real-valued dot product contribution exactly.
inline int64_t requantize_adjust(int32_t acc, int32_t row_offset, int32_t col_offset,
                                 const RequantParams& rp, int col) {
    int64_t adjusted = acc;
    adjusted -= static_cast<int64_t>(rp.zp_b) * row_offset;
    adjusted -= static_cast<int64_t>(rp.zp_a) * col_offset;
    adjusted += static_cast<int64_t>(rp.k_total) * rp.zp_a * rp.zp_b;
    if (!rp.bias.empty()) {
        adjusted += rp.bias[col];
    }
    return adjusted;
}

inline uint8_t requantize_scalar(int32_t acc, int32_t row_offset, int32_t col_offset,
                                 const RequantParams& rp, int col) {
    const int64_t adjusted = requantize_adjust(acc, row_offset, col_offset, rp, col);
    const long long q =
        round_half_away_from_zero(rp.multiplier * static_cast<double>(adjusted)) + rp.zp_c;
    return static_cast<uint8_t>(std::clamp<long long>(q, 0, 255));
}

/// Scales a raw dot product (full K) back to an unsigned 8-bit output value.
/// ro must cover row i accumulated across all k blocks; co covers column j.
inline uint8_t requantize(int32_t acc, int i, int j, const RowOffsets& ro,
                          const ColOffsets& co, const RequantParams& rp) {
    const int32_t row_offset = ro.values.empty() ? 0 : ro.values.at(i - ro.row_base);
    return requantize_scalar(acc, row_offset, co.values.at(j), rp, j);
}

}  // namespace q8gemm
