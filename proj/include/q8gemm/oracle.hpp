#pragma once

#include <algorithm>
#include <cstdint>

#include "q8gemm/matrix.hpp"
#include "q8gemm/quant.hpp"

// Reference implementations used as ground truth. They are blocking-free and
// pipeline-free; any disagreement with the engine is an engine bug.

namespace q8gemm::oracle {

/// Plain triple-loop GEMM with products widened to 32 bits.
inline Matrix<int32_t> naive_gemm_i32(MatrixView<const uint8_t> a, MatrixView<const int8_t> b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("naive_gemm_i32: inner dimensions must match");
    }
    Matrix<int32_t> c(a.rows, b.cols, 0);
    for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < b.cols; ++j) {
            int32_t acc = 0;
            for (int k = 0; k < a.cols; ++k) {
                acc += static_cast<int32_t>(a(i, k)) * static_cast<int32_t>(b(k, j));
            }
            c(i, j) = acc;
        }
    }
    return c;
}

/// Real-domain reference for the quantized pipeline: quantize the inputs,
/// dequantize them back, multiply in the real domain, quantize the result.
inline Matrix<uint8_t> real_domain_reference(MatrixView<const double> a_real,
                                             MatrixView<const double> b_real,
                                             const QuantParams& qa, const QuantParams& qb,
                                             const QuantParams& qc) {
    if (a_real.cols != b_real.rows) {
        throw std::invalid_argument("real_domain_reference: inner dimensions must match");
    }
    Matrix<uint8_t> c(a_real.rows, b_real.cols);
    for (int i = 0; i < a_real.rows; ++i) {
        for (int j = 0; j < b_real.cols; ++j) {
            double sum = 0.0;
            for (int k = 0; k < a_real.cols; ++k) {
                const double a_hat = dequantize(quantize<uint8_t>(a_real(i, k), qa), qa);
                const double b_hat = dequantize(quantize<int8_t>(b_real(k, j), qb), qb);
                sum += a_hat * b_hat;
            }
            c(i, j) = quantize<uint8_t>(sum, qc);
        }
    }
    return c;
}

/// Scalar model of the pairwise saturating multiply-add: both products are
/// exact in 32 bits, their sum saturates to 16 bits once, and the running
/// accumulator saturates once more. Written independently of the microkernel.
inline int16_t scalar_saturating_pairs(uint8_t a0, uint8_t a1, int8_t b0, int8_t b1,
                                       int16_t acc16) {
    const int32_t pair = static_cast<int32_t>(a0) * b0 + static_cast<int32_t>(a1) * b1;
    const int32_t t = std::clamp(pair, -32768, 32767);
    const int32_t sum = std::clamp(static_cast<int32_t>(acc16) + t, -32768, 32767);
    return static_cast<int16_t>(sum);
}

}  // namespace q8gemm::oracle
