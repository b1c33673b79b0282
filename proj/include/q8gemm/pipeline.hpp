#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "q8gemm/matrix.hpp"
#include "q8gemm/quant.hpp"
#include "q8gemm/sparse.hpp"

namespace q8gemm {

// Post-GEMM stages, applied per cache-resident block of the 32-bit
// accumulator. SpMDMAdd and BiasAdd mutate the block in the 32-bit domain.
// The writers transform it into the output matrix. ReluQuantized operates in
// the quantized output domain and is folded into the requantize writer.
// Referenced data (sparse, bias, col_offsets) must outlive the pipeline.

struct SpMDMAdd {
    const SparseWeightCSC* sparse;
};

struct BiasAdd {
    std::span<const int32_t> bias;  // one entry per output column
};

struct ReluQuantized {};

struct Requantize {
    RequantParams params;
    const ColOffsets* col_offsets;  // over the full K, from the original B
};

struct WriteRawI32 {};

struct WriteDequantF32 {
    QuantParams c_params;  // the accumulator is written as scale * (acc - zero_point)
};

using OutputStage =
    std::variant<SpMDMAdd, BiasAdd, ReluQuantized, Requantize, WriteRawI32, WriteDequantF32>;

enum class WriterKind { kRawI32, kRequantizeU8, kDequantF32 };

/// max(q, zp_c): ReLU in the quantized output domain. Equal to quantizing
/// max(real, 0) for any affine params, by monotonicity.
inline uint8_t relu_quantized(uint8_t q, int32_t zp_c) {
    return q < zp_c ? static_cast<uint8_t>(zp_c) : q;
}

/// Ordered stage list ending in exactly one writer. Ordering is validated at
/// construction.
class OutputPipeline {
public:
    explicit OutputPipeline(std::vector<OutputStage> stages) : stages_(std::move(stages)) {
        if (auto err = validate(stages_)) {
            throw std::invalid_argument("OutputPipeline: " + *err);
        }
    }

    /// Checks the ordering rules; returns a violation report or nullopt if ok.
    static std::optional<std::string> validate(const std::vector<OutputStage>& stages) {
        if (stages.empty()) {
            return "pipeline is empty; a terminal writer stage is required";
        }
        const auto is_writer = [](const OutputStage& s) {
            return std::holds_alternative<Requantize>(s) ||
                   std::holds_alternative<WriteRawI32>(s) ||
                   std::holds_alternative<WriteDequantF32>(s);
        };
        for (std::size_t i = 0; i + 1 < stages.size(); ++i) {
            if (is_writer(stages[i])) {
                return "stage " + std::to_string(i + 1) +
                       " follows a writer; the writer must be the last stage";
            }
        }
        if (!is_writer(stages.back())) {
            return "last stage must be a writer (Requantize, WriteRawI32, or WriteDequantF32)";
        }
        for (std::size_t i = 0; i < stages.size(); ++i) {
            if (std::holds_alternative<ReluQuantized>(stages[i])) {
                const bool before_requant = i + 2 == stages.size() &&
                                            std::holds_alternative<Requantize>(stages.back());
                if (!before_requant) {
                    return "ReluQuantized must immediately precede a Requantize writer";
                }
            }
            if (const auto* sp = std::get_if<SpMDMAdd>(&stages[i])) {
                if (sp->sparse == nullptr) return "SpMDMAdd requires a sparse matrix";
            }
            if (const auto* rq = std::get_if<Requantize>(&stages[i])) {
                if (!(rq->params.multiplier > 0)) return "Requantize multiplier must be positive";
                if (rq->params.k_total < 1) return "Requantize k_total must be >= 1";
                if (rq->col_offsets == nullptr) return "Requantize requires column offsets";
            }
        }
        return std::nullopt;
    }

    const std::vector<OutputStage>& stages() const { return stages_; }

    WriterKind writer() const {
        if (std::holds_alternative<WriteRawI32>(stages_.back())) return WriterKind::kRawI32;
        if (std::holds_alternative<Requantize>(stages_.back())) return WriterKind::kRequantizeU8;
        return WriterKind::kDequantF32;
    }

    /// True when the requantize correction needs per-row sums of A, i.e. the
    /// weight zero point is nonzero.
    bool needs_row_offsets() const {
        if (const auto* rq = std::get_if<Requantize>(&stages_.back())) {
            return rq->params.zp_b != 0;
        }
        return false;
    }

    bool has_relu() const {
        return stages_.size() >= 2 &&
               std::holds_alternative<ReluQuantized>(stages_[stages_.size() - 2]);
    }

private:
    std::vector<OutputStage> stages_;
};

/// Everything a stage may need about the block being processed: its global
/// coordinates, the full-K row offsets for its rows, and the source A matrix
/// for the fused sparse multiply.
struct BlockContext {
    int row0 = 0;
    int col0 = 0;
    std::span<const int32_t> row_offsets;  // may be empty when no stage needs it
    MatrixView<const uint8_t> a;           // may be empty when no SpMDMAdd stage
};

namespace detail {

template <typename OutT>
void check_writer_matches(const OutputPipeline& p) {
    const WriterKind w = p.writer();
    const bool ok = (std::is_same_v<OutT, int32_t> && w == WriterKind::kRawI32) ||
                    (std::is_same_v<OutT, uint8_t> && w == WriterKind::kRequantizeU8) ||
                    (std::is_same_v<OutT, float> && w == WriterKind::kDequantF32);
    if (!ok) {
        throw std::invalid_argument("pipeline writer does not match the output element type");
    }
}

}  // namespace detail

/// Applies the pipeline to one finalized accumulator block and writes the
/// result into out at the block's global coordinates.
template <typename OutT>
void run_block(const OutputPipeline& pipeline, MatrixView<int32_t> acc_block,
               const BlockContext& ctx, MatrixView<OutT> out) {
    detail::check_writer_matches<OutT>(pipeline);
    bool relu = false;
    for (const OutputStage& stage : pipeline.stages()) {
        if (const auto* sp = std::get_if<SpMDMAdd>(&stage)) {
            if (ctx.a.empty()) {
                throw std::invalid_argument("SpMDMAdd: block context carries no A matrix");
            }
            spmdm_block(ctx.a, *sp->sparse, acc_block, ctx.row0, ctx.col0);
        } else if (const auto* ba = std::get_if<BiasAdd>(&stage)) {
            for (int i = 0; i < acc_block.rows; ++i) {
                for (int j = 0; j < acc_block.cols; ++j) {
                    acc_block(i, j) += ba->bias[ctx.col0 + j];
                }
            }
        } else if (std::holds_alternative<ReluQuantized>(stage)) {
            relu = true;
        } else if (const auto* rq = std::get_if<Requantize>(&stage)) {
            for (int i = 0; i < acc_block.rows; ++i) {
                const int32_t ro = ctx.row_offsets.empty() ? 0 : ctx.row_offsets[i];
                for (int j = 0; j < acc_block.cols; ++j) {
                    const int col = ctx.col0 + j;
                    uint8_t q = requantize_scalar(acc_block(i, j), ro,
                                                  rq->col_offsets->values[col], rq->params, col);
                    if (relu) {
                        q = relu_quantized(q, rq->params.zp_c);
                    }
                    if constexpr (std::is_same_v<OutT, uint8_t>) {
                        out(ctx.row0 + i, col) = q;
                    }
                }
            }
        } else if (std::holds_alternative<WriteRawI32>(stage)) {
            for (int i = 0; i < acc_block.rows; ++i) {
                for (int j = 0; j < acc_block.cols; ++j) {
                    if constexpr (std::is_same_v<OutT, int32_t>) {
                        out(ctx.row0 + i, ctx.col0 + j) = acc_block(i, j);
                    }
                }
            }
        } else if (const auto* dq = std::get_if<WriteDequantF32>(&stage)) {
            for (int i = 0; i < acc_block.rows; ++i) {
                for (int j = 0; j < acc_block.cols; ++j) {
                    if constexpr (std::is_same_v<OutT, float>) {
                        out(ctx.row0 + i, ctx.col0 + j) = static_cast<float>(
                            dq->c_params.scale * (acc_block(i, j) - dq->c_params.zero_point));
                    }
                }
            }
        }
    }
}

}  // namespace q8gemm
