#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace q8gemm {

constexpr int round_up(int value, int multiple) {
    return ((value + multiple - 1) / multiple) * multiple;
}

constexpr int ceil_div(int value, int divisor) {
    return (value + divisor - 1) / divisor;
}

/// Row-major dense matrix with value semantics.
template <typename T>
class Matrix {
public:
    Matrix() = default;

    Matrix(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols),
          data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
        if (rows < 1 || cols < 1) {
            throw std::invalid_argument("Matrix: dimensions must be >= 1");
        }
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    T& operator()(int r, int c) {
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }
    const T& operator()(int r, int c) const {
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

/// Non-owning view of a row-major matrix. ld is the leading dimension (>= cols).
template <typename T>
struct MatrixView {
    T* data = nullptr;
    int rows = 0;
    int cols = 0;
    int ld = 0;

    T& operator()(int r, int c) const {
        return data[static_cast<std::size_t>(r) * ld + c];
    }

    bool empty() const { return data == nullptr; }
};

template <typename T>
MatrixView<T> view(Matrix<T>& m) {
    return {m.data(), m.rows(), m.cols(), m.cols()};
}

template <typename T>
MatrixView<const T> cview(const Matrix<T>& m) {
    return {m.data(), m.rows(), m.cols(), m.cols()};
}

/// View of a rectangular sub-block of an existing view.
template <typename T>
MatrixView<T> subview(const MatrixView<T>& m, int row0, int col0, int rows, int cols) {
    return {m.data + static_cast<std::size_t>(row0) * m.ld + col0, rows, cols, m.ld};
}

}  // namespace q8gemm
