#pragma once

#include <cstdint>
#include <random>

#include "q8gemm/matrix.hpp"

namespace q8gemm::testutil {

inline uint8_t rand_u8(std::mt19937_64& rng) {
    return static_cast<uint8_t>(rng() & 0xFF);
}

inline int8_t rand_i8(std::mt19937_64& rng) {
    return static_cast<int8_t>(rng() & 0xFF);
}

inline int rand_int(std::mt19937_64& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<uint64_t>(hi - lo + 1));
}

inline double rand_real(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() % 10001) / 10000.0);
}

inline Matrix<uint8_t> random_u8_matrix(std::mt19937_64& rng, int rows, int cols) {
    Matrix<uint8_t> m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rand_u8(rng);
    return m;
}

inline Matrix<int8_t> random_i8_matrix(std::mt19937_64& rng, int rows, int cols) {
    Matrix<int8_t> m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rand_i8(rng);
    return m;
}

inline Matrix<int8_t> random_i8_matrix_bounded(std::mt19937_64& rng, int rows, int cols,
                                               int max_abs) {
    Matrix<int8_t> m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = static_cast<int8_t>(rand_int(rng, -max_abs, max_abs));
    return m;
}

inline Matrix<double> random_real_matrix(std::mt19937_64& rng, int rows, int cols, double lo,
                                         double hi) {
    Matrix<double> m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rand_real(rng, lo, hi);
    return m;
}

}  // namespace q8gemm::testutil
