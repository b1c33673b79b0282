#include <catch2/catch_amalgamated.hpp>

#include "q8gemm/oracle.hpp"
#include "test_util.hpp"

using namespace q8gemm;
using namespace q8gemm::testutil;

TEST_CASE("naive_gemm_i32 basics") {
    SECTION("1x1x1") {
        Matrix<uint8_t> a(1, 1, 2);
        Matrix<int8_t> b(1, 1, 3);
        const Matrix<int32_t> c = oracle::naive_gemm_i32(cview(a), cview(b));
        CHECK(c(0, 0) == 6);
    }
    SECTION("identity B widens A") {
        std::mt19937_64 rng(3);
        const int n = 9;
        const Matrix<uint8_t> a = random_u8_matrix(rng, 5, n);
        Matrix<int8_t> eye(n, n, 0);
        for (int i = 0; i < n; ++i) eye(i, i) = 1;
        const Matrix<int32_t> c = oracle::naive_gemm_i32(cview(a), cview(eye));
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < n; ++j) REQUIRE(c(i, j) == a(i, j));
    }
    SECTION("dimension mismatch") {
        Matrix<uint8_t> a(2, 3, 1);
        Matrix<int8_t> b(4, 2, 1);
        CHECK_THROWS_AS(oracle::naive_gemm_i32(cview(a), cview(b)), std::invalid_argument);
    }
}

// Self-consistency: a k-outer accumulation order must agree with the oracle's
// j-inner order.
TEST_CASE("naive_gemm_i32 agrees with an independent accumulation order") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = rand_int(rng, 1, 24);
        const int n = rand_int(rng, 1, 24);
        const int k = rand_int(rng, 1, 24);
        const Matrix<uint8_t> a = random_u8_matrix(rng, m, k);
        const Matrix<int8_t> b = random_i8_matrix(rng, k, n);

        Matrix<int32_t> c2(m, n, 0);
        for (int kk = 0; kk < k; ++kk)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j)
                    c2(i, j) += static_cast<int32_t>(a(i, kk)) * static_cast<int32_t>(b(kk, j));

        const Matrix<int32_t> c1 = oracle::naive_gemm_i32(cview(a), cview(b));
        REQUIRE(c1 == c2);
    }
}

TEST_CASE("real_domain_reference fixed points") {
    SECTION("all-zero reals produce the output zero point") {
        Matrix<double> a(3, 4, 0.0);
        Matrix<double> b(4, 2, 0.0);
        const QuantParams qa = choose_quant_params(-1.0, 1.0, false);
        const QuantParams qb = choose_quant_params(-1.0, 1.0, true);
        const QuantParams qc = choose_quant_params(-4.0, 4.0, false);
        const Matrix<uint8_t> c = oracle::real_domain_reference(cview(a), cview(b), qa, qb, qc);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 2; ++j) REQUIRE(c(i, j) == qc.zero_point);
    }
    SECTION("unit scales and zero points reduce to clamped integer GEMM") {
        Matrix<double> a(2, 2);
        a(0, 0) = 1.0; a(0, 1) = 2.0; a(1, 0) = 3.0; a(1, 1) = 4.0;
        Matrix<double> b(2, 2);
        b(0, 0) = 5.0; b(0, 1) = -6.0; b(1, 0) = 7.0; b(1, 1) = 8.0;
        const QuantParams unit{1.0, 0};
        const Matrix<uint8_t> c = oracle::real_domain_reference(cview(a), cview(b), unit, unit, unit);
        CHECK(c(0, 0) == 19);   // 1*5 + 2*7
        CHECK(c(0, 1) == 10);   // -6 + 16
        CHECK(c(1, 0) == 43);   // 15 + 28
        CHECK(c(1, 1) == 14);   // -18 + 32
    }
}

TEST_CASE("scalar_saturating_pairs semantics") {
    // 255*127 + 255*127 = 64770 saturates to 32767.
    CHECK(oracle::scalar_saturating_pairs(255, 255, 127, 127, 0) == 32767);
    // Cancellation within the pair.
    CHECK(oracle::scalar_saturating_pairs(1, 1, 1, -1, 0) == 0);
    // The accumulate also saturates, independently of the pair sum.
    CHECK(oracle::scalar_saturating_pairs(100, 0, 100, 0, 32000) == 32767);
    CHECK(oracle::scalar_saturating_pairs(255, 255, -128, -128, -32768) == -32768);
    // No saturation when bounds are respected.
    CHECK(oracle::scalar_saturating_pairs(200, 100, 3, -2, 5) == 405);
}
