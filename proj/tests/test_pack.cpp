#include <catch2/catch_amalgamated.hpp>

#include "q8gemm/dispatch.hpp"
#include "q8gemm/pack.hpp"
#include "test_util.hpp"

using namespace q8gemm;
using namespace q8gemm::testutil;

TEST_CASE("BlockingParams validation") {
    CHECK_NOTHROW(BlockingParams::defaults().validate());
    BlockingParams bp;
    bp.mcb = 15;  // not a multiple of mr=14
    CHECK_THROWS_AS(bp.validate(), std::invalid_argument);
    bp = BlockingParams::defaults();
    bp.kcb = 7;
    CHECK_THROWS_AS(bp.validate(), std::invalid_argument);
    bp = BlockingParams::defaults();
    bp.ncb = 33;
    CHECK_THROWS_AS(bp.validate(), std::invalid_argument);
    bp = BlockingParams::defaults();
    bp.nr = 0;
    CHECK_THROWS_AS(bp.validate(), std::invalid_argument);
}

TEST_CASE("pack_a single entry with k padding") {
    Matrix<uint8_t> a(1, 1, 5);
    BlockingParams bp{1, 32, 2, 1, 32};
    const PackedActivationBlock pa = pack_a_with_row_offsets(cview(a), 0, 0, bp);
    REQUIRE(pa.data.size() == 2);
    CHECK(pa.data[0] == 5);
    CHECK(pa.data[1] == 0);
    CHECK(pa.rows_valid == 1);
    CHECK(pa.k_valid == 1);
    CHECK(pa.row_offsets.values == std::vector<int32_t>{5});
    CHECK(pa.row_offsets.k_span == 1);
}

TEST_CASE("pack_a direct row sums") {
    Matrix<uint8_t> a(2, 2);
    a(0, 0) = 1; a(0, 1) = 2;
    a(1, 0) = 3; a(1, 1) = 4;
    BlockingParams bp{2, 32, 2, 2, 32};
    const PackedActivationBlock pa = pack_a_with_row_offsets(cview(a), 0, 0, bp);
    CHECK(pa.row_offsets.values == std::vector<int32_t>{3, 7});
    // One panel, one k-pair chunk: [r0k0, r0k1, r1k0, r1k1].
    CHECK(pa.data == std::vector<uint8_t>{1, 2, 3, 4});
}

TEST_CASE("pack_a_plain produces a byte-identical layout") {
    std::mt19937_64 rng(31);
    const Matrix<uint8_t> a = random_u8_matrix(rng, 23, 41);
    BlockingParams bp{12, 32, 16, 4, 32};
    const PackedActivationBlock with = pack_a_with_row_offsets(cview(a), 12, 16, bp);
    const PackedActivationBlock plain = pack_a_plain(cview(a), 12, 16, bp);
    CHECK(with.data == plain.data);
    CHECK(plain.row_offsets.values.empty());
}

TEST_CASE("pack_a zero matrix gives a zero buffer") {
    Matrix<uint8_t> a(8, 8, 0);
    BlockingParams bp{8, 32, 8, 4, 32};
    const PackedActivationBlock pa = pack_a_plain(cview(a), 0, 0, bp);
    for (uint8_t v : pa.data) REQUIRE(v == 0);
}

TEST_CASE("pack_a rejects out-of-bounds block starts") {
    Matrix<uint8_t> a(4, 4, 1);
    const BlockingParams bp = BlockingParams::defaults();
    CHECK_THROWS_AS(pack_a_plain(cview(a), 4, 0, bp), std::invalid_argument);
    CHECK_THROWS_AS(pack_a_plain(cview(a), 0, 4, bp), std::invalid_argument);
    CHECK_THROWS_AS(pack_a_with_row_offsets(cview(a), -1, 0, bp), std::invalid_argument);
}

TEST_CASE("pack_a clipped edges roundtrip and match brute-force offsets") {
    std::mt19937_64 rng(37);
    const Matrix<uint8_t> a = random_u8_matrix(rng, 33, 70);
    BlockingParams bp{32, 32, 64, 8, 32};
    for (int ic : {0, 32}) {
        for (int kc : {0, 64}) {
            const PackedActivationBlock pa = pack_a_with_row_offsets(cview(a), ic, kc, bp);
            const Matrix<uint8_t> back = unpack_activation_block(pa);
            REQUIRE(back.rows() == std::min(32, 33 - ic));
            REQUIRE(back.cols() == std::min(64, 70 - kc));
            for (int i = 0; i < back.rows(); ++i) {
                int32_t sum = 0;
                for (int k = 0; k < back.cols(); ++k) {
                    REQUIRE(back(i, k) == a(ic + i, kc + k));
                    sum += a(ic + i, kc + k);
                }
                REQUIRE(pa.row_offsets.values[i] == sum);
            }
        }
    }
}

TEST_CASE("prepack single-block layout is the k-pair column interleave") {
    // K = kcb, N = nr: one block, one panel.
    BlockingParams bp{14, 4, 4, 14, 4};
    Matrix<int8_t> b(4, 4);
    int8_t v = 1;
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 4; ++j) b(k, j) = v++;
    const PackedWeight pw = prepack_weights(cview(b), bp);
    REQUIRE(pw.data.size() == 16);
    // Chunk for k-pair 0: [b00, b10, b01, b11, b02, b12, b03, b13].
    const std::vector<int8_t> expected = {1, 5, 2, 6,  3, 7,  4, 8,
                                          9, 13, 10, 14, 11, 15, 12, 16};
    CHECK(std::vector<int8_t>(pw.data.begin(), pw.data.end()) == expected);
    CHECK(pw.max_abs == 16);
}

TEST_CASE("prepack zero matrix") {
    BlockingParams bp{14, 8, 4, 14, 4};
    Matrix<int8_t> b(10, 6, 0);
    const PackedWeight pw = prepack_weights(cview(b), bp);
    for (int8_t x : pw.data) REQUIRE(x == 0);
    for (int32_t c : pw.col_offsets.values) REQUIRE(c == 0);
    CHECK(pw.max_abs == 0);
}

TEST_CASE("prepack roundtrip on an awkward shape") {
    std::mt19937_64 rng(41);
    const Matrix<int8_t> b = random_i8_matrix(rng, 100, 37);
    BlockingParams bp{24, 16, 8, 6, 8};
    const PackedWeight pw = prepack_weights(cview(b), bp);
    const Matrix<int8_t> back = unpack_weight(pw);
    REQUIRE(back == b);
    for (int j = 0; j < 37; ++j) {
        int32_t sum = 0;
        for (int k = 0; k < 100; ++k) sum += b(k, j);
        REQUIRE(pw.col_offsets.values[j] == sum);
    }
}

TEST_CASE("pack/unpack roundtrip holds across shapes and blockings") {
    std::mt19937_64 rng(43);
    const BlockingParams sets[] = {
        BlockingParams::defaults(),
        {24, 16, 8, 6, 8},
        {8, 6, 4, 4, 3},
        {2, 2, 2, 1, 1},
    };
    for (int trial = 0; trial < 60; ++trial) {
        const int m = rand_int(rng, 1, 64);
        const int n = rand_int(rng, 1, 64);
        const int k = rand_int(rng, 1, 64);
        const BlockingParams base = sets[trial % 4];
        const BlockingParams bp = select_blocking(m, n, k, base);

        const Matrix<int8_t> b = random_i8_matrix(rng, k, n);
        const PackedWeight pw = prepack_weights(cview(b), bp);
        REQUIRE(unpack_weight(pw) == b);

        const Matrix<uint8_t> a = random_u8_matrix(rng, m, k);
        const int ic = (rand_int(rng, 0, m - 1) / bp.mcb) * bp.mcb;
        const int kc = (rand_int(rng, 0, k - 1) / bp.kcb) * bp.kcb;
        const PackedActivationBlock pa = pack_a_with_row_offsets(cview(a), ic, kc, bp);
        const Matrix<uint8_t> back = unpack_activation_block(pa);
        for (int i = 0; i < back.rows(); ++i) {
            int32_t two_pass = 0;
            for (int kk = 0; kk < back.cols(); ++kk) {
                REQUIRE(back(i, kk) == a(ic + i, kc + kk));
                two_pass += a(ic + i, kc + kk);
            }
            REQUIRE(pa.row_offsets.values[i] == two_pass);
        }
    }
}

TEST_CASE("packing is deterministic") {
    std::mt19937_64 rng(47);
    const Matrix<uint8_t> a = random_u8_matrix(rng, 30, 50);
    const Matrix<int8_t> b = random_i8_matrix(rng, 50, 30);
    const BlockingParams bp = select_blocking(30, 30, 50, BlockingParams::defaults());
    const PackedActivationBlock pa1 = pack_a_with_row_offsets(cview(a), 0, 0, bp);
    const PackedActivationBlock pa2 = pack_a_with_row_offsets(cview(a), 0, 0, bp);
    CHECK(pa1.data == pa2.data);
    const PackedWeight pw1 = prepack_weights(cview(b), bp);
    const PackedWeight pw2 = prepack_weights(cview(b), bp);
    CHECK(pw1.data == pw2.data);
}
