// Command-line harness: verify (engine vs oracle), bench (timing sweep, CSV),
// demo (end-to-end INT16 + outlier-split pipeline).

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "q8gemm/q8gemm.hpp"

namespace {

using namespace q8gemm;

struct Shape {
    int m, n, k;
};

std::vector<Shape> default_shapes() {
    return {{1, 1, 1},      {1, 64, 64},    {3, 5, 7},       {14, 32, 256},
            {56, 64, 512},  {64, 64, 64},   {100, 37, 61},   {128, 128, 128},
            {256, 256, 256}};
}

std::vector<Shape> parse_shapes_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open shapes file: " + path);
    }
    std::vector<Shape> shapes;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        Shape s{};
        if (!(ss >> s.m)) continue;  // blank or comment-only line
        std::string trailing;
        if (!(ss >> s.n >> s.k) || (ss >> trailing) || s.m < 1 || s.n < 1 || s.k < 1) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected \"M N K\" with positive integers");
        }
        shapes.push_back(s);
    }
    if (shapes.empty()) {
        throw std::invalid_argument(path + ": no shapes found");
    }
    return shapes;
}

uint8_t rand_u8(std::mt19937_64& rng) { return static_cast<uint8_t>(rng() & 0xFF); }
int8_t rand_i8(std::mt19937_64& rng) { return static_cast<int8_t>(rng() & 0xFF); }

Matrix<uint8_t> random_u8_matrix(std::mt19937_64& rng, int rows, int cols) {
    Matrix<uint8_t> m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rand_u8(rng);
    return m;
}

Matrix<int8_t> random_i8_matrix(std::mt19937_64& rng, int rows, int cols) {
    Matrix<int8_t> m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rand_i8(rng);
    return m;
}

struct CommonOpts {
    std::string shapes_path;
    uint64_t seed = 42;
    std::string variant = "i32";
    int threads = 1;
    int repeats = 11;
    bool compare_naive = false;
    bool no_split = false;
    std::optional<int> mcb, ncb, kcb, mr, nr;

    KernelVariant kernel_variant() const {
        return variant == "i16" ? KernelVariant::kAccI16 : KernelVariant::kAccI32;
    }

    BlockingParams base_blocking() const {
        BlockingParams bp = BlockingParams::defaults();
        if (mcb) bp.mcb = *mcb;
        if (ncb) bp.ncb = *ncb;
        if (kcb) bp.kcb = *kcb;
        if (mr) bp.mr = *mr;
        if (nr) bp.nr = *nr;
        bp.validate();
        return bp;
    }

    std::vector<Shape> shapes() const {
        return shapes_path.empty() ? default_shapes() : parse_shapes_file(shapes_path);
    }
};

void add_blocking_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--mcb", o.mcb, "Row cache-block size override");
    cmd->add_option("--ncb", o.ncb, "Column cache-block size override");
    cmd->add_option("--kcb", o.kcb, "Depth cache-block size override");
    cmd->add_option("--mr", o.mr, "Register-tile rows override");
    cmd->add_option("--nr", o.nr, "Register-tile columns override");
}

template <typename OutT>
void run_workers(int num_threads, MatrixView<const uint8_t> a, const PackedWeight& pw,
                 MatrixView<OutT> out, const OutputPipeline& pipeline, KernelVariant variant) {
    if (num_threads == 1) {
        execute_gemm(a, pw, out, pipeline, variant, 0, 1);
        return;
    }
    std::vector<std::thread> workers;
    for (int t = 0; t < num_threads; ++t) {
        workers.emplace_back(
            [&, t] { execute_gemm(a, pw, out, pipeline, variant, t, num_threads); });
    }
    for (auto& w : workers) w.join();
}

int cmd_verify(const CommonOpts& o) {
    std::mt19937_64 rng(o.seed);
    const BlockingParams base = o.base_blocking();
    bool all_pass = true;

    for (const Shape& s : o.shapes()) {
        const Matrix<uint8_t> a = random_u8_matrix(rng, s.m, s.k);
        const Matrix<int8_t> b = random_i8_matrix(rng, s.k, s.n);
        const BlockingParams bp = select_blocking(s.m, s.n, s.k, base);
        const Matrix<int32_t> expected = oracle::naive_gemm_i32(cview(a), cview(b));
        Matrix<int32_t> out(s.m, s.n, 0);
        auto outv = view(out);

        if (o.kernel_variant() == KernelVariant::kAccI32) {
            const PackedWeight pw = prepack_weights(cview(b), bp);
            run_workers(o.threads, cview(a), pw, outv, OutputPipeline({WriteRawI32{}}),
                        KernelVariant::kAccI32);
        } else if (o.no_split) {
            const PackedWeight pw = prepack_weights(cview(b), bp);
            run_workers(o.threads, cview(a), pw, outv, OutputPipeline({WriteRawI32{}}),
                        KernelVariant::kAccI16);
        } else {
            const int threshold = max_i16_split_threshold(bp.kcb);
            const SplitWeight sw = split_outliers(cview(b), threshold);
            const PackedWeight pw = prepack_weights(cview(sw.dense_small), bp);
            run_workers(o.threads, cview(a), pw, outv,
                        OutputPipeline({SpMDMAdd{&sw.sparse}, WriteRawI32{}}),
                        KernelVariant::kAccI16);
        }

        int64_t max_dev = 0;
        for (int i = 0; i < s.m; ++i)
            for (int j = 0; j < s.n; ++j)
                max_dev = std::max<int64_t>(max_dev, std::abs(static_cast<int64_t>(out(i, j)) -
                                                              expected(i, j)));
        const bool pass = max_dev == 0;
        all_pass = all_pass && pass;
        std::printf("M=%d N=%d K=%d variant=%s threads=%d : %s max_dev=%lld\n", s.m, s.n, s.k,
                    o.variant.c_str(), o.threads, pass ? "PASS" : "FAIL",
                    static_cast<long long>(max_dev));
    }
    return all_pass ? 0 : 1;
}

int64_t time_ns_median(int repeats, const std::function<void()>& fn) {
    for (int w = 0; w < 2; ++w) fn();  // warmup
    std::vector<int64_t> times;
    times.reserve(repeats);
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

void print_csv_row(const Shape& s, const std::string& variant, int threads, int64_t ns) {
    const double gops = 2.0 * s.m * s.n * s.k / static_cast<double>(ns);
    std::printf("%d,%d,%d,%s,%d,%lld,%.4f\n", s.m, s.n, s.k, variant.c_str(), threads,
                static_cast<long long>(ns), gops);
}

int cmd_bench(const CommonOpts& o) {
    std::mt19937_64 rng(o.seed);
    const BlockingParams base = o.base_blocking();
    std::printf("M,N,K,variant,threads,ns_median,gops\n");

    for (const Shape& s : o.shapes()) {
        const Matrix<uint8_t> a = random_u8_matrix(rng, s.m, s.k);
        const Matrix<int8_t> b = random_i8_matrix(rng, s.k, s.n);
        const BlockingParams bp = select_blocking(s.m, s.n, s.k, base);
        Matrix<int32_t> out(s.m, s.n, 0);
        auto outv = view(out);

        if (o.kernel_variant() == KernelVariant::kAccI32) {
            const PackedWeight pw = prepack_weights(cview(b), bp);
            const OutputPipeline raw({WriteRawI32{}});
            const int64_t ns = time_ns_median(o.repeats, [&] {
                run_workers(o.threads, cview(a), pw, outv, raw, KernelVariant::kAccI32);
            });
            print_csv_row(s, o.variant, o.threads, ns);
        } else {
            const int threshold = max_i16_split_threshold(bp.kcb);
            const SplitWeight sw = split_outliers(cview(b), threshold);
            const PackedWeight pw = prepack_weights(cview(sw.dense_small), bp);
            const OutputPipeline pipeline({SpMDMAdd{&sw.sparse}, WriteRawI32{}});
            const int64_t ns = time_ns_median(o.repeats, [&] {
                run_workers(o.threads, cview(a), pw, outv, pipeline, KernelVariant::kAccI16);
            });
            print_csv_row(s, o.variant, o.threads, ns);
        }

        if (o.compare_naive) {
            Matrix<int32_t> ref(s.m, s.n, 0);
            const int64_t ns = time_ns_median(
                o.repeats, [&] { ref = oracle::naive_gemm_i32(cview(a), cview(b)); });
            print_csv_row(s, "naive", 1, ns);
        }
    }
    return 0;
}

struct DemoOpts {
    int m = 64;
    int n = 64;
    int k = 64;
    double density = 0.01;
};

int cmd_demo(const CommonOpts& o, const DemoOpts& d) {
    std::mt19937_64 rng(o.seed);

    // Quantized inputs: full-range activations, small-magnitude weights with a
    // controlled fraction of +-127 outliers.
    const Matrix<uint8_t> aq = random_u8_matrix(rng, d.m, d.k);
    Matrix<int8_t> bq(d.k, d.n);
    for (int kk = 0; kk < d.k; ++kk)
        for (int j = 0; j < d.n; ++j)
            bq(kk, j) = static_cast<int8_t>(static_cast<int>(rng() % 9) - 4);
    const int forced = static_cast<int>(d.density * d.k * d.n);
    for (int i = 0; i < forced; ++i) {
        const int r = static_cast<int>(rng() % d.k);
        const int c = static_cast<int>(rng() % d.n);
        bq(r, c) = (rng() & 1) ? int8_t{127} : int8_t{-127};
    }

    const QuantParams qa = choose_quant_params(-1.0, 1.0, false);
    const QuantParams qb = choose_quant_params(-0.5, 0.5, true);
    Matrix<double> a_real(d.m, d.k), b_real(d.k, d.n);
    for (int i = 0; i < d.m; ++i)
        for (int kk = 0; kk < d.k; ++kk) a_real(i, kk) = dequantize(aq(i, kk), qa);
    double c_min = 0.0, c_max = 0.0;
    for (int kk = 0; kk < d.k; ++kk)
        for (int j = 0; j < d.n; ++j) b_real(kk, j) = dequantize(bq(kk, j), qb);
    Matrix<double> c_real(d.m, d.n, 0.0);
    for (int i = 0; i < d.m; ++i) {
        for (int j = 0; j < d.n; ++j) {
            double sum = 0.0;
            for (int kk = 0; kk < d.k; ++kk) sum += a_real(i, kk) * b_real(kk, j);
            c_real(i, j) = sum;
            c_min = std::min(c_min, sum);
            c_max = std::max(c_max, sum);
        }
    }
    const QuantParams qc = choose_quant_params(c_min, c_max, false);

    BlockingParams base = o.base_blocking();
    if (!o.kcb) base.kcb = 32;  // keep the INT16 split threshold illustrative
    const BlockingParams bp = select_blocking(d.m, d.n, d.k, base);
    const int threshold = max_i16_split_threshold(bp.kcb);
    const SplitWeight sw = split_outliers(cview(bq), threshold);
    const PackedWeight pw = prepack_weights(cview(sw.dense_small), bp);
    const ColOffsets co = compute_col_offsets(cview(bq));  // from the unsplit B

    RequantParams rp;
    rp.multiplier = qa.scale * qb.scale / qc.scale;
    rp.zp_a = qa.zero_point;
    rp.zp_b = qb.zero_point;
    rp.zp_c = qc.zero_point;
    rp.k_total = d.k;

    std::printf("INT8 x INT8 -> INT16-accumulated GEMM with outlier-aware split\n");
    std::printf("shape: M=%d N=%d K=%d  outlier_density=%.4f  seed=%llu\n", d.m, d.n, d.k,
                d.density, static_cast<unsigned long long>(o.seed));
    std::printf("blocking: mcb=%d ncb=%d kcb=%d mr=%d nr=%d\n", bp.mcb, bp.ncb, bp.kcb, bp.mr,
                bp.nr);
    std::printf("split: T=%d  nnz=%d (%.2f%% of B)  max|B'|=%d\n", threshold, sw.sparse.nnz(),
                100.0 * sw.sparse.nnz() / (d.k * d.n), pw.max_abs);
    std::printf("saturation bound: 255 * %d * %d = %lld <= 32767\n", pw.max_abs, bp.kcb,
                255LL * pw.max_abs * bp.kcb);

    Matrix<uint8_t> engine_out(d.m, d.n, 0);
    auto engine_outv = view(engine_out);
    run_workers(o.threads, cview(aq), pw, engine_outv,
                OutputPipeline({SpMDMAdd{&sw.sparse}, Requantize{rp, &co}}),
                KernelVariant::kAccI16);

    // Straight-line reference: naive 32-bit GEMM on the unsplit B, then the
    // same requantization formula.
    const Matrix<int32_t> acc = oracle::naive_gemm_i32(cview(aq), cview(bq));
    RowOffsets ro;
    ro.row_base = 0;
    ro.k_span = d.k;
    ro.values.assign(d.m, 0);
    for (int i = 0; i < d.m; ++i)
        for (int kk = 0; kk < d.k; ++kk) ro.values[i] += aq(i, kk);

    int dev_vs_reference = 0;
    for (int i = 0; i < d.m; ++i)
        for (int j = 0; j < d.n; ++j)
            dev_vs_reference =
                std::max(dev_vs_reference,
                         std::abs(static_cast<int>(engine_out(i, j)) -
                                  requantize(acc(i, j), i, j, ro, co, rp)));

    const Matrix<uint8_t> real_ref =
        oracle::real_domain_reference(cview(a_real), cview(b_real), qa, qb, qc);
    int dev_vs_real = 0;
    for (int i = 0; i < d.m; ++i)
        for (int j = 0; j < d.n; ++j)
            dev_vs_real = std::max(dev_vs_real, std::abs(static_cast<int>(engine_out(i, j)) -
                                                         real_ref(i, j)));

    std::printf("engine vs integer reference: max_dev=%d (exact expected)\n", dev_vs_reference);
    std::printf("engine vs real-domain oracle: max_dev=%d (<= 1 expected)\n", dev_vs_real);
    const bool pass = dev_vs_reference == 0 && dev_vs_real <= 1;
    std::printf("%s\n", pass ? "PASS" : "FAIL");
    return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Low-precision (8-bit) GEMM engine with prepacked weights, fused packing, "
                 "outlier-aware INT16 accumulation, and a composable output pipeline"};
    app.require_subcommand(1);

    CommonOpts o;
    DemoOpts d;

    CLI::App* verify = app.add_subcommand("verify", "Check the engine against the naive oracle");
    verify->add_option("--shapes", o.shapes_path, "Shapes file: one \"M N K\" per line");
    verify->add_option("--seed", o.seed, "RNG seed");
    verify->add_option("--variant", o.variant, "Kernel variant")
        ->check(CLI::IsMember({"i32", "i16"}));
    verify->add_option("--threads", o.threads, "Worker count")->check(CLI::PositiveNumber);
    verify->add_flag("--no-split", o.no_split,
                     "i16 only: skip the outlier split (the engine rejects unsafe bounds)");
    add_blocking_flags(verify, o);

    CLI::App* bench = app.add_subcommand("bench", "Timing sweep, CSV on stdout");
    bench->add_option("--shapes", o.shapes_path, "Shapes file: one \"M N K\" per line");
    bench->add_option("--seed", o.seed, "RNG seed");
    bench->add_option("--variant", o.variant, "Kernel variant")
        ->check(CLI::IsMember({"i32", "i16"}));
    bench->add_option("--threads", o.threads, "Worker count")->check(CLI::PositiveNumber);
    bench->add_option("--repeats", o.repeats, "Timed repetitions per shape")
        ->check(CLI::PositiveNumber);
    bench->add_flag("--compare-naive", o.compare_naive, "Also time the naive oracle");
    add_blocking_flags(bench, o);

    CLI::App* demo = app.add_subcommand("demo", "End-to-end INT16 + outlier-split pipeline");
    demo->add_option("--m", d.m, "Rows of A")->check(CLI::PositiveNumber);
    demo->add_option("--n", d.n, "Columns of B")->check(CLI::PositiveNumber);
    demo->add_option("--k", d.k, "Inner dimension")->check(CLI::PositiveNumber);
    demo->add_option("--density", d.density, "Fraction of B forced to +-127")
        ->check(CLI::Range(0.0, 1.0));
    demo->add_option("--seed", o.seed, "RNG seed");
    demo->add_option("--threads", o.threads, "Worker count")->check(CLI::PositiveNumber);
    add_blocking_flags(demo, o);

    try {
        app.parse(argc, argv);
        if (verify->parsed()) return cmd_verify(o);
        if (bench->parsed()) return cmd_bench(o);
        return cmd_demo(o, d);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
