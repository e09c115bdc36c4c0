#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "mpsgemm/gemm.hpp"
#include "mpsgemm/kernels.hpp"
#include "mpsgemm/rng.hpp"

using namespace mpsgemm;
using namespace mpsgemm::lowprec;

namespace {

MatrixF32 random_matrix(std::int64_t r, std::int64_t c, Rng& rng) {
    MatrixF32 m(r, c);
    for (auto& v : m.data) v = rng.uniform_pm1f();
    return m;
}

// uniform magnitude in (lo, 1) with random sign
MatrixF32 banded_matrix(std::int64_t r, std::int64_t c, float lo, Rng& rng) {
    MatrixF32 m(r, c);
    for (auto& v : m.data) {
        const float u = static_cast<float>(rng.uniform01());
        const float mag = lo + (1.0f - lo) * u;
        v = rng.next_below(2) ? mag : -mag;
    }
    return m;
}

bool bit_equal(const MatrixF32& a, const MatrixF32& b) {
    return a.same_shape(b) &&
           std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0;
}

const GemmMode kAllModes[] = {GemmMode::fp32_ref, GemmMode::fp64_oracle, GemmMode::tf32_tc,
                              GemmMode::fp16_tc,  GemmMode::tf32_tcec,   GemmMode::fp16_tcec};

} // namespace

TEST_CASE("identity and 1x1 products") {
    Rng rng(5);
    const MatrixF32 i2 = identity_matrix<float>(2);
    MatrixF32 b(2, 2, {3.0f, 1.0f, 2.0f, 4.0f});

    CHECK(bit_equal(gemm_ref_f32(i2, b), b));
    // B entries are FP16-exact, so the uncorrected modes reproduce B too
    CHECK(bit_equal(gemm_tc(i2, b, fp16_format), b));
    CHECK(bit_equal(gemm_tc(i2, b, tf32_format), b));
    CHECK(bit_equal(gemm_tcec(i2, b, fp16_format), b));

    MatrixF32 x(1, 1, {2.5f});
    MatrixF32 y(1, 1, {4.0f});
    CHECK(gemm_ref_f32(x, y).data[0] == 10.0f);
    CHECK(gemm_oracle_f64(x, y).data[0] == 10.0);

    (void)rng;
}

TEST_CASE("shape checking") {
    MatrixF32 a(2, 3), b(2, 2);
    CHECK_THROWS_AS((void)gemm_ref_f32(a, b), ShapeMismatch);
    CHECK_THROWS_AS((void)gemm_tcec(a, b, fp16_format), ShapeMismatch);
}

TEST_CASE("reference GEMM tracks the f64 oracle at 64x64") {
    Rng rng(64);
    const MatrixF32 a = random_matrix(64, 64, rng);
    const MatrixF32 b = random_matrix(64, 64, rng);
    const MatrixF64 ref = gemm_oracle_f64(a, b);
    CHECK(relative_error(gemm_ref_f32(a, b), ref) <= 1e-6);
}

TEST_CASE("flushed FP16 element contributes exactly zero") {
    MatrixF32 a(1, 2, {0.5f, 0x1.0p-30f});
    MatrixF32 a_zeroed(1, 2, {0.5f, 0.0f});
    MatrixF32 b(2, 1, {0.25f, 0.75f});
    const MatrixF32 c = gemm_tc(a, b, fp16_format);
    CHECK(bit_equal(c, gemm_tc(a_zeroed, b, fp16_format)));
    CHECK(c.data[0] == 0.125f);
}

TEST_CASE("error-corrected modes recover reference accuracy at n=256") {
    Rng rng(256);
    const MatrixF32 a = random_matrix(256, 256, rng);
    const MatrixF32 b = random_matrix(256, 256, rng);
    const MatrixF64 ref = gemm_oracle_f64(a, b);

    const double err_ref = relative_error(gemm_ref_f32(a, b), ref);
    const double err_tf32tc = relative_error(gemm_tc(a, b, tf32_format), ref);
    const double err_fp16tc = relative_error(gemm_tc(a, b, fp16_format), ref);
    const double err_tf32ec = relative_error(gemm_tcec(a, b, tf32_format), ref);
    const double err_fp16ec = relative_error(gemm_tcec(a, b, fp16_format), ref);

    // corrected ~ reference, uncorrected an order of magnitude worse
    CHECK(err_tf32ec <= 4.0 * err_ref);
    CHECK(err_fp16ec <= 4.0 * err_ref);
    CHECK(err_tf32tc >= 10.0 * err_tf32ec);
    CHECK(err_fp16tc >= 10.0 * err_fp16ec);
}

TEST_CASE("TF32 and FP16 corrected errors match on safe-banded inputs") {
    Rng rng(2560);
    const MatrixF32 a = banded_matrix(256, 256, 0x1.0p-10f, rng);
    const MatrixF32 b = banded_matrix(256, 256, 0x1.0p-10f, rng);
    const MatrixF64 ref = gemm_oracle_f64(a, b);
    const double err_ref = relative_error(gemm_ref_f32(a, b), ref);
    const double err_tf32 = relative_error(gemm_tcec(a, b, tf32_format), ref);
    const double err_fp16 = relative_error(gemm_tcec(a, b, fp16_format), ref);
    CHECK(err_tf32 <= 2.0 * err_fp16);
    CHECK(err_fp16 <= 2.0 * err_tf32);
    CHECK(err_tf32 <= 2.0 * err_ref);
    CHECK(err_fp16 <= 2.0 * err_ref);
}

TEST_CASE("determinism: identical runs produce identical bits") {
    Rng rng(17);
    const MatrixF32 a = random_matrix(40, 24, rng);
    const MatrixF32 b = random_matrix(24, 56, rng);
    for (const auto mode : kAllModes) {
        const MatrixF32 c1 = gemm(a, b, mode);
        const MatrixF32 c2 = gemm(a, b, mode);
        CHECK(bit_equal(c1, c2));
    }
}

TEST_CASE("power-of-two scaling commutes with every mode") {
    Rng rng(23);
    for (int iter = 0; iter < 4; ++iter) {
        const MatrixF32 a = banded_matrix(24, 16, 0x1.0p-6f, rng);
        const MatrixF32 b = banded_matrix(16, 40, 0x1.0p-6f, rng);
        for (const int s : {-3, -1, 1, 2, 5}) {
            MatrixF32 a_scaled = a;
            for (auto& v : a_scaled.data) v = std::ldexp(v, s);
            for (const auto mode : kAllModes) {
                const MatrixF32 c = gemm(a, b, mode);
                MatrixF32 c_scaled_expect = c;
                for (auto& v : c_scaled_expect.data) v = std::ldexp(v, s);
                CHECK(bit_equal(gemm(a_scaled, b, mode), c_scaled_expect));
            }
        }
    }
}

TEST_CASE("corrected GEMM with zero residuals equals the main-term schedule") {
    Rng rng(29);
    // entries exactly representable in 11 significand bits: residual lo = 0
    MatrixF32 a(16, 20), b(20, 24);
    for (auto& v : a.data)
        v = static_cast<float>(static_cast<int>(rng.next_below(2049)) - 1024) * 0x1.0p-10f;
    for (auto& v : b.data)
        v = static_cast<float>(static_cast<int>(rng.next_below(2049)) - 1024) * 0x1.0p-10f;

    const MatrixF32 c = gemm_tcec(a, b, fp16_format);

    const auto& kt = kernels::active_kernels();
    std::vector<float> zeros_a(a.data.size(), 0.0f), zeros_b(b.data.size(), 0.0f);
    MatrixF32 manual(a.rows, b.cols);
    kt.gemm_rows_tcec(a.data.data(), zeros_a.data(), b.data.data(), zeros_b.data(),
                      manual.data.data(), a.rows, b.cols, a.cols, 16, 0, a.rows);
    CHECK(bit_equal(c, manual));
}

TEST_CASE("exact small-value matrices are computed exactly by every mode") {
    Rng rng(31);
    // sampled from the {0, +-0.5, +-1} family (full enumeration is infeasible)
    const float values[] = {0.0f, 0.5f, -0.5f, 1.0f, -1.0f};
    for (int iter = 0; iter < 2000; ++iter) {
        MatrixF32 a(4, 4), b(4, 4);
        for (auto& v : a.data) v = values[rng.next_below(5)];
        for (auto& v : b.data) v = values[rng.next_below(5)];
        const MatrixF64 ref = gemm_oracle_f64(a, b);
        for (const auto mode : kAllModes) {
            const MatrixF32 c = gemm(a, b, mode);
            for (std::size_t i = 0; i < c.data.size(); ++i)
                CHECK(static_cast<double>(c.data[i]) == ref.data[i]);
        }
    }
}

TEST_CASE("relative error metric") {
    MatrixF32 c(2, 2, {1.0f, 2.0f, 3.0f, 4.0f});
    MatrixF64 ref(2, 2, {1.0, 2.0, 3.0, 4.0});
    CHECK(relative_error(c, ref) == 0.0);

    // scaling identity: C = 1.01 * C_ref elementwise
    Rng rng(37);
    MatrixF32 c2(8, 8);
    MatrixF64 ref2(8, 8);
    for (std::size_t i = 0; i < c2.data.size(); ++i) {
        c2.data[i] = rng.uniform_pm1f();
        ref2.data[i] = static_cast<double>(c2.data[i]) / 1.01;
    }
    CHECK(relative_error(c2, ref2) == doctest::Approx(0.01).epsilon(1e-9));

    MatrixF64 zeros(2, 2);
    CHECK_THROWS_AS((void)relative_error(c, zeros), ZeroReference);
}

TEST_CASE("configurable k tile changes the schedule deterministically") {
    Rng rng(41);
    const MatrixF32 a = random_matrix(8, 64, rng);
    const MatrixF32 b = random_matrix(64, 8, rng);
    const MatrixF32 c16 = gemm_tcec(a, b, fp16_format, TilingConfig{16});
    const MatrixF32 c8 = gemm_tcec(a, b, fp16_format, TilingConfig{8});
    CHECK(bit_equal(c16, gemm_tcec(a, b, fp16_format, TilingConfig{16})));
    CHECK(bit_equal(c8, gemm_tcec(a, b, fp16_format, TilingConfig{8})));
    CHECK_THROWS(gemm_tcec(a, b, fp16_format, TilingConfig{0}));
}
