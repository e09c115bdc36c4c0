#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <thread>

#include "mpsgemm/precsel.hpp"
#include "mpsgemm/rng.hpp"

using namespace mpsgemm;

namespace {

MatrixC32 constant_matrix(std::int64_t r, std::int64_t c, float re, float im = 0.0f) {
    MatrixC32 m(r, c);
    for (auto& v : m.data) v = {re, im};
    return m;
}

bool bit_equal(const MatrixC32& a, const MatrixC32& b) {
    return a.same_shape(b) &&
           std::memcmp(a.data.data(), b.data.data(),
                       a.data.size() * sizeof(std::complex<float>)) == 0;
}

} // namespace

TEST_CASE("exponent statistics: basic profiles") {
    SUBCASE("all ones") {
        const auto s = exp_stats(constant_matrix(4, 4, 1.0f, 1.0f));
        CHECK(s.n_total == 32);
        CHECK(s.n_nonzero == 32);
        CHECK(s.n1 == 32);
        CHECK(s.e_max == 0);
        CHECK(s.r1() == 0.0);
    }

    SUBCASE("all 2^-20: below FP16 normals, inside the shifted window") {
        const auto s = exp_stats(constant_matrix(4, 4, 0x1.0p-20f, 0x1.0p-20f));
        CHECK(s.n1 == 0);
        CHECK(s.e_max == -20);
        CHECK(s.n2 == s.n_nonzero); // window [-48, -20]
        CHECK(s.r1() == 1.0);
        CHECK(s.r2() == 0.0);
    }

    SUBCASE("a 2^-40 component is outside the window anchored at e_max=0") {
        MatrixC32 m(1, 2);
        m.data[0] = {1.0f, 0.0f};
        m.data[1] = {0x1.0p-40f, 0.0f};
        const auto s = exp_stats(m);
        CHECK(s.e_max == 0);
        CHECK(s.n_nonzero == 2);
        CHECK(s.n1 == 1);
        CHECK(s.n2 == 1); // exponent -40 < -28
    }

    SUBCASE("all-zero matrix") {
        const auto s = exp_stats(constant_matrix(3, 3, 0.0f));
        CHECK(!s.e_max.has_value());
        CHECK(s.n_nonzero == 0);
        CHECK(s.r1() == 0.0);
    }

    SUBCASE("zero components are excluded from counts") {
        MatrixC32 m(1, 2);
        m.data[0] = {1.0f, 0.0f};   // one zero imaginary component
        m.data[1] = {0.25f, -1.0f};
        const auto s = exp_stats(m);
        CHECK(s.n_total == 4);
        CHECK(s.n_nonzero == 3);
        CHECK(s.n1 == 3);
    }
}

TEST_CASE("stage 2 is skipped when stage 1 passes, and recorded honestly") {
    const auto skipped = exp_stats_staged(constant_matrix(4, 4, 0.5f), 14, 0.0);
    CHECK(!skipped.stage2_evaluated);
    CHECK(skipped.n2 == skipped.n1);

    const auto taken = exp_stats_staged(constant_matrix(4, 4, 0x1.0p-20f), 14, 0.0);
    CHECK(taken.stage2_evaluated);
    CHECK(taken.n2 == taken.n_nonzero);
}

TEST_CASE("matrix tolerance levels") {
    const auto ok = matrix_tolerance(exp_stats(constant_matrix(4, 4, 1.0f)), 0.0);
    CHECK(ok.level == ToleranceLevel::fp16_ok);

    const auto scaled = matrix_tolerance(exp_stats(constant_matrix(4, 4, 0x1.0p-20f)), 0.0);
    CHECK(scaled.level == ToleranceLevel::fp16_scaled_ok);

    // 90% at 2^-40, 10% at 1.0
    MatrixC32 m(10, 10);
    for (std::size_t i = 0; i < m.data.size(); ++i) {
        const float mag = i % 10 == 0 ? 1.0f : 0x1.0p-40f;
        m.data[i] = {mag, mag};
    }
    const auto stats = exp_stats(m);
    CHECK(matrix_tolerance(stats, 0.0).level == ToleranceLevel::tf32_only);
    CHECK(matrix_tolerance(stats, 0.95).level == ToleranceLevel::fp16_ok);

    // values above the shift target demote direct FP16 use
    const auto big = matrix_tolerance(exp_stats(constant_matrix(2, 2, 0x1.0p20f)), 0.0);
    CHECK(big.level == ToleranceLevel::fp16_scaled_ok);
}

TEST_CASE("mode selection rule") {
    MatrixTolerance ok0{ToleranceLevel::fp16_ok, 0};
    MatrixTolerance scaled_m20{ToleranceLevel::fp16_scaled_ok, -20};
    MatrixTolerance tf32{ToleranceLevel::tf32_only, -3};

    const auto m1 = select_mode(ok0, ok0);
    CHECK(m1.kind == ComputeKind::fp16_tcec);
    CHECK(m1.scale_exp_a == 0);

    // an FP16-ready operand still receives its shift in the scaled pair mode
    const auto m2 = select_mode(ok0, scaled_m20);
    CHECK(m2.kind == ComputeKind::fp16_tcec_scaled);
    CHECK(m2.scale_exp_a == 14);
    CHECK(m2.scale_exp_b == 34);

    CHECK(select_mode(tf32, ok0).kind == ComputeKind::tf32_tcec);
    CHECK(select_mode(ok0, tf32).kind == ComputeKind::tf32_tcec);
}

TEST_CASE("tolerance level is monotone in the threshold") {
    Rng rng(404);
    const double thresholds[] = {0.0, 0.1, 0.5, 0.9};
    for (int iter = 0; iter < 1000; ++iter) {
        // random magnitude profile spanning many decades
        MatrixC32 m(4, 4);
        for (auto& v : m.data) {
            const int e = -static_cast<int>(rng.next_below(60));
            const float mag =
                rng.next_below(8) == 0 ? 0.0f : std::ldexp(1.0f + rng.uniform_pm1f() * 0.49f, e);
            v = {mag, 0.0f};
        }
        const auto stats = exp_stats(m);
        int prev = -1;
        for (const double t : thresholds) {
            const int level = static_cast<int>(matrix_tolerance(stats, t).level);
            CHECK(level >= prev);
            prev = level;
        }
    }
}

TEST_CASE("statistics are invariant under power-of-two scaling") {
    Rng rng(405);
    MatrixC32 m(8, 8);
    for (auto& v : m.data) v = {rng.uniform_pm1f() * 0x1.0p-8f, rng.uniform_pm1f() * 0x1.0p-8f};
    const auto base = exp_stats(m);
    for (const int s : {-6, -1, 3, 10}) {
        const MatrixC32 scaled = scale_matrix(m, s);
        const auto ss = exp_stats(scaled);
        CHECK(ss.n_nonzero == base.n_nonzero);
        CHECK(ss.n2 == base.n2);
        CHECK(*ss.e_max == *base.e_max + s);
        CHECK(ss.r2() == base.r2());
    }
}

TEST_CASE("a single out-of-window component always changes n2") {
    Rng rng(406);
    for (int iter = 0; iter < 50; ++iter) {
        // magnitudes in [0.25, 0.75]: all components comfortably in-window
        MatrixC32 m(16, 16);
        for (auto& v : m.data) {
            const float mag = 0.25f + 0.5f * static_cast<float>(rng.uniform01());
            v = {rng.next_below(2) ? mag : -mag, 0.5f};
        }
        const auto before = exp_stats(m);
        MatrixC32 planted = m;
        planted.data[rng.next_below(planted.data.size())] = {0x1.0p-60f, 0.5f};
        const auto after = exp_stats(planted);
        CHECK(after.n2 == before.n2 - 1);
    }
}

TEST_CASE("statistics are traversal-order independent") {
    Rng rng(407);
    MatrixC32 m(6, 7);
    for (auto& v : m.data) v = {rng.uniform_pm1f(), rng.uniform_pm1f() * 0x1.0p-18f};
    MatrixC32 shuffled = m;
    for (std::size_t i = shuffled.data.size() - 1; i > 0; --i)
        std::swap(shuffled.data[i], shuffled.data[rng.next_below(i + 1)]);
    const auto s1 = exp_stats(m);
    const auto s2 = exp_stats(shuffled);
    CHECK(s1.n1 == s2.n1);
    CHECK(s1.n2 == s2.n2);
    CHECK(s1.e_max == s2.e_max);
    CHECK(s1.n_nonzero == s2.n_nonzero);
}

TEST_CASE("matrix scaling") {
    Rng rng(408);
    MatrixC32 m(4, 4);
    for (auto& v : m.data) v = {rng.uniform_pm1f(), rng.uniform_pm1f()};

    CHECK(bit_equal(scale_matrix(m, 0), m));

    const MatrixC32 tiny = constant_matrix(2, 2, 0x1.0p-20f);
    const MatrixC32 lifted = scale_matrix(tiny, 34);
    for (const auto& v : lifted.data) CHECK(v.real() == 0x1.0p14f);

    // exact round trip within the normal range
    const MatrixC32 up = scale_matrix(m, 17);
    CHECK(bit_equal(scale_matrix(up, -17), m));

    CHECK_THROWS_AS((void)scale_matrix(constant_matrix(2, 2, 1.0f), 128), ScaleOverflow);
}

TEST_CASE("output descaling") {
    const MatrixC32 ones = constant_matrix(3, 3, 1.0f, 1.0f);
    CHECK(bit_equal(descale_output(ones, 0, 0), ones));
    const MatrixC32 d = descale_output(ones, 14, 34);
    for (const auto& v : d.data) {
        CHECK(v.real() == 0x1.0p-48f);
        CHECK(v.imag() == 0x1.0p-48f);
    }
}

TEST_CASE("scaled corrected GEMM round-trips bit-exactly") {
    Rng rng(409);
    MatrixC32 a(24, 16), b(16, 20);
    for (auto& v : a.data)
        v = {(rng.next_below(2) ? 1.0f : -1.0f) * (0.25f + 0.7f * static_cast<float>(rng.uniform01())),
             (rng.next_below(2) ? 1.0f : -1.0f) * (0.25f + 0.7f * static_cast<float>(rng.uniform01()))};
    for (auto& v : b.data)
        v = {(rng.next_below(2) ? 1.0f : -1.0f) * (0.25f + 0.7f * static_cast<float>(rng.uniform01())),
             (rng.next_below(2) ? 1.0f : -1.0f) * (0.25f + 0.7f * static_cast<float>(rng.uniform01()))};

    const MatrixC32 direct = cgemm(a, b, GemmMode::fp16_tcec);
    MatrixC32 scaled = cgemm(scale_matrix(a, 3), scale_matrix(b, 5), GemmMode::fp16_tcec);
    descale_output_inplace(scaled, 3, 5);
    CHECK(bit_equal(scaled, direct));
}

TEST_CASE("dispatch: size-gated routing with the default policy") {
    Rng rng(410);
    SelectionPolicy policy; // 2048 / 512 defaults

    MatrixC32 small(64, 64);
    for (auto& v : small.data) v = {rng.uniform_pm1f(), rng.uniform_pm1f()};
    DecisionLog log;
    const auto r = dispatch_cgemm(small, small, policy, &log);
    CHECK(r.decision.kind == ComputeKind::fp32_baseline);
    CHECK(!r.stats_a.has_value());
    REQUIRE(log.records().size() == 1);
    CHECK(log.records()[0].mode == "FP32_BASELINE");
    CHECK(log.records()[0].m == 64);
}

TEST_CASE("dispatch: statistics-gated selection with a scaled-down policy") {
    Rng rng(411);
    SelectionPolicy policy;
    policy.size_auto = 16;
    policy.size_tf32 = 8;

    SUBCASE("safe magnitudes select direct FP16") {
        MatrixC32 a(16, 16), b(16, 16);
        for (auto& v : a.data)
            v = {0.1f + 0.8f * static_cast<float>(rng.uniform01()),
                 0.1f + 0.8f * static_cast<float>(rng.uniform01())};
        for (auto& v : b.data)
            v = {0.1f + 0.8f * static_cast<float>(rng.uniform01()),
                 0.1f + 0.8f * static_cast<float>(rng.uniform01())};
        DecisionLog log;
        const auto r = dispatch_cgemm(a, b, policy, &log);
        CHECK(r.decision.kind == ComputeKind::fp16_tcec);
        CHECK(r.stats_a.has_value());
        CHECK(log.records()[0].mode == "FP16TCEC");
    }

    SUBCASE("uniformly tiny magnitudes select scaled FP16 and stay accurate") {
        MatrixC32 a(16, 16), b(16, 16);
        for (auto& v : a.data)
            v = {0x1.0p-20f * (1.0f + rng.uniform_pm1f() * 0.5f),
                 0x1.0p-20f * (1.0f + rng.uniform_pm1f() * 0.5f)};
        for (auto& v : b.data)
            v = {0x1.0p-20f * (1.0f + rng.uniform_pm1f() * 0.5f),
                 0x1.0p-20f * (1.0f + rng.uniform_pm1f() * 0.5f)};
        const auto r = dispatch_cgemm(a, b, policy);
        CHECK(r.decision.kind == ComputeKind::fp16_tcec_scaled);
        CHECK(r.decision.scale_exp_a == 34); // e_max is -20
        CHECK(relative_error(r.c, cgemm_oracle(a, b)) <= 1e-6);
    }

    SUBCASE("mid-size inputs take the TF32 tier without statistics") {
        MatrixC32 a(12, 12), b(12, 12);
        for (auto& v : a.data) v = {rng.uniform_pm1f(), rng.uniform_pm1f()};
        for (auto& v : b.data) v = {rng.uniform_pm1f(), rng.uniform_pm1f()};
        DecisionLog log;
        const auto r = dispatch_cgemm(a, b, policy, &log);
        CHECK(r.decision.kind == ComputeKind::tf32_tcec);
        CHECK(!r.stats_a.has_value());
        CHECK(log.records()[0].mode == "TF32TCEC");
    }
}

TEST_CASE("forced modes bypass the size rule") {
    Rng rng(412);
    MatrixC32 a(8, 8), b(8, 8);
    for (auto& v : a.data) v = {rng.uniform_pm1f(), rng.uniform_pm1f()};
    for (auto& v : b.data) v = {rng.uniform_pm1f(), rng.uniform_pm1f()};

    DispatchConfig config;
    config.force = ForcedMode::fp16_tc;
    DecisionLog log;
    const auto r = dispatch_cgemm(a, b, config, &log);
    CHECK(log.records()[0].mode == "FP16TC");
    CHECK(bit_equal(r.c, cgemm(a, b, GemmMode::fp16_tc)));

    // forced scaled mode still takes statistics for the exponents
    config.force = ForcedMode::fp16_tcec_scaled;
    const auto r2 = dispatch_cgemm(a, b, config);
    CHECK(r2.stats_a.has_value());
    CHECK(relative_error(r2.c, cgemm_oracle(a, b)) <= 1e-5);
}

TEST_CASE("decision log line format") {
    DecisionRecord rec;
    rec.m = 2048;
    rec.n = 1024;
    rec.k = 512;
    rec.mode = "FP16TCEC_SCALED";
    rec.scale_a = 14;
    rec.scale_b = 34;
    ExpStats sa;
    sa.n1 = 90;
    sa.n2 = 100;
    sa.n_nonzero = 100;
    sa.n_total = 128;
    sa.e_max = -3;
    sa.stage2_evaluated = true;
    rec.stats_a = sa;
    // stats_b absent (e.g. a forced run that profiled one side only)
    CHECK(rec.to_line() == "2048,1024,512,FP16TCEC_SCALED,14,34,0.1,0,-,-,-3,-");

    DecisionRecord plain;
    plain.m = 64;
    plain.n = 64;
    plain.k = 64;
    plain.mode = "FP32_BASELINE";
    CHECK(plain.to_line() == "64,64,64,FP32_BASELINE,0,0,-,-,-,-,-,-");
}

TEST_CASE("decision log accepts concurrent appends") {
    DecisionLog log;
    auto writer = [&log](int base) {
        for (int i = 0; i < 200; ++i) {
            DecisionRecord rec;
            rec.m = base + i;
            rec.mode = "FP32_BASELINE";
            log.append(std::move(rec));
        }
    };
    std::thread t1(writer, 0), t2(writer, 1000);
    t1.join();
    t2.join();
    CHECK(log.records().size() == 400);
}
