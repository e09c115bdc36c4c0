#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <vector>

#include "mpsgemm/kernels.hpp"
#include "mpsgemm/rng.hpp"

// The scalar table defines the arithmetic; every other variant must agree bit
// for bit on the same inputs, including edge values and ragged sizes.

using namespace mpsgemm;
using namespace mpsgemm::kernels;

namespace {

std::vector<float> random_buffer(std::int64_t n, Rng& rng, bool with_specials) {
    std::vector<float> buf(static_cast<std::size_t>(n));
    for (auto& v : buf) v = rng.uniform_pm1f();
    if (with_specials && n >= 16) {
        buf[0] = 0.0f;
        buf[1] = -0.0f;
        buf[2] = 0x1.0p-14f;   // FP16 min normal
        buf[3] = 0x1.0p-24f;   // FP16 min subnormal
        buf[4] = 0x1.0p-25f;   // FP16 flush tie
        buf[5] = -0x1.0p-30f;
        buf[6] = 65504.0f;     // FP16 max
        buf[7] = 65520.0f;     // above FP16 max
        buf[8] = 0x1.0p-126f;  // f32 min normal
        buf[9] = 0x1.0p-149f;  // f32 min subnormal
        buf[10] = -0x1.234p-130f;
        buf[11] = 1.0f + 0x1.0p-11f; // fp16 tie
        buf[12] = 3.4e38f;
        buf[13] = -3.4e38f;
        buf[14] = 0x1.fffffep-1f;
        buf[15] = -0x1.000002p0f;
    }
    return buf;
}

bool buffers_bit_equal(const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

std::vector<const KernelTable*> tables_under_test() {
    std::vector<const KernelTable*> t{&scalar_kernels()};
    if (const KernelTable* avx2 = avx2_kernels()) t.push_back(avx2);
    return t;
}

} // namespace

TEST_CASE("conversion kernels agree across variants") {
    Rng rng(1);
    for (const std::int64_t n : {1, 7, 8, 33, 1000}) {
        const auto src = random_buffer(n, rng, n >= 16);
        std::vector<float> ref_q(src.size()), ref_hi(src.size()), ref_lo(src.size());
        for (const auto fmt : {FormatKind::fp16, FormatKind::tf32}) {
            for (const auto mode : {Rounding::nearest_even, Rounding::toward_zero}) {
                bool ref_ovf = false;
                scalar_kernels().quantize_buf(src.data(), ref_q.data(), n, fmt, mode, &ref_ovf);
                for (const auto* kt : tables_under_test()) {
                    std::vector<float> out(src.size());
                    bool ovf = false;
                    kt->quantize_buf(src.data(), out.data(), n, fmt, mode, &ovf);
                    INFO(kt->name, " n=", n);
                    CHECK(buffers_bit_equal(out, ref_q));
                    CHECK(ovf == ref_ovf);
                }
            }
            bool ref_ovf = false;
            scalar_kernels().split_buf(src.data(), ref_hi.data(), ref_lo.data(), n, fmt,
                                       &ref_ovf);
            for (const auto* kt : tables_under_test()) {
                std::vector<float> hi(src.size()), lo(src.size());
                bool ovf = false;
                kt->split_buf(src.data(), hi.data(), lo.data(), n, fmt, &ovf);
                INFO(kt->name, " n=", n);
                CHECK(buffers_bit_equal(hi, ref_hi));
                CHECK(buffers_bit_equal(lo, ref_lo));
                CHECK(ovf == ref_ovf);
            }
        }
    }
}

TEST_CASE("scale/add/sub kernels agree across variants") {
    Rng rng(2);
    for (const std::int64_t n : {1, 8, 25, 513}) {
        const auto a = random_buffer(n, rng, n >= 16);
        const auto b = random_buffer(n, rng, false);
        for (const int scale_exp : {0, 1, -7, 34, -163, 163}) {
            std::vector<float> ref(a.size());
            scalar_kernels().scale_buf(a.data(), ref.data(), n, scale_exp);
            for (const auto* kt : tables_under_test()) {
                std::vector<float> out(a.size());
                kt->scale_buf(a.data(), out.data(), n, scale_exp);
                INFO(kt->name, " scale=", scale_exp);
                CHECK(buffers_bit_equal(out, ref));
            }
        }
        std::vector<float> ref_add(a.size()), ref_sub(a.size());
        scalar_kernels().add_buf(a.data(), b.data(), ref_add.data(), n);
        scalar_kernels().sub_buf(a.data(), b.data(), ref_sub.data(), n);
        for (const auto* kt : tables_under_test()) {
            std::vector<float> oa(a.size()), os(a.size());
            kt->add_buf(a.data(), b.data(), oa.data(), n);
            kt->sub_buf(a.data(), b.data(), os.data(), n);
            CHECK(buffers_bit_equal(oa, ref_add));
            CHECK(buffers_bit_equal(os, ref_sub));
        }
    }
}

TEST_CASE("statistics kernels agree across variants") {
    Rng rng(3);
    for (const std::int64_t n : {1, 9, 64, 4097}) {
        auto buf = random_buffer(n, rng, n >= 16);
        for (auto& v : buf)
            if (rng.next_below(5) == 0) v = 0.0f; // sprinkle zeros
        for (const float thr : {0.0f, 0x1.0p-14f, 0.5f}) {
            std::uint64_t ref_nz, ref_ge;
            float ref_max;
            scalar_kernels().abs_stats(buf.data(), n, thr, &ref_nz, &ref_ge, &ref_max);
            const std::uint64_t ref_cnt = scalar_kernels().count_abs_ge(buf.data(), n, thr);
            for (const auto* kt : tables_under_test()) {
                std::uint64_t nz, ge;
                float mx;
                kt->abs_stats(buf.data(), n, thr, &nz, &ge, &mx);
                INFO(kt->name, " n=", n, " thr=", thr);
                CHECK(nz == ref_nz);
                CHECK(ge == ref_ge);
                CHECK(std::bit_cast<std::uint32_t>(mx) == std::bit_cast<std::uint32_t>(ref_max));
                CHECK(kt->count_abs_ge(buf.data(), n, thr) == ref_cnt);
            }
        }
    }
}

TEST_CASE("GEMM kernels agree across variants and row partitions") {
    Rng rng(4);
    struct Shape {
        std::int64_t m, n, k;
    };
    for (const Shape s : {Shape{1, 1, 1}, Shape{3, 5, 7}, Shape{8, 32, 16}, Shape{13, 37, 65},
                          Shape{16, 48, 33}}) {
        std::vector<float> a(static_cast<std::size_t>(s.m * s.k)), b(static_cast<std::size_t>(s.k * s.n));
        for (auto& v : a) v = rng.uniform_pm1f();
        for (auto& v : b) v = rng.uniform_pm1f();

        std::vector<float> ah(a.size()), al(a.size()), bh(b.size()), bl(b.size());
        scalar_kernels().split_buf(a.data(), ah.data(), al.data(),
                                   static_cast<std::int64_t>(a.size()), FormatKind::fp16, nullptr);
        scalar_kernels().split_buf(b.data(), bh.data(), bl.data(),
                                   static_cast<std::int64_t>(b.size()), FormatKind::fp16, nullptr);

        const auto sz = static_cast<std::size_t>(s.m * s.n);
        std::vector<float> ref_rn(sz), ref_rz(sz), ref_ec(sz);
        std::vector<double> ref_f64(sz), ref_dd(sz);
        scalar_kernels().gemm_rows_rn(a.data(), b.data(), ref_rn.data(), s.m, s.n, s.k, 0, s.m);
        scalar_kernels().gemm_rows_rz(a.data(), b.data(), ref_rz.data(), s.m, s.n, s.k, 0, s.m);
        scalar_kernels().gemm_rows_tcec(ah.data(), al.data(), bh.data(), bl.data(), ref_ec.data(),
                                        s.m, s.n, s.k, 16, 0, s.m);
        scalar_kernels().gemm_rows_f64(a.data(), b.data(), ref_f64.data(), s.m, s.n, s.k, 0, s.m);
        std::vector<double> ad(a.size()), bd(b.size());
        for (std::size_t i = 0; i < a.size(); ++i) ad[i] = a[i];
        for (std::size_t i = 0; i < b.size(); ++i) bd[i] = b[i];
        scalar_kernels().gemm_rows_dd(ad.data(), bd.data(), ref_dd.data(), s.m, s.n, s.k, 0, s.m);

        for (const auto* kt : tables_under_test()) {
            std::vector<float> rn(sz), rz(sz), ec(sz);
            std::vector<double> f64(sz), dd(sz);
            // split rows into two ranges: partitioning must not change results
            const std::int64_t mid = s.m / 2;
            kt->gemm_rows_rn(a.data(), b.data(), rn.data(), s.m, s.n, s.k, 0, mid);
            kt->gemm_rows_rn(a.data(), b.data(), rn.data(), s.m, s.n, s.k, mid, s.m);
            kt->gemm_rows_rz(a.data(), b.data(), rz.data(), s.m, s.n, s.k, 0, mid);
            kt->gemm_rows_rz(a.data(), b.data(), rz.data(), s.m, s.n, s.k, mid, s.m);
            kt->gemm_rows_tcec(ah.data(), al.data(), bh.data(), bl.data(), ec.data(), s.m, s.n,
                               s.k, 16, 0, mid);
            kt->gemm_rows_tcec(ah.data(), al.data(), bh.data(), bl.data(), ec.data(), s.m, s.n,
                               s.k, 16, mid, s.m);
            kt->gemm_rows_f64(a.data(), b.data(), f64.data(), s.m, s.n, s.k, 0, s.m);
            kt->gemm_rows_dd(ad.data(), bd.data(), dd.data(), s.m, s.n, s.k, 0, s.m);
            INFO(kt->name, " m=", s.m, " n=", s.n, " k=", s.k);
            CHECK(buffers_bit_equal(rn, ref_rn));
            CHECK(buffers_bit_equal(rz, ref_rz));
            CHECK(buffers_bit_equal(ec, ref_ec));
            CHECK(std::memcmp(f64.data(), ref_f64.data(), sz * sizeof(double)) == 0);
            CHECK(std::memcmp(dd.data(), ref_dd.data(), sz * sizeof(double)) == 0);
        }
    }
}

TEST_CASE("kernel arch selection") {
    set_kernel_arch(KernelArch::scalar);
    CHECK(std::string(active_kernels().name) == "scalar");
    set_kernel_arch(KernelArch::auto_detect);
    if (avx2_kernels()) {
        set_kernel_arch(KernelArch::avx2);
        CHECK(std::string(active_kernels().name) == "avx2");
        set_kernel_arch(KernelArch::auto_detect);
        CHECK(std::string(active_kernels().name) == "avx2");
    }
}
