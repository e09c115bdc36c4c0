// AVX2 + F16C variants of the inner-loop kernels. Arithmetic must agree bit
// for bit with kernels_scalar.cpp; the equivalence tests enforce that.

#include "mpsgemm/kernels.hpp"

#if defined(__AVX2__) && defined(__F16C__)

#include <immintrin.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <vector>

namespace mpsgemm::kernels {
namespace {

using lowprec::add_rz;
using lowprec::format;
using lowprec::quantize;

inline __m256 abs_ps(__m256 v) {
    return _mm256_and_ps(v, _mm256_castsi256_ps(_mm256_set1_epi32(0x7FFFFFFF)));
}

inline __m256 copysign_ps(__m256 mag, __m256 sgn) {
    const __m256 mask = _mm256_castsi256_ps(_mm256_set1_epi32(0x80000000u));
    return _mm256_or_ps(_mm256_andnot_ps(mask, mag), _mm256_and_ps(mask, sgn));
}

// f32 add rounded toward zero; see lowprec::add_rz for the scheme
inline __m256 add_rz_ps(__m256 a, __m256 b) {
    const __m256 s = _mm256_add_ps(a, b);
    const __m256 bb = _mm256_sub_ps(s, a);
    const __m256 err =
        _mm256_add_ps(_mm256_sub_ps(a, _mm256_sub_ps(s, bb)), _mm256_sub_ps(b, bb));
    const __m256 nonzero = _mm256_cmp_ps(err, _mm256_setzero_ps(), _CMP_NEQ_UQ);
    const __m256i signs_differ = _mm256_srai_epi32(
        _mm256_xor_si256(_mm256_castps_si256(err), _mm256_castps_si256(s)), 31);
    const __m256 fix = _mm256_and_ps(nonzero, _mm256_castsi256_ps(signs_differ));
    const __m256 toward_zero = _mm256_castsi256_ps(
        _mm256_sub_epi32(_mm256_castps_si256(s), _mm256_set1_epi32(1)));
    return _mm256_blendv_ps(s, toward_zero, fix);
}

// FP16 via the F16C conversion unit; saturating lanes are patched to the
// largest finite value afterwards (the hardware produces infinities).
template <int Round>
inline __m256 quantize_fp16_ps(__m256 v, __m256* ovf_accum) {
    const __m256 max_normal = _mm256_set1_ps(65504.0f);
    const __m128i h = _mm256_cvtps_ph(v, Round);
    const __m256 back = _mm256_cvtph_ps(h);
    const __m256 over = _mm256_cmp_ps(abs_ps(v), max_normal, _CMP_GT_OQ);
    *ovf_accum = _mm256_or_ps(*ovf_accum, over);
    return _mm256_blendv_ps(back, copysign_ps(max_normal, v), over);
}

// TF32: round the f32 pattern to 10 explicit mantissa bits. The integer trick
// covers normals and subnormals uniformly because the bit pattern is monotone
// in magnitude.
inline __m256 quantize_tf32_ps(__m256 v, Rounding mode, __m256* ovf_accum) {
    const float max_normal_f = static_cast<float>(lowprec::tf32_format.max_normal());
    const __m256 max_normal = _mm256_set1_ps(max_normal_f);
    const __m256 over = _mm256_cmp_ps(abs_ps(v), max_normal, _CMP_GT_OQ);
    *ovf_accum = _mm256_or_ps(*ovf_accum, over);
    const __m256 safe = _mm256_blendv_ps(v, copysign_ps(max_normal, v), over);

    const __m256i bits = _mm256_castps_si256(safe);
    __m256i rounded;
    if (mode == Rounding::nearest_even) {
        const __m256i parity =
            _mm256_and_si256(_mm256_srli_epi32(bits, 13), _mm256_set1_epi32(1));
        const __m256i incr = _mm256_add_epi32(_mm256_set1_epi32(0xFFF), parity);
        rounded = _mm256_add_epi32(bits, incr);
    } else {
        rounded = bits;
    }
    rounded = _mm256_and_si256(rounded, _mm256_set1_epi32(~0x1FFF));
    return _mm256_castsi256_ps(rounded);
}

inline bool any_lane(__m256 mask) { return _mm256_movemask_ps(mask) != 0; }

void quantize_buf(const float* src, float* dst, std::int64_t n, FormatKind fmt, Rounding mode,
                  bool* overflow) {
    const auto& f = format(fmt);
    __m256 ovf = _mm256_setzero_ps();
    std::int64_t i = 0;
    if (fmt == FormatKind::fp16) {
        if (mode == Rounding::nearest_even) {
            for (; i + 8 <= n; i += 8)
                _mm256_storeu_ps(dst + i,
                                 quantize_fp16_ps<_MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC>(
                                     _mm256_loadu_ps(src + i), &ovf));
        } else {
            for (; i + 8 <= n; i += 8)
                _mm256_storeu_ps(dst + i,
                                 quantize_fp16_ps<_MM_FROUND_TO_ZERO | _MM_FROUND_NO_EXC>(
                                     _mm256_loadu_ps(src + i), &ovf));
        }
    } else {
        for (; i + 8 <= n; i += 8)
            _mm256_storeu_ps(dst + i, quantize_tf32_ps(_mm256_loadu_ps(src + i), mode, &ovf));
    }
    if (overflow && any_lane(ovf)) *overflow = true;
    for (; i < n; ++i) dst[i] = quantize(src[i], f, mode, overflow);
}

void split_buf(const float* src, float* hi, float* lo, std::int64_t n, FormatKind fmt,
               bool* overflow) {
    const auto& f = format(fmt);
    const __m256 shift = _mm256_set1_ps(0x1.0p11f);
    __m256 ovf = _mm256_setzero_ps();
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 x = _mm256_loadu_ps(src + i);
        __m256 h;
        if (fmt == FormatKind::fp16)
            h = quantize_fp16_ps<_MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC>(x, &ovf);
        else
            h = quantize_tf32_ps(x, Rounding::nearest_even, &ovf);
        const __m256 resid = _mm256_mul_ps(_mm256_sub_ps(x, h), shift);
        __m256 l;
        if (fmt == FormatKind::fp16)
            l = quantize_fp16_ps<_MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC>(resid, &ovf);
        else
            l = quantize_tf32_ps(resid, Rounding::nearest_even, &ovf);
        _mm256_storeu_ps(hi + i, h);
        _mm256_storeu_ps(lo + i, l);
    }
    if (overflow && any_lane(ovf)) *overflow = true;
    for (; i < n; ++i) {
        const auto s = lowprec::split(src[i], f, overflow);
        hi[i] = s.hi;
        lo[i] = s.lo;
    }
}

void scale_buf(const float* src, float* dst, std::int64_t n, int scale_exp) {
    const double factor = std::ldexp(1.0, scale_exp);
    const __m256d vf = _mm256_set1_pd(factor);
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m128 lo_f = _mm_loadu_ps(src + i);
        const __m128 hi_f = _mm_loadu_ps(src + i + 4);
        const __m256d lo_d = _mm256_mul_pd(_mm256_cvtps_pd(lo_f), vf);
        const __m256d hi_d = _mm256_mul_pd(_mm256_cvtps_pd(hi_f), vf);
        _mm_storeu_ps(dst + i, _mm256_cvtpd_ps(lo_d));
        _mm_storeu_ps(dst + i + 4, _mm256_cvtpd_ps(hi_d));
    }
    for (; i < n; ++i) dst[i] = static_cast<float>(static_cast<double>(src[i]) * factor);
}

void add_buf(const float* a, const float* b, float* dst, std::int64_t n) {
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(dst + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_buf(const float* a, const float* b, float* dst, std::int64_t n) {
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(dst + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void abs_stats(const float* x, std::int64_t n, float threshold, std::uint64_t* n_nonzero,
               std::uint64_t* n_ge, float* max_abs) {
    const __m256 zero = _mm256_setzero_ps();
    const __m256 thr = _mm256_set1_ps(threshold);
    __m256 mx = zero;
    std::uint64_t nz = 0, ge = 0;
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 a = abs_ps(_mm256_loadu_ps(x + i));
        const __m256 is_nz = _mm256_cmp_ps(a, zero, _CMP_GT_OQ);
        const __m256 is_ge = _mm256_and_ps(is_nz, _mm256_cmp_ps(a, thr, _CMP_GE_OQ));
        nz += std::popcount(static_cast<unsigned>(_mm256_movemask_ps(is_nz)));
        ge += std::popcount(static_cast<unsigned>(_mm256_movemask_ps(is_ge)));
        mx = _mm256_max_ps(mx, a);
    }
    alignas(32) float mbuf[8];
    _mm256_store_ps(mbuf, mx);
    float m = 0.0f;
    for (float v : mbuf) m = std::max(m, v);
    for (; i < n; ++i) {
        const float a = std::fabs(x[i]);
        if (a > 0.0f) {
            ++nz;
            if (a >= threshold) ++ge;
            m = std::max(m, a);
        }
    }
    *n_nonzero = nz;
    *n_ge = ge;
    *max_abs = m;
}

std::uint64_t count_abs_ge(const float* x, std::int64_t n, float threshold) {
    const __m256 zero = _mm256_setzero_ps();
    const __m256 thr = _mm256_set1_ps(threshold);
    std::uint64_t ge = 0;
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 a = abs_ps(_mm256_loadu_ps(x + i));
        const __m256 is_ge = _mm256_and_ps(_mm256_cmp_ps(a, zero, _CMP_GT_OQ),
                                           _mm256_cmp_ps(a, thr, _CMP_GE_OQ));
        ge += std::popcount(static_cast<unsigned>(_mm256_movemask_ps(is_ge)));
    }
    for (; i < n; ++i) {
        const float a = std::fabs(x[i]);
        if (a > 0.0f && a >= threshold) ++ge;
    }
    return ge;
}

// Accumulators live in registers across the whole k chain, and the B columns
// of each block are packed once into a contiguous panel that stays cache-hot
// across all rows. Neither changes results: each output element sees the
// identical per-k sequence.

constexpr std::int64_t kColsBlock = 32;     // rn/rz column block (4 vectors)
constexpr std::int64_t kColsBlockTcec = 32; // tcec column block (4 vectors)

void pack_panel(const float* b, std::int64_t n, std::int64_t k, std::int64_t j0,
                std::int64_t width, float* panel) {
    for (std::int64_t kk = 0; kk < k; ++kk)
        std::memcpy(panel + kk * width, b + kk * n + j0,
                    static_cast<std::size_t>(width) * sizeof(float));
}

void gemm_rows_rn(const float* a, const float* b, float* c, std::int64_t /*m*/, std::int64_t n,
                  std::int64_t k, std::int64_t row_begin, std::int64_t row_end) {
    std::vector<float> panel(static_cast<std::size_t>(k * kColsBlock));
    std::int64_t j0 = 0;
    for (; j0 + kColsBlock <= n; j0 += kColsBlock) {
        pack_panel(b, n, k, j0, kColsBlock, panel.data());
        for (std::int64_t i = row_begin; i < row_end; ++i) {
            const float* arow = a + i * k;
            __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
            __m256 acc2 = _mm256_setzero_ps(), acc3 = _mm256_setzero_ps();
            const float* bp = panel.data();
            for (std::int64_t kk = 0; kk < k; ++kk, bp += kColsBlock) {
                const __m256 av = _mm256_set1_ps(arow[kk]);
                acc0 = _mm256_add_ps(acc0, _mm256_mul_ps(av, _mm256_loadu_ps(bp)));
                acc1 = _mm256_add_ps(acc1, _mm256_mul_ps(av, _mm256_loadu_ps(bp + 8)));
                acc2 = _mm256_add_ps(acc2, _mm256_mul_ps(av, _mm256_loadu_ps(bp + 16)));
                acc3 = _mm256_add_ps(acc3, _mm256_mul_ps(av, _mm256_loadu_ps(bp + 24)));
            }
            float* crow = c + i * n;
            _mm256_storeu_ps(crow + j0, acc0);
            _mm256_storeu_ps(crow + j0 + 8, acc1);
            _mm256_storeu_ps(crow + j0 + 16, acc2);
            _mm256_storeu_ps(crow + j0 + 24, acc3);
        }
    }
    for (std::int64_t i = row_begin; i < row_end; ++i) {
        const float* arow = a + i * k;
        for (std::int64_t j = j0; j < n; ++j) {
            float acc = 0.0f;
            for (std::int64_t kk = 0; kk < k; ++kk) acc = acc + arow[kk] * b[kk * n + j];
            c[i * n + j] = acc;
        }
    }
}

void gemm_rows_rz(const float* a, const float* b, float* c, std::int64_t /*m*/, std::int64_t n,
                  std::int64_t k, std::int64_t row_begin, std::int64_t row_end) {
    std::vector<float> panel(static_cast<std::size_t>(k * kColsBlock));
    std::int64_t j0 = 0;
    for (; j0 + kColsBlock <= n; j0 += kColsBlock) {
        pack_panel(b, n, k, j0, kColsBlock, panel.data());
        for (std::int64_t i = row_begin; i < row_end; ++i) {
            const float* arow = a + i * k;
            __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
            __m256 acc2 = _mm256_setzero_ps(), acc3 = _mm256_setzero_ps();
            const float* bp = panel.data();
            for (std::int64_t kk = 0; kk < k; ++kk, bp += kColsBlock) {
                const __m256 av = _mm256_set1_ps(arow[kk]);
                acc0 = add_rz_ps(acc0, _mm256_mul_ps(av, _mm256_loadu_ps(bp)));
                acc1 = add_rz_ps(acc1, _mm256_mul_ps(av, _mm256_loadu_ps(bp + 8)));
                acc2 = add_rz_ps(acc2, _mm256_mul_ps(av, _mm256_loadu_ps(bp + 16)));
                acc3 = add_rz_ps(acc3, _mm256_mul_ps(av, _mm256_loadu_ps(bp + 24)));
            }
            float* crow = c + i * n;
            _mm256_storeu_ps(crow + j0, acc0);
            _mm256_storeu_ps(crow + j0 + 8, acc1);
            _mm256_storeu_ps(crow + j0 + 16, acc2);
            _mm256_storeu_ps(crow + j0 + 24, acc3);
        }
    }
    for (std::int64_t i = row_begin; i < row_end; ++i) {
        const float* arow = a + i * k;
        for (std::int64_t j = j0; j < n; ++j) {
            float acc = 0.0f;
            for (std::int64_t kk = 0; kk < k; ++kk) acc = add_rz(acc, arow[kk] * b[kk * n + j]);
            c[i * n + j] = acc;
        }
    }
}

void gemm_rows_tcec(const float* a_hi, const float* a_lo, const float* b_hi, const float* b_lo,
                    float* c, std::int64_t /*m*/, std::int64_t n, std::int64_t k, int k_tile,
                    std::int64_t row_begin, std::int64_t row_end) {
    const __m256 scale = _mm256_set1_ps(0x1.0p-11f);
    std::vector<float> panel_hi(static_cast<std::size_t>(k * kColsBlockTcec));
    std::vector<float> panel_lo(static_cast<std::size_t>(k * kColsBlockTcec));
    std::int64_t j0 = 0;
    for (; j0 + kColsBlockTcec <= n; j0 += kColsBlockTcec) {
        pack_panel(b_hi, n, k, j0, kColsBlockTcec, panel_hi.data());
        pack_panel(b_lo, n, k, j0, kColsBlockTcec, panel_lo.data());
        for (std::int64_t i = row_begin; i < row_end; ++i) {
            const float* ah_row = a_hi + i * k;
            const float* al_row = a_lo + i * k;
            __m256 main_acc[4], tile[4], corr1[4], corr2[4];
            for (int v = 0; v < 4; ++v) {
                main_acc[v] = _mm256_setzero_ps();
                tile[v] = _mm256_setzero_ps();
                corr1[v] = _mm256_setzero_ps();
                corr2[v] = _mm256_setzero_ps();
            }
            const float* bhp = panel_hi.data();
            const float* blp = panel_lo.data();
            for (std::int64_t kk = 0; kk < k;
                 ++kk, bhp += kColsBlockTcec, blp += kColsBlockTcec) {
                if (kk != 0 && kk % k_tile == 0) {
                    for (int v = 0; v < 4; ++v) {
                        main_acc[v] = _mm256_add_ps(main_acc[v], tile[v]);
                        tile[v] = _mm256_setzero_ps();
                    }
                }
                const __m256 vah = _mm256_set1_ps(ah_row[kk]);
                const __m256 val = _mm256_set1_ps(al_row[kk]);
                for (int v = 0; v < 4; ++v) {
                    const __m256 bh = _mm256_loadu_ps(bhp + 8 * v);
                    const __m256 bl = _mm256_loadu_ps(blp + 8 * v);
                    tile[v] = add_rz_ps(tile[v], _mm256_mul_ps(vah, bh));
                    corr1[v] = add_rz_ps(corr1[v], _mm256_mul_ps(val, bh));
                    corr2[v] = add_rz_ps(corr2[v], _mm256_mul_ps(vah, bl));
                }
            }
            float* crow = c + i * n;
            for (int v = 0; v < 4; ++v) {
                const __m256 corr = _mm256_mul_ps(add_rz_ps(corr1[v], corr2[v]), scale);
                _mm256_storeu_ps(crow + j0 + 8 * v,
                                 _mm256_add_ps(_mm256_add_ps(main_acc[v], tile[v]), corr));
            }
        }
    }
    for (std::int64_t i = row_begin; i < row_end; ++i) {
        const float* ah_row = a_hi + i * k;
        const float* al_row = a_lo + i * k;
        for (std::int64_t j = j0; j < n; ++j) {
            float main_acc = 0.0f, tile_acc = 0.0f, corr1 = 0.0f, corr2 = 0.0f;
            for (std::int64_t kk = 0; kk < k; ++kk) {
                if (kk != 0 && kk % k_tile == 0) {
                    main_acc = main_acc + tile_acc;
                    tile_acc = 0.0f;
                }
                tile_acc = add_rz(tile_acc, ah_row[kk] * b_hi[kk * n + j]);
                corr1 = add_rz(corr1, al_row[kk] * b_hi[kk * n + j]);
                corr2 = add_rz(corr2, ah_row[kk] * b_lo[kk * n + j]);
            }
            c[i * n + j] = (main_acc + tile_acc) + add_rz(corr1, corr2) * 0x1.0p-11f;
        }
    }
}

void gemm_rows_f64(const float* a, const float* b, double* c, std::int64_t /*m*/, std::int64_t n,
                   std::int64_t k, std::int64_t row_begin, std::int64_t row_end) {
    constexpr std::int64_t jb = 16;
    std::vector<float> panel(static_cast<std::size_t>(k * jb));
    std::int64_t j0 = 0;
    for (; j0 + jb <= n; j0 += jb) {
        pack_panel(b, n, k, j0, jb, panel.data());
        for (std::int64_t i = row_begin; i < row_end; ++i) {
            const float* arow = a + i * k;
            __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
            __m256d acc2 = _mm256_setzero_pd(), acc3 = _mm256_setzero_pd();
            const float* bp = panel.data();
            for (std::int64_t kk = 0; kk < k; ++kk, bp += jb) {
                const __m256d av = _mm256_set1_pd(static_cast<double>(arow[kk]));
                acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(av, _mm256_cvtps_pd(_mm_loadu_ps(bp))));
                acc1 = _mm256_add_pd(acc1,
                                     _mm256_mul_pd(av, _mm256_cvtps_pd(_mm_loadu_ps(bp + 4))));
                acc2 = _mm256_add_pd(acc2,
                                     _mm256_mul_pd(av, _mm256_cvtps_pd(_mm_loadu_ps(bp + 8))));
                acc3 = _mm256_add_pd(acc3,
                                     _mm256_mul_pd(av, _mm256_cvtps_pd(_mm_loadu_ps(bp + 12))));
            }
            double* crow = c + i * n;
            _mm256_storeu_pd(crow + j0, acc0);
            _mm256_storeu_pd(crow + j0 + 4, acc1);
            _mm256_storeu_pd(crow + j0 + 8, acc2);
            _mm256_storeu_pd(crow + j0 + 12, acc3);
        }
    }
    for (std::int64_t i = row_begin; i < row_end; ++i) {
        const float* arow = a + i * k;
        for (std::int64_t j = j0; j < n; ++j) {
            double acc = 0.0;
            for (std::int64_t kk = 0; kk < k; ++kk)
                acc += static_cast<double>(arow[kk]) * static_cast<double>(b[kk * n + j]);
            c[i * n + j] = acc;
        }
    }
}

void gemm_rows_dd(const double* a, const double* b, double* c, std::int64_t /*m*/,
                  std::int64_t n, std::int64_t k, std::int64_t row_begin, std::int64_t row_end) {
    constexpr std::int64_t jb = 16;
    std::vector<double> panel(static_cast<std::size_t>(k * jb));
    std::int64_t j0 = 0;
    for (; j0 + jb <= n; j0 += jb) {
        for (std::int64_t kk = 0; kk < k; ++kk)
            std::memcpy(panel.data() + kk * jb, b + kk * n + j0, jb * sizeof(double));
        for (std::int64_t i = row_begin; i < row_end; ++i) {
            const double* arow = a + i * k;
            __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
            __m256d acc2 = _mm256_setzero_pd(), acc3 = _mm256_setzero_pd();
            const double* bp = panel.data();
            for (std::int64_t kk = 0; kk < k; ++kk, bp += jb) {
                const __m256d av = _mm256_set1_pd(arow[kk]);
                acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(av, _mm256_loadu_pd(bp)));
                acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(av, _mm256_loadu_pd(bp + 4)));
                acc2 = _mm256_add_pd(acc2, _mm256_mul_pd(av, _mm256_loadu_pd(bp + 8)));
                acc3 = _mm256_add_pd(acc3, _mm256_mul_pd(av, _mm256_loadu_pd(bp + 12)));
            }
            double* crow = c + i * n;
            _mm256_storeu_pd(crow + j0, acc0);
            _mm256_storeu_pd(crow + j0 + 4, acc1);
            _mm256_storeu_pd(crow + j0 + 8, acc2);
            _mm256_storeu_pd(crow + j0 + 12, acc3);
        }
    }
    for (std::int64_t i = row_begin; i < row_end; ++i) {
        const double* arow = a + i * k;
        for (std::int64_t j = j0; j < n; ++j) {
            double acc = 0.0;
            for (std::int64_t kk = 0; kk < k; ++kk) acc += arow[kk] * b[kk * n + j];
            c[i * n + j] = acc;
        }
    }
}

} // namespace

const KernelTable* avx2_kernels() {
    if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("f16c")) return nullptr;
    static const KernelTable table{
        "avx2",      quantize_buf, split_buf,    scale_buf,      add_buf,       sub_buf,
        abs_stats,   count_abs_ge, gemm_rows_rn, gemm_rows_rz,   gemm_rows_tcec, gemm_rows_f64,
        gemm_rows_dd,
    };
    return &table;
}

} // namespace mpsgemm::kernels

#else

namespace mpsgemm::kernels {
const KernelTable* avx2_kernels() { return nullptr; }
} // namespace mpsgemm::kernels

#endif
