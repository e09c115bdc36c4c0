#include <algorithm>
#include <cmath>
#include <vector>

#include "mpsgemm/kernels.hpp"

// Scalar reference kernels. These define the arithmetic contract; the SIMD
// variants must match them bit for bit.

namespace mpsgemm::kernels {
namespace {

using lowprec::add_rz;
using lowprec::format;
using lowprec::quantize;
using lowprec::split;

void quantize_buf(const float* src, float* dst, std::int64_t n, FormatKind fmt, Rounding mode,
                  bool* overflow) {
    const auto& f = format(fmt);
    for (std::int64_t i = 0; i < n; ++i) dst[i] = quantize(src[i], f, mode, overflow);
}

void split_buf(const float* src, float* hi, float* lo, std::int64_t n, FormatKind fmt,
               bool* overflow) {
    const auto& f = format(fmt);
    for (std::int64_t i = 0; i < n; ++i) {
        const auto s = split(src[i], f, overflow);
        hi[i] = s.hi;
        lo[i] = s.lo;
    }
}

void scale_buf(const float* src, float* dst, std::int64_t n, int scale_exp) {
    // via double so the result is a single rounding of the exact product even
    // when 2^scale_exp is outside f32 range
    const double factor = std::ldexp(1.0, scale_exp);
    for (std::int64_t i = 0; i < n; ++i)
        dst[i] = static_cast<float>(static_cast<double>(src[i]) * factor);
}

void add_buf(const float* a, const float* b, float* dst, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_buf(const float* a, const float* b, float* dst, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}

void abs_stats(const float* x, std::int64_t n, float threshold, std::uint64_t* n_nonzero,
               std::uint64_t* n_ge, float* max_abs) {
    std::uint64_t nz = 0, ge = 0;
    float mx = 0.0f;
    for (std::int64_t i = 0; i < n; ++i) {
        const float a = std::fabs(x[i]);
        if (a > 0.0f) {
            ++nz;
            if (a >= threshold) ++ge;
            mx = std::max(mx, a);
        }
    }
    *n_nonzero = nz;
    *n_ge = ge;
    *max_abs = mx;
}

std::uint64_t count_abs_ge(const float* x, std::int64_t n, float threshold) {
    std::uint64_t ge = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const float a = std::fabs(x[i]);
        if (a > 0.0f && a >= threshold) ++ge;
    }
    return ge;
}

void gemm_rows_rn(const float* a, const float* b, float* c, std::int64_t /*m*/, std::int64_t n,
                  std::int64_t k, std::int64_t row_begin, std::int64_t row_end) {
    for (std::int64_t i = row_begin; i < row_end; ++i) {
        float* crow = c + i * n;
        std::fill(crow, crow + n, 0.0f);
        for (std::int64_t kk = 0; kk < k; ++kk) {
            const float av = a[i * k + kk];
            const float* brow = b + kk * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] = crow[j] + av * brow[j];
        }
    }
}

void gemm_rows_rz(const float* a, const float* b, float* c, std::int64_t /*m*/, std::int64_t n,
                  std::int64_t k, std::int64_t row_begin, std::int64_t row_end) {
    for (std::int64_t i = row_begin; i < row_end; ++i) {
        float* crow = c + i * n;
        std::fill(crow, crow + n, 0.0f);
        for (std::int64_t kk = 0; kk < k; ++kk) {
            const float av = a[i * k + kk];
            const float* brow = b + kk * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] = add_rz(crow[j], av * brow[j]);
        }
    }
}

void gemm_rows_tcec(const float* a_hi, const float* a_lo, const float* b_hi, const float* b_lo,
                    float* c, std::int64_t /*m*/, std::int64_t n, std::int64_t k, int k_tile,
                    std::int64_t row_begin, std::int64_t row_end) {
    // main term: RZ inside each k tile, RN across tiles; correction products
    // each accumulate their own RZ chain and fold with a final RZ add
    std::vector<float> main_acc(n), corr1_acc(n), corr2_acc(n), tile_acc(n);
    for (std::int64_t i = row_begin; i < row_end; ++i) {
        std::fill(main_acc.begin(), main_acc.end(), 0.0f);
        std::fill(corr1_acc.begin(), corr1_acc.end(), 0.0f);
        std::fill(corr2_acc.begin(), corr2_acc.end(), 0.0f);
        std::fill(tile_acc.begin(), tile_acc.end(), 0.0f);
        for (std::int64_t kk = 0; kk < k; ++kk) {
            if (kk != 0 && kk % k_tile == 0) {
                for (std::int64_t j = 0; j < n; ++j) {
                    main_acc[j] = main_acc[j] + tile_acc[j];
                    tile_acc[j] = 0.0f;
                }
            }
            const float ah = a_hi[i * k + kk];
            const float al = a_lo[i * k + kk];
            const float* bh = b_hi + kk * n;
            const float* bl = b_lo + kk * n;
            for (std::int64_t j = 0; j < n; ++j) {
                tile_acc[j] = add_rz(tile_acc[j], ah * bh[j]);
                corr1_acc[j] = add_rz(corr1_acc[j], al * bh[j]);
                corr2_acc[j] = add_rz(corr2_acc[j], ah * bl[j]);
            }
        }
        float* crow = c + i * n;
        for (std::int64_t j = 0; j < n; ++j)
            crow[j] = (main_acc[j] + tile_acc[j]) +
                      add_rz(corr1_acc[j], corr2_acc[j]) * 0x1.0p-11f;
    }
}

void gemm_rows_f64(const float* a, const float* b, double* c, std::int64_t /*m*/, std::int64_t n,
                   std::int64_t k, std::int64_t row_begin, std::int64_t row_end) {
    for (std::int64_t i = row_begin; i < row_end; ++i) {
        double* crow = c + i * n;
        std::fill(crow, crow + n, 0.0);
        for (std::int64_t kk = 0; kk < k; ++kk) {
            const double av = a[i * k + kk];
            const float* brow = b + kk * n;
            for (std::int64_t j = 0; j < n; ++j)
                crow[j] += av * static_cast<double>(brow[j]);
        }
    }
}

void gemm_rows_dd(const double* a, const double* b, double* c, std::int64_t /*m*/, std::int64_t n,
                  std::int64_t k, std::int64_t row_begin, std::int64_t row_end) {
    for (std::int64_t i = row_begin; i < row_end; ++i) {
        double* crow = c + i * n;
        std::fill(crow, crow + n, 0.0);
        for (std::int64_t kk = 0; kk < k; ++kk) {
            const double av = a[i * k + kk];
            const double* brow = b + kk * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

} // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{
        "scalar",    quantize_buf, split_buf,    scale_buf,      add_buf,       sub_buf,
        abs_stats,   count_abs_ge, gemm_rows_rn, gemm_rows_rz,   gemm_rows_tcec, gemm_rows_f64,
        gemm_rows_dd,
    };
    return table;
}

} // namespace mpsgemm::kernels
