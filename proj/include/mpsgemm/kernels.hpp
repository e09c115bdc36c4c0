#pragma once

#include <cstdint>

#include "mpsgemm/lowprec.hpp"

namespace mpsgemm::kernels {

using lowprec::FormatKind;
using lowprec::Rounding;

// Data-parallel inner loops, provided as a scalar reference implementation
// and (on x86-64 with AVX2+F16C) a vectorized variant. Both implement the
// identical arithmetic: the equivalence suite requires bit-exact agreement.
//
// GEMM kernels operate on row-major buffers and compute output rows
// [row_begin, row_end). Within one output element the k accumulation order is
// part of the contract (strictly ascending); row partitioning is therefore
// safe, k partitioning is not.
struct KernelTable {
    const char* name;

    // dst[i] = quantize(src[i]); *overflow ORed when any element saturates
    void (*quantize_buf)(const float* src, float* dst, std::int64_t n, FormatKind fmt,
                         Rounding mode, bool* overflow);
    // residual split of each element into (hi, lo)
    void (*split_buf)(const float* src, float* hi, float* lo, std::int64_t n, FormatKind fmt,
                      bool* overflow);
    // dst[i] = src[i] * 2^scale_exp, single rounding from the exact value
    void (*scale_buf)(const float* src, float* dst, std::int64_t n, int scale_exp);
    void (*add_buf)(const float* a, const float* b, float* dst, std::int64_t n);
    void (*sub_buf)(const float* a, const float* b, float* dst, std::int64_t n);

    // one sweep of magnitude statistics: nonzero count, count of nonzero
    // elements with |x| >= threshold, and max |x|
    void (*abs_stats)(const float* x, std::int64_t n, float threshold, std::uint64_t* n_nonzero,
                      std::uint64_t* n_ge, float* max_abs);
    // count of nonzero elements with |x| >= threshold
    std::uint64_t (*count_abs_ge)(const float* x, std::int64_t n, float threshold);

    // C = A*B, f32 products, f32 RN accumulation ascending k
    void (*gemm_rows_rn)(const float* a, const float* b, float* c, std::int64_t m, std::int64_t n,
                         std::int64_t k, std::int64_t row_begin, std::int64_t row_end);
    // C = A*B, f32 products, RZ after every addition across the whole k chain
    void (*gemm_rows_rz)(const float* a, const float* b, float* c, std::int64_t m, std::int64_t n,
                         std::int64_t k, std::int64_t row_begin, std::int64_t row_end);
    // error-corrected product of split operands: main term accumulated RZ
    // within k tiles and RN across tiles; each correction product (lo*hi,
    // hi*lo) runs its own RZ chain, the chains fold with an RZ add, and the
    // 2^-11-scaled correction joins the main term with RN
    void (*gemm_rows_tcec)(const float* a_hi, const float* a_lo, const float* b_hi,
                           const float* b_lo, float* c, std::int64_t m, std::int64_t n,
                           std::int64_t k, int k_tile, std::int64_t row_begin,
                           std::int64_t row_end);
    // C = A*B with all arithmetic in f64, ascending k
    void (*gemm_rows_f64)(const float* a, const float* b, double* c, std::int64_t m,
                          std::int64_t n, std::int64_t k, std::int64_t row_begin,
                          std::int64_t row_end);
    // same with f64 inputs (reference contraction pipeline)
    void (*gemm_rows_dd)(const double* a, const double* b, double* c, std::int64_t m,
                         std::int64_t n, std::int64_t k, std::int64_t row_begin,
                         std::int64_t row_end);
};

const KernelTable& scalar_kernels();
// nullptr when the build or the CPU lacks AVX2+F16C
const KernelTable* avx2_kernels();

enum class KernelArch { auto_detect, scalar, avx2 };

// Runtime selection. auto_detect picks the widest available variant.
void set_kernel_arch(KernelArch arch);
KernelArch kernel_arch();
const KernelTable& active_kernels();

} // namespace mpsgemm::kernels
