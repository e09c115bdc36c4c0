#pragma once

#include <string>

#include "mpsgemm/lowprec.hpp"
#include "mpsgemm/matrix.hpp"

namespace mpsgemm {

// Real single-precision GEMM engines. Every mode has a fixed, bit-reproducible
// accumulation schedule so rounding-mode effects can be studied in isolation.
//
//   FP32_REF    f32 products, RN accumulation (the SGEMM baseline)
//   FP64_ORACLE all arithmetic in f64 (rounded to f32 by the mode dispatcher)
//   TF32TC      inputs rounded to TF32, RZ accumulation over the whole chain
//   FP16TC      inputs rounded to FP16, RZ accumulation over the whole chain
//   TF32TCEC    TF32 with residual splitting and error correction
//   FP16TCEC    FP16 with residual splitting and error correction
enum class GemmMode { fp32_ref, fp64_oracle, tf32_tc, fp16_tc, tf32_tcec, fp16_tcec };

const char* to_string(GemmMode mode);
GemmMode gemm_mode_from_string(const std::string& name);
bool mode_is_corrected(GemmMode mode);
lowprec::FormatKind mode_format(GemmMode mode); // tc/tcec modes only

// Accumulation granularity of the error-corrected main term: RZ inside each
// k tile, RN across tiles (mirrors one multiply-accumulate fragment depth).
struct TilingConfig {
    int k_tile = 16;
};

MatrixF32 gemm_ref_f32(const MatrixF32& a, const MatrixF32& b);
MatrixF64 gemm_oracle_f64(const MatrixF32& a, const MatrixF32& b);
MatrixF32 gemm_tc(const MatrixF32& a, const MatrixF32& b, const lowprec::FloatFormat& fmt,
                  const TilingConfig& tiling = {}, bool* overflow = nullptr);
MatrixF32 gemm_tcec(const MatrixF32& a, const MatrixF32& b, const lowprec::FloatFormat& fmt,
                    const TilingConfig& tiling = {}, bool* overflow = nullptr);

// Mode-dispatched entry point; fp64_oracle results are rounded to f32.
MatrixF32 gemm(const MatrixF32& a, const MatrixF32& b, GemmMode mode,
               const TilingConfig& tiling = {}, bool* overflow = nullptr);

// ||C - C_ref||_F / ||C_ref||_F in f64. Throws ZeroReference for a zero
// reference norm.
double relative_error(const MatrixF32& c, const MatrixF64& c_ref);

} // namespace mpsgemm
