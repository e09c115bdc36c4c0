#pragma once

#include <utility>
#include <vector>

#include "mpsgemm/gemm.hpp"

namespace mpsgemm {

// Complex single-precision GEMM assembled from four real GEMMs in the
// requested mode:
//   C_re = G(A_re, B_re) - G(A_im, B_im)
//   C_im = G(A_re, B_im) + G(A_im, B_re)
// combined pairwise in f32 RN, in that fixed order. The interface is
// interleaved complex; the implementation deinterleaves into four real planes
// first.
MatrixC32 cgemm(const MatrixC32& a, const MatrixC32& b, GemmMode mode,
                const TilingConfig& tiling = {}, bool* overflow = nullptr);

// Elementwise application of cgemm; output order matches input order.
std::vector<MatrixC32> cgemm_batched(const std::vector<std::pair<MatrixC32, MatrixC32>>& pairs,
                                     GemmMode mode, const TilingConfig& tiling = {},
                                     bool* overflow = nullptr);

// Full-f64 complex product, the Eq.-style reference for error measurement.
MatrixC64 cgemm_oracle(const MatrixC32& a, const MatrixC32& b);

// Complex Frobenius relative error in f64.
double relative_error(const MatrixC32& c, const MatrixC64& c_ref);

} // namespace mpsgemm
