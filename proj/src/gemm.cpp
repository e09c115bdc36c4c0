#include <cmath>
#include <stdexcept>

#include "mpsgemm/gemm.hpp"
#include "mpsgemm/kernels.hpp"

namespace mpsgemm {
namespace {

using kernels::active_kernels;

void check_gemm_shapes(const MatrixF32& a, const MatrixF32& b) {
    if (a.cols != b.rows)
        throw ShapeMismatch("gemm: A is " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                            ", B is " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
}

void check_tiling(const TilingConfig& tiling) {
    if (tiling.k_tile < 1) throw std::invalid_argument("k_tile must be >= 1");
}

} // namespace

const char* to_string(GemmMode mode) {
    switch (mode) {
    case GemmMode::fp32_ref: return "FP32_REF";
    case GemmMode::fp64_oracle: return "FP64_ORACLE";
    case GemmMode::tf32_tc: return "TF32TC";
    case GemmMode::fp16_tc: return "FP16TC";
    case GemmMode::tf32_tcec: return "TF32TCEC";
    case GemmMode::fp16_tcec: return "FP16TCEC";
    }
    return "?";
}

GemmMode gemm_mode_from_string(const std::string& name) {
    if (name == "FP32_REF") return GemmMode::fp32_ref;
    if (name == "FP64_ORACLE") return GemmMode::fp64_oracle;
    if (name == "TF32TC") return GemmMode::tf32_tc;
    if (name == "FP16TC") return GemmMode::fp16_tc;
    if (name == "TF32TCEC") return GemmMode::tf32_tcec;
    if (name == "FP16TCEC") return GemmMode::fp16_tcec;
    throw std::invalid_argument("unknown GEMM mode: " + name);
}

bool mode_is_corrected(GemmMode mode) {
    return mode == GemmMode::tf32_tcec || mode == GemmMode::fp16_tcec;
}

lowprec::FormatKind mode_format(GemmMode mode) {
    switch (mode) {
    case GemmMode::tf32_tc:
    case GemmMode::tf32_tcec: return lowprec::FormatKind::tf32;
    case GemmMode::fp16_tc:
    case GemmMode::fp16_tcec: return lowprec::FormatKind::fp16;
    default: throw std::invalid_argument("mode has no reduced-precision format");
    }
}

MatrixF32 gemm_ref_f32(const MatrixF32& a, const MatrixF32& b) {
    check_gemm_shapes(a, b);
    MatrixF32 c(a.rows, b.cols);
    active_kernels().gemm_rows_rn(a.data.data(), b.data.data(), c.data.data(), a.rows, b.cols,
                                  a.cols, 0, a.rows);
    return c;
}

MatrixF64 gemm_oracle_f64(const MatrixF32& a, const MatrixF32& b) {
    check_gemm_shapes(a, b);
    MatrixF64 c(a.rows, b.cols);
    active_kernels().gemm_rows_f64(a.data.data(), b.data.data(), c.data.data(), a.rows, b.cols,
                                   a.cols, 0, a.rows);
    return c;
}

MatrixF32 gemm_tc(const MatrixF32& a, const MatrixF32& b, const lowprec::FloatFormat& fmt,
                  const TilingConfig& tiling, bool* overflow) {
    check_gemm_shapes(a, b);
    check_tiling(tiling);
    const auto& kt = active_kernels();
    MatrixF32 al(a.rows, a.cols), bl(b.rows, b.cols);
    kt.quantize_buf(a.data.data(), al.data.data(), static_cast<std::int64_t>(a.data.size()),
                    fmt.kind, lowprec::Rounding::nearest_even, overflow);
    kt.quantize_buf(b.data.data(), bl.data.data(), static_cast<std::int64_t>(b.data.size()),
                    fmt.kind, lowprec::Rounding::nearest_even, overflow);
    MatrixF32 c(a.rows, b.cols);
    kt.gemm_rows_rz(al.data.data(), bl.data.data(), c.data.data(), a.rows, b.cols, a.cols, 0,
                    a.rows);
    return c;
}

MatrixF32 gemm_tcec(const MatrixF32& a, const MatrixF32& b, const lowprec::FloatFormat& fmt,
                    const TilingConfig& tiling, bool* overflow) {
    check_gemm_shapes(a, b);
    check_tiling(tiling);
    const auto& kt = active_kernels();
    const auto na = static_cast<std::int64_t>(a.data.size());
    const auto nb = static_cast<std::int64_t>(b.data.size());
    MatrixF32 ah(a.rows, a.cols), al(a.rows, a.cols), bh(b.rows, b.cols), bl(b.rows, b.cols);
    kt.split_buf(a.data.data(), ah.data.data(), al.data.data(), na, fmt.kind, overflow);
    kt.split_buf(b.data.data(), bh.data.data(), bl.data.data(), nb, fmt.kind, overflow);
    MatrixF32 c(a.rows, b.cols);
    kt.gemm_rows_tcec(ah.data.data(), al.data.data(), bh.data.data(), bl.data.data(),
                      c.data.data(), a.rows, b.cols, a.cols, tiling.k_tile, 0, a.rows);
    return c;
}

MatrixF32 gemm(const MatrixF32& a, const MatrixF32& b, GemmMode mode, const TilingConfig& tiling,
               bool* overflow) {
    switch (mode) {
    case GemmMode::fp32_ref: return gemm_ref_f32(a, b);
    case GemmMode::fp64_oracle: {
        const MatrixF64 c = gemm_oracle_f64(a, b);
        MatrixF32 out(c.rows, c.cols);
        for (std::size_t i = 0; i < c.data.size(); ++i)
            out.data[i] = static_cast<float>(c.data[i]);
        return out;
    }
    case GemmMode::tf32_tc: return gemm_tc(a, b, lowprec::tf32_format, tiling, overflow);
    case GemmMode::fp16_tc: return gemm_tc(a, b, lowprec::fp16_format, tiling, overflow);
    case GemmMode::tf32_tcec: return gemm_tcec(a, b, lowprec::tf32_format, tiling, overflow);
    case GemmMode::fp16_tcec: return gemm_tcec(a, b, lowprec::fp16_format, tiling, overflow);
    }
    throw std::invalid_argument("unknown GEMM mode");
}

double relative_error(const MatrixF32& c, const MatrixF64& c_ref) {
    if (c.rows != c_ref.rows || c.cols != c_ref.cols)
        throw ShapeMismatch("relative_error: shape mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < c.data.size(); ++i) {
        const double d = static_cast<double>(c.data[i]) - c_ref.data[i];
        num += d * d;
        den += c_ref.data[i] * c_ref.data[i];
    }
    if (den == 0.0) throw ZeroReference("relative_error: zero reference norm");
    return std::sqrt(num) / std::sqrt(den);
}

} // namespace mpsgemm
