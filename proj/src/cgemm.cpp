#include <cmath>

#include "mpsgemm/cgemm.hpp"
#include "mpsgemm/kernels.hpp"

namespace mpsgemm {
namespace {

struct Planes {
    MatrixF32 re;
    MatrixF32 im;
};

Planes deinterleave(const MatrixC32& m) {
    Planes p{MatrixF32(m.rows, m.cols), MatrixF32(m.rows, m.cols)};
    for (std::size_t i = 0; i < m.data.size(); ++i) {
        p.re.data[i] = m.data[i].real();
        p.im.data[i] = m.data[i].imag();
    }
    return p;
}

} // namespace

MatrixC32 cgemm(const MatrixC32& a, const MatrixC32& b, GemmMode mode, const TilingConfig& tiling,
                bool* overflow) {
    if (a.cols != b.rows) throw ShapeMismatch("cgemm: inner dimensions differ");
    const auto& kt = kernels::active_kernels();

    const Planes pa = deinterleave(a);
    const Planes pb = deinterleave(b);

    const MatrixF32 p1 = gemm(pa.re, pb.re, mode, tiling, overflow);
    const MatrixF32 p2 = gemm(pa.im, pb.im, mode, tiling, overflow);
    const MatrixF32 p3 = gemm(pa.re, pb.im, mode, tiling, overflow);
    const MatrixF32 p4 = gemm(pa.im, pb.re, mode, tiling, overflow);

    const auto n = static_cast<std::int64_t>(p1.data.size());
    MatrixF32 cre(p1.rows, p1.cols), cim(p1.rows, p1.cols);
    kt.sub_buf(p1.data.data(), p2.data.data(), cre.data.data(), n);
    kt.add_buf(p3.data.data(), p4.data.data(), cim.data.data(), n);

    MatrixC32 c(p1.rows, p1.cols);
    for (std::int64_t i = 0; i < n; ++i) c.data[i] = {cre.data[i], cim.data[i]};
    return c;
}

std::vector<MatrixC32> cgemm_batched(const std::vector<std::pair<MatrixC32, MatrixC32>>& pairs,
                                     GemmMode mode, const TilingConfig& tiling, bool* overflow) {
    std::vector<MatrixC32> out;
    out.reserve(pairs.size());
    for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
        try {
            out.push_back(cgemm(pairs[idx].first, pairs[idx].second, mode, tiling, overflow));
        } catch (const ShapeMismatch& e) {
            throw ShapeMismatch("batch entry " + std::to_string(idx) + ": " + e.what());
        }
    }
    return out;
}

MatrixC64 cgemm_oracle(const MatrixC32& a, const MatrixC32& b) {
    if (a.cols != b.rows) throw ShapeMismatch("cgemm_oracle: inner dimensions differ");
    const Planes pa = deinterleave(a);
    const Planes pb = deinterleave(b);
    const MatrixF64 p1 = gemm_oracle_f64(pa.re, pb.re);
    const MatrixF64 p2 = gemm_oracle_f64(pa.im, pb.im);
    const MatrixF64 p3 = gemm_oracle_f64(pa.re, pb.im);
    const MatrixF64 p4 = gemm_oracle_f64(pa.im, pb.re);
    MatrixC64 c(p1.rows, p1.cols);
    for (std::size_t i = 0; i < c.data.size(); ++i)
        c.data[i] = {p1.data[i] - p2.data[i], p3.data[i] + p4.data[i]};
    return c;
}

double relative_error(const MatrixC32& c, const MatrixC64& c_ref) {
    if (c.rows != c_ref.rows || c.cols != c_ref.cols)
        throw ShapeMismatch("relative_error: shape mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < c.data.size(); ++i) {
        const double dre = static_cast<double>(c.data[i].real()) - c_ref.data[i].real();
        const double dim = static_cast<double>(c.data[i].imag()) - c_ref.data[i].imag();
        num += dre * dre + dim * dim;
        den += c_ref.data[i].real() * c_ref.data[i].real() +
               c_ref.data[i].imag() * c_ref.data[i].imag();
    }
    if (den == 0.0) throw ZeroReference("relative_error: zero reference norm");
    return std::sqrt(num) / std::sqrt(den);
}

} // namespace mpsgemm
