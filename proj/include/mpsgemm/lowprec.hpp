#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>

namespace mpsgemm::lowprec {

// Rounding modes distinguished by the emulated multiply-accumulate pipeline.
enum class Rounding { nearest_even, toward_zero };

enum class FormatKind : int { fp16 = 0, tf32 = 1 };

// Descriptor of an emulated reduced-precision format. Values quantized to a
// format are stored in ordinary f32; both supported formats carry 10 explicit
// mantissa bits (11 significand bits with the hidden bit), which is what makes
// the 2^11 residual-splitting factor work.
struct FloatFormat {
    FormatKind kind;
    const char* name;
    int exponent_bits;
    int explicit_mantissa_bits; // excludes the hidden bit
    int min_normal_exp;         // unbiased exponent of the smallest normal
    int max_exp;                // unbiased exponent of the largest normal

    constexpr int min_subnormal_exp() const { return min_normal_exp - explicit_mantissa_bits; }
    // (2 - 2^-10) * 2^max_exp, the largest finite value
    constexpr double max_normal() const {
        double s = 1.0;
        for (int i = 0; i < max_exp; ++i) s *= 2.0;
        return (2.0 - 0x1.0p-10) * s;
    }
};

inline constexpr FloatFormat fp16_format{FormatKind::fp16, "FP16", 5, 10, -14, 15};
inline constexpr FloatFormat tf32_format{FormatKind::tf32, "TF32", 8, 10, -126, 127};

inline constexpr const FloatFormat& format(FormatKind k) {
    return k == FormatKind::fp16 ? fp16_format : tf32_format;
}

// floor(log2|x|) from the bit pattern; subnormal singles handled; none for 0.
inline std::optional<int> exponent_of(float x) {
    const std::uint32_t b = std::bit_cast<std::uint32_t>(x) & 0x7FFFFFFFu;
    if (b == 0) return std::nullopt;
    const int raw = static_cast<int>(b >> 23);
    if (raw != 0) return raw - 127;
    // subnormal: value = mant * 2^-149
    return -149 + std::bit_width(b) - 1;
}

// Round finite x to the nearest value (per mode) representable in fmt, kept in
// f32 storage. Values past the largest finite value saturate and set
// *overflow; the quantum-simulation workload never legitimately gets here.
// Subnormals of fmt are produced exactly; flushing anything representable
// would be a policy decision that belongs to the statistics stage, not here.
inline float quantize(float x, const FloatFormat& fmt, Rounding mode, bool* overflow = nullptr) {
    if (x == 0.0f) return x; // preserves signed zero

    const double xd = static_cast<double>(x);
    const double limit = fmt.max_normal();
    if (std::fabs(xd) > limit) {
        if (overflow) *overflow = true;
        return static_cast<float>(std::copysign(limit, xd));
    }

    const int e = *exponent_of(x);
    const int q = std::max(e - fmt.explicit_mantissa_bits, fmt.min_subnormal_exp());
    // |x * 2^-q| <= 2^11, exact in double
    const double scaled = std::ldexp(xd, -q);
    const double r = (mode == Rounding::nearest_even) ? std::nearbyint(scaled) : std::trunc(scaled);
    return static_cast<float>(std::ldexp(r, q));
}

struct SplitPair {
    float hi;
    float lo;
};

// Residual splitting: hi carries the leading 11 significand bits, lo the next
// 11 shifted up by 2^11 so both halves live in the same format. The f32
// subtraction x - hi is exact because the residual fits in 12 bits.
inline SplitPair split(float x, const FloatFormat& fmt, bool* overflow = nullptr) {
    const float hi = quantize(x, fmt, Rounding::nearest_even, overflow);
    const float lo = quantize((x - hi) * 0x1.0p11f, fmt, Rounding::nearest_even, overflow);
    return {hi, lo};
}

// f32 addition rounded toward zero, emulated on top of round-to-nearest
// hardware. 2Sum gives the exact error of the RN sum; when the RN result
// overshoots the exact sum in magnitude, the truncated result is one ulp
// toward zero.
inline float add_rz(float a, float b) {
    const float s = a + b;
    const float bb = s - a;
    const float err = (a - (s - bb)) + (b - bb);
    if (err != 0.0f && std::signbit(err) != std::signbit(s))
        return std::bit_cast<float>(std::bit_cast<std::uint32_t>(s) - 1u);
    return s;
}

} // namespace mpsgemm::lowprec
