#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <type_traits>

#include "mpsgemm/kernels.hpp"
#include "mpsgemm/precsel.hpp"

namespace mpsgemm {
namespace {

using lowprec::exponent_of;

// complex storage is layout-compatible with a float pair
const float* component_ptr(const MatrixC32& m) {
    return reinterpret_cast<const float*>(m.data.data());
}
float* component_ptr(MatrixC32& m) { return reinterpret_cast<float*>(m.data.data()); }

constexpr float kFp16MinNormal = 0x1.0p-14f;

ExpStats stage1(const MatrixC32& m) {
    ExpStats s;
    const auto n = static_cast<std::int64_t>(m.data.size()) * 2;
    s.n_total = static_cast<std::uint64_t>(n);
    float max_abs = 0.0f;
    kernels::active_kernels().abs_stats(component_ptr(m), n, kFp16MinNormal, &s.n_nonzero, &s.n1,
                                        &max_abs);
    s.e_max = exponent_of(max_abs);
    return s;
}

void stage2(const MatrixC32& m, int target_max_exponent, ExpStats& s) {
    if (!s.e_max) {
        s.n2 = 0;
        s.stage2_evaluated = true;
        return;
    }
    const int window_floor = *s.e_max - (target_max_exponent + 14);
    const float threshold = std::ldexp(1.0f, window_floor); // 0 when below f32 range: all pass
    const auto n = static_cast<std::int64_t>(m.data.size()) * 2;
    s.n2 = kernels::active_kernels().count_abs_ge(component_ptr(m), n, threshold);
    s.stage2_evaluated = true;
}

bool stage1_passes(const ExpStats& s, double t, int target_max_exponent) {
    if (s.n_nonzero == 0) return true;
    if (s.r1() > t) return false;
    // inputs with exponents above the shift target still need scaling
    return !s.e_max || *s.e_max <= target_max_exponent;
}

void throw_if_nonfinite(const float* p, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i)
        if (!std::isfinite(p[i])) throw ScaleOverflow("scaled component left the f32 range");
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

} // namespace

const char* to_string(ComputeKind kind) {
    switch (kind) {
    case ComputeKind::fp16_tcec: return "FP16TCEC";
    case ComputeKind::fp16_tcec_scaled: return "FP16TCEC_SCALED";
    case ComputeKind::tf32_tcec: return "TF32TCEC";
    case ComputeKind::fp32_baseline: return "FP32_BASELINE";
    }
    return "?";
}

const char* to_string(ForcedMode mode) {
    switch (mode) {
    case ForcedMode::fp32_ref: return "FP32_REF";
    case ForcedMode::fp64_oracle: return "FP64_ORACLE";
    case ForcedMode::tf32_tc: return "TF32TC";
    case ForcedMode::fp16_tc: return "FP16TC";
    case ForcedMode::tf32_tcec: return "TF32TCEC";
    case ForcedMode::fp16_tcec: return "FP16TCEC";
    case ForcedMode::fp16_tcec_scaled: return "FP16TCEC_SCALED";
    }
    return "?";
}

ExpStats exp_stats(const MatrixC32& m, int target_max_exponent) {
    ExpStats s = stage1(m);
    stage2(m, target_max_exponent, s);
    return s;
}

ExpStats exp_stats_staged(const MatrixC32& m, int target_max_exponent, double t) {
    ExpStats s = stage1(m);
    if (stage1_passes(s, t, target_max_exponent)) {
        s.n2 = s.n1; // lower bound, stage 2 skipped
        s.stage2_evaluated = false;
        return s;
    }
    stage2(m, target_max_exponent, s);
    return s;
}

MatrixTolerance matrix_tolerance(const ExpStats& stats, double t, int target_max_exponent) {
    MatrixTolerance tol;
    tol.e_max = stats.e_max;
    if (stats.n_nonzero == 0) {
        tol.level = ToleranceLevel::fp16_ok;
        return tol;
    }
    if (stage1_passes(stats, t, target_max_exponent)) {
        tol.level = ToleranceLevel::fp16_ok;
        return tol;
    }
    if (!stats.stage2_evaluated)
        throw std::logic_error("matrix_tolerance: stage-2 statistics required but skipped");
    tol.level = stats.r2() <= t ? ToleranceLevel::fp16_scaled_ok : ToleranceLevel::tf32_only;
    return tol;
}

ComputeMode select_mode(const MatrixTolerance& tol_a, const MatrixTolerance& tol_b,
                        int target_max_exponent) {
    if (tol_a.level == ToleranceLevel::fp16_ok && tol_b.level == ToleranceLevel::fp16_ok)
        return {ComputeKind::fp16_tcec, 0, 0};
    if (tol_a.level >= ToleranceLevel::fp16_scaled_ok &&
        tol_b.level >= ToleranceLevel::fp16_scaled_ok) {
        // an operand that is already representable still receives its shift
        const int sa = tol_a.e_max ? target_max_exponent - *tol_a.e_max : 0;
        const int sb = tol_b.e_max ? target_max_exponent - *tol_b.e_max : 0;
        return {ComputeKind::fp16_tcec_scaled, sa, sb};
    }
    return {ComputeKind::tf32_tcec, 0, 0};
}

namespace {

template <typename M>
void scale_components(M& m, int scale_exp, bool check_overflow) {
    float* p;
    std::int64_t n;
    if constexpr (std::is_same_v<M, MatrixC32>) {
        p = component_ptr(m);
        n = static_cast<std::int64_t>(m.data.size()) * 2;
    } else {
        p = m.data.data();
        n = static_cast<std::int64_t>(m.data.size());
    }
    kernels::active_kernels().scale_buf(p, p, n, scale_exp);
    if (check_overflow) throw_if_nonfinite(p, n);
}

} // namespace

void scale_matrix_inplace(MatrixC32& m, int scale_exp) { scale_components(m, scale_exp, true); }
void scale_matrix_inplace(MatrixF32& m, int scale_exp) { scale_components(m, scale_exp, true); }

MatrixC32 scale_matrix(const MatrixC32& m, int scale_exp) {
    MatrixC32 out = m;
    scale_matrix_inplace(out, scale_exp);
    return out;
}

MatrixF32 scale_matrix(const MatrixF32& m, int scale_exp) {
    MatrixF32 out = m;
    scale_matrix_inplace(out, scale_exp);
    return out;
}

void descale_output_inplace(MatrixC32& c, int scale_exp_a, int scale_exp_b) {
    scale_components(c, -(scale_exp_a + scale_exp_b), false);
}

void descale_output_inplace(MatrixF32& c, int scale_exp_a, int scale_exp_b) {
    scale_components(c, -(scale_exp_a + scale_exp_b), false);
}

MatrixC32 descale_output(const MatrixC32& c, int scale_exp_a, int scale_exp_b) {
    MatrixC32 out = c;
    descale_output_inplace(out, scale_exp_a, scale_exp_b);
    return out;
}

std::string DecisionRecord::to_line() const {
    auto fmt_r = [](const std::optional<ExpStats>& s, bool second) -> std::string {
        if (!s) return "-";
        if (second && !s->stage2_evaluated) return "-";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.9g", second ? s->r2() : s->r1());
        return buf;
    };
    auto fmt_e = [](const std::optional<ExpStats>& s) -> std::string {
        if (!s || !s->e_max) return "-";
        return std::to_string(*s->e_max);
    };
    std::string line;
    line += std::to_string(m) + "," + std::to_string(n) + "," + std::to_string(k) + ",";
    line += mode + ",";
    line += std::to_string(scale_a) + "," + std::to_string(scale_b) + ",";
    line += fmt_r(stats_a, false) + "," + fmt_r(stats_a, true) + ",";
    line += fmt_r(stats_b, false) + "," + fmt_r(stats_b, true) + ",";
    line += fmt_e(stats_a) + "," + fmt_e(stats_b);
    return line;
}

namespace {

MatrixC32 run_scaled_fp16_tcec(const MatrixC32& a, const MatrixC32& b, int sa, int sb,
                               const TilingConfig& tiling, bool* overflow) {
    const MatrixC32 a_scaled = scale_matrix(a, sa);
    const MatrixC32 b_scaled = scale_matrix(b, sb);
    MatrixC32 c = cgemm(a_scaled, b_scaled, GemmMode::fp16_tcec, tiling, overflow);
    descale_output_inplace(c, sa, sb);
    return c;
}

} // namespace

DispatchResult dispatch_cgemm(const MatrixC32& a, const MatrixC32& b,
                              const SelectionPolicy& policy, DecisionLog* log) {
    return dispatch_cgemm(a, b, DispatchConfig{policy, TilingConfig{}, std::nullopt}, log);
}

DispatchResult dispatch_cgemm(const MatrixC32& a, const MatrixC32& b, const DispatchConfig& config,
                              DecisionLog* log) {
    if (a.cols != b.rows) throw ShapeMismatch("dispatch_cgemm: inner dimensions differ");
    const std::int64_t m = a.rows, k = a.cols, n = b.cols;
    const SelectionPolicy& policy = config.policy;
    const int target = policy.target_max_exponent;

    const auto t0 = std::chrono::steady_clock::now();
    DispatchResult result;
    std::string mode_label;

    if (config.force) {
        const ForcedMode fm = *config.force;
        mode_label = to_string(fm);
        switch (fm) {
        case ForcedMode::fp32_ref:
            result.c = cgemm(a, b, GemmMode::fp32_ref, config.tiling, &result.overflow);
            result.decision = {ComputeKind::fp32_baseline, 0, 0};
            break;
        case ForcedMode::fp64_oracle:
            result.c = cgemm(a, b, GemmMode::fp64_oracle, config.tiling, &result.overflow);
            result.decision = {ComputeKind::fp32_baseline, 0, 0};
            break;
        case ForcedMode::tf32_tc:
            result.c = cgemm(a, b, GemmMode::tf32_tc, config.tiling, &result.overflow);
            result.decision = {ComputeKind::tf32_tcec, 0, 0};
            break;
        case ForcedMode::fp16_tc:
            result.c = cgemm(a, b, GemmMode::fp16_tc, config.tiling, &result.overflow);
            result.decision = {ComputeKind::fp16_tcec, 0, 0};
            break;
        case ForcedMode::tf32_tcec:
            result.c = cgemm(a, b, GemmMode::tf32_tcec, config.tiling, &result.overflow);
            result.decision = {ComputeKind::tf32_tcec, 0, 0};
            break;
        case ForcedMode::fp16_tcec:
            result.c = cgemm(a, b, GemmMode::fp16_tcec, config.tiling, &result.overflow);
            result.decision = {ComputeKind::fp16_tcec, 0, 0};
            break;
        case ForcedMode::fp16_tcec_scaled: {
            // statistics still needed for the scale exponents
            result.stats_a = exp_stats_staged(a, target, 1.0);
            result.stats_b = exp_stats_staged(b, target, 1.0);
            const int sa = result.stats_a->e_max ? target - *result.stats_a->e_max : 0;
            const int sb = result.stats_b->e_max ? target - *result.stats_b->e_max : 0;
            result.c = run_scaled_fp16_tcec(a, b, sa, sb, config.tiling, &result.overflow);
            result.decision = {ComputeKind::fp16_tcec_scaled, sa, sb};
            break;
        }
        }
    } else if (std::min({m, n, k}) >= policy.size_auto) {
        result.stats_a = exp_stats_staged(a, target, policy.threshold_t);
        result.stats_b = exp_stats_staged(b, target, policy.threshold_t);
        const MatrixTolerance tol_a = matrix_tolerance(*result.stats_a, policy.threshold_t, target);
        const MatrixTolerance tol_b = matrix_tolerance(*result.stats_b, policy.threshold_t, target);
        result.decision = select_mode(tol_a, tol_b, target);
        mode_label = to_string(result.decision.kind);
        switch (result.decision.kind) {
        case ComputeKind::fp16_tcec:
            result.c = cgemm(a, b, GemmMode::fp16_tcec, config.tiling, &result.overflow);
            break;
        case ComputeKind::tf32_tcec:
            result.c = cgemm(a, b, GemmMode::tf32_tcec, config.tiling, &result.overflow);
            break;
        case ComputeKind::fp16_tcec_scaled:
            result.c = run_scaled_fp16_tcec(a, b, result.decision.scale_exp_a,
                                            result.decision.scale_exp_b, config.tiling,
                                            &result.overflow);
            break;
        case ComputeKind::fp32_baseline:
            result.c = cgemm(a, b, GemmMode::fp32_ref, config.tiling, &result.overflow);
            break;
        }
    } else if (std::min({m, n, k}) >= policy.size_tf32) {
        result.decision = {ComputeKind::tf32_tcec, 0, 0};
        mode_label = to_string(result.decision.kind);
        result.c = cgemm(a, b, GemmMode::tf32_tcec, config.tiling, &result.overflow);
    } else {
        result.decision = {ComputeKind::fp32_baseline, 0, 0};
        mode_label = to_string(result.decision.kind);
        result.c = cgemm(a, b, GemmMode::fp32_ref, config.tiling, &result.overflow);
    }

    if (log) {
        DecisionRecord rec;
        rec.m = m;
        rec.n = n;
        rec.k = k;
        rec.mode = mode_label;
        rec.scale_a = result.decision.scale_exp_a;
        rec.scale_b = result.decision.scale_exp_b;
        rec.stats_a = result.stats_a;
        rec.stats_b = result.stats_b;
        rec.wall_ms = elapsed_ms(t0);
        log->append(std::move(rec));
    }
    return result;
}

} // namespace mpsgemm
