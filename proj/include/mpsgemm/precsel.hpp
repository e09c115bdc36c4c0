#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mpsgemm/cgemm.hpp"

namespace mpsgemm {

// Exponent statistics of one matrix, taken over all 2*rows*cols real
// components. Stage 1 counts components representable as FP16 normals
// (exponent >= -14) and records the maximum exponent; stage 2 counts
// components inside the FP16 window shifted so the maximum exponent becomes
// the configured target. Stage 2 may be skipped when stage 1 already passes a
// threshold; n2 then carries n1 as a lower bound with stage2_evaluated false.
struct ExpStats {
    std::uint64_t n1 = 0;
    std::uint64_t n2 = 0;
    std::optional<int> e_max;
    std::uint64_t n_nonzero = 0;
    std::uint64_t n_total = 0;
    bool stage2_evaluated = false;

    // fraction of nonzero components that underflow FP16 directly
    double r1() const {
        return n_nonzero ? static_cast<double>(n_nonzero - n1) / static_cast<double>(n_nonzero)
                         : 0.0;
    }
    // fraction outside the shifted window (meaningful when stage2_evaluated)
    double r2() const {
        return n_nonzero ? static_cast<double>(n_nonzero - n2) / static_cast<double>(n_nonzero)
                         : 0.0;
    }
};

enum class ToleranceLevel { tf32_only = 0, fp16_scaled_ok = 1, fp16_ok = 2 };

struct MatrixTolerance {
    ToleranceLevel level = ToleranceLevel::tf32_only;
    std::optional<int> e_max;
};

enum class ComputeKind { fp16_tcec, fp16_tcec_scaled, tf32_tcec, fp32_baseline };

const char* to_string(ComputeKind kind);

// The selected GEMM mode plus the power-of-two shifts applied to each operand
// (zero unless the kind is fp16_tcec_scaled).
struct ComputeMode {
    ComputeKind kind = ComputeKind::fp32_baseline;
    int scale_exp_a = 0;
    int scale_exp_b = 0;
};

// Underflow admissibility threshold plus the size gates of the dispatch rule:
// min(m,n,k) >= size_auto runs the statistics-driven selection, otherwise
// min(m,n,k) >= size_tf32 runs TF32TCEC, otherwise the f32 baseline.
struct SelectionPolicy {
    double threshold_t = 0.0;
    std::int64_t size_auto = 2048;
    std::int64_t size_tf32 = 512;
    int target_max_exponent = 14;
};

// Both stages evaluated unconditionally.
ExpStats exp_stats(const MatrixC32& m, int target_max_exponent = 14);
// Stage 2 skipped when stage 1 passes for threshold t.
ExpStats exp_stats_staged(const MatrixC32& m, int target_max_exponent, double t);

MatrixTolerance matrix_tolerance(const ExpStats& stats, double t, int target_max_exponent = 14);

ComputeMode select_mode(const MatrixTolerance& tol_a, const MatrixTolerance& tol_b,
                        int target_max_exponent = 14);

// Multiply every component by 2^scale_exp (exact for power-of-two shifts
// within the normal range). Throws ScaleOverflow when a result leaves the
// finite f32 range.
void scale_matrix_inplace(MatrixC32& m, int scale_exp);
MatrixC32 scale_matrix(const MatrixC32& m, int scale_exp);
void scale_matrix_inplace(MatrixF32& m, int scale_exp);
MatrixF32 scale_matrix(const MatrixF32& m, int scale_exp);

// Multiply every component by 2^-(scale_exp_a + scale_exp_b).
void descale_output_inplace(MatrixC32& c, int scale_exp_a, int scale_exp_b);
MatrixC32 descale_output(const MatrixC32& c, int scale_exp_a, int scale_exp_b);
void descale_output_inplace(MatrixF32& c, int scale_exp_a, int scale_exp_b);

// One dispatched GEMM, as recorded in the run log. Statistics fields are
// empty for decisions that did not take statistics.
struct DecisionRecord {
    std::int64_t m = 0, n = 0, k = 0;
    std::string mode;
    int scale_a = 0, scale_b = 0;
    std::optional<ExpStats> stats_a, stats_b;
    double wall_ms = 0.0;

    // m,n,k,mode,scale_a,scale_b,r1_a,r2_a,r1_b,r2_b,e_max_a,e_max_b
    std::string to_line() const;
};

// Append-only sink for decision records; appends are serialized so no record
// is lost or interleaved within itself.
class DecisionLog {
  public:
    void append(DecisionRecord rec) {
        std::lock_guard<std::mutex> lock(mu_);
        records_.push_back(std::move(rec));
    }
    std::vector<DecisionRecord> records() const {
        std::lock_guard<std::mutex> lock(mu_);
        return records_;
    }
    void clear() {
        std::lock_guard<std::mutex> lock(mu_);
        records_.clear();
    }

  private:
    mutable std::mutex mu_;
    std::vector<DecisionRecord> records_;
};

// When set, every dispatched GEMM runs in the given mode regardless of size
// or statistics (the way a preloaded library pins one implementation).
// fp16_tcec_scaled still takes statistics to obtain the scale exponents.
enum class ForcedMode {
    fp32_ref,
    fp64_oracle,
    tf32_tc,
    fp16_tc,
    tf32_tcec,
    fp16_tcec,
    fp16_tcec_scaled,
};

const char* to_string(ForcedMode mode);

struct DispatchConfig {
    SelectionPolicy policy;
    TilingConfig tiling;
    std::optional<ForcedMode> force;
};

struct DispatchResult {
    MatrixC32 c;
    ComputeMode decision;
    std::optional<ExpStats> stats_a, stats_b;
    bool overflow = false;
};

DispatchResult dispatch_cgemm(const MatrixC32& a, const MatrixC32& b,
                              const SelectionPolicy& policy, DecisionLog* log = nullptr);
DispatchResult dispatch_cgemm(const MatrixC32& a, const MatrixC32& b, const DispatchConfig& config,
                              DecisionLog* log = nullptr);

} // namespace mpsgemm
