#pragma once

#include <iosfwd>
#include <map>
#include <optional>

#include "mpsgemm/qcircuit.hpp"

namespace mpsgemm::experiments {

// A named computing mode as used in the experiment reports: either a forced
// GEMM implementation (BASELINE, TF32TCEC, FP16TCEC, FP16TCEC_SCALED, TF32TC,
// FP16TC, FP64) or the automatic selector AUTO-<t>.
struct RunMode {
    std::string label;
    std::optional<ForcedMode> force; // empty: automatic selection
    double threshold = 0.0;          // AUTO underflow admissibility
};

RunMode run_mode_from_string(const std::string& label);

DispatchConfig make_dispatch_config(const RunMode& mode, const SelectionPolicy& base_policy,
                                    const TilingConfig& tiling);

// ---------------------------------------------------------------- gemm-bench

struct GemmBenchRow {
    std::int64_t size = 0;
    GemmMode mode = GemmMode::fp32_ref;
    std::uint64_t seed = 0;
    double rel_error = 0.0;
    double wall_ms = 0.0; // indicative only
};

std::vector<GemmBenchRow> run_gemm_bench(const std::vector<std::int64_t>& sizes,
                                         const std::vector<GemmMode>& modes, std::uint64_t seed,
                                         const TilingConfig& tiling = {});
void write_gemm_bench_csv(std::ostream& os, const std::vector<GemmBenchRow>& rows);

// -------------------------------------------------------------------- randtn

struct RandtnConfig {
    int type = 1; // element initialization family
    std::int64_t dim = 32;
    std::vector<std::string> modes = {"BASELINE", "TF32TCEC", "FP16TCEC", "FP16TCEC_SCALED",
                                      "AUTO-0"};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    // size gates of the automatic rule, scaled to the experiment dimension
    // (0 keeps the defaults dim^2 and dim)
    std::int64_t size_auto = 0;
    std::int64_t size_tf32 = 0;
    TilingConfig tiling;
};

struct RandtnRow {
    int type = 0;
    std::int64_t dim = 0;
    std::string mode;
    std::uint64_t seed = 0;
    double rel_error = 0.0;
    double abs_result = 0.0;
    double abs_oracle = 0.0;
    std::map<std::string, int> decision_histogram;
    std::vector<DecisionRecord> decisions;
    double wall_ms = 0.0;
};

std::vector<RandtnRow> run_randtn(const RandtnConfig& config);
void write_randtn_csv(std::ostream& os, const std::vector<RandtnRow>& rows);

// ----------------------------------------------------------------------- rqc

struct RqcConfig {
    int rows = 4;
    int cols = 4;
    int mid_depth = 8; // depth is 1 + mid_depth + 1
    int n_bitstrings = 10;
    std::vector<std::string> modes = {"AUTO-0", "TF32TCEC", "FP16TCEC", "FP16TC"};
    std::uint64_t seed = 1;
    bool with_oracle = true;
    std::int64_t size_auto = 2048;
    std::int64_t size_tf32 = 512;
    TilingConfig tiling;
};

struct RqcRow {
    int rows = 0, cols = 0, mid_depth = 0;
    std::string mode;
    std::uint64_t seed = 0;
    std::string bitstring;
    double rel_error = 0.0; // nan when the oracle column is disabled
    double abs_amplitude = 0.0;
    double wall_ms = 0.0;
};

struct RqcShapeTime {
    std::string mode;
    std::int64_t m = 0, n = 0, k = 0;
    int count = 0;
    double total_ms = 0.0;
};

struct RqcResult {
    std::vector<RqcRow> rows;
    std::map<std::string, double> median_error; // per mode
    std::vector<RqcShapeTime> shape_times;
};

RqcResult run_rqc(const RqcConfig& config);
void write_rqc_csv(std::ostream& os, const std::vector<RqcRow>& rows);
void write_rqc_shapes_csv(std::ostream& os, const std::vector<RqcShapeTime>& shapes);

double median(std::vector<double> values);

} // namespace mpsgemm::experiments
