// Command-line harness for the accuracy and mode-selection experiments.
// Results go to CSV (schemas in docs/csv_formats.md) plus a summary table on
// stdout. Timing columns are indicative only.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mpsgemm/experiments.hpp"
#include "mpsgemm/kernels.hpp"

namespace {

using namespace mpsgemm;
using namespace mpsgemm::experiments;

void apply_kernel_choice(const std::string& kernel) {
    if (kernel == "auto") kernels::set_kernel_arch(kernels::KernelArch::auto_detect);
    else if (kernel == "scalar") kernels::set_kernel_arch(kernels::KernelArch::scalar);
    else if (kernel == "avx2") kernels::set_kernel_arch(kernels::KernelArch::avx2);
    else throw CLI::ValidationError("--kernel must be auto, scalar or avx2");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open output file: " + path);
    return os;
}

int cmd_gemm_bench(const std::vector<std::int64_t>& sizes, const std::vector<std::string>& modes,
                   std::uint64_t seed, int k_tile, const std::string& out) {
    for (const auto s : sizes)
        if (s < 16) throw std::runtime_error("--sizes entries must be >= 16");
    std::vector<GemmMode> gemm_modes;
    for (const auto& m : modes) gemm_modes.push_back(gemm_mode_from_string(m));

    const auto rows = run_gemm_bench(sizes, gemm_modes, seed, TilingConfig{k_tile});

    std::printf("%8s  %-12s  %-12s  %10s\n", "size", "mode", "rel_error", "wall_ms");
    for (const auto& r : rows)
        std::printf("%8lld  %-12s  %-12.3e  %10.1f\n", static_cast<long long>(r.size),
                    to_string(r.mode), r.rel_error, r.wall_ms);

    if (!out.empty()) {
        auto os = open_out(out);
        write_gemm_bench_csv(os, rows);
        std::printf("wrote %s\n", out.c_str());
    }
    return 0;
}

int cmd_randtn(int type, std::int64_t dim, const std::vector<std::string>& modes,
               const std::vector<std::uint64_t>& seeds, std::int64_t size_auto,
               std::int64_t size_tf32, int k_tile, const std::string& out) {
    if (dim < 4) throw std::runtime_error("--dim must be >= 4");
    RandtnConfig config;
    config.type = type;
    config.dim = dim;
    config.modes = modes;
    config.seeds = seeds;
    config.size_auto = size_auto;
    config.size_tf32 = size_tf32;
    config.tiling.k_tile = k_tile;

    const auto rows = run_randtn(config);

    std::printf("%-6s %-18s %-6s %-12s %-12s  decisions\n", "type", "mode", "seed", "rel_error",
                "|z|/|z_ref|");
    for (const auto& r : rows) {
        std::string hist;
        for (const auto& [mode, count] : r.decision_histogram)
            hist += mode + ":" + std::to_string(count) + " ";
        std::printf("%-6d %-18s %-6llu %-12.3e %-12.3e  %s\n", r.type, r.mode.c_str(),
                    static_cast<unsigned long long>(r.seed), r.rel_error,
                    r.abs_result / r.abs_oracle, hist.c_str());
    }

    if (!out.empty()) {
        auto os = open_out(out);
        write_randtn_csv(os, rows);
        std::printf("wrote %s\n", out.c_str());
    }
    return 0;
}

int cmd_rqc(int rows, int cols, int depth, int n_bitstrings,
            const std::vector<std::string>& modes, double threshold, std::uint64_t seed,
            bool oracle, int k_tile, const std::string& out, const std::string& circuit_out) {
    RqcConfig config;
    config.rows = rows;
    config.cols = cols;
    config.mid_depth = depth;
    config.n_bitstrings = n_bitstrings;
    config.modes = modes;
    // convenience: bare AUTO picks up --threshold
    for (auto& m : config.modes)
        if (m == "AUTO") m = "AUTO-" + std::to_string(threshold);
    config.seed = seed;
    config.with_oracle = oracle;
    config.tiling.k_tile = k_tile;

    if (!circuit_out.empty()) {
        auto os = open_out(circuit_out);
        save_circuit(os, rqc_rectangular(rows, cols, depth, seed));
        std::printf("wrote %s\n", circuit_out.c_str());
    }

    const auto result = run_rqc(config);

    std::printf("lattice %dx%d depth 1+%d+1, %d bitstrings, seed %llu\n", rows, cols, depth,
                n_bitstrings, static_cast<unsigned long long>(seed));
    std::printf("%-18s %-14s\n", "mode", "median_error");
    for (const auto& [mode, err] : result.median_error)
        std::printf("%-18s %-14.3e\n", mode.c_str(), err);

    if (!out.empty()) {
        auto os = open_out(out);
        write_rqc_csv(os, result.rows);
        auto shapes = open_out(out + ".shapes.csv");
        write_rqc_shapes_csv(shapes, result.shape_times);
        std::printf("wrote %s and %s.shapes.csv\n", out.c_str(), out.c_str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixed-precision GEMM emulation with automatic precision selection"};
    app.require_subcommand(1);

    std::string kernel = "auto";
    app.add_option("--kernel", kernel, "kernel variant: auto, scalar, avx2");

    // gemm-bench
    auto* bench = app.add_subcommand("gemm-bench", "CGEMM accuracy sweep vs the f64 reference");
    std::vector<std::int64_t> sizes = {256, 512, 1024, 2048};
    std::vector<std::string> bench_modes = {"FP32_REF", "TF32TC", "FP16TC", "TF32TCEC",
                                            "FP16TCEC"};
    std::uint64_t bench_seed = 1;
    int bench_tile = 16;
    std::string bench_out;
    bench->add_option("--sizes", sizes, "square sizes to test")->delimiter(',');
    bench->add_option("--modes", bench_modes, "GEMM modes")->delimiter(',');
    bench->add_option("--seed", bench_seed, "RNG seed");
    bench->add_option("--tile", bench_tile, "error-correction k tile");
    bench->add_option("--out", bench_out, "CSV output path");

    // randtn
    auto* randtn = app.add_subcommand("randtn", "random tensor network contraction accuracy");
    int rt_type = 1;
    std::int64_t rt_dim = 32;
    std::vector<std::string> rt_modes = {"BASELINE", "TF32TCEC", "FP16TCEC", "FP16TCEC_SCALED",
                                         "AUTO-0", "AUTO-0.1", "AUTO-0.5"};
    std::vector<std::uint64_t> rt_seeds = {1, 2, 3, 4, 5};
    std::int64_t rt_size_auto = 0, rt_size_tf32 = 0;
    int rt_tile = 16;
    std::string rt_out;
    randtn->add_option("--type", rt_type, "element initialization family: 1, 2 or 3")
        ->check(CLI::Range(1, 3));
    randtn->add_option("--dim", rt_dim, "tensor index dimension");
    randtn->add_option("--modes", rt_modes, "computing modes (forced names or AUTO-<t>)")
        ->delimiter(',');
    randtn->add_option("--seeds", rt_seeds, "network seeds")->delimiter(',');
    randtn->add_option("--size-auto", rt_size_auto, "min(m,n,k) gate for statistics (0: dim^2)");
    randtn->add_option("--size-tf32", rt_size_tf32, "min(m,n,k) gate for TF32TCEC (0: dim)");
    randtn->add_option("--tile", rt_tile, "error-correction k tile");
    randtn->add_option("--out", rt_out, "CSV output path");

    // rqc
    auto* rqc = app.add_subcommand("rqc", "rectangular-lattice random circuit amplitudes");
    int rq_rows = 4, rq_cols = 4, rq_depth = 8, rq_bits = 10;
    std::vector<std::string> rq_modes = {"AUTO-0", "BASELINE", "TF32TCEC", "FP16TCEC", "FP16TC"};
    double rq_threshold = 0.0;
    std::uint64_t rq_seed = 1;
    bool rq_oracle = true;
    int rq_tile = 16;
    std::string rq_out, rq_circuit_out;
    rqc->add_option("--rows", rq_rows, "lattice rows");
    rqc->add_option("--cols", rq_cols, "lattice cols");
    rqc->add_option("--depth", rq_depth, "mid layers X of depth 1+X+1");
    rqc->add_option("--reps,--bitstrings", rq_bits, "number of output bitstrings");
    rqc->add_option("--modes", rq_modes, "computing modes")->delimiter(',');
    rqc->add_option("--threshold", rq_threshold, "underflow admissibility for bare AUTO");
    rqc->add_option("--seed", rq_seed, "circuit/bitstring seed");
    rqc->add_flag("--oracle,!--no-oracle", rq_oracle, "compare against the f64 state vector");
    rqc->add_option("--tile", rq_tile, "error-correction k tile");
    rqc->add_option("--out", rq_out, "CSV output path");
    rqc->add_option("--save-circuit", rq_circuit_out, "write the generated circuit to a file");

    CLI11_PARSE(app, argc, argv);

    try {
        apply_kernel_choice(kernel);
        if (bench->parsed())
            return cmd_gemm_bench(sizes, bench_modes, bench_seed, bench_tile, bench_out);
        if (randtn->parsed())
            return cmd_randtn(rt_type, rt_dim, rt_modes, rt_seeds, rt_size_auto, rt_size_tf32,
                              rt_tile, rt_out);
        if (rqc->parsed())
            return cmd_rqc(rq_rows, rq_cols, rq_depth, rq_bits, rq_modes, rq_threshold, rq_seed,
                           rq_oracle, rq_tile, rq_out, rq_circuit_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
