#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <stdexcept>
#include <tuple>

#include "mpsgemm/experiments.hpp"
#include "mpsgemm/rng.hpp"

namespace mpsgemm::experiments {
namespace {

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

MatrixC32 random_uniform_matrix(std::int64_t rows, std::int64_t cols, Rng& rng) {
    MatrixC32 m(rows, cols);
    for (auto& v : m.data) v = {rng.uniform_pm1f(), rng.uniform_pm1f()};
    return m;
}

// fixed histogram column order so the CSV schema is stable
const char* const kHistogramModes[] = {"FP32_BASELINE", "TF32TCEC", "FP16TCEC",
                                       "FP16TCEC_SCALED", "FP32_REF", "TF32TC",
                                       "FP16TC", "FP64_ORACLE"};

} // namespace

double median(std::vector<double> values) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

RunMode run_mode_from_string(const std::string& label) {
    if (label.rfind("AUTO-", 0) == 0) {
        const double t = std::stod(label.substr(5));
        if (t < 0.0 || t > 1.0) throw std::invalid_argument("AUTO threshold must be in [0,1]");
        return {label, std::nullopt, t};
    }
    if (label == "BASELINE" || label == "CUBLAS") return {label, ForcedMode::fp32_ref, 0.0};
    if (label == "FP32_REF") return {label, ForcedMode::fp32_ref, 0.0};
    if (label == "FP64" || label == "FP64_ORACLE") return {label, ForcedMode::fp64_oracle, 0.0};
    if (label == "TF32TC") return {label, ForcedMode::tf32_tc, 0.0};
    if (label == "FP16TC") return {label, ForcedMode::fp16_tc, 0.0};
    if (label == "TF32TCEC") return {label, ForcedMode::tf32_tcec, 0.0};
    if (label == "FP16TCEC") return {label, ForcedMode::fp16_tcec, 0.0};
    if (label == "FP16TCEC_SCALED") return {label, ForcedMode::fp16_tcec_scaled, 0.0};
    throw std::invalid_argument("unknown run mode: " + label);
}

DispatchConfig make_dispatch_config(const RunMode& mode, const SelectionPolicy& base_policy,
                                    const TilingConfig& tiling) {
    DispatchConfig config;
    config.policy = base_policy;
    config.policy.threshold_t = mode.threshold;
    config.tiling = tiling;
    config.force = mode.force;
    return config;
}

// ---------------------------------------------------------------- gemm-bench

std::vector<GemmBenchRow> run_gemm_bench(const std::vector<std::int64_t>& sizes,
                                         const std::vector<GemmMode>& modes, std::uint64_t seed,
                                         const TilingConfig& tiling) {
    std::vector<GemmBenchRow> rows;
    for (const auto size : sizes) {
        Rng rng(seed + static_cast<std::uint64_t>(size));
        const MatrixC32 a = random_uniform_matrix(size, size, rng);
        const MatrixC32 b = random_uniform_matrix(size, size, rng);
        const MatrixC64 ref = cgemm_oracle(a, b);
        for (const auto mode : modes) {
            GemmBenchRow row;
            row.size = size;
            row.mode = mode;
            row.seed = seed;
            const auto t0 = std::chrono::steady_clock::now();
            if (mode == GemmMode::fp64_oracle) {
                // the oracle measured against itself
                row.rel_error = 0.0;
            } else {
                const MatrixC32 c = cgemm(a, b, mode, tiling);
                row.rel_error = relative_error(c, ref);
            }
            row.wall_ms = elapsed_ms(t0);
            rows.push_back(row);
        }
    }
    return rows;
}

void write_gemm_bench_csv(std::ostream& os, const std::vector<GemmBenchRow>& rows) {
    os << "size,mode,seed,rel_error,wall_ms\n";
    for (const auto& r : rows)
        os << r.size << "," << to_string(r.mode) << "," << r.seed << "," << fmt_double(r.rel_error)
           << "," << fmt_double(r.wall_ms) << "\n";
}

// -------------------------------------------------------------------- randtn

std::vector<RandtnRow> run_randtn(const RandtnConfig& config) {
    if (config.type < 1 || config.type > 3)
        throw std::invalid_argument("randtn type must be 1, 2 or 3");
    RandomNetworkParams params;
    params.dim = config.dim;
    params.init = static_cast<RandtnInit>(config.type);

    SelectionPolicy base;
    base.size_auto = config.size_auto > 0 ? config.size_auto : config.dim * config.dim;
    base.size_tf32 = config.size_tf32 > 0 ? config.size_tf32 : config.dim;

    std::vector<RandtnRow> rows;
    for (const auto seed : config.seeds) {
        const TensorNetwork net = random_network(params, seed);
        const ContractionPath path = greedy_path(net);
        const TensorC64 oracle = contract_network_oracle(net, path);
        const std::complex<double> z_ref = oracle.data[0];

        for (const auto& label : config.modes) {
            const RunMode mode = run_mode_from_string(label);
            const DispatchConfig dc = make_dispatch_config(mode, base, config.tiling);
            DecisionLog log;
            const auto t0 = std::chrono::steady_clock::now();
            const TensorC32 result = contract_network(net, path, dc, &log);
            const double ms = elapsed_ms(t0);

            RandtnRow row;
            row.type = config.type;
            row.dim = config.dim;
            row.mode = label;
            row.seed = seed;
            const std::complex<double> z(result.data[0].real(), result.data[0].imag());
            row.abs_result = std::abs(z);
            row.abs_oracle = std::abs(z_ref);
            row.rel_error = std::abs(z - z_ref) / std::abs(z_ref);
            row.decisions = log.records();
            for (const auto& rec : row.decisions) ++row.decision_histogram[rec.mode];
            row.wall_ms = ms;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_randtn_csv(std::ostream& os, const std::vector<RandtnRow>& rows) {
    os << "type,dim,mode,seed,rel_error,abs_result,abs_oracle";
    for (const auto* m : kHistogramModes) os << ",n_" << m;
    os << ",wall_ms\n";
    for (const auto& r : rows) {
        os << r.type << "," << r.dim << "," << r.mode << "," << r.seed << ","
           << fmt_double(r.rel_error) << "," << fmt_double(r.abs_result) << ","
           << fmt_double(r.abs_oracle);
        for (const auto* m : kHistogramModes) {
            const auto it = r.decision_histogram.find(m);
            os << "," << (it == r.decision_histogram.end() ? 0 : it->second);
        }
        os << "," << fmt_double(r.wall_ms) << "\n";
    }
}

// ----------------------------------------------------------------------- rqc

RqcResult run_rqc(const RqcConfig& config) {
    const int n_qubits = config.rows * config.cols;
    if (config.with_oracle && n_qubits > 24)
        throw TooManyQubits("oracle requested for more than 24 qubits");

    const Circuit circuit = rqc_rectangular(config.rows, config.cols, config.mid_depth,
                                            config.seed);

    // distinct output bitstrings, seed-deterministic
    Rng rng(config.seed ^ 0xC2B2AE3D27D4EB4Full);
    const std::uint64_t space = n_qubits >= 63 ? UINT64_MAX : (std::uint64_t{1} << n_qubits);
    const int want = static_cast<int>(
        std::min<std::uint64_t>(static_cast<std::uint64_t>(config.n_bitstrings), space));
    std::set<std::uint64_t> chosen;
    while (static_cast<int>(chosen.size()) < want) chosen.insert(rng.next_below(space));
    std::vector<Bitstring> bitstrings;
    for (const auto bits : chosen) {
        Bitstring x(static_cast<std::size_t>(n_qubits));
        for (int q = 0; q < n_qubits; ++q) x[static_cast<std::size_t>(q)] = (bits >> q) & 1;
        bitstrings.push_back(std::move(x));
    }

    std::vector<std::complex<double>> oracle;
    if (config.with_oracle) oracle = statevector_oracle(circuit);

    SelectionPolicy base;
    base.size_auto = config.size_auto;
    base.size_tf32 = config.size_tf32;

    RqcResult result;
    std::map<std::string, std::vector<double>> errors;
    std::map<std::string, std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>,
                                   std::pair<int, double>>>
        shapes;

    // the network topology does not depend on the bitstring, so one greedy
    // path serves every amplitude
    const ContractionPath path = greedy_path(circuit_to_network(circuit, bitstrings.front()));

    for (const auto& label : config.modes) {
        const RunMode mode = run_mode_from_string(label);
        const DispatchConfig dc = make_dispatch_config(mode, base, config.tiling);
        for (const auto& x : bitstrings) {
            const TensorNetwork net = circuit_to_network(circuit, x);
            DecisionLog log;
            const auto t0 = std::chrono::steady_clock::now();
            const TensorC32 out = contract_network(net, path, dc, &log);
            const double ms = elapsed_ms(t0);
            const std::complex<double> amp(out.data[0].real(), out.data[0].imag());

            RqcRow row;
            row.rows = config.rows;
            row.cols = config.cols;
            row.mid_depth = config.mid_depth;
            row.mode = label;
            row.seed = config.seed;
            row.bitstring.reserve(static_cast<std::size_t>(n_qubits));
            for (int q = 0; q < n_qubits; ++q) row.bitstring += x[static_cast<std::size_t>(q)] ? '1' : '0';
            row.abs_amplitude = std::abs(amp);
            if (config.with_oracle) {
                std::size_t idx = 0;
                for (int q = 0; q < n_qubits; ++q)
                    if (x[static_cast<std::size_t>(q)]) idx |= std::size_t{1} << q;
                const std::complex<double> ref = oracle[idx];
                row.rel_error = std::abs(amp - ref) / std::abs(ref);
                errors[label].push_back(row.rel_error);
            } else {
                row.rel_error = std::nan("");
            }
            row.wall_ms = ms;
            result.rows.push_back(std::move(row));

            for (const auto& rec : log.records()) {
                auto& agg = shapes[label][{rec.m, rec.n, rec.k}];
                ++agg.first;
                agg.second += rec.wall_ms;
            }
        }
    }

    for (const auto& [label, errs] : errors) result.median_error[label] = median(errs);
    for (const auto& [label, per_shape] : shapes)
        for (const auto& [shape, agg] : per_shape)
            result.shape_times.push_back({label, std::get<0>(shape), std::get<1>(shape),
                                          std::get<2>(shape), agg.first, agg.second});
    return result;
}

void write_rqc_csv(std::ostream& os, const std::vector<RqcRow>& rows) {
    os << "rows,cols,mid_depth,mode,seed,bitstring,rel_error,abs_amplitude,wall_ms\n";
    for (const auto& r : rows)
        os << r.rows << "," << r.cols << "," << r.mid_depth << "," << r.mode << "," << r.seed
           << "," << r.bitstring << "," << fmt_double(r.rel_error) << ","
           << fmt_double(r.abs_amplitude) << "," << fmt_double(r.wall_ms) << "\n";
}

void write_rqc_shapes_csv(std::ostream& os, const std::vector<RqcShapeTime>& shapes) {
    os << "mode,m,n,k,count,total_ms\n";
    for (const auto& s : shapes)
        os << s.mode << "," << s.m << "," << s.n << "," << s.k << "," << s.count << ","
           << fmt_double(s.total_ms) << "\n";
}

} // namespace mpsgemm::experiments
