#include <algorithm>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mpsgemm/kernels.hpp"
#include "mpsgemm/network.hpp"
#include "mpsgemm/rng.hpp"

namespace mpsgemm {
namespace {

std::int64_t product(const std::vector<std::int64_t>& v) {
    return std::accumulate(v.begin(), v.end(), std::int64_t{1}, std::multiplies<std::int64_t>());
}

bool contains(const std::vector<std::string>& labels, const std::string& l) {
    return std::find(labels.begin(), labels.end(), l) != labels.end();
}

// Split a pair of label lists into (free_a, shared, free_b), shared in a's
// label order, and verify matching extents.
struct PairSplit {
    std::vector<std::string> free_a, shared, free_b;
    std::vector<std::int64_t> free_a_dims, shared_dims, free_b_dims;
};

template <typename T>
PairSplit split_pair(const Tensor<T>& a, const Tensor<T>& b) {
    PairSplit s;
    for (int i = 0; i < a.rank(); ++i) {
        const auto& l = a.labels[i];
        if (contains(b.labels, l)) {
            const auto pos = std::find(b.labels.begin(), b.labels.end(), l) - b.labels.begin();
            if (b.dims[pos] != a.dims[i])
                throw ExtentMismatch("label " + l + " has extents " + std::to_string(a.dims[i]) +
                                     " and " + std::to_string(b.dims[pos]));
            s.shared.push_back(l);
            s.shared_dims.push_back(a.dims[i]);
        } else {
            s.free_a.push_back(l);
            s.free_a_dims.push_back(a.dims[i]);
        }
    }
    for (int i = 0; i < b.rank(); ++i) {
        if (!contains(a.labels, b.labels[i])) {
            s.free_b.push_back(b.labels[i]);
            s.free_b_dims.push_back(b.dims[i]);
        }
    }
    return s;
}

template <typename T, typename GemmFn>
Tensor<T> ttgt_contract(const Tensor<T>& a, const Tensor<T>& b, GemmFn&& run_gemm) {
    const PairSplit s = split_pair(a, b);

    std::vector<std::string> order_a = s.free_a;
    order_a.insert(order_a.end(), s.shared.begin(), s.shared.end());
    std::vector<std::string> order_b = s.shared;
    order_b.insert(order_b.end(), s.free_b.begin(), s.free_b.end());

    Tensor<T> pa = permute(a, order_a);
    Tensor<T> pb = permute(b, order_b);

    const std::int64_t m = product(s.free_a_dims);
    const std::int64_t k = product(s.shared_dims);
    const std::int64_t n = product(s.free_b_dims);

    Matrix<T> ma(m, k, std::move(pa.data));
    Matrix<T> mb(k, n, std::move(pb.data));
    Matrix<T> mc = run_gemm(ma, mb);

    Tensor<T> out;
    out.labels = s.free_a;
    out.labels.insert(out.labels.end(), s.free_b.begin(), s.free_b.end());
    out.dims = s.free_a_dims;
    out.dims.insert(out.dims.end(), s.free_b_dims.begin(), s.free_b_dims.end());
    out.data = std::move(mc.data);
    return out;
}

MatrixC64 cgemm_f64(const MatrixC64& a, const MatrixC64& b) {
    const auto& kt = kernels::active_kernels();
    auto plane = [](const MatrixC64& m, bool imag) {
        MatrixF64 p(m.rows, m.cols);
        for (std::size_t i = 0; i < m.data.size(); ++i)
            p.data[i] = imag ? m.data[i].imag() : m.data[i].real();
        return p;
    };
    const MatrixF64 are = plane(a, false), aim = plane(a, true);
    const MatrixF64 bre = plane(b, false), bim = plane(b, true);
    MatrixF64 p1(a.rows, b.cols), p2(a.rows, b.cols), p3(a.rows, b.cols), p4(a.rows, b.cols);
    kt.gemm_rows_dd(are.data.data(), bre.data.data(), p1.data.data(), a.rows, b.cols, a.cols, 0,
                    a.rows);
    kt.gemm_rows_dd(aim.data.data(), bim.data.data(), p2.data.data(), a.rows, b.cols, a.cols, 0,
                    a.rows);
    kt.gemm_rows_dd(are.data.data(), bim.data.data(), p3.data.data(), a.rows, b.cols, a.cols, 0,
                    a.rows);
    kt.gemm_rows_dd(aim.data.data(), bre.data.data(), p4.data.data(), a.rows, b.cols, a.cols, 0,
                    a.rows);
    MatrixC64 c(a.rows, b.cols);
    for (std::size_t i = 0; i < c.data.size(); ++i)
        c.data[i] = {p1.data[i] - p2.data[i], p3.data[i] + p4.data[i]};
    return c;
}

} // namespace

void validate_network(const TensorNetwork& net) {
    std::map<std::string, std::vector<std::pair<int, std::int64_t>>> occurrences;
    for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i) {
        net.nodes[i].validate_shape();
        for (int a = 0; a < net.nodes[i].rank(); ++a)
            occurrences[net.nodes[i].labels[a]].emplace_back(i, net.nodes[i].dims[a]);
    }
    for (const auto& [label, occ] : occurrences) {
        if (occ.size() > 2)
            throw ShapeMismatch("label " + label + " appears in more than two nodes");
        if (occ.size() == 2 && occ[0].second != occ[1].second)
            throw ExtentMismatch("label " + label + " has mismatched extents");
    }
}

TensorC32 contract_pair(const TensorC32& a, const TensorC32& b, const DispatchConfig& config,
                        DecisionLog* log) {
    return ttgt_contract(a, b, [&](const MatrixC32& ma, const MatrixC32& mb) {
        return dispatch_cgemm(ma, mb, config, log).c;
    });
}

TensorC32 contract_pair(const TensorC32& a, const TensorC32& b, const SelectionPolicy& policy,
                        DecisionLog* log) {
    return contract_pair(a, b, DispatchConfig{policy, TilingConfig{}, std::nullopt}, log);
}

TensorC64 contract_pair_oracle(const TensorC64& a, const TensorC64& b) {
    return ttgt_contract(a, b, [](const MatrixC64& ma, const MatrixC64& mb) {
        return cgemm_f64(ma, mb);
    });
}

namespace {

template <typename T, typename ContractFn>
Tensor<T> fold_path(const std::vector<Tensor<T>>& nodes, const ContractionPath& path,
                    ContractFn&& contract) {
    if (nodes.empty()) throw InvalidPath("empty network");
    std::map<int, Tensor<T>> live;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) live.emplace(i, nodes[i]);
    int next_id = static_cast<int>(nodes.size());
    for (const auto& [ia, ib] : path.steps) {
        const auto a = live.find(ia);
        const auto b = live.find(ib);
        if (ia == ib || a == live.end() || b == live.end())
            throw InvalidPath("step references a dead or unknown node");
        Tensor<T> result = contract(a->second, b->second);
        live.erase(a);
        live.erase(live.find(ib));
        live.emplace(next_id++, std::move(result));
    }
    if (live.size() != 1) throw InvalidPath("path leaves more than one node");
    return std::move(live.begin()->second);
}

} // namespace

TensorC32 contract_network(const TensorNetwork& net, const ContractionPath& path,
                           const DispatchConfig& config, DecisionLog* log) {
    return fold_path(net.nodes, path, [&](const TensorC32& a, const TensorC32& b) {
        return contract_pair(a, b, config, log);
    });
}

TensorC64 contract_network_oracle(const TensorNetwork& net, const ContractionPath& path) {
    std::vector<TensorC64> wide;
    wide.reserve(net.nodes.size());
    for (const auto& node : net.nodes) wide.push_back(widen(node));
    return fold_path(wide, path, [](const TensorC64& a, const TensorC64& b) {
        return contract_pair_oracle(a, b);
    });
}

namespace {

struct NodeSummary {
    int id;
    std::vector<std::string> labels;
    std::vector<std::int64_t> dims;
};

struct GreedyOutcome {
    ContractionPath path;
    std::int64_t max_intermediate = 0; // element count
    bool has_gated_step = false;       // some step with min(m,n,k) >= gate
};

// Greedy simulation over shapes only; also used by the network generator to
// vet topologies before allocating data.
GreedyOutcome greedy_simulate(std::vector<NodeSummary> live, int next_id, std::int64_t gate) {
    GreedyOutcome out;
    while (live.size() > 1) {
        std::int64_t best_size = -1;
        std::size_t best_a = 0, best_b = 0;
        for (std::size_t x = 0; x < live.size(); ++x) {
            for (std::size_t y = x + 1; y < live.size(); ++y) {
                std::int64_t shared = 1, free_x = 1, free_y = 1;
                bool adjacent = false;
                for (int i = 0; i < static_cast<int>(live[x].labels.size()); ++i) {
                    if (contains(live[y].labels, live[x].labels[i])) {
                        shared *= live[x].dims[i];
                        adjacent = true;
                    } else {
                        free_x *= live[x].dims[i];
                    }
                }
                if (!adjacent) continue;
                for (int i = 0; i < static_cast<int>(live[y].labels.size()); ++i)
                    if (!contains(live[x].labels, live[y].labels[i])) free_y *= live[y].dims[i];
                const std::int64_t size = free_x * free_y;
                (void)shared;
                const std::pair<int, int> ids = std::minmax(live[x].id, live[y].id);
                const std::pair<int, int> best_ids =
                    best_size < 0 ? ids
                                  : std::pair<int, int>(std::minmax(live[best_a].id, live[best_b].id));
                if (best_size < 0 || size < best_size ||
                    (size == best_size && ids < best_ids)) {
                    best_size = size;
                    best_a = x;
                    best_b = y;
                }
            }
        }
        if (best_size < 0) {
            // no adjacent pair: the network has disconnected components
            // (shallow circuits legitimately produce them); combine the two
            // lowest-id survivors as an outer product
            for (std::size_t x = 0; x < live.size(); ++x) {
                for (std::size_t y = x + 1; y < live.size(); ++y) {
                    std::int64_t size = 1;
                    for (const auto d : live[x].dims) size *= d;
                    for (const auto d : live[y].dims) size *= d;
                    const std::pair<int, int> ids = std::minmax(live[x].id, live[y].id);
                    const std::pair<int, int> best_ids =
                        best_size < 0
                            ? ids
                            : std::pair<int, int>(std::minmax(live[best_a].id, live[best_b].id));
                    if (best_size < 0 || size < best_size ||
                        (size == best_size && ids < best_ids)) {
                        best_size = size;
                        best_a = x;
                        best_b = y;
                    }
                }
            }
        }

        NodeSummary& a = live[best_a];
        NodeSummary& b = live[best_b];
        NodeSummary merged;
        merged.id = next_id++;
        std::int64_t m = 1, k = 1, n = 1;
        for (int i = 0; i < static_cast<int>(a.labels.size()); ++i) {
            if (contains(b.labels, a.labels[i])) {
                k *= a.dims[i];
            } else {
                m *= a.dims[i];
                merged.labels.push_back(a.labels[i]);
                merged.dims.push_back(a.dims[i]);
            }
        }
        for (int i = 0; i < static_cast<int>(b.labels.size()); ++i) {
            if (!contains(a.labels, b.labels[i])) {
                n *= b.dims[i];
                merged.labels.push_back(b.labels[i]);
                merged.dims.push_back(b.dims[i]);
            }
        }
        if (std::min({m, n, k}) >= gate) out.has_gated_step = true;
        out.max_intermediate = std::max(out.max_intermediate, m * n);

        const int id_a = std::min(a.id, b.id);
        const int id_b = std::max(a.id, b.id);
        out.path.steps.emplace_back(id_a, id_b);

        // keep the merged summary, drop the operands (erase higher index first)
        const std::size_t hi = std::max(best_a, best_b);
        const std::size_t lo = std::min(best_a, best_b);
        live.erase(live.begin() + hi);
        live.erase(live.begin() + lo);
        live.push_back(std::move(merged));
    }
    return out;
}

std::vector<NodeSummary> summarize(const TensorNetwork& net) {
    std::vector<NodeSummary> live;
    for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i)
        live.push_back({i, net.nodes[i].labels, net.nodes[i].dims});
    return live;
}

} // namespace

ContractionPath greedy_path(const TensorNetwork& net) {
    validate_network(net);
    if (net.nodes.empty()) throw InvalidPath("empty network");
    return greedy_simulate(summarize(net), static_cast<int>(net.nodes.size()),
                           std::numeric_limits<std::int64_t>::max())
        .path;
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

TensorNetwork random_network(const RandomNetworkParams& params, std::uint64_t seed) {
    if (params.n_nodes < 2 || params.min_degree < 1 || params.max_degree < params.min_degree ||
        params.dim < 2)
        throw InfeasibleDegrees("invalid random network parameters");

    const int n = params.n_nodes;
    constexpr int kMaxAttempts = 500;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng(seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(attempt));

        // degree sequence with even sum
        std::vector<int> degree(n);
        bool even = false;
        for (int tries = 0; tries < 64 && !even; ++tries) {
            int sum = 0;
            for (int i = 0; i < n; ++i) {
                degree[i] = params.min_degree +
                            static_cast<int>(rng.next_below(
                                static_cast<std::uint64_t>(params.max_degree - params.min_degree + 1)));
                sum += degree[i];
            }
            even = (sum % 2 == 0);
        }
        if (!even) continue;

        // configuration model: shuffle stubs, pair consecutive entries
        std::vector<int> stubs;
        for (int i = 0; i < n; ++i)
            for (int d = 0; d < degree[i]; ++d) stubs.push_back(i);
        for (std::size_t i = stubs.size() - 1; i > 0; --i)
            std::swap(stubs[i], stubs[rng.next_below(i + 1)]);

        bool self_loop = false;
        std::vector<std::pair<int, int>> edges;
        for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
            if (stubs[i] == stubs[i + 1]) {
                self_loop = true;
                break;
            }
            edges.emplace_back(stubs[i], stubs[i + 1]);
        }
        if (self_loop) continue;

        UnionFind uf(n);
        for (const auto& [a, b] : edges) uf.unite(a, b);
        bool connected = true;
        for (int i = 1; i < n && connected; ++i) connected = (uf.find(i) == uf.find(0));
        if (!connected) continue;

        // vet the greedy contraction shape-wise before allocating data
        std::vector<NodeSummary> summaries(n);
        for (int i = 0; i < n; ++i) summaries[i].id = i;
        for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
            const std::string label = "e" + std::to_string(e);
            for (const int node : {edges[e].first, edges[e].second}) {
                summaries[node].labels.push_back(label);
                summaries[node].dims.push_back(params.dim);
            }
        }
        const std::int64_t gate = params.dim * params.dim;
        std::int64_t rank4 = params.dim * params.dim * params.dim * params.dim;
        GreedyOutcome sim;
        try {
            sim = greedy_simulate(summaries, n, gate);
        } catch (const DisconnectedNetwork&) {
            continue;
        }
        if (!sim.has_gated_step || sim.max_intermediate > rank4) continue;

        // topology accepted; draw element values
        TensorNetwork net;
        net.nodes.reserve(n);
        for (int i = 0; i < n; ++i)
            net.nodes.emplace_back(summaries[i].labels, summaries[i].dims);
        const bool tiny = params.init != RandtnInit::type1;
        for (auto& node : net.nodes) {
            for (auto& v : node.data) {
                float re = static_cast<float>(rng.gaussian(1e-2));
                float im = static_cast<float>(rng.gaussian(1e-2));
                if (tiny) {
                    re *= 1e-6f;
                    im *= 1e-6f;
                }
                v = {re, im};
            }
        }
        if (params.init == RandtnInit::type3) {
            std::int64_t total = 0;
            for (const auto& node : net.nodes) total += node.size();
            const int n_planted = 10 + static_cast<int>(rng.next_below(11));
            std::vector<std::int64_t> planted;
            while (static_cast<int>(planted.size()) < n_planted) {
                const auto flat = static_cast<std::int64_t>(
                    rng.next_below(static_cast<std::uint64_t>(total)));
                if (std::find(planted.begin(), planted.end(), flat) == planted.end())
                    planted.push_back(flat);
            }
            for (auto flat : planted) {
                for (auto& node : net.nodes) {
                    if (flat < node.size()) {
                        node.data[static_cast<std::size_t>(flat)] = {1.0f, 0.0f};
                        break;
                    }
                    flat -= node.size();
                }
            }
        }
        return net;
    }
    throw InfeasibleDegrees("no suitable random multigraph found for the given parameters");
}

void save_network(std::ostream& os, const TensorNetwork& net) {
    for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i) {
        const auto& t = net.nodes[i];
        os << "node " << i << " labels ";
        if (t.rank() == 0) {
            os << "-";
        } else {
            for (int a = 0; a < t.rank(); ++a) os << (a ? "," : "") << t.labels[a];
        }
        os << " dims ";
        if (t.rank() == 0) {
            os << "-";
        } else {
            for (int a = 0; a < t.rank(); ++a) os << (a ? "," : "") << t.dims[a];
        }
        os << "\n";
        char buf[64];
        for (std::size_t v = 0; v < t.data.size(); ++v) {
            std::snprintf(buf, sizeof(buf), "%.9g %.9g", static_cast<double>(t.data[v].real()),
                          static_cast<double>(t.data[v].imag()));
            os << buf << (v + 1 == t.data.size() ? "\n" : " ");
        }
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    if (s == "-") return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

} // namespace

TensorNetwork load_network(std::istream& is) {
    TensorNetwork net;
    std::string tok;
    while (is >> tok) {
        if (tok != "node") throw ShapeMismatch("expected 'node' header, got: " + tok);
        int id;
        std::string kw_labels, labels_csv, kw_dims, dims_csv;
        if (!(is >> id >> kw_labels >> labels_csv >> kw_dims >> dims_csv) ||
            kw_labels != "labels" || kw_dims != "dims")
            throw ShapeMismatch("malformed node header");
        const auto labels = split_csv(labels_csv);
        std::vector<std::int64_t> dims;
        for (const auto& d : split_csv(dims_csv)) dims.push_back(std::stoll(d));
        TensorC32 t(labels, dims);
        for (auto& v : t.data) {
            double re, im;
            if (!(is >> re >> im)) throw ShapeMismatch("truncated tensor data");
            v = {static_cast<float>(re), static_cast<float>(im)};
        }
        net.nodes.push_back(std::move(t));
    }
    validate_network(net);
    return net;
}

} // namespace mpsgemm
