#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "mpsgemm/qcircuit.hpp"
#include "mpsgemm/rng.hpp"

namespace mpsgemm {
namespace {

using cd = std::complex<double>;

std::string wire(int qubit, int step) {
    return "w" + std::to_string(qubit) + "_" + std::to_string(step);
}

} // namespace

const char* to_string(GateKind kind) {
    switch (kind) {
    case GateKind::h: return "H";
    case GateKind::t: return "T";
    case GateKind::sqrt_x: return "SX";
    case GateKind::sqrt_y: return "SY";
    case GateKind::cz: return "CZ";
    }
    return "?";
}

void validate_circuit(const Circuit& c) {
    for (const auto& layer : c.layers) {
        std::set<int> touched;
        for (const auto& g : layer) {
            const std::size_t want = g.kind == GateKind::cz ? 2 : 1;
            if (g.qubits.size() != want) throw ShapeMismatch("gate has wrong qubit count");
            for (const int q : g.qubits) {
                if (q < 0 || q >= c.n_qubits) throw ShapeMismatch("qubit index out of range");
                if (!touched.insert(q).second)
                    throw ShapeMismatch("layer gates must act on disjoint qubits");
            }
        }
    }
}

std::vector<cd> gate_matrix_f64(GateKind kind) {
    const double s = 1.0 / std::sqrt(2.0);
    switch (kind) {
    case GateKind::h: return {s, s, s, -s};
    case GateKind::t: return {1.0, 0.0, 0.0, cd(s, s)};
    case GateKind::sqrt_x:
        return {cd(0.5, 0.5), cd(0.5, -0.5), cd(0.5, -0.5), cd(0.5, 0.5)};
    case GateKind::sqrt_y:
        return {cd(0.5, 0.5), cd(-0.5, -0.5), cd(0.5, 0.5), cd(0.5, 0.5)};
    case GateKind::cz:
        return {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, -1};
    }
    return {};
}

TensorC32 gate_tensor(const Gate& g) {
    const auto m = gate_matrix_f64(g.kind);
    if (g.kind == GateKind::cz) {
        TensorC32 t({"o0", "o1", "i0", "i1"}, {2, 2, 2, 2});
        // CZ[out, in] reshaped: index ((oa*2+ob)*2+ia)*2+ib reads the 4x4
        // matrix at (oa*2+ob, ia*2+ib)
        for (int out = 0; out < 4; ++out)
            for (int in = 0; in < 4; ++in)
                t.data[static_cast<std::size_t>(out * 4 + in)] = {
                    static_cast<float>(m[static_cast<std::size_t>(out * 4 + in)].real()),
                    static_cast<float>(m[static_cast<std::size_t>(out * 4 + in)].imag())};
        return t;
    }
    TensorC32 t({"o0", "i0"}, {2, 2});
    for (int i = 0; i < 4; ++i)
        t.data[static_cast<std::size_t>(i)] = {static_cast<float>(m[static_cast<std::size_t>(i)].real()),
                                               static_cast<float>(m[static_cast<std::size_t>(i)].imag())};
    return t;
}

std::vector<std::pair<int, int>> cz_pattern(int rows, int cols, int layer_index) {
    // eight staggered pairings, alternating horizontal and vertical:
    // H0 V0 H1 V1 H2 V2 H3 V3
    const int p = layer_index % 8;
    const bool horizontal = (p % 2 == 0);
    const int phase = p / 2;
    std::vector<std::pair<int, int>> pairs;
    if (horizontal) {
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c + 1 < cols; ++c)
                if ((c + 2 * (r % 2)) % 4 == phase)
                    pairs.emplace_back(r * cols + c, r * cols + c + 1);
    } else {
        for (int r = 0; r + 1 < rows; ++r)
            for (int c = 0; c < cols; ++c)
                if ((r + 2 * (c % 2)) % 4 == phase)
                    pairs.emplace_back(r * cols + c, (r + 1) * cols + c);
    }
    return pairs;
}

Circuit rqc_rectangular(int rows, int cols, int mid_depth, std::uint64_t seed) {
    if (rows < 1 || cols < 1 || mid_depth < 0)
        throw ShapeMismatch("invalid lattice parameters");
    const int n = rows * cols;
    Circuit c;
    c.n_qubits = n;
    Rng rng(seed);

    std::vector<Gate> h_layer;
    for (int q = 0; q < n; ++q) h_layer.push_back({GateKind::h, {q}});
    c.layers.push_back(h_layer);

    const GateKind singles[3] = {GateKind::t, GateKind::sqrt_x, GateKind::sqrt_y};
    std::vector<int> last_single(static_cast<std::size_t>(n), -1);
    for (int d = 0; d < mid_depth; ++d) {
        std::vector<Gate> layer;
        std::vector<bool> in_cz(static_cast<std::size_t>(n), false);
        for (const auto& [a, b] : cz_pattern(rows, cols, d)) {
            layer.push_back({GateKind::cz, {a, b}});
            in_cz[static_cast<std::size_t>(a)] = in_cz[static_cast<std::size_t>(b)] = true;
        }
        for (int q = 0; q < n; ++q) {
            if (in_cz[static_cast<std::size_t>(q)]) continue;
            // no immediate repetition of the same single-qubit gate
            std::vector<int> allowed;
            for (int g = 0; g < 3; ++g)
                if (g != last_single[static_cast<std::size_t>(q)]) allowed.push_back(g);
            const int pick = allowed[rng.next_below(allowed.size())];
            last_single[static_cast<std::size_t>(q)] = pick;
            layer.push_back({singles[pick], {q}});
        }
        c.layers.push_back(std::move(layer));
    }

    c.layers.push_back(h_layer);
    return c;
}

TensorNetwork circuit_to_network(const Circuit& c, const Bitstring& x) {
    validate_circuit(c);
    if (static_cast<int>(x.size()) != c.n_qubits)
        throw ShapeMismatch("bitstring length does not match circuit");

    TensorNetwork net;
    std::vector<int> step(static_cast<std::size_t>(c.n_qubits), 0);

    for (int q = 0; q < c.n_qubits; ++q) {
        TensorC32 init({wire(q, 0)}, {2});
        init.data[0] = {1.0f, 0.0f};
        init.data[1] = {0.0f, 0.0f};
        net.nodes.push_back(std::move(init));
    }

    for (const auto& layer : c.layers) {
        for (const auto& g : layer) {
            TensorC32 t = gate_tensor(g);
            if (g.kind == GateKind::cz) {
                const int a = g.qubits[0], b = g.qubits[1];
                t.labels = {wire(a, step[a] + 1), wire(b, step[b] + 1), wire(a, step[a]),
                            wire(b, step[b])};
                ++step[a];
                ++step[b];
            } else {
                const int q = g.qubits[0];
                t.labels = {wire(q, step[q] + 1), wire(q, step[q])};
                ++step[q];
            }
            net.nodes.push_back(std::move(t));
        }
    }

    for (int q = 0; q < c.n_qubits; ++q) {
        TensorC32 sel({wire(q, step[q])}, {2});
        sel.data[x[q] ? 1 : 0] = {1.0f, 0.0f};
        sel.data[x[q] ? 0 : 1] = {0.0f, 0.0f};
        net.nodes.push_back(std::move(sel));
    }
    return net;
}

std::complex<float> amplitude(const Circuit& c, const Bitstring& x, const DispatchConfig& config,
                              DecisionLog* log) {
    const TensorNetwork net = circuit_to_network(c, x);
    const ContractionPath path = greedy_path(net);
    const TensorC32 result = contract_network(net, path, config, log);
    return result.data[0];
}

std::complex<float> amplitude(const Circuit& c, const Bitstring& x, const SelectionPolicy& policy,
                              DecisionLog* log) {
    return amplitude(c, x, DispatchConfig{policy, TilingConfig{}, std::nullopt}, log);
}

std::vector<cd> statevector_oracle(const Circuit& c) {
    validate_circuit(c);
    if (c.n_qubits > 24) throw TooManyQubits("state-vector oracle limited to 24 qubits");
    const std::size_t dim = std::size_t{1} << c.n_qubits;
    std::vector<cd> state(dim);
    state[0] = 1.0;

    for (const auto& layer : c.layers) {
        for (const auto& g : layer) {
            if (g.kind == GateKind::cz) {
                const std::size_t ma = std::size_t{1} << g.qubits[0];
                const std::size_t mb = std::size_t{1} << g.qubits[1];
                for (std::size_t i = 0; i < dim; ++i)
                    if ((i & ma) && (i & mb)) state[i] = -state[i];
                continue;
            }
            const auto u = gate_matrix_f64(g.kind);
            const std::size_t mq = std::size_t{1} << g.qubits[0];
            for (std::size_t i = 0; i < dim; ++i) {
                if (i & mq) continue;
                const cd a0 = state[i];
                const cd a1 = state[i | mq];
                state[i] = u[0] * a0 + u[1] * a1;
                state[i | mq] = u[2] * a0 + u[3] * a1;
            }
        }
    }
    return state;
}

std::complex<double> amplitude_oracle(const Circuit& c, const Bitstring& x) {
    if (static_cast<int>(x.size()) != c.n_qubits)
        throw ShapeMismatch("bitstring length does not match circuit");
    const auto state = statevector_oracle(c);
    std::size_t idx = 0;
    for (int q = 0; q < c.n_qubits; ++q)
        if (x[static_cast<std::size_t>(q)]) idx |= std::size_t{1} << q;
    return state[idx];
}

void save_circuit(std::ostream& os, const Circuit& c) {
    os << "qubits " << c.n_qubits << "\n";
    for (const auto& layer : c.layers) {
        os << "layer\n";
        for (const auto& g : layer) {
            os << to_string(g.kind);
            for (const int q : g.qubits) os << " " << q;
            os << "\n";
        }
        os << "endlayer\n";
    }
}

Circuit load_circuit(std::istream& is) {
    Circuit c;
    std::string line;
    bool in_layer = false;
    while (std::getline(is, line)) {
        std::stringstream ss(line);
        std::string tok;
        if (!(ss >> tok)) continue;
        if (tok == "qubits") {
            ss >> c.n_qubits;
        } else if (tok == "layer") {
            c.layers.emplace_back();
            in_layer = true;
        } else if (tok == "endlayer") {
            in_layer = false;
        } else {
            if (!in_layer) throw ShapeMismatch("gate outside layer block");
            Gate g;
            if (tok == "H") g.kind = GateKind::h;
            else if (tok == "T") g.kind = GateKind::t;
            else if (tok == "SX") g.kind = GateKind::sqrt_x;
            else if (tok == "SY") g.kind = GateKind::sqrt_y;
            else if (tok == "CZ") g.kind = GateKind::cz;
            else throw ShapeMismatch("unknown gate: " + tok);
            int q;
            while (ss >> q) g.qubits.push_back(q);
            c.layers.back().push_back(std::move(g));
        }
    }
    validate_circuit(c);
    return c;
}

} // namespace mpsgemm
