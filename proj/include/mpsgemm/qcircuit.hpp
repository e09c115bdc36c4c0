#pragma once

#include <iosfwd>

#include "mpsgemm/network.hpp"

namespace mpsgemm {

enum class GateKind { h, t, sqrt_x, sqrt_y, cz };

const char* to_string(GateKind kind);

struct Gate {
    GateKind kind;
    std::vector<int> qubits; // 1 entry for single-qubit kinds, 2 for cz
};

// Layers hold gates acting on disjoint qubits; depth is the layer count.
struct Circuit {
    int n_qubits = 0;
    std::vector<std::vector<Gate>> layers;
};

void validate_circuit(const Circuit& c);

using Bitstring = std::vector<std::uint8_t>;

// Defining unitary in f64 (row-major, dimension 2 or 4).
std::vector<std::complex<double>> gate_matrix_f64(GateKind kind);

// Gate as a labeled tensor: indices (out..., in...) with placeholder labels
// "o0","o1","i0","i1"; callers relabel onto circuit wires.
TensorC32 gate_tensor(const Gate& g);

// Rectangular-lattice random circuit: a Hadamard layer, mid_depth CZ-pattern
// layers cycling through 8 staggered horizontal/vertical pairings (qubits not
// covered by a CZ draw from {T, sqrtX, sqrtY}, never repeating the previous
// single-qubit gate on that qubit), and a closing Hadamard layer. Qubit
// indices are row-major over the lattice.
Circuit rqc_rectangular(int rows, int cols, int mid_depth, std::uint64_t seed);

// CZ pairs of the given mid-layer index on a rows x cols lattice.
std::vector<std::pair<int, int>> cz_pattern(int rows, int cols, int layer_index);

// Tensor network of <x|C|0...0>: rank-1 initial states, one tensor per gate,
// rank-1 selectors for x, wires labeled along each qubit timeline.
TensorNetwork circuit_to_network(const Circuit& c, const Bitstring& x);

std::complex<float> amplitude(const Circuit& c, const Bitstring& x, const DispatchConfig& config,
                              DecisionLog* log = nullptr);
std::complex<float> amplitude(const Circuit& c, const Bitstring& x, const SelectionPolicy& policy,
                              DecisionLog* log = nullptr);

// Full state-vector simulation in f64; qubit q maps to bit q of the state
// index. Limited to 24 qubits.
std::vector<std::complex<double>> statevector_oracle(const Circuit& c);
std::complex<double> amplitude_oracle(const Circuit& c, const Bitstring& x);

// Text format: "layer" ... "endlayer" blocks with one gate per line
// (H q | T q | SX q | SY q | CZ q1 q2).
void save_circuit(std::ostream& os, const Circuit& c);
Circuit load_circuit(std::istream& is);

} // namespace mpsgemm
