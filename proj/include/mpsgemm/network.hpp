#pragma once

#include <iosfwd>
#include <utility>

#include "mpsgemm/precsel.hpp"
#include "mpsgemm/tensor.hpp"

namespace mpsgemm {

// Nodes with shared labels form the network edges; a label may appear in at
// most two nodes (open labels appear once).
struct TensorNetwork {
    std::vector<TensorC32> nodes;
};

void validate_network(const TensorNetwork& net);

// Ordered pairwise contractions. Node ids are assigned SSA style: the inputs
// are 0..n-1 and the result of step s gets id n+s.
struct ContractionPath {
    std::vector<std::pair<int, int>> steps;
};

// TTGT contraction of one pair: permute A to (free_A | shared) and B to
// (shared | free_B), reshape to matrices, run the dispatched CGEMM, and
// reinterpret the product as the (free_A | free_B) tensor. Zero shared labels
// degenerate to an outer product with inner extent 1.
TensorC32 contract_pair(const TensorC32& a, const TensorC32& b, const DispatchConfig& config,
                        DecisionLog* log = nullptr);
TensorC32 contract_pair(const TensorC32& a, const TensorC32& b, const SelectionPolicy& policy,
                        DecisionLog* log = nullptr);

// Same contraction with all arithmetic in f64 (reference pipeline).
TensorC64 contract_pair_oracle(const TensorC64& a, const TensorC64& b);

TensorC32 contract_network(const TensorNetwork& net, const ContractionPath& path,
                           const DispatchConfig& config, DecisionLog* log = nullptr);
TensorC64 contract_network_oracle(const TensorNetwork& net, const ContractionPath& path);

// Deterministic greedy path: repeatedly contract the adjacent pair minimizing
// the resulting element count, ties broken by the lowest (id, id) pair.
ContractionPath greedy_path(const TensorNetwork& net);

// Random closed network generation for the selection experiments.
enum class RandtnInit { type1 = 1, type2 = 2, type3 = 3 };

struct RandomNetworkParams {
    int n_nodes = 10;
    int min_degree = 2;
    int max_degree = 4;
    std::int64_t dim = 32;
    RandtnInit init = RandtnInit::type1;
};

// Seed-deterministic topology and element values. Candidate multigraphs are
// redrawn until connected, self-loop free, and such that the greedy path both
// stays within rank-4 intermediates and contains at least one contraction
// whose reshaped GEMM has min(m,n,k) >= dim^2 (the statistics-gated regime at
// experiment scale).
TensorNetwork random_network(const RandomNetworkParams& params, std::uint64_t seed);

// Text serialization for test fixtures: per node a header line
//   node <id> labels l1,l2,... dims d1,d2,...
// followed by whitespace-separated "re im" pairs ("-" for a rank-0 node).
void save_network(std::ostream& os, const TensorNetwork& net);
TensorNetwork load_network(std::istream& is);

} // namespace mpsgemm
