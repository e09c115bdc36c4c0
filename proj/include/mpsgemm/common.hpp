#pragma once

#include <stdexcept>
#include <string>

namespace mpsgemm {

// GEMM / matrix errors
struct ShapeMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ZeroReference : std::domain_error {
    using std::domain_error::domain_error;
};

// Precision-selection errors
struct ScaleOverflow : std::range_error {
    using std::range_error::range_error;
};

// Tensor / network errors
struct InvalidPermutation : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ExtentMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct InvalidPath : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DisconnectedNetwork : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct InfeasibleDegrees : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Quantum-circuit errors
struct TooManyQubits : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

} // namespace mpsgemm
