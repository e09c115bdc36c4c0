#pragma once

#include <complex>
#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "mpsgemm/common.hpp"

namespace mpsgemm {

// Dense labeled tensor, row-major in label order. Labels are distinct within
// a tensor; a rank-0 tensor holds exactly one value.
template <typename T>
struct Tensor {
    std::vector<std::string> labels;
    std::vector<std::int64_t> dims;
    std::vector<T> data;

    Tensor() : data(1) {}
    Tensor(std::vector<std::string> l, std::vector<std::int64_t> d)
        : labels(std::move(l)), dims(std::move(d)) {
        validate_shape();
        data.assign(static_cast<std::size_t>(size()), T{});
    }
    Tensor(std::vector<std::string> l, std::vector<std::int64_t> d, std::vector<T> v)
        : labels(std::move(l)), dims(std::move(d)), data(std::move(v)) {
        validate_shape();
        if (static_cast<std::int64_t>(data.size()) != size())
            throw ShapeMismatch("tensor data length does not match dims");
    }

    int rank() const { return static_cast<int>(dims.size()); }
    std::int64_t size() const {
        return std::accumulate(dims.begin(), dims.end(), std::int64_t{1},
                               std::multiplies<std::int64_t>());
    }

    void validate_shape() const {
        if (labels.size() != dims.size())
            throw ShapeMismatch("tensor labels and dims differ in length");
        for (const auto d : dims)
            if (d < 1) throw ShapeMismatch("tensor extents must be >= 1");
        std::unordered_set<std::string> seen(labels.begin(), labels.end());
        if (seen.size() != labels.size())
            throw ShapeMismatch("tensor labels must be distinct");
    }
};

using TensorC32 = Tensor<std::complex<float>>;
using TensorC64 = Tensor<std::complex<double>>;

// Physical transposition into the given label order.
template <typename T>
Tensor<T> permute(const Tensor<T>& t, const std::vector<std::string>& new_order) {
    const int r = t.rank();
    if (static_cast<int>(new_order.size()) != r)
        throw InvalidPermutation("permutation has wrong length");
    std::vector<int> axis_of(r); // new axis -> old axis
    std::vector<bool> used(r, false);
    for (int a = 0; a < r; ++a) {
        int found = -1;
        for (int o = 0; o < r; ++o)
            if (!used[o] && t.labels[o] == new_order[a]) {
                found = o;
                break;
            }
        if (found < 0) throw InvalidPermutation("label not in tensor: " + new_order[a]);
        used[found] = true;
        axis_of[a] = found;
    }

    std::vector<std::int64_t> old_stride(r, 1);
    for (int a = r - 2; a >= 0; --a) old_stride[a] = old_stride[a + 1] * t.dims[a + 1];

    std::vector<std::int64_t> new_dims(r), stride(r);
    for (int a = 0; a < r; ++a) {
        new_dims[a] = t.dims[axis_of[a]];
        stride[a] = old_stride[axis_of[a]];
    }

    Tensor<T> out;
    out.labels = new_order;
    out.dims = new_dims;
    out.data.resize(static_cast<std::size_t>(t.size()));

    // odometer over the output index space, tracking the input offset
    std::vector<std::int64_t> idx(r, 0);
    std::int64_t in_off = 0;
    const std::int64_t total = t.size();
    for (std::int64_t pos = 0; pos < total; ++pos) {
        out.data[pos] = t.data[in_off];
        for (int a = r - 1; a >= 0; --a) {
            if (++idx[a] < new_dims[a]) {
                in_off += stride[a];
                break;
            }
            in_off -= stride[a] * (new_dims[a] - 1);
            idx[a] = 0;
        }
    }
    return out;
}

inline TensorC64 widen(const TensorC32& t) {
    TensorC64 out;
    out.labels = t.labels;
    out.dims = t.dims;
    out.data.resize(t.data.size());
    for (std::size_t i = 0; i < t.data.size(); ++i)
        out.data[i] = {static_cast<double>(t.data[i].real()),
                       static_cast<double>(t.data[i].imag())};
    return out;
}

} // namespace mpsgemm
