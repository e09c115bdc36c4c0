#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "mpsgemm/common.hpp"

namespace mpsgemm {

template <typename T>
struct Matrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<T> data; // dense, row-major

    Matrix() = default;
    Matrix(std::int64_t r, std::int64_t c) : rows(r), cols(c), data(static_cast<std::size_t>(r * c)) {}
    Matrix(std::int64_t r, std::int64_t c, std::vector<T> d) : rows(r), cols(c), data(std::move(d)) {
        if (static_cast<std::int64_t>(data.size()) != r * c)
            throw ShapeMismatch("matrix data length does not match rows*cols");
    }

    T& operator()(std::int64_t i, std::int64_t j) { return data[i * cols + j]; }
    const T& operator()(std::int64_t i, std::int64_t j) const { return data[i * cols + j]; }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

using MatrixF32 = Matrix<float>;
using MatrixF64 = Matrix<double>;
using MatrixC32 = Matrix<std::complex<float>>;
using MatrixC64 = Matrix<std::complex<double>>;

template <typename T>
Matrix<T> identity_matrix(std::int64_t n) {
    Matrix<T> m(n, n);
    for (std::int64_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
}

} // namespace mpsgemm
