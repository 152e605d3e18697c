#pragma once

#include <cstddef>
#include <vector>

namespace fedsim {

// Row-major dense matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }
};

// OpenMP kernels. Every output row is owned by exactly one thread and the
// per-element accumulation order is fixed, so results are bit-identical for
// any thread count (and to the serial reference below).

// C = A * B^T, A: [n x k], B: [m x k] -> C: [n x m]
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// C = A^T * B, A: [n x k], B: [n x m] -> C: [k x m]
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// C = A * B, A: [n x k], B: [k x m] -> C: [n x m]
Matrix matmul_nn(const Matrix& a, const Matrix& b);

// Serial reference kernels, kept for tests and the benchmark target.
namespace ref {
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nn(const Matrix& a, const Matrix& b);
} // namespace ref

} // namespace fedsim
