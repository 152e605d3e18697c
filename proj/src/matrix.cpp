#include "fedsim/matrix.hpp"

#include <cassert>
#include <cstdint>

namespace fedsim {

namespace {
// Small products skip the parallel region; team startup costs more than the
// multiply below roughly a million scalar ops.
constexpr std::size_t kParallelMinOps = 1u << 20;
} // namespace

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    assert(a.cols == b.cols);
    Matrix c(a.rows, b.rows);
#pragma omp parallel for schedule(static) if (a.rows * b.rows * a.cols >= kParallelMinOps)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(a.rows); ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* bj = b.row(j);
            double acc = 0.0;
            for (std::size_t t = 0; t < a.cols; ++t) acc += ai[t] * bj[t];
            ci[j] = acc;
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    assert(a.rows == b.rows);
    Matrix c(a.cols, b.cols);
#pragma omp parallel for schedule(static) if (a.rows * a.cols * b.cols >= kParallelMinOps)
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(a.cols); ++p) {
        double* cp = c.row(p);
        for (std::size_t i = 0; i < a.rows; ++i) {
            const double aip = a(i, p);
            const double* bi = b.row(i);
            for (std::size_t q = 0; q < b.cols; ++q) cp[q] += aip * bi[q];
        }
    }
    return c;
}

Matrix matmul_nn(const Matrix& a, const Matrix& b) {
    assert(a.cols == b.rows);
    Matrix c(a.rows, b.cols);
#pragma omp parallel for schedule(static) if (a.rows * a.cols * b.cols >= kParallelMinOps)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(a.rows); ++i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (std::size_t t = 0; t < a.cols; ++t) {
            const double ait = ai[t];
            const double* bt = b.row(t);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += ait * bt[j];
        }
    }
    return c;
}

namespace ref {

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    assert(a.cols == b.cols);
    Matrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* bj = b.row(j);
            double acc = 0.0;
            for (std::size_t t = 0; t < a.cols; ++t) acc += ai[t] * bj[t];
            ci[j] = acc;
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    assert(a.rows == b.rows);
    Matrix c(a.cols, b.cols);
    for (std::size_t p = 0; p < a.cols; ++p) {
        double* cp = c.row(p);
        for (std::size_t i = 0; i < a.rows; ++i) {
            const double aip = a(i, p);
            const double* bi = b.row(i);
            for (std::size_t q = 0; q < b.cols; ++q) cp[q] += aip * bi[q];
        }
    }
    return c;
}

Matrix matmul_nn(const Matrix& a, const Matrix& b) {
    assert(a.cols == b.rows);
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (std::size_t t = 0; t < a.cols; ++t) {
            const double ait = ai[t];
            const double* bt = b.row(t);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += ait * bt[j];
        }
    }
    return c;
}

} // namespace ref

} // namespace fedsim
