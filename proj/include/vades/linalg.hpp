#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "vades/common.hpp"

namespace vades {

// Dense row-major matrix of doubles. Deliberately minimal: the model code
// writes its own loops, this just owns storage and gives row views.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {a.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {a.data() + i * cols, cols}; }

    double* data() { return a.data(); }
    const double* data() const { return a.data(); }
    std::size_t size() const { return a.size(); }

    void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

inline double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double squared_distance(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

inline double norm2(std::span<const double> x) {
    return std::sqrt(dot(x, x));
}

// Solves (A)X = B for symmetric positive definite A via Cholesky.
// A is overwritten with its factor; B is overwritten with the solution.
inline void cholesky_solve_inplace(Mat& A, Mat& B) {
    const std::size_t n = A.rows;
    if (A.cols != n || B.rows != n) {
        throw error("cholesky_solve: shape mismatch");
    }
    for (std::size_t j = 0; j < n; ++j) {
        double d = A(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= A(j, k) * A(j, k);
        if (d <= 0.0) {
            throw error("cholesky_solve: matrix not positive definite");
        }
        const double ljj = std::sqrt(d);
        A(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = A(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= A(i, k) * A(j, k);
            A(i, j) = s / ljj;
        }
    }
    // forward then backward substitution, per right-hand side column
    for (std::size_t c = 0; c < B.cols; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = B(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= A(i, k) * B(k, c);
            B(i, c) = s / A(i, i);
        }
        for (std::size_t ii = n; ii > 0; --ii) {
            const std::size_t i = ii - 1;
            double s = B(i, c);
            for (std::size_t k = i + 1; k < n; ++k) s -= A(k, i) * B(k, c);
            B(i, c) = s / A(i, i);
        }
    }
}

} // namespace vades
