#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "sbnet/rng.hpp"

namespace sbnet {

// Row-major dense matrix of doubles. All arithmetic in the repo is 64-bit.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const {
        return {data.data() + i * cols, cols};
    }

    static Matrix identity(std::size_t n);

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// Norm threshold below which a vector counts as degenerate.
inline constexpr double kNormEps = 1e-12;

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

double dot(std::span<const double> u, std::span<const double> v);
double l2_norm(std::span<const double> v);

// Cosine similarity, clamped to [-1, 1]. Throws DegenerateVectorError on a
// zero-norm input; never silently returns 0.
double cosine(std::span<const double> u, std::span<const double> v);

// Each row divided by its L2 norm. Throws DegenerateVectorError naming the
// row index when a row norm falls below kNormEps.
Matrix row_l2_normalize(const Matrix& m);

// Central differences (f(x+eps e_i) - f(x-eps e_i)) / (2 eps). This is the
// oracle every analytic gradient in the repo is checked against.
std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& at, double eps);

// i.i.d. normal draws, deterministic for a fixed Rng state.
Matrix gaussian(Rng& rng, std::size_t rows, std::size_t cols, double mean,
                double stddev);

// Throws Error if any entry of m is NaN or Inf; `what` names the tensor.
void check_finite(const Matrix& m, const char* what);
void check_finite(std::span<const double> v, const char* what);

}  // namespace sbnet
