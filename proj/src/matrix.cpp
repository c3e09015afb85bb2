#include "sbnet/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sbnet/error.hpp"

namespace sbnet {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw DimensionError("matmul: shape mismatch (" + std::to_string(a.rows) +
                             "x" + std::to_string(a.cols) + ") * (" +
                             std::to_string(b.rows) + "x" + std::to_string(b.cols) +
                             ")");
    }
    Matrix out(a.rows, b.cols);
    // ikj order keeps the inner loop contiguous in b and out.
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.data.data() + k * b.cols;
            double* orow = out.data.data() + i * out.cols;
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
    return out;
}

double dot(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw DimensionError("dot: length mismatch " + std::to_string(u.size()) +
                             " vs " + std::to_string(v.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double cosine(std::span<const double> u, std::span<const double> v) {
    const double nu = l2_norm(u);
    const double nv = l2_norm(v);
    if (nu < kNormEps || nv < kNormEps)
        throw DegenerateVectorError("cosine: zero-norm input vector");
    const double c = dot(u, v) / (nu * nv);
    return std::clamp(c, -1.0, 1.0);
}

Matrix row_l2_normalize(const Matrix& m) {
    Matrix out = m;
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double n = l2_norm(m.row(i));
        if (n < kNormEps)
            throw DegenerateVectorError("row_l2_normalize: degenerate row " +
                                        std::to_string(i));
        for (std::size_t j = 0; j < m.cols; ++j) out(i, j) = m(i, j) / n;
    }
    return out;
}

std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& at, double eps) {
    if (eps <= 0.0) throw ConfigError("finite_diff_grad: eps must be positive");
    std::vector<double> grad(at.size());
    std::vector<double> x = at;
    for (std::size_t i = 0; i < at.size(); ++i) {
        x[i] = at[i] + eps;
        const double fp = f(x);
        x[i] = at[i] - eps;
        const double fm = f(x);
        x[i] = at[i];
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw Error("finite_diff_grad: non-finite function value at coordinate " +
                        std::to_string(i));
        grad[i] = (fp - fm) / (2.0 * eps);
    }
    return grad;
}

Matrix gaussian(Rng& rng, std::size_t rows, std::size_t cols, double mean,
                double stddev) {
    if (stddev < 0.0) throw ConfigError("gaussian: stddev must be >= 0");
    Matrix m(rows, cols);
    for (double& x : m.data) x = rng.normal(mean, stddev);
    return m;
}

void check_finite(std::span<const double> v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]))
            throw Error(std::string(what) + ": non-finite entry at index " +
                        std::to_string(i));
    }
}

void check_finite(const Matrix& m, const char* what) { check_finite(m.data, what); }

}  // namespace sbnet
