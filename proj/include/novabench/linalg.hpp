// Small dense linear algebra used across the toolkit: a row-major matrix,
// Cholesky factorization for Gaussian densities and GP posteriors, and a
// cyclic Jacobi eigensolver for the symmetric covariance problems (the
// matrices here are at most a few hundred square).

#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace novabench {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    bool operator==(const Matrix& other) const = default;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline std::vector<double> column_means(const Matrix& m) {
    std::vector<double> means(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const auto r = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) means[j] += r[j];
    }
    for (double& v : means) v /= static_cast<double>(m.rows);
    return means;
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
/// Throws std::runtime_error when the matrix is not positive definite.
inline Matrix cholesky(const Matrix& a) {
    if (a.rows != a.cols) throw std::invalid_argument("cholesky: matrix not square");
    const std::size_t n = a.rows;
    Matrix l(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s)) {
                    throw std::runtime_error("cholesky: matrix is not positive definite");
                }
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

/// Solve L y = b with L lower triangular.
inline std::vector<double> forward_solve(const Matrix& l, std::span<const double> b) {
    const std::size_t n = l.rows;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    return y;
}

/// Solve L^T x = y with L lower triangular.
inline std::vector<double> backward_solve(const Matrix& l, std::span<const double> y) {
    const std::size_t n = l.rows;
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = y[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
        x[i] = s / l(i, i);
    }
    return x;
}

/// Solve A x = b given the Cholesky factor L of A.
inline std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b) {
    return backward_solve(l, forward_solve(l, b));
}

inline double cholesky_logdet(const Matrix& l) {
    double s = 0.0;
    for (std::size_t i = 0; i < l.rows; ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

struct EigenDecomposition {
    std::vector<double> values;  // descending
    Matrix vectors;              // row i is the eigenvector of values[i]
};

/// Cyclic Jacobi eigensolver for symmetric matrices. Deterministic sweep
/// order, eigenpairs sorted by descending eigenvalue, eigenvector signs fixed
/// so the entry of largest magnitude is positive.
inline EigenDecomposition jacobi_eigen(Matrix a) {
    if (a.rows != a.cols) throw std::invalid_argument("jacobi_eigen: matrix not square");
    const std::size_t n = a.rows;
    Matrix v(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
    const double tol = (scale > 0.0 ? scale : 1.0) * 1e-14;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off = std::max(off, std::abs(a(i, j)));
        if (off <= tol) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= tol * 1e-2) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(p, k), vkq = v(q, k);
                    v(p, k) = c * vkp - s * vkq;
                    v(q, k) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t src = order[r];
        out.values[r] = a(src, src);
        std::size_t argmax = 0;
        for (std::size_t k = 1; k < n; ++k)
            if (std::abs(v(src, k)) > std::abs(v(src, argmax))) argmax = k;
        const double sign = v(src, argmax) < 0.0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < n; ++k) out.vectors(r, k) = sign * v(src, k);
    }
    return out;
}

}  // namespace novabench
