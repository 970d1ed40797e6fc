// One-class SVM (nu-SVM) with RBF kernel. The dual
//
//   min 1/2 sum_ij alpha_i alpha_j k(x_i, x_j)
//   s.t. 0 <= alpha_i <= 1/(nu*n),  sum alpha_i = 1
//
// is solved by most-violating-pair coordinate updates, a deterministic
// SMO-style scheme. The novelty metric is the signed distance from the
// separating hyperplane, -f(v)/||w||, oriented so that novel samples score
// positive.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "novabench/linalg.hpp"

namespace novabench {

struct OCSVMModel {
    Matrix support_vectors;        // training points with alpha > 0
    std::vector<double> alphas;    // matching dual coefficients
    double rho = 0.0;
    double gamma = 0.0;
    double nu = 0.05;
    double w_norm = 0.0;  // ||w|| in the kernel feature space

    std::size_t dim() const { return support_vectors.cols; }
};

struct OCSVMConfig {
    double nu = 0.05;
    double gamma = 0.0;  // 0 = auto: 1 / (dim * mean feature variance)
    double kkt_tolerance = 1e-4;
    std::size_t max_passes = 100000;
};

namespace detail {

inline double rbf(double gamma, std::span<const double> a, std::span<const double> b) {
    return std::exp(-gamma * squared_distance(a, b));
}

}  // namespace detail

inline double ocsvm_auto_gamma(const Matrix& x) {
    const auto means = column_means(x);
    double total_var = 0.0;
    for (std::size_t j = 0; j < x.cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double d = x(i, j) - means[j];
            s += d * d;
        }
        total_var += s / static_cast<double>(x.rows);
    }
    const double mean_var = total_var / static_cast<double>(x.cols);
    if (!(mean_var > 0.0)) {
        throw std::invalid_argument("ocsvm: features have zero variance, gamma heuristic undefined");
    }
    return 1.0 / (static_cast<double>(x.cols) * mean_var);
}

/// The seed parameter is accepted for interface uniformity; the
/// most-violating-pair solver is deterministic and does not consume it.
inline OCSVMModel fit_ocsvm(const Matrix& x, const OCSVMConfig& config, std::uint64_t /*seed*/ = 0) {
    const std::size_t n = x.rows;
    if (n < 2) throw std::invalid_argument("fit_ocsvm: need at least 2 samples");
    if (!(config.nu > 0.0 && config.nu <= 1.0)) throw std::invalid_argument("fit_ocsvm: nu must be in (0,1]");

    const double gamma = config.gamma > 0.0 ? config.gamma : ocsvm_auto_gamma(x);
    const double c = 1.0 / (config.nu * static_cast<double>(n));

    Matrix kernel(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            kernel(i, j) = detail::rbf(gamma, x.row(i), x.row(j));
            kernel(j, i) = kernel(i, j);
        }
    }

    // Feasible start: spread the unit mass uniformly.
    std::vector<double> alpha(n, 1.0 / static_cast<double>(n));
    std::vector<double> grad(n, 0.0);  // (K alpha)_i
    for (std::size_t i = 0; i < n; ++i) {
        grad[i] = dot(kernel.row(i), alpha);
    }

    std::size_t pass = 0;
    while (true) {
        // KKT: every alpha_i < C should satisfy grad_i >= rho, every
        // alpha_i > 0 should satisfy grad_i <= rho. Pick the pair that
        // violates this the most.
        std::size_t up = n, down = n;
        double up_val = std::numeric_limits<double>::infinity();
        double down_val = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (alpha[i] < c && grad[i] < up_val) {
                up_val = grad[i];
                up = i;
            }
            if (alpha[i] > 0.0 && grad[i] > down_val) {
                down_val = grad[i];
                down = i;
            }
        }
        if (up == n || down == n || down_val - up_val <= config.kkt_tolerance) break;
        if (++pass > config.max_passes) {
            throw std::runtime_error("ocsvm: SMO did not converge, KKT residual " +
                                     std::to_string(down_val - up_val));
        }

        // Move mass from `down` to `up` along the equality constraint.
        const double curvature =
            std::max(kernel(up, up) + kernel(down, down) - 2.0 * kernel(up, down), 1e-12);
        double step = (down_val - up_val) / curvature;
        step = std::min(step, c - alpha[up]);
        step = std::min(step, alpha[down]);
        alpha[up] += step;
        alpha[down] -= step;
        for (std::size_t i = 0; i < n; ++i) {
            grad[i] += step * (kernel(i, up) - kernel(i, down));
        }
    }

    // rho from the unbounded support vectors (fall back to the full support).
    double rho_sum = 0.0;
    std::size_t rho_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 1e-12 && alpha[i] < c - 1e-12) {
            rho_sum += grad[i];
            ++rho_count;
        }
    }
    if (rho_count == 0) {
        for (std::size_t i = 0; i < n; ++i) {
            if (alpha[i] > 1e-12) {
                rho_sum += grad[i];
                ++rho_count;
            }
        }
    }
    const double rho = rho_sum / static_cast<double>(rho_count);

    double w2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) w2 += alpha[i] * grad[i];

    OCSVMModel m;
    m.nu = config.nu;
    m.gamma = gamma;
    m.rho = rho;
    m.w_norm = std::sqrt(std::max(w2, 1e-300));
    std::size_t sv_count = 0;
    for (double a : alpha) sv_count += a > 1e-12;
    m.support_vectors = Matrix(sv_count, x.cols);
    m.alphas.reserve(sv_count);
    std::size_t r = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 1e-12) {
            std::copy(x.row(i).begin(), x.row(i).end(), m.support_vectors.row(r).begin());
            m.alphas.push_back(alpha[i]);
            ++r;
        }
    }
    return m;
}

/// Decision value f(v) = sum_i alpha_i k(x_i, v) - rho.
inline double ocsvm_decision(const OCSVMModel& m, std::span<const double> v) {
    if (v.size() != m.dim()) throw std::invalid_argument("ocsvm_decision: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < m.support_vectors.rows; ++i) {
        s += m.alphas[i] * detail::rbf(m.gamma, m.support_vectors.row(i), v);
    }
    return s - m.rho;
}

/// NM = -f(v)/||w||: the signed margin distance, positive on the novel side.
inline double nm_ocsvm(const OCSVMModel& m, std::span<const double> v) {
    return -ocsvm_decision(m, v) / m.w_norm;
}

/// Value of the dual objective 1/2 a^T K a for a fitted model, used by tests.
inline double ocsvm_dual_objective(const OCSVMModel& m) {
    return 0.5 * m.w_norm * m.w_norm;
}

}  // namespace novabench
