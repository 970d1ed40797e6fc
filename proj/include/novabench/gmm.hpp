// Gaussian mixture novelty detector: full-covariance EM with k-means++
// initialization, diagonal regularization, BIC model-order selection, and the
// negative log-likelihood as novelty metric (higher = more novel).

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "novabench/kmeans.hpp"
#include "novabench/linalg.hpp"
#include "novabench/rng.hpp"

namespace novabench {

struct GMMModel {
    std::vector<double> weights;   // sum to 1
    Matrix means;                  // K x d
    std::vector<Matrix> covariances;
    std::vector<Matrix> cov_cholesky;  // cached factors of the covariances
    std::vector<double> loglik_trace;  // per-EM-iteration mean log-likelihood
    double bic = 0.0;

    std::size_t components() const { return weights.size(); }
    std::size_t dim() const { return means.cols; }

    void refresh_cholesky() {
        cov_cholesky.clear();
        for (const auto& c : covariances) {
            try {
                cov_cholesky.push_back(cholesky(c));
            } catch (const std::runtime_error&) {
                throw std::runtime_error("gmm: covariance singular after regularization");
            }
        }
    }
};

struct GMMConfig {
    std::size_t k_min = 1;
    std::size_t k_max = 5;
    std::size_t max_iterations = 200;
    double tolerance = 1e-7;       // relative mean log-likelihood change
    double regularization = 1e-6;  // added to covariance diagonals
};

namespace detail {

inline double log_gaussian(const Matrix& chol, std::span<const double> centered) {
    const auto y = forward_solve(chol, centered);
    double quad = 0.0;
    for (double v : y) quad += v * v;
    const double d = static_cast<double>(centered.size());
    return -0.5 * (d * std::log(2.0 * 3.14159265358979323846) + cholesky_logdet(chol) + quad);
}

/// log sum_k exp(terms[k]) computed stably.
inline double log_sum_exp(std::span<const double> terms) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double t : terms) mx = std::max(mx, t);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    return mx + std::log(s);
}

struct GMMFit {
    GMMModel model;
    double mean_loglik = 0.0;
};

inline GMMFit fit_gmm_k(const Matrix& x, std::size_t k, const GMMConfig& config, std::uint64_t seed) {
    const std::size_t n = x.rows;
    const std::size_t d = x.cols;

    GMMModel m;
    m.weights.assign(k, 1.0 / static_cast<double>(k));
    m.means = Matrix(k, d);
    m.covariances.assign(k, Matrix(d, d));

    // Hard k-means++ assignment seeds the responsibilities.
    Rng rng(mix_seed(seed, k));
    const auto seeds = kmeanspp_seed(x, k, rng);
    Matrix resp(n, k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            const double dist = squared_distance(x.row(i), x.row(seeds[c]));
            if (dist < best_d) {
                best_d = dist;
                best = c;
            }
        }
        resp(i, best) = 1.0;
    }

    std::vector<double> terms(k);
    double prev_loglik = -std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0;; ++iter) {
        // M step from the current responsibilities.
        for (std::size_t c = 0; c < k; ++c) {
            double nk = 0.0;
            auto mean = m.means.row(c);
            std::fill(mean.begin(), mean.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double r = resp(i, c);
                nk += r;
                const auto xi = x.row(i);
                for (std::size_t j = 0; j < d; ++j) mean[j] += r * xi[j];
            }
            nk = std::max(nk, 1e-300);
            for (std::size_t j = 0; j < d; ++j) mean[j] /= nk;

            Matrix& cov = m.covariances[c];
            std::fill(cov.data.begin(), cov.data.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double r = resp(i, c);
                if (r == 0.0) continue;
                const auto xi = x.row(i);
                for (std::size_t a = 0; a < d; ++a) {
                    const double da = xi[a] - mean[a];
                    for (std::size_t b = a; b < d; ++b) {
                        cov(a, b) += r * da * (xi[b] - mean[b]);
                    }
                }
            }
            for (std::size_t a = 0; a < d; ++a) {
                for (std::size_t b = a; b < d; ++b) {
                    cov(a, b) /= nk;
                    cov(b, a) = cov(a, b);
                }
                cov(a, a) += config.regularization;
            }
            m.weights[c] = nk / static_cast<double>(n);
        }
        m.refresh_cholesky();

        // E step, accumulating the mean log-likelihood as we go.
        double loglik = 0.0;
        std::vector<double> centered(d);
        for (std::size_t i = 0; i < n; ++i) {
            const auto xi = x.row(i);
            for (std::size_t c = 0; c < k; ++c) {
                const auto mean = m.means.row(c);
                for (std::size_t j = 0; j < d; ++j) centered[j] = xi[j] - mean[j];
                terms[c] = std::log(std::max(m.weights[c], 1e-300)) +
                           log_gaussian(m.cov_cholesky[c], centered);
            }
            const double lse = log_sum_exp(terms);
            loglik += lse;
            for (std::size_t c = 0; c < k; ++c) resp(i, c) = std::exp(terms[c] - lse);
        }
        loglik /= static_cast<double>(n);
        m.loglik_trace.push_back(loglik);

        const bool converged =
            std::abs(loglik - prev_loglik) <= config.tolerance * std::max(1.0, std::abs(loglik));
        prev_loglik = loglik;
        if (converged || iter + 1 >= config.max_iterations) break;
    }

    const double df = static_cast<double>(k - 1 + k * d + k * d * (d + 1) / 2);
    GMMFit fit;
    fit.mean_loglik = prev_loglik;
    m.bic = -2.0 * prev_loglik * static_cast<double>(n) + df * std::log(static_cast<double>(n));
    fit.model = std::move(m);
    return fit;
}

}  // namespace detail

/// Fit for each candidate component count and keep the BIC minimizer.
inline GMMModel fit_gmm(const Matrix& x, const GMMConfig& config, std::uint64_t seed) {
    if (config.k_min < 1 || config.k_min > config.k_max) {
        throw std::invalid_argument("fit_gmm: invalid component range");
    }
    if (x.rows < 2 * config.k_max) {
        throw std::invalid_argument("fit_gmm: need at least 2*k_max samples");
    }
    GMMModel best;
    double best_bic = std::numeric_limits<double>::infinity();
    for (std::size_t k = config.k_min; k <= config.k_max; ++k) {
        auto fit = detail::fit_gmm_k(x, k, config, seed);
        if (fit.model.bic < best_bic) {
            best_bic = fit.model.bic;
            best = std::move(fit.model);
        }
    }
    return best;
}

/// NM = -log p(v) under the mixture. Densities are evaluated through
/// log-sum-exp, so deep tails yield large finite values rather than overflow.
inline double nm_gmm(const GMMModel& m, std::span<const double> v) {
    if (v.size() != m.dim()) throw std::invalid_argument("nm_gmm: dimension mismatch");
    std::vector<double> terms(m.components());
    std::vector<double> centered(v.size());
    for (std::size_t c = 0; c < m.components(); ++c) {
        const auto mean = m.means.row(c);
        for (std::size_t j = 0; j < v.size(); ++j) centered[j] = v[j] - mean[j];
        terms[c] = std::log(std::max(m.weights[c], 1e-300)) +
                   detail::log_gaussian(m.cov_cholesky[c], centered);
    }
    return -detail::log_sum_exp(terms);
}

}  // namespace novabench
