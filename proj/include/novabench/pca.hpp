// Principal component analysis on the training covariance, with the target
// dimensionality given either as a component count or as a ratio of variance
// to preserve.

#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "novabench/linalg.hpp"

namespace novabench {

struct PCAModel {
    Matrix components;                // n_f x n_feat, orthonormal rows
    std::vector<double> explained_variance_ratio;  // per retained component
    std::vector<double> means;        // training column means

    std::size_t latent_dim() const { return components.rows; }
    std::size_t input_dim() const { return components.cols; }
};

/// Either an explicit component count or a variance ratio in (0, 1].
struct PCATarget {
    std::variant<std::size_t, double> value;

    static PCATarget count(std::size_t n) { return {n}; }
    static PCATarget ratio(double r) { return {r}; }
};

inline PCAModel fit_pca(const Matrix& x, PCATarget target) {
    if (x.rows < 2) throw std::invalid_argument("fit_pca: need at least 2 rows");
    const std::size_t d = x.cols;

    const auto means = column_means(x);
    Matrix cov(d, d, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const auto r = x.row(i);
        for (std::size_t a = 0; a < d; ++a) {
            const double da = r[a] - means[a];
            for (std::size_t b = a; b < d; ++b) {
                cov(a, b) += da * (r[b] - means[b]);
            }
        }
    }
    const double denom = static_cast<double>(x.rows - 1);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            cov(a, b) /= denom;
            cov(b, a) = cov(a, b);
        }

    auto eig = jacobi_eigen(cov);
    double total = 0.0;
    for (double& v : eig.values) {
        if (v < 0.0) v = 0.0;  // roundoff on rank-deficient data
        total += v;
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("fit_pca: degenerate training data, no principal directions");
    }
    // Eigenvalues below roundoff scale count as rank loss.
    const double rank_eps = eig.values[0] * 1e-12;

    std::size_t n_f = 0;
    if (std::holds_alternative<std::size_t>(target.value)) {
        n_f = std::get<std::size_t>(target.value);
        if (n_f < 1 || n_f > d) throw std::invalid_argument("fit_pca: component count out of range");
    } else {
        const double ratio = std::get<double>(target.value);
        if (!(ratio > 0.0) || ratio > 1.0) throw std::invalid_argument("fit_pca: ratio must be in (0,1]");
        double cum = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            if (eig.values[i] <= rank_eps) break;  // past the rank, nothing left to add
            cum += eig.values[i] / total;
            n_f = i + 1;
            if (cum >= ratio - 1e-12) break;
        }
        if (n_f == 0) n_f = 1;
    }

    PCAModel m;
    m.means = means;
    m.components = Matrix(n_f, d);
    m.explained_variance_ratio.resize(n_f);
    for (std::size_t i = 0; i < n_f; ++i) {
        std::copy(eig.vectors.row(i).begin(), eig.vectors.row(i).end(), m.components.row(i).begin());
        m.explained_variance_ratio[i] = eig.values[i] / total;
    }
    return m;
}

/// Project (v - means) onto the component rows.
inline std::vector<double> pca_transform(const PCAModel& m, std::span<const double> v) {
    if (v.size() != m.input_dim()) throw std::invalid_argument("pca_transform: dimension mismatch");
    std::vector<double> centered(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) centered[j] = v[j] - m.means[j];
    std::vector<double> out(m.latent_dim());
    for (std::size_t i = 0; i < m.latent_dim(); ++i) out[i] = dot(m.components.row(i), centered);
    return out;
}

/// Map a latent vector back: means + sum z_i * component_i.
inline std::vector<double> pca_inverse(const PCAModel& m, std::span<const double> z) {
    if (z.size() != m.latent_dim()) throw std::invalid_argument("pca_inverse: dimension mismatch");
    std::vector<double> out(m.means);
    for (std::size_t i = 0; i < m.latent_dim(); ++i) {
        const auto comp = m.components.row(i);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += z[i] * comp[j];
    }
    return out;
}

}  // namespace novabench
