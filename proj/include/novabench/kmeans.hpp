// K-means novelty detector: k-means++ seeding, Lloyd iterations, cluster
// count chosen by the highest mean silhouette score, and a novelty metric
// that measures distance to the nearest centroid in units of that cluster's
// radius (negative inside, zero on the boundary, positive outside).

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "novabench/linalg.hpp"
#include "novabench/rng.hpp"

namespace novabench {

/// Mean silhouette score (b - a) / max(a, b) over all samples. Samples in
/// singleton clusters, and samples where a = b = 0, contribute 0.
inline double silhouette(const Matrix& x, std::span<const std::size_t> assignment) {
    if (x.rows != assignment.size()) throw std::invalid_argument("silhouette: assignment size mismatch");
    std::size_t k = 0;
    for (std::size_t a : assignment) k = std::max(k, a + 1);
    if (k < 2) throw std::invalid_argument("silhouette: need at least 2 clusters");

    std::vector<std::size_t> counts(k, 0);
    for (std::size_t a : assignment) ++counts[a];
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) throw std::invalid_argument("silhouette: empty cluster");
    }

    double total = 0.0;
    std::vector<double> cluster_dist(k);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const std::size_t own = assignment[i];
        if (counts[own] == 1) continue;  // s = 0
        std::fill(cluster_dist.begin(), cluster_dist.end(), 0.0);
        for (std::size_t j = 0; j < x.rows; ++j) {
            if (i == j) continue;
            cluster_dist[assignment[j]] += distance(x.row(i), x.row(j));
        }
        const double a = cluster_dist[own] / static_cast<double>(counts[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c == own) continue;
            b = std::min(b, cluster_dist[c] / static_cast<double>(counts[c]));
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(x.rows);
}

struct KMeansModel {
    Matrix centroids;            // k x dim
    std::vector<double> radii;   // max distance of an assigned training point
    std::size_t k = 0;
    double silhouette_score = 0.0;

    std::size_t dim() const { return centroids.cols; }
};

struct KMeansConfig {
    std::size_t k_min = 2;
    std::size_t k_max = 10;
    std::size_t max_iterations = 300;
};

namespace detail {

inline std::vector<std::size_t> kmeanspp_seed(const Matrix& x, std::size_t k, Rng& rng) {
    std::vector<std::size_t> centers;
    centers.push_back(static_cast<std::size_t>(rng.uniform_int(x.rows)));
    std::vector<double> d2(x.rows, std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            d2[i] = std::min(d2[i], squared_distance(x.row(i), x.row(centers.back())));
            total += d2[i];
        }
        std::size_t pick;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cum = 0.0;
            pick = x.rows - 1;
            for (std::size_t i = 0; i < x.rows; ++i) {
                cum += d2[i];
                if (cum >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(rng.uniform_int(x.rows));  // all points coincide
        }
        centers.push_back(pick);
    }
    return centers;
}

struct LloydResult {
    Matrix centroids;
    std::vector<std::size_t> assignment;
};

inline LloydResult lloyd(const Matrix& x, std::size_t k, Rng& rng, std::size_t max_iterations) {
    const auto seeds = kmeanspp_seed(x, k, rng);
    Matrix centroids(k, x.cols);
    for (std::size_t c = 0; c < k; ++c) {
        std::copy(x.row(seeds[c]).begin(), x.row(seeds[c]).end(), centroids.row(c).begin());
    }

    std::vector<std::size_t> assignment(x.rows, 0);
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        bool changed = iter == 0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = squared_distance(x.row(i), centroids.row(c));
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assignment[i] != best) {
                assignment[i] = best;
                changed = true;
            }
        }
        if (!changed) break;

        Matrix sums(k, x.cols);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < x.rows; ++i) {
            auto srow = sums.row(assignment[i]);
            const auto xrow = x.row(i);
            for (std::size_t j = 0; j < x.cols; ++j) srow[j] += xrow[j];
            ++counts[assignment[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            auto crow = centroids.row(c);
            const auto srow = sums.row(c);
            for (std::size_t j = 0; j < x.cols; ++j) crow[j] = srow[j] / static_cast<double>(counts[c]);
        }
        // Collapsed clusters re-seed from the point farthest from its own
        // centroid, stealing only from clusters that keep at least 2 members
        // so every cluster leaves the M step nonempty.
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            std::size_t far = x.rows;
            double far_d = -1.0;
            for (std::size_t i = 0; i < x.rows; ++i) {
                if (counts[assignment[i]] < 2) continue;
                const double d = squared_distance(x.row(i), centroids.row(assignment[i]));
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far == x.rows) break;  // cannot happen while k < rows
            std::copy(x.row(far).begin(), x.row(far).end(), centroids.row(c).begin());
            --counts[assignment[far]];
            assignment[far] = c;
            counts[c] = 1;
        }
    }
    return {std::move(centroids), std::move(assignment)};
}

}  // namespace detail

/// Fit for every k in the range, keep the model with the best mean
/// silhouette. Zero radii (singleton or duplicate clusters) are replaced by
/// the smallest nonzero radius, or 1e-12 if none, so the metric stays finite.
inline KMeansModel fit_kmeans(const Matrix& x, const KMeansConfig& config, std::uint64_t seed) {
    if (config.k_min < 2 || config.k_min > config.k_max) {
        throw std::invalid_argument("fit_kmeans: invalid k range");
    }
    if (x.rows < config.k_max + 1) {
        throw std::invalid_argument("fit_kmeans: k range requires at least k_max+1 samples");
    }

    KMeansModel best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = config.k_min; k <= config.k_max; ++k) {
        Rng rng(mix_seed(seed, k));
        auto result = detail::lloyd(x, k, rng, config.max_iterations);
        const double score = silhouette(x, result.assignment);
        if (score > best_score) {
            best_score = score;
            best.centroids = std::move(result.centroids);
            best.k = k;
            best.silhouette_score = score;

            best.radii.assign(k, 0.0);
            for (std::size_t i = 0; i < x.rows; ++i) {
                const double d = distance(x.row(i), best.centroids.row(result.assignment[i]));
                best.radii[result.assignment[i]] = std::max(best.radii[result.assignment[i]], d);
            }
        }
    }

    double smallest_nonzero = std::numeric_limits<double>::infinity();
    for (double r : best.radii) {
        if (r > 0.0) smallest_nonzero = std::min(smallest_nonzero, r);
    }
    const double fallback = std::isfinite(smallest_nonzero) ? smallest_nonzero : 1e-12;
    for (double& r : best.radii) {
        if (r == 0.0) r = fallback;
    }
    return best;
}

/// NM = (d(v, nearest centroid) - r) / r for that cluster's radius r.
inline double nm_kmeans(const KMeansModel& m, std::span<const double> v) {
    if (v.size() != m.dim()) throw std::invalid_argument("nm_kmeans: dimension mismatch");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < m.centroids.rows; ++c) {
        const double d = squared_distance(v, m.centroids.row(c));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return (std::sqrt(best_d) - m.radii[best]) / m.radii[best];
}

}  // namespace novabench
