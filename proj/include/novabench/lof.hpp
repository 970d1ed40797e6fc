// Local outlier factor in novelty mode: neighborhoods, k-distances and local
// reachability densities are precomputed on the training set, and queries are
// scored against training points only. NM ~ 1 inside regions of homogeneous
// density and grows as the query moves into sparser territory.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "novabench/linalg.hpp"

namespace novabench {

inline constexpr double kLofReachabilityFloor = 1e-12;

struct LOFModel {
    Matrix points;                 // training set
    std::size_t k = 20;
    std::vector<double> k_distance;  // per training point
    std::vector<double> lrd;         // local reachability density per point

    std::size_t dim() const { return points.cols; }
};

namespace detail {

/// Indices of the k nearest neighbors of `dists` (self entries must already be
/// +inf). Ties at the k-th distance are all included, per the LOF definition.
inline std::vector<std::size_t> knn_indices(std::span<const double> dists, std::size_t k) {
    std::vector<std::size_t> order(dists.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dists[a] < dists[b] || (dists[a] == dists[b] && a < b);
    });
    std::size_t count = std::min(k, order.size());
    const double kth = dists[order[count - 1]];
    while (count < order.size() && dists[order[count]] == kth) ++count;
    order.resize(count);
    return order;
}

}  // namespace detail

inline LOFModel fit_lof(const Matrix& x, std::size_t k = 20) {
    if (k < 1 || k >= x.rows) throw std::invalid_argument("fit_lof: need 1 <= k < sample count");

    LOFModel m;
    m.points = x;
    m.k = k;
    const std::size_t n = x.rows;

    Matrix dist(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        dist(i, i) = std::numeric_limits<double>::infinity();
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = distance(x.row(i), x.row(j));
            dist(i, j) = d;
            dist(j, i) = d;
        }
    }

    std::vector<std::vector<std::size_t>> neighbors(n);
    m.k_distance.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        neighbors[i] = detail::knn_indices(dist.row(i), k);
        m.k_distance[i] = dist(i, neighbors[i].back());
    }

    m.lrd.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double reach = 0.0;
        for (std::size_t o : neighbors[i]) {
            reach += std::max(m.k_distance[o], dist(i, o));
        }
        reach /= static_cast<double>(neighbors[i].size());
        m.lrd[i] = 1.0 / std::max(reach, kLofReachabilityFloor);
    }
    return m;
}

/// NM = mean over the query's training neighbors of lrd(neighbor) / lrd(query).
inline double nm_lof(const LOFModel& m, std::span<const double> v) {
    if (v.size() != m.dim()) throw std::invalid_argument("nm_lof: dimension mismatch");
    const std::size_t n = m.points.rows;
    std::vector<double> dists(n);
    for (std::size_t i = 0; i < n; ++i) dists[i] = distance(v, m.points.row(i));

    const auto neighbors = detail::knn_indices(dists, m.k);
    double reach = 0.0;
    double lrd_sum = 0.0;
    for (std::size_t o : neighbors) {
        reach += std::max(m.k_distance[o], dists[o]);
        lrd_sum += m.lrd[o];
    }
    const double count = static_cast<double>(neighbors.size());
    const double lrd_v = 1.0 / std::max(reach / count, kLofReachabilityFloor);
    return (lrd_sum / count) / lrd_v;
}

}  // namespace novabench
