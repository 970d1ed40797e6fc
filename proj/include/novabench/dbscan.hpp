// DBSCAN novelty detector. Training runs the standard density clustering and
// keeps every point not labelled noise; the novelty metric of a query is its
// distance to the nearest retained point in units of epsilon.

#pragma once

#include <algorithm>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "novabench/linalg.hpp"

namespace novabench {

struct DBSCANModel {
    Matrix retained;  // training points not labelled noise
    double epsilon = 0.0;
    std::size_t min_pts = 5;

    std::size_t dim() const { return retained.cols; }
};

/// Distance of each point to its k-th nearest neighbor (self excluded).
inline std::vector<double> knn_distances(const Matrix& x, std::size_t k) {
    if (k + 1 > x.rows) throw std::invalid_argument("knn_distances: k too large");
    std::vector<double> out(x.rows);
    std::vector<double> d(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.rows; ++j) d[j] = squared_distance(x.row(i), x.row(j));
        d[i] = std::numeric_limits<double>::infinity();  // drop self
        std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
        out[i] = std::sqrt(d[k - 1]);
    }
    return out;
}

/// Nearest-rank 90th percentile of the min_pts-NN distances, the default
/// epsilon heuristic.
inline double dbscan_epsilon_heuristic(const Matrix& x, std::size_t min_pts) {
    auto dists = knn_distances(x, min_pts);
    std::sort(dists.begin(), dists.end());
    const std::size_t idx =
        static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(dists.size()))) - 1;
    return dists[std::min(idx, dists.size() - 1)];
}

/// Cluster labels: -1 for noise, otherwise 0-based cluster ids. Neighborhoods
/// include the point itself when counted against min_pts.
inline std::vector<long> dbscan_labels(const Matrix& x, double epsilon, std::size_t min_pts) {
    const double eps2 = epsilon * epsilon;
    const std::size_t n = x.rows;
    std::vector<std::vector<std::size_t>> neighbors(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (squared_distance(x.row(i), x.row(j)) <= eps2) neighbors[i].push_back(j);
        }
    }

    std::vector<long> labels(n, -2);  // -2 unvisited, -1 noise
    long cluster = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != -2) continue;
        if (neighbors[i].size() < min_pts) {
            labels[i] = -1;
            continue;
        }
        labels[i] = cluster;
        std::deque<std::size_t> frontier(neighbors[i].begin(), neighbors[i].end());
        while (!frontier.empty()) {
            const std::size_t q = frontier.front();
            frontier.pop_front();
            if (labels[q] == -1) labels[q] = cluster;  // border point
            if (labels[q] != -2) continue;
            labels[q] = cluster;
            if (neighbors[q].size() >= min_pts) {
                frontier.insert(frontier.end(), neighbors[q].begin(), neighbors[q].end());
            }
        }
        ++cluster;
    }
    return labels;
}

/// Fit on training data; eps defaults to the 90th-percentile k-distance
/// heuristic. Throws if every point would be discarded as noise.
inline DBSCANModel fit_dbscan(const Matrix& x, std::optional<double> epsilon = std::nullopt,
                              std::size_t min_pts = 5) {
    if (x.rows <= min_pts) throw std::invalid_argument("fit_dbscan: need more than min_pts samples");
    DBSCANModel m;
    m.min_pts = min_pts;
    m.epsilon = epsilon.value_or(dbscan_epsilon_heuristic(x, min_pts));
    if (!(m.epsilon > 0.0)) throw std::invalid_argument("fit_dbscan: epsilon must be positive");

    const auto labels = dbscan_labels(x, m.epsilon, min_pts);
    std::size_t kept = 0;
    for (long l : labels) kept += l >= 0;
    if (kept == 0) {
        throw std::runtime_error("fit_dbscan: all points labelled noise; increase epsilon");
    }
    m.retained = Matrix(kept, x.cols);
    std::size_t r = 0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        if (labels[i] >= 0) {
            std::copy(x.row(i).begin(), x.row(i).end(), m.retained.row(r).begin());
            ++r;
        }
    }
    return m;
}

/// NM = min distance to a retained training point, divided by epsilon.
inline double nm_dbscan(const DBSCANModel& m, std::span<const double> v) {
    if (v.size() != m.dim()) throw std::invalid_argument("nm_dbscan: dimension mismatch");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m.retained.rows; ++i) {
        best = std::min(best, squared_distance(v, m.retained.row(i)));
    }
    return std::sqrt(best) / m.epsilon;
}

}  // namespace novabench
