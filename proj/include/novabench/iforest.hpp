// Isolation forest: an ensemble of randomized isolation trees built on
// subsamples of the training data. The novelty metric is the anomaly score
// 2^(-E[h(v)]/c(psi)) with path lengths adjusted by c(leaf size), so it lies
// strictly inside (0, 1).

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "novabench/linalg.hpp"
#include "novabench/rng.hpp"

namespace novabench {

/// Average unsuccessful-search path length in a BST of n nodes, using exact
/// harmonic numbers: c(n) = 2 H(n-1) - 2 (n-1)/n, c(1) = 0, c(0) = 0.
inline double iforest_average_path(std::size_t n) {
    if (n < 2) return 0.0;
    double harmonic = 0.0;
    for (std::size_t i = 1; i < n; ++i) harmonic += 1.0 / static_cast<double>(i);
    return 2.0 * harmonic - 2.0 * static_cast<double>(n - 1) / static_cast<double>(n);
}

struct IsolationNode {
    // Leaf when feature is npos; then `size` is the number of samples it held.
    std::size_t feature = npos;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    std::size_t size = 0;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct IsolationTree {
    std::vector<IsolationNode> nodes;  // nodes[0] is the root
};

struct IForestModel {
    std::vector<IsolationTree> trees;
    std::size_t subsample = 256;  // psi actually used (capped at |X|)
    std::size_t dim = 0;
    double normalizer = 0.0;  // c(psi)
};

struct IForestConfig {
    std::size_t trees = 100;
    std::size_t subsample = 256;
    std::size_t max_depth = 0;  // 0 = ceil(log2 psi)
};

namespace detail {

inline std::size_t build_isolation_node(IsolationTree& tree, const Matrix& x,
                                        std::vector<std::size_t>& idx, std::size_t begin,
                                        std::size_t end, std::size_t depth, std::size_t depth_cap,
                                        Rng& rng) {
    const std::size_t node_id = tree.nodes.size();
    tree.nodes.emplace_back();
    const std::size_t count = end - begin;
    if (count <= 1 || depth >= depth_cap) {
        tree.nodes[node_id].size = count;
        return node_id;
    }

    // Collect features that still spread; identical points become a leaf.
    std::vector<std::size_t> usable;
    for (std::size_t f = 0; f < x.cols; ++f) {
        double mn = x(idx[begin], f), mx = mn;
        for (std::size_t i = begin + 1; i < end; ++i) {
            mn = std::min(mn, x(idx[i], f));
            mx = std::max(mx, x(idx[i], f));
        }
        if (mx > mn) usable.push_back(f);
    }
    if (usable.empty()) {
        tree.nodes[node_id].size = count;
        return node_id;
    }

    const std::size_t feature = usable[rng.uniform_int(usable.size())];
    double mn = x(idx[begin], feature), mx = mn;
    for (std::size_t i = begin + 1; i < end; ++i) {
        mn = std::min(mn, x(idx[i], feature));
        mx = std::max(mx, x(idx[i], feature));
    }
    const double threshold = rng.uniform(mn, mx);

    std::size_t mid = begin;
    for (std::size_t i = begin; i < end; ++i) {
        if (x(idx[i], feature) < threshold) {
            std::swap(idx[i], idx[mid]);
            ++mid;
        }
    }
    // A threshold exactly at the minimum can leave one side empty; nudge one
    // sample across so both children are nonempty.
    if (mid == begin) ++mid;
    if (mid == end) --mid;

    tree.nodes[node_id].feature = feature;
    tree.nodes[node_id].threshold = threshold;
    tree.nodes[node_id].size = count;
    const std::size_t left = build_isolation_node(tree, x, idx, begin, mid, depth + 1, depth_cap, rng);
    const std::size_t right = build_isolation_node(tree, x, idx, mid, end, depth + 1, depth_cap, rng);
    tree.nodes[node_id].left = left;
    tree.nodes[node_id].right = right;
    return node_id;
}

}  // namespace detail

inline IForestModel fit_iforest(const Matrix& x, const IForestConfig& config, std::uint64_t seed) {
    if (x.rows < 2) throw std::invalid_argument("fit_iforest: need at least 2 samples");
    if (config.trees < 1) throw std::invalid_argument("fit_iforest: need at least one tree");

    IForestModel m;
    m.dim = x.cols;
    m.subsample = std::min(config.subsample, x.rows);
    m.normalizer = iforest_average_path(m.subsample);
    const std::size_t depth_cap =
        config.max_depth > 0
            ? config.max_depth
            : static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(m.subsample))));

    std::vector<std::size_t> all(x.rows);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t t = 0; t < config.trees; ++t) {
        Rng rng(mix_seed(seed, t));
        // Partial Fisher-Yates draws the subsample without replacement.
        std::vector<std::size_t> pool = all;
        std::vector<std::size_t> idx(m.subsample);
        for (std::size_t i = 0; i < m.subsample; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(pool.size() - i));
            std::swap(pool[i], pool[j]);
            idx[i] = pool[i];
        }
        IsolationTree tree;
        detail::build_isolation_node(tree, x, idx, 0, idx.size(), 0, depth_cap, rng);
        m.trees.push_back(std::move(tree));
    }
    return m;
}

/// Path length of v in one tree, including the c(size) leaf adjustment.
inline double isolation_path_length(const IsolationTree& tree, std::span<const double> v) {
    std::size_t node = 0;
    double depth = 0.0;
    while (tree.nodes[node].feature != IsolationNode::npos) {
        node = v[tree.nodes[node].feature] < tree.nodes[node].threshold ? tree.nodes[node].left
                                                                        : tree.nodes[node].right;
        depth += 1.0;
    }
    return depth + iforest_average_path(tree.nodes[node].size);
}

/// NM = 2^(-E[h(v)] / c(psi)), in (0, 1); 0.5 marks the average path length.
inline double nm_iforest(const IForestModel& m, std::span<const double> v) {
    if (v.size() != m.dim) throw std::invalid_argument("nm_iforest: dimension mismatch");
    double total = 0.0;
    for (const auto& tree : m.trees) total += isolation_path_length(tree, v);
    const double mean_path = total / static_cast<double>(m.trees.size());
    return std::pow(2.0, -mean_path / m.normalizer);
}

}  // namespace novabench
