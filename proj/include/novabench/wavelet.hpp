// Wavelet packet decomposition over orthogonal Daubechies filters.
//
// Boundary handling is periodization. Odd-length nodes are zero-padded by one
// sample before the circular filtering step: this keeps every level an exact
// isometry (total coefficient energy equals input energy to roundoff) and
// gives both children ceil(n/2) coefficients, so depth-6 analysis of a
// 1666-sample chunk yields leaves of length 27 (1666 -> 833 -> 417 -> 209 ->
// 105 -> 53 -> 27). Replicate-padding, the other common convention, inflates
// the energy of odd nodes and would break the Parseval invariant this module
// guarantees.

#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "novabench/linalg.hpp"

namespace novabench {

/// Scaling (low-pass) coefficients of the Daubechies family, normalized so
/// that sum h[m]^2 = 1. Order N has 2N taps and N vanishing moments.
inline const std::vector<double>& daubechies_scaling(int order) {
    static const std::array<std::vector<double>, 8> bank = {{
        // db1 (Haar)
        {0.7071067811865476, 0.7071067811865476},
        // db2
        {0.48296291314469025, 0.8365163037378079, 0.22414386804185735, -0.12940952255092145},
        // db3
        {0.3326705529509569, 0.8068915093133388, 0.4598775021193313, -0.13501102001039084,
         -0.08544127388224149, 0.035226291882100656},
        // db4
        {0.23037781330885523, 0.7148465705525415, 0.6308807679295904, -0.02798376941698385,
         -0.18703481171888114, 0.030841381835986965, 0.032883011666982945, -0.010597401784997278},
        // db5
        {0.160102397974125, 0.6038292697974729, 0.7243085284385744, 0.13842814590110342,
         -0.24229488706619015, -0.03224486958502952, 0.07757149384006515, -0.006241490213011705,
         -0.012580751999015526, 0.003335725285001549},
        // db6
        {0.11154074335008017, 0.4946238903983854, 0.7511339080215775, 0.3152503517092432,
         -0.22626469396516913, -0.12976686756709563, 0.09750160558707936, 0.02752286553001629,
         -0.031582039318031156, 0.0005538422009938016, 0.004777257511010651, -0.00107730108499558},
        // db7
        {0.07785205408506236, 0.39653931948230575, 0.7291320908465551, 0.4697822874053586,
         -0.14390600392910627, -0.22403618499416572, 0.07130921926705004, 0.08061260915107307,
         -0.03802993693503463, -0.01657454163101562, 0.012550998556013784, 0.00042957797300470274,
         -0.0018016407039998328, 0.0003537138000010399},
        // db8
        {0.05441584224308161, 0.3128715909144659, 0.6756307362980128, 0.5853546836548691,
         -0.015829105256023893, -0.2840155429624281, 0.00047248457399797254, 0.128747426620186,
         -0.01736930100202211, -0.04408825393106472, 0.013981027917015516, 0.008746094047015655,
         -0.00487035299301066, -0.000391740372995977, 0.0006754494059985568, -0.00011747678400228192},
    }};
    if (order < 1 || order > static_cast<int>(bank.size())) {
        throw std::invalid_argument("daubechies_scaling: supported orders are db1..db8");
    }
    return bank[static_cast<std::size_t>(order - 1)];
}

/// Quadrature-mirror wavelet filter: g[m] = (-1)^m h[M-1-m].
inline std::vector<double> quadrature_mirror(const std::vector<double>& h) {
    const std::size_t m = h.size();
    std::vector<double> g(m);
    for (std::size_t i = 0; i < m; ++i) {
        g[i] = (i % 2 == 0 ? 1.0 : -1.0) * h[m - 1 - i];
    }
    return g;
}

struct WaveletSpec {
    int daubechies_order = 4;  // db4 by default
    int levels = 6;            // decomposition depth L
};

inline int parse_wavelet_name(const std::string& name) {
    if (name.size() < 3 || name.substr(0, 2) != "db") {
        throw std::invalid_argument("wavelet name must look like 'db4'");
    }
    return std::stoi(name.substr(2));
}

namespace detail {

/// One analysis split: circular convolution with h and g followed by dyadic
/// downsampling. Odd inputs are zero-extended to even length first.
inline void wpd_split(std::span<const double> x, const std::vector<double>& h,
                      const std::vector<double>& g, std::vector<double>& low,
                      std::vector<double>& high) {
    const std::size_t n = x.size();
    const std::size_t padded = n + (n % 2);  // even
    const std::size_t half = padded / 2;
    const std::size_t taps = h.size();
    low.assign(half, 0.0);
    high.assign(half, 0.0);
    for (std::size_t j = 0; j < half; ++j) {
        double a = 0.0, d = 0.0;
        for (std::size_t m = 0; m < taps; ++m) {
            const std::size_t idx = (2 * j + m) % padded;
            const double v = idx < n ? x[idx] : 0.0;  // the pad sample
            a += h[m] * v;
            d += g[m] * v;
        }
        low[j] = a;
        high[j] = d;
    }
}

}  // namespace detail

/// Full wavelet packet tree of depth L. Returns the 2^L leaf coefficient
/// vectors ordered by tree path, low branch first at every split.
inline std::vector<std::vector<double>> wpd_leaves(std::span<const double> signal,
                                                   const WaveletSpec& spec) {
    if (spec.levels < 0) throw std::invalid_argument("wpd: negative depth");
    const std::size_t n = signal.size();
    if (n < (std::size_t{1} << spec.levels)) {
        throw std::invalid_argument("wpd: depth " + std::to_string(spec.levels) +
                                    " too deep for " + std::to_string(n) + " samples");
    }
    const auto& h = daubechies_scaling(spec.daubechies_order);
    const auto g = quadrature_mirror(h);

    std::vector<std::vector<double>> nodes;
    nodes.emplace_back(signal.begin(), signal.end());
    for (int level = 0; level < spec.levels; ++level) {
        std::vector<std::vector<double>> next;
        next.reserve(nodes.size() * 2);
        for (const auto& node : nodes) {
            std::vector<double> low, high;
            detail::wpd_split(node, h, g, low, high);
            next.push_back(std::move(low));
            next.push_back(std::move(high));
        }
        nodes = std::move(next);
    }
    return nodes;
}

/// l2 norm of every WPD leaf, the 2^L sub-band features.
inline std::vector<double> wpd_norms(std::span<const double> signal, const WaveletSpec& spec) {
    const auto leaves = wpd_leaves(signal, spec);
    std::vector<double> norms;
    norms.reserve(leaves.size());
    for (const auto& leaf : leaves) norms.push_back(norm2(leaf));
    return norms;
}

}  // namespace novabench
