// Feature extraction: the six statistical features plus the 2^L WPD sub-band
// norms, and the train-fitted z-score normalizer applied to everything that
// feeds a transform or detector.

#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "novabench/io.hpp"
#include "novabench/linalg.hpp"
#include "novabench/signal.hpp"
#include "novabench/wavelet.hpp"

namespace novabench {

inline constexpr std::size_t kStatFeatureCount = 6;

/// mean, RMS, P2P, population STD, skewness, excess kurtosis. The moment
/// ratios are defined as 0 for a constant signal.
inline std::array<double, kStatFeatureCount> stat_features(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("stat_features: need at least 2 samples");

    double sum = 0.0, sumsq = 0.0;
    double mn = x[0], mx = x[0];
    for (double v : x) {
        sum += v;
        sumsq += v * v;
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    const double nd = static_cast<double>(n);
    const double mean = sum / nd;
    const double rms = std::sqrt(sumsq / nd);
    const double p2p = mx - mn;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nd;
    m3 /= nd;
    m4 /= nd;
    const double std_dev = std::sqrt(m2);
    const double skew = m2 > 0.0 ? m3 / (std_dev * std_dev * std_dev) : 0.0;
    const double kurt = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;

    return {mean, rms, p2p, std_dev, skew, kurt};
}

/// Number of features produced by extraction at depth L.
inline std::size_t feature_count(const WaveletSpec& spec) {
    return kStatFeatureCount + (std::size_t{1} << spec.levels);
}

/// [mean, rms, p2p, std, skew, kurt] followed by the 2^L sub-band norms in
/// tree order. Length is always 2^L + 6.
inline std::vector<double> extract(const TimeSeries& ts, const WaveletSpec& spec) {
    const auto stats = stat_features(ts.samples);
    std::vector<double> out(stats.begin(), stats.end());
    const auto norms = wpd_norms(ts.samples, spec);
    out.insert(out.end(), norms.begin(), norms.end());
    return out;
}

inline std::vector<std::string> feature_names(const WaveletSpec& spec) {
    std::vector<std::string> names = {"mean", "rms", "p2p", "std", "skew", "kurt"};
    const std::size_t leaves = std::size_t{1} << spec.levels;
    for (std::size_t i = 0; i < leaves; ++i) {
        std::string idx = std::to_string(i);
        names.push_back("wpd_" + std::string(idx.size() < 3 ? 3 - idx.size() : 0, '0') + idx);
    }
    return names;
}

/// Extract one row per chunk.
inline Matrix extract_matrix(const std::vector<TimeSeries>& chunks, const WaveletSpec& spec) {
    const std::size_t n_feat = feature_count(spec);
    Matrix m(chunks.size(), n_feat);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        const auto row = extract(chunks[i], spec);
        std::copy(row.begin(), row.end(), m.row(i).begin());
    }
    return m;
}

/// Per-feature z-score statistics fitted on the training matrix.
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> std_dev;  // population, zero for constant features

    bool operator==(const Normalizer&) const = default;
};

inline Normalizer fit_normalizer(const Matrix& x) {
    if (x.rows < 2) throw std::invalid_argument("fit_normalizer: need at least 2 rows");
    Normalizer n;
    n.mean = column_means(x);
    n.std_dev.assign(x.cols, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const auto r = x.row(i);
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double d = r[j] - n.mean[j];
            n.std_dev[j] += d * d;
        }
    }
    for (double& s : n.std_dev) s = std::sqrt(s / static_cast<double>(x.rows));
    return n;
}

/// (v - mean) / std per feature; zero-variance features map to 0.
inline std::vector<double> normalize(std::span<const double> v, const Normalizer& n) {
    if (v.size() != n.mean.size()) {
        throw std::invalid_argument("normalize: dimension mismatch (" + std::to_string(v.size()) +
                                    " vs " + std::to_string(n.mean.size()) + ")");
    }
    std::vector<double> out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        out[j] = n.std_dev[j] > 0.0 ? (v[j] - n.mean[j]) / n.std_dev[j] : 0.0;
    }
    return out;
}

inline std::vector<double> denormalize(std::span<const double> v, const Normalizer& n) {
    if (v.size() != n.mean.size()) throw std::invalid_argument("denormalize: dimension mismatch");
    std::vector<double> out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j] * n.std_dev[j] + n.mean[j];
    return out;
}

inline Matrix normalize_matrix(const Matrix& x, const Normalizer& n) {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const auto r = normalize(x.row(i), n);
        std::copy(r.begin(), r.end(), out.row(i).begin());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Feature matrix file: a header row with feature names, then one
// comma-separated row per chunk.
// ---------------------------------------------------------------------------

inline std::string serialize_feature_matrix(const Matrix& m, const std::vector<std::string>& names) {
    if (names.size() != m.cols) throw std::invalid_argument("feature name count != columns");
    std::string out;
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (j) out += ',';
        out += names[j];
    }
    out += '\n';
    for (std::size_t i = 0; i < m.rows; ++i) {
        const auto r = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (j) out += ',';
            out += format_double(r[j]);
        }
        out += '\n';
    }
    return out;
}

inline void save_feature_matrix(const Matrix& m, const std::vector<std::string>& names,
                                const std::string& path) {
    write_file(path, serialize_feature_matrix(m, names));
}

inline Matrix load_feature_matrix(const std::string& path, std::vector<std::string>* names = nullptr) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw ParseError("empty feature file", 1);
    const auto header = split_csv(lines[0]);
    if (names) {
        names->clear();
        for (auto f : header) names->emplace_back(f);
    }
    Matrix m(lines.size() - 1, header.size());
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_csv(lines[i]);
        if (fields.size() != header.size()) {
            throw ParseError("row has " + std::to_string(fields.size()) + " fields, header has " +
                                 std::to_string(header.size()),
                             i + 1);
        }
        for (std::size_t j = 0; j < fields.size(); ++j) {
            m(i - 1, j) = parse_double(fields[j], i + 1, std::string(header[j]));
        }
    }
    return m;
}

}  // namespace novabench
