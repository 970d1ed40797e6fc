// Unified interface over the six novelty detectors: fitting by id, scoring,
// min-max NM scaling, and text persistence for detectors and score bundles.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "novabench/dbscan.hpp"
#include "novabench/features.hpp"
#include "novabench/gmm.hpp"
#include "novabench/iforest.hpp"
#include "novabench/kmeans.hpp"
#include "novabench/lof.hpp"
#include "novabench/ocsvm.hpp"
#include "novabench/transform.hpp"

namespace novabench {

enum class DetectorKind { kmeans, dbscan, gmm, nusvm, iforest, lof };

inline const char* to_string(DetectorKind k) {
    switch (k) {
        case DetectorKind::kmeans: return "kmeans";
        case DetectorKind::dbscan: return "dbscan";
        case DetectorKind::gmm: return "gmm";
        case DetectorKind::nusvm: return "nusvm";
        case DetectorKind::iforest: return "iforest";
        case DetectorKind::lof: return "lof";
    }
    return "?";
}

inline DetectorKind detector_kind_from_string(std::string_view s) {
    if (s == "kmeans") return DetectorKind::kmeans;
    if (s == "dbscan") return DetectorKind::dbscan;
    if (s == "gmm") return DetectorKind::gmm;
    if (s == "nusvm") return DetectorKind::nusvm;
    if (s == "iforest") return DetectorKind::iforest;
    if (s == "lof") return DetectorKind::lof;
    throw std::invalid_argument("unknown detector '" + std::string(s) +
                                "' (kmeans|dbscan|gmm|nusvm|iforest|lof)");
}

inline const std::vector<DetectorKind>& all_detectors() {
    static const std::vector<DetectorKind> kinds = {DetectorKind::kmeans, DetectorKind::dbscan,
                                                    DetectorKind::gmm,    DetectorKind::nusvm,
                                                    DetectorKind::iforest, DetectorKind::lof};
    return kinds;
}

inline const std::vector<TransformKind>& all_transforms() {
    static const std::vector<TransformKind> kinds = {TransformKind::original, TransformKind::aer,
                                                     TransformKind::aea, TransformKind::pca};
    return kinds;
}

/// Per-detector hyperparameters, defaulted to the toolkit's standard values.
struct DetectorConfig {
    KMeansConfig kmeans;
    std::optional<double> dbscan_epsilon;  // absent = k-distance heuristic
    std::size_t dbscan_min_pts = 5;
    GMMConfig gmm;
    OCSVMConfig ocsvm;
    IForestConfig iforest;
    std::size_t lof_k = 20;
};

struct NoveltyDetector {
    std::variant<KMeansModel, DBSCANModel, GMMModel, OCSVMModel, IForestModel, LOFModel> model;

    DetectorKind kind() const {
        return static_cast<DetectorKind>(model.index());
    }
};

inline NoveltyDetector fit_detector(DetectorKind kind, const Matrix& latent,
                                    const DetectorConfig& config, std::uint64_t seed) {
    NoveltyDetector d;
    switch (kind) {
        case DetectorKind::kmeans: d.model = fit_kmeans(latent, config.kmeans, seed); break;
        case DetectorKind::dbscan:
            d.model = fit_dbscan(latent, config.dbscan_epsilon, config.dbscan_min_pts);
            break;
        case DetectorKind::gmm: d.model = fit_gmm(latent, config.gmm, seed); break;
        case DetectorKind::nusvm: d.model = fit_ocsvm(latent, config.ocsvm, seed); break;
        case DetectorKind::iforest: d.model = fit_iforest(latent, config.iforest, seed); break;
        case DetectorKind::lof: d.model = fit_lof(latent, config.lof_k); break;
    }
    return d;
}

/// Continuous novelty metric of one latent vector; higher = more novel.
inline double novelty_metric(const NoveltyDetector& d, std::span<const double> v) {
    return std::visit(
        [&](const auto& m) -> double {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, KMeansModel>) return nm_kmeans(m, v);
            else if constexpr (std::is_same_v<M, DBSCANModel>) return nm_dbscan(m, v);
            else if constexpr (std::is_same_v<M, GMMModel>) return nm_gmm(m, v);
            else if constexpr (std::is_same_v<M, OCSVMModel>) return nm_ocsvm(m, v);
            else if constexpr (std::is_same_v<M, IForestModel>) return nm_iforest(m, v);
            else return nm_lof(m, v);
        },
        d.model);
}

// ---------------------------------------------------------------------------
// Min-max scaler fitted on a reference evaluation run. Values outside the
// fitted range extrapolate linearly rather than clamping; the benchmark
// report flags such samples.
// ---------------------------------------------------------------------------

struct NMScaler {
    double min = 0.0;
    double max = 1.0;
};

inline NMScaler fit_nm_scaler(std::span<const double> scores) {
    if (scores.size() < 2) throw std::invalid_argument("fit_nm_scaler: need at least 2 scores");
    NMScaler s;
    s.min = *std::min_element(scores.begin(), scores.end());
    s.max = *std::max_element(scores.begin(), scores.end());
    if (!(s.max > s.min)) {
        throw std::runtime_error("fit_nm_scaler: all scores identical, scale undefined");
    }
    return s;
}

inline double scale_nm(const NMScaler& s, double nm) { return (nm - s.min) / (s.max - s.min); }

// ---------------------------------------------------------------------------
// Persistence. Same block style as the transform models.
// ---------------------------------------------------------------------------

inline std::string serialize_detector(const NoveltyDetector& d) {
    std::string out;
    out += "kind,";
    out += to_string(d.kind());
    out += '\n';
    if (const auto* km = std::get_if<KMeansModel>(&d.model)) {
        out += "k," + std::to_string(km->k) + ',' + format_double(km->silhouette_score) + '\n';
        detail::emit_matrix(out, "centroids", km->centroids);
        detail::emit_vector(out, "radii", km->radii);
    } else if (const auto* db = std::get_if<DBSCANModel>(&d.model)) {
        out += "params," + format_double(db->epsilon) + ',' + std::to_string(db->min_pts) + '\n';
        detail::emit_matrix(out, "retained", db->retained);
    } else if (const auto* gm = std::get_if<GMMModel>(&d.model)) {
        out += "bic," + format_double(gm->bic) + '\n';
        detail::emit_vector(out, "weights", gm->weights);
        detail::emit_matrix(out, "means", gm->means);
        for (const auto& cov : gm->covariances) detail::emit_matrix(out, "covariance", cov);
    } else if (const auto* oc = std::get_if<OCSVMModel>(&d.model)) {
        out += "params," + format_double(oc->rho) + ',' + format_double(oc->gamma) + ',' +
               format_double(oc->nu) + ',' + format_double(oc->w_norm) + '\n';
        detail::emit_vector(out, "alphas", oc->alphas);
        detail::emit_matrix(out, "support_vectors", oc->support_vectors);
    } else if (const auto* fo = std::get_if<IForestModel>(&d.model)) {
        out += "params," + std::to_string(fo->subsample) + ',' + std::to_string(fo->dim) + ',' +
               format_double(fo->normalizer) + ',' + std::to_string(fo->trees.size()) + '\n';
        for (const auto& tree : fo->trees) {
            out += "tree," + std::to_string(tree.nodes.size()) + '\n';
            for (const auto& n : tree.nodes) {
                const bool leaf = n.feature == IsolationNode::npos;
                out += "node," + std::string(leaf ? "leaf" : std::to_string(n.feature)) + ',' +
                       format_double(n.threshold) + ',' + std::to_string(n.left) + ',' +
                       std::to_string(n.right) + ',' + std::to_string(n.size) + '\n';
            }
        }
    } else {
        const auto& lf = std::get<LOFModel>(d.model);
        out += "k," + std::to_string(lf.k) + '\n';
        detail::emit_matrix(out, "points", lf.points);
        detail::emit_vector(out, "k_distance", lf.k_distance);
        detail::emit_vector(out, "lrd", lf.lrd);
    }
    return out;
}

inline NoveltyDetector parse_detector(detail::BlockReader& r) {
    const auto kind_fields = r.next("kind");
    const DetectorKind kind = detector_kind_from_string(kind_fields[1]);

    NoveltyDetector d;
    switch (kind) {
        case DetectorKind::kmeans: {
            KMeansModel m;
            const auto kf = r.next("k");
            m.k = static_cast<std::size_t>(parse_long(kf[1], r.lineno(), "k"));
            m.silhouette_score = parse_double(kf[2], r.lineno(), "silhouette");
            m.centroids = detail::read_matrix(r, "centroids");
            m.radii = r.numbers(r.next("radii"));
            d.model = std::move(m);
            break;
        }
        case DetectorKind::dbscan: {
            DBSCANModel m;
            const auto pf = r.next("params");
            m.epsilon = parse_double(pf[1], r.lineno(), "epsilon");
            m.min_pts = static_cast<std::size_t>(parse_long(pf[2], r.lineno(), "min_pts"));
            m.retained = detail::read_matrix(r, "retained");
            d.model = std::move(m);
            break;
        }
        case DetectorKind::gmm: {
            GMMModel m;
            const auto bf = r.next("bic");
            m.bic = parse_double(bf[1], r.lineno(), "bic");
            m.weights = r.numbers(r.next("weights"));
            m.means = detail::read_matrix(r, "means");
            for (std::size_t c = 0; c < m.weights.size(); ++c) {
                m.covariances.push_back(detail::read_matrix(r, "covariance"));
            }
            m.refresh_cholesky();
            d.model = std::move(m);
            break;
        }
        case DetectorKind::nusvm: {
            OCSVMModel m;
            const auto pf = r.next("params");
            m.rho = parse_double(pf[1], r.lineno(), "rho");
            m.gamma = parse_double(pf[2], r.lineno(), "gamma");
            m.nu = parse_double(pf[3], r.lineno(), "nu");
            m.w_norm = parse_double(pf[4], r.lineno(), "w_norm");
            m.alphas = r.numbers(r.next("alphas"));
            m.support_vectors = detail::read_matrix(r, "support_vectors");
            d.model = std::move(m);
            break;
        }
        case DetectorKind::iforest: {
            IForestModel m;
            const auto pf = r.next("params");
            m.subsample = static_cast<std::size_t>(parse_long(pf[1], r.lineno(), "subsample"));
            m.dim = static_cast<std::size_t>(parse_long(pf[2], r.lineno(), "dim"));
            m.normalizer = parse_double(pf[3], r.lineno(), "normalizer");
            const auto tree_count = static_cast<std::size_t>(parse_long(pf[4], r.lineno(), "trees"));
            for (std::size_t t = 0; t < tree_count; ++t) {
                const auto tf = r.next("tree");
                const auto node_count = static_cast<std::size_t>(parse_long(tf[1], r.lineno(), "nodes"));
                IsolationTree tree;
                for (std::size_t i = 0; i < node_count; ++i) {
                    const auto nf = r.next("node");
                    if (nf.size() != 6) throw ParseError("node record needs 5 fields", r.lineno());
                    IsolationNode node;
                    node.feature = nf[1] == "leaf"
                                       ? IsolationNode::npos
                                       : static_cast<std::size_t>(parse_long(nf[1], r.lineno(), "feature"));
                    node.threshold = parse_double(nf[2], r.lineno(), "threshold");
                    node.left = static_cast<std::size_t>(parse_long(nf[3], r.lineno(), "left"));
                    node.right = static_cast<std::size_t>(parse_long(nf[4], r.lineno(), "right"));
                    node.size = static_cast<std::size_t>(parse_long(nf[5], r.lineno(), "size"));
                    tree.nodes.push_back(node);
                }
                m.trees.push_back(std::move(tree));
            }
            d.model = std::move(m);
            break;
        }
        case DetectorKind::lof: {
            LOFModel m;
            const auto kf = r.next("k");
            m.k = static_cast<std::size_t>(parse_long(kf[1], r.lineno(), "k"));
            m.points = detail::read_matrix(r, "points");
            m.k_distance = r.numbers(r.next("k_distance"));
            m.lrd = r.numbers(r.next("lrd"));
            d.model = std::move(m);
            break;
        }
    }
    return d;
}

inline void save_detector(const NoveltyDetector& d, const std::string& path) {
    write_file(path, "# novabench detector v1\n" + serialize_detector(d));
}

inline NoveltyDetector load_detector(const std::string& path) {
    const auto lines = read_lines(path);
    detail::BlockReader r(lines, 0, lines.size());
    return parse_detector(r);
}

// ---------------------------------------------------------------------------
// Score bundle: everything cmd_score needs to turn raw chunks into scaled NM
// values: normalizer, transform, detector, scaler and the wavelet spec.
// ---------------------------------------------------------------------------

struct ScoreBundle {
    WaveletSpec wavelet;
    Normalizer normalizer;
    TransformModel transform;
    NoveltyDetector detector;
    NMScaler scaler;
};

inline std::string serialize_bundle(const ScoreBundle& b) {
    std::string out = "# novabench bundle v1\n";
    out += "wavelet," + std::to_string(b.wavelet.daubechies_order) + ',' +
           std::to_string(b.wavelet.levels) + '\n';
    out += "begin,normalizer\n";
    detail::emit_vector(out, "mean", b.normalizer.mean);
    detail::emit_vector(out, "std", b.normalizer.std_dev);
    out += "end,normalizer\n";
    out += "begin,transform\n" + serialize_transform(b.transform) + "end,transform\n";
    out += "begin,detector\n" + serialize_detector(b.detector) + "end,detector\n";
    out += "begin,scaler\nrange," + format_double(b.scaler.min) + ',' + format_double(b.scaler.max) +
           "\nend,scaler\n";
    return out;
}

inline void save_bundle(const ScoreBundle& b, const std::string& path) {
    write_file(path, serialize_bundle(b));
}

inline ScoreBundle load_bundle(const std::string& path) {
    const auto lines = read_lines(path);
    detail::BlockReader r(lines, 0, lines.size());
    ScoreBundle b;

    const auto wf = r.next("wavelet");
    b.wavelet.daubechies_order = static_cast<int>(parse_long(wf[1], r.lineno(), "order"));
    b.wavelet.levels = static_cast<int>(parse_long(wf[2], r.lineno(), "levels"));

    auto expect_begin = [&](std::string_view name) {
        const auto f = r.next("begin");
        if (f.size() != 2 || f[1] != name) {
            throw ParseError("expected begin," + std::string(name), r.lineno());
        }
    };
    auto expect_end = [&](std::string_view name) {
        const auto f = r.next("end");
        if (f.size() != 2 || f[1] != name) {
            throw ParseError("expected end," + std::string(name), r.lineno());
        }
    };

    expect_begin("normalizer");
    b.normalizer.mean = r.numbers(r.next("mean"));
    b.normalizer.std_dev = r.numbers(r.next("std"));
    expect_end("normalizer");

    expect_begin("transform");
    b.transform = parse_transform(r);
    expect_end("transform");

    expect_begin("detector");
    b.detector = parse_detector(r);
    expect_end("detector");

    expect_begin("scaler");
    const auto sf = r.next("range");
    b.scaler.min = parse_double(sf[1], r.lineno(), "min");
    b.scaler.max = parse_double(sf[2], r.lineno(), "max");
    expect_end("scaler");
    return b;
}

}  // namespace novabench
