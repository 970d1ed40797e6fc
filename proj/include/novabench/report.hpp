// Report emission: report.csv (one row per combination), traces.csv (long
// format for plotting the NM evolution), and report.json carrying the full
// provenance (seed, config hash, toolkit version). Timing lives only in the
// CSV columns, so reports from identical runs are byte-identical everywhere
// else.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "novabench/benchmark.hpp"
#include "novabench/io.hpp"
#include "novabench/rng.hpp"

namespace novabench {

inline constexpr const char* kToolkitVersion = "1.0.0";

inline constexpr const char* kReportHeader =
    "detector,transform,n_f,fp_pct,variance_scaled,variance_raw,mean_nominal,mean_novel,"
    "reactivity,infer_us_mean,infer_us_median,flags";

inline constexpr const char* kTraceHeader = "set,chunk,detector,transform,nm_raw,nm_scaled";

/// Canonical text form of everything that affects results (not timing), fed
/// into the config hash.
inline std::string describe_config(const BenchmarkConfig& config) {
    std::string s;
    s += "wavelet=db" + std::to_string(config.wavelet.daubechies_order) + ",L=" +
         std::to_string(config.wavelet.levels) + ";";
    const auto slice = [](const SetSlice& sl) {
        return sl.set_name + "[" + std::to_string(sl.begin) + ":" + std::to_string(sl.end) + "]";
    };
    s += "train=" + slice(config.protocol.train) + ";nominal=" + slice(config.protocol.nominal_eval) + ";";
    s += "novel=" + (config.protocol.novelty_eval ? slice(*config.protocol.novelty_eval) : "none") + ";";
    s += "seed=" + std::to_string(config.seed) + ";";
    for (const Combo& c : config.combos) {
        const TransformConfig tc = config.transform_config(c.detector);
        s += std::string(to_string(c.detector)) + "/" + to_string(c.transform) + "{";
        s += "aer=" + std::to_string(tc.aer.n_e1) + "-" + std::to_string(tc.aer.n_e2) + "@" +
             format_double(tc.aer_train.learning_rate) + "/" + std::to_string(tc.aer_train.batch_size) +
             "x" + std::to_string(tc.aer_train.epochs) + ",";
        s += "aea=" + std::to_string(tc.aea.n_e1) + "-" + std::to_string(tc.aea.n_e2) + "@" +
             format_double(tc.aea_train.learning_rate) + "/" + std::to_string(tc.aea_train.batch_size) +
             "x" + std::to_string(tc.aea_train.epochs) + ",";
        if (std::holds_alternative<std::size_t>(tc.pca.value)) {
            s += "pca=" + std::to_string(std::get<std::size_t>(tc.pca.value));
        } else {
            s += "pca~" + format_double(std::get<double>(tc.pca.value));
        }
        s += "}";
    }
    const auto& dc = config.detector_config;
    s += ";kmeans=" + std::to_string(dc.kmeans.k_min) + ".." + std::to_string(dc.kmeans.k_max);
    s += ";dbscan=" + (dc.dbscan_epsilon ? format_double(*dc.dbscan_epsilon) : "auto") + "/" +
         std::to_string(dc.dbscan_min_pts);
    s += ";gmm=" + std::to_string(dc.gmm.k_min) + ".." + std::to_string(dc.gmm.k_max);
    s += ";nusvm=" + format_double(dc.ocsvm.nu) + "/" +
         (dc.ocsvm.gamma > 0.0 ? format_double(dc.ocsvm.gamma) : "auto");
    s += ";iforest=" + std::to_string(dc.iforest.trees) + "/" + std::to_string(dc.iforest.subsample);
    s += ";lof=" + std::to_string(dc.lof_k);
    return s;
}

inline std::string config_hash(const BenchmarkConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(describe_config(config))));
    return buf;
}

inline std::string render_report_csv(const std::vector<MetricsRow>& rows) {
    std::string out(kReportHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += to_string(r.detector);
        out += ',';
        out += to_string(r.transform);
        if (r.failed) {
            out += ",,,,,,,,,";  // n_f through infer_us_median stay empty
            out += ',' + r.flags;
        } else {
            out += ',' + std::to_string(r.n_f);
            out += ',' + format_double(r.fp_pct);
            out += ',' + format_double(r.variance_scaled);
            out += ',' + format_double(r.variance_raw);
            out += ',' + format_double(r.mean_nominal);
            out += ',' + (r.mean_novel ? format_double(*r.mean_novel) : std::string());
            out += ',' + (r.reactivity ? format_double(*r.reactivity) : std::string());
            out += ',' + format_double(r.infer_us_mean);
            out += ',' + format_double(r.infer_us_median);
            out += ',' + r.flags;
        }
        out += '\n';
    }
    return out;
}

inline std::vector<MetricsRow> parse_report_csv(const std::vector<std::string>& lines) {
    if (lines.empty() || lines[0] != kReportHeader) {
        throw ParseError("missing report header", 1);
    }
    std::vector<MetricsRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto f = split_csv(lines[i]);
        if (f.size() != 12) throw ParseError("report row needs 12 fields", i + 1);
        MetricsRow r;
        r.detector = detector_kind_from_string(f[0]);
        r.transform = transform_kind_from_string(f[1]);
        r.flags = std::string(f[11]);
        if (f[2].empty()) {
            r.failed = true;
        } else {
            r.n_f = static_cast<std::size_t>(parse_long(f[2], i + 1, "n_f"));
            r.fp_pct = parse_double(f[3], i + 1, "fp_pct");
            r.variance_scaled = parse_double(f[4], i + 1, "variance_scaled");
            r.variance_raw = parse_double(f[5], i + 1, "variance_raw");
            r.mean_nominal = parse_double(f[6], i + 1, "mean_nominal");
            if (!f[7].empty()) r.mean_novel = parse_double(f[7], i + 1, "mean_novel");
            if (!f[8].empty()) r.reactivity = parse_double(f[8], i + 1, "reactivity");
            r.infer_us_mean = parse_double(f[9], i + 1, "infer_us_mean");
            r.infer_us_median = parse_double(f[10], i + 1, "infer_us_median");
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::string render_traces_csv(const BenchmarkResult& result) {
    std::string out(kTraceHeader);
    out += '\n';
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        const auto& row = result.rows[i];
        for (const auto& p : result.traces[i]) {
            out += p.set_name;
            out += ',' + std::to_string(p.chunk_index);
            out += ',';
            out += to_string(row.detector);
            out += ',';
            out += to_string(row.transform);
            out += ',' + format_double(p.nm_raw);
            out += ',' + format_double(p.nm_scaled);
            out += '\n';
        }
    }
    return out;
}

/// report.json: rows without the timing fields, plus provenance.
inline std::string render_report_json(const BenchmarkResult& result, const BenchmarkConfig& config) {
    nlohmann::ordered_json doc;
    doc["toolkit_version"] = kToolkitVersion;
    doc["seed"] = config.seed;
    doc["config_hash"] = config_hash(config);
    doc["config"] = describe_config(config);
    doc["n_feat"] = result.n_feat;
    doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : result.rows) {
        nlohmann::ordered_json jr;
        jr["detector"] = to_string(r.detector);
        jr["transform"] = to_string(r.transform);
        if (r.failed) {
            jr["error"] = r.flags;
        } else {
            jr["n_f"] = r.n_f;
            jr["fp_pct"] = r.fp_pct;
            jr["variance_scaled"] = r.variance_scaled;
            jr["variance_raw"] = r.variance_raw;
            jr["mean_nominal"] = r.mean_nominal;
            if (r.mean_novel) jr["mean_novel"] = *r.mean_novel;
            if (r.reactivity) jr["reactivity"] = *r.reactivity;
            if (!r.flags.empty()) jr["flags"] = r.flags;
        }
        doc["rows"].push_back(std::move(jr));
    }
    return doc.dump(2) + "\n";
}

struct ExportedReport {
    std::string report_csv_path;
    std::string traces_csv_path;
    std::string report_json_path;
};

inline ExportedReport export_report(const BenchmarkResult& result, const BenchmarkConfig& config,
                                    const std::string& out_dir) {
    if (result.rows.empty()) throw std::invalid_argument("export_report: no rows");
    ExportedReport paths;
    paths.report_csv_path = out_dir + "/report.csv";
    paths.traces_csv_path = out_dir + "/traces.csv";
    paths.report_json_path = out_dir + "/report.json";
    write_file(paths.report_csv_path, render_report_csv(result.rows));
    write_file(paths.traces_csv_path, render_traces_csv(result));
    write_file(paths.report_json_path, render_report_json(result, config));
    return paths;
}

}  // namespace novabench
