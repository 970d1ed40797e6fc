// novabench command line: generate synthetic vibration datasets, extract
// features, tune transform hyperparameters, run the detector benchmark, score
// new chunks against persisted models, and pretty-print reports.
//
// Exit codes: 0 success, 2 configuration or input error, 3 execution failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "novabench/benchmark.hpp"
#include "novabench/detector.hpp"
#include "novabench/hyperopt.hpp"
#include "novabench/report.hpp"
#include "novabench/signal.hpp"

namespace {

using namespace novabench;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitFailure = 3;

// The study's standard dataset carries a small sensor-like noise floor; a
// strictly clean tone sweep would repeat the same chunk verbatim and leave the
// normalizer with nothing to scale by.
constexpr double kDefaultNoiseSigma = 1e-3;

struct Manifest {
    std::vector<std::pair<std::string, std::string>> entries;  // hash, filename

    void add(const std::string& path) {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(read_file(path))));
        entries.emplace_back(buf, std::filesystem::path(path).filename().string());
    }

    void write(const std::string& dir) const {
        std::string out;
        for (const auto& [hash, name] : entries) out += hash + "  " + name + "\n";
        write_file(dir + "/manifest.txt", out);
    }
};

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    for (auto piece : split_csv(csv)) {
        if (!piece.empty()) out.emplace_back(piece);
    }
    return out;
}

/// "--sets 1,5" or "--sets set1,set5" both select by set name.
std::string canonical_set_name(const std::string& token) {
    const bool digits = !token.empty() && std::all_of(token.begin(), token.end(),
                                                      [](unsigned char c) { return std::isdigit(c); });
    return digits ? "set" + token : token;
}

std::vector<DetectorKind> parse_detectors(const std::string& csv) {
    if (csv.empty()) return all_detectors();
    std::vector<DetectorKind> out;
    for (const auto& name : split_list(csv)) out.push_back(detector_kind_from_string(name));
    return out;
}

std::vector<TransformKind> parse_transforms(const std::string& csv) {
    if (csv.empty()) return all_transforms();
    std::vector<TransformKind> out;
    for (const auto& name : split_list(csv)) out.push_back(transform_kind_from_string(name));
    return out;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::invalid_argument("cannot create output directory '" + dir + "': " + ec.message());
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateOptions {
    std::string out = "out";
    std::uint64_t seed = 0;
    double noise_sigma = kDefaultNoiseSigma;
    std::string sets;      // filter, empty = all eight
    double duration = 206.0;
    double chunk_len = 1.0;
    double sample_rate = kDefaultSampleRate;
};

int cmd_generate(const GenerateOptions& opt) {
    auto specs = default_dataset_specs(opt.noise_sigma);
    for (auto& s : specs) {
        s.duration = opt.duration;
        s.chunk_len = opt.chunk_len;
        s.sample_rate = opt.sample_rate;
    }
    if (!opt.sets.empty()) {
        std::vector<DatasetSpec> filtered;
        for (const auto& token : split_list(opt.sets)) {
            const std::string name = canonical_set_name(token);
            const auto it = std::find_if(specs.begin(), specs.end(),
                                         [&](const DatasetSpec& s) { return s.set_name == name; });
            if (it == specs.end()) throw std::invalid_argument("unknown set '" + name + "'");
            filtered.push_back(*it);
        }
        specs = std::move(filtered);
    }

    const Dataset ds = generate_dataset(specs, opt.seed);
    ensure_dir(opt.out);
    const std::string path = opt.out + "/dataset.csv";
    save_dataset(ds, path);

    Manifest manifest;
    manifest.add(path);
    manifest.write(opt.out);

    for (const auto& set : ds.sets) {
        std::printf("%s: %s p2p=%g fs=%g chunks=%zu x %zu samples\n", set.name.c_str(),
                    to_string(set.signal_type), set.target_p2p, set.sample_rate, set.chunks.size(),
                    set.chunks.empty() ? 0 : set.chunks[0].samples.size());
    }
    std::printf("wrote %s\n", path.c_str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

struct ExtractOptions {
    std::string data = "out/dataset.csv";
    std::string out = "out";
    int level = 6;
    std::string wavelet = "db4";
};

int cmd_extract(const ExtractOptions& opt) {
    const Dataset ds = load_dataset(opt.data);
    const WaveletSpec spec{parse_wavelet_name(opt.wavelet), opt.level};
    ensure_dir(opt.out);

    Manifest manifest;
    const auto names = feature_names(spec);
    for (const auto& set : ds.sets) {
        const Matrix features = extract_matrix(set.chunks, spec);
        const std::string path = opt.out + "/features_" + set.name + ".csv";
        save_feature_matrix(features, names, path);
        manifest.add(path);
        std::printf("%s: %zu chunks -> %zu features each\n", set.name.c_str(), features.rows,
                    features.cols);
    }
    manifest.write(opt.out);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// tune
// ---------------------------------------------------------------------------

struct TuneOptions {
    std::string data = "out/dataset.csv";
    std::string out = "out";
    std::string detectors;
    std::string transforms = "pca,aer,aea";
    std::size_t trials = 50;
    std::uint64_t seed = 0;
    bool resume = false;
};

int cmd_tune(const TuneOptions& opt) {
    const Dataset ds = load_dataset(opt.data);
    const BenchmarkConfig defaults;
    const TuningData data = prepare_tuning_data(ds, defaults.protocol, defaults.wavelet);
    ensure_dir(opt.out);

    Manifest manifest;
    for (DetectorKind detector : parse_detectors(opt.detectors)) {
        for (TransformKind transform : parse_transforms(opt.transforms)) {
            if (transform == TransformKind::original) {
                std::printf("%s/of: identity transform, nothing to tune\n", to_string(detector));
                continue;
            }
            const SearchSpace space = search_space_for(transform, data.train.cols);
            const std::string tag =
                std::string(to_string(detector)) + "_" + to_string(transform);
            const std::string history_path = opt.out + "/history_" + tag + ".csv";

            std::vector<Trial> prior;
            if (opt.resume && std::filesystem::exists(history_path)) {
                prior = parse_history_csv(read_lines(history_path), space);
            }

            const auto objective = make_variance_objective(data, detector, transform, space,
                                                           defaults.detector_config, opt.seed);
            const OptimizeResult result =
                optimize(space, objective, opt.trials, mix_seed(opt.seed, fnv1a64(tag)), prior);

            write_file(history_path, render_history_csv(space, result.history));
            const std::string best_path = opt.out + "/best_" + tag + ".params";
            write_file(best_path, render_best_params(detector, transform, space, result.best));
            manifest.add(history_path);
            manifest.add(best_path);
            std::printf("%s/%s: %zu trials, best J=%g\n", to_string(detector), to_string(transform),
                        result.history.size(), result.best.objective);
        }
    }
    manifest.write(opt.out);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// benchmark
// ---------------------------------------------------------------------------

struct BenchmarkOptions {
    std::string data = "out/dataset.csv";
    std::string out = "out";
    std::string detectors;
    std::string transforms;
    std::string params_dir;
    std::uint64_t seed = 0;
    bool no_timing = false;
    bool save_models = false;
};

TransformConfig apply_best_params(TransformConfig base, TransformKind kind,
                                  const std::string& path) {
    const auto kv = parse_key_values(read_lines(path));
    const SearchSpace space = search_space_for(kind);
    std::vector<double> params;
    for (const auto& p : space.params) {
        const auto it = kv.find(p.name);
        if (it == kv.end()) throw std::invalid_argument("params file " + path + " lacks " + p.name);
        params.push_back(parse_double(it->second, 1, p.name));
    }
    return transform_config_from_params(kind, space, params, base);
}

int cmd_benchmark(const BenchmarkOptions& opt) {
    const Dataset ds = load_dataset(opt.data);

    BenchmarkConfig config;
    config.seed = opt.seed;
    config.measure_timing = !opt.no_timing;
    config.combos.clear();
    const auto detectors = parse_detectors(opt.detectors);
    const auto transforms = parse_transforms(opt.transforms);
    for (DetectorKind d : detectors)
        for (TransformKind t : transforms) config.combos.push_back({d, t});

    if (!opt.params_dir.empty()) {
        for (DetectorKind d : detectors) {
            TransformConfig tc = default_transform_config(d);
            bool any = false;
            for (TransformKind t : {TransformKind::pca, TransformKind::aer, TransformKind::aea}) {
                const std::string path = opt.params_dir + "/best_" + to_string(d) + "_" +
                                         to_string(t) + ".params";
                if (std::filesystem::exists(path)) {
                    tc = apply_best_params(tc, t, path);
                    any = true;
                }
            }
            if (any) config.transform_overrides.emplace_back(d, tc);
        }
    }

    std::vector<FittedCombo> fitted;
    const BenchmarkResult result = run_benchmark(ds, config, opt.save_models ? &fitted : nullptr);

    ensure_dir(opt.out);
    const ExportedReport paths = export_report(result, config, opt.out);
    Manifest manifest;
    manifest.add(paths.report_csv_path);
    manifest.add(paths.traces_csv_path);
    manifest.add(paths.report_json_path);

    if (opt.save_models) {
        for (const auto& fc : fitted) {
            ScoreBundle bundle{config.wavelet, fc.normalizer, fc.transform, fc.detector, fc.scaler};
            const std::string path = opt.out + "/bundle_" + to_string(fc.combo.detector) + "_" +
                                     to_string(fc.combo.transform) + ".model";
            save_bundle(bundle, path);
            manifest.add(path);
        }
    }
    manifest.write(opt.out);

    std::size_t failures = 0;
    for (const auto& row : result.rows) {
        failures += row.failed;
        if (row.failed) {
            std::printf("%s/%s: FAILED %s\n", to_string(row.detector), to_string(row.transform),
                        row.flags.c_str());
        } else {
            std::printf("%s/%s: n_f=%zu fp=%.2f%% variance=%g reactivity=%s\n",
                        to_string(row.detector), to_string(row.transform), row.n_f, row.fp_pct,
                        row.variance_scaled,
                        row.reactivity ? format_double(*row.reactivity).c_str() : "absent");
        }
    }
    std::printf("report: %s (%zu rows, %zu failed)\n", paths.report_csv_path.c_str(),
                result.rows.size(), failures);
    return failures == result.rows.size() ? kExitFailure : kExitOk;
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

struct ScoreOptions {
    std::string model;
    std::string input;
};

int cmd_score(const ScoreOptions& opt) {
    const ScoreBundle bundle = load_bundle(opt.model);
    const Dataset ds = load_dataset(opt.input);

    std::printf("chunk,nm_raw,nm_scaled\n");
    std::size_t index = 0;
    for (const auto& set : ds.sets) {
        for (const auto& ts : set.chunks) {
            const auto features = extract(ts, bundle.wavelet);
            if (features.size() != bundle.normalizer.mean.size()) {
                throw std::invalid_argument(
                    "feature dimension " + std::to_string(features.size()) +
                    " does not match the model's " + std::to_string(bundle.normalizer.mean.size()));
            }
            const auto latent = apply_transform(bundle.transform, normalize(features, bundle.normalizer));
            const double nm = novelty_metric(bundle.detector, latent);
            std::printf("%zu,%s,%s\n", index++, format_double(nm).c_str(),
                        format_double(scale_nm(bundle.scaler, nm)).c_str());
        }
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report(const std::string& in_path) {
    const auto rows = parse_report_csv(read_lines(in_path));
    std::printf("%-8s %-5s %5s %8s %14s %14s %14s %12s %14s\n", "detector", "trans", "n_f", "fp_pct",
                "variance", "mean_nominal", "mean_novel", "reactivity", "infer_us_mean");
    for (const auto& r : rows) {
        if (r.failed) {
            std::printf("%-8s %-5s %s\n", to_string(r.detector), to_string(r.transform),
                        r.flags.c_str());
            continue;
        }
        char novel[32] = "-", react[32] = "-";
        if (r.mean_novel) std::snprintf(novel, sizeof(novel), "%.6g", *r.mean_novel);
        if (r.reactivity) std::snprintf(react, sizeof(react), "%.6g", *r.reactivity);
        std::printf("%-8s %-5s %5zu %8.2f %14.6g %14.6g %14s %12s %14.4g\n", to_string(r.detector),
                    to_string(r.transform), r.n_f, r.fp_pct, r.variance_scaled, r.mean_nominal,
                    novel, react, r.infer_us_mean);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"novabench: unsupervised novelty-detection benchmark for vibration signals"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI config file (flags win)");

    GenerateOptions gen;
    auto* generate = app.add_subcommand("generate", "Synthesize the shaker dataset");
    generate->add_option("--out", gen.out, "Output directory")->capture_default_str();
    generate->add_option("--seed", gen.seed, "Noise stream seed")->capture_default_str();
    generate->add_option("--noise-sigma", gen.noise_sigma, "Additive Gaussian noise sigma")
        ->capture_default_str();
    generate->add_option("--sets", gen.sets, "Comma-separated set names or indices (default: all 8)");
    generate->add_option("--duration", gen.duration, "Record length per set, seconds")
        ->capture_default_str();
    generate->add_option("--chunk-len", gen.chunk_len, "Chunk length, seconds")->capture_default_str();
    generate->add_option("--fs", gen.sample_rate, "Sample rate, Hz")->capture_default_str();

    ExtractOptions ext;
    auto* extract_cmd = app.add_subcommand("extract", "Extract feature matrices from a dataset");
    extract_cmd->add_option("--data", ext.data, "Dataset file")->capture_default_str();
    extract_cmd->add_option("--out", ext.out, "Output directory")->capture_default_str();
    extract_cmd->add_option("--level", ext.level, "WPD depth L")->capture_default_str();
    extract_cmd->add_option("--wavelet", ext.wavelet, "Daubechies wavelet (db1..db8)")
        ->capture_default_str();

    TuneOptions tune;
    auto* tune_cmd = app.add_subcommand("tune", "Tune transform hyperparameters per detector");
    tune_cmd->add_option("--data", tune.data, "Dataset file")->capture_default_str();
    tune_cmd->add_option("--out", tune.out, "Output directory")->capture_default_str();
    tune_cmd->add_option("--detectors", tune.detectors, "Comma-separated detectors (default: all)");
    tune_cmd->add_option("--transforms", tune.transforms, "Comma-separated transforms")
        ->capture_default_str();
    tune_cmd->add_option("--trials", tune.trials, "Trials per combination")->capture_default_str();
    tune_cmd->add_option("--seed", tune.seed, "Optimizer seed")->capture_default_str();
    tune_cmd->add_flag("--resume", tune.resume, "Continue from an existing history file");

    BenchmarkOptions bench;
    auto* bench_cmd = app.add_subcommand("benchmark", "Run the full detector x transform benchmark");
    bench_cmd->add_option("--data", bench.data, "Dataset file")->capture_default_str();
    bench_cmd->add_option("--out", bench.out, "Output directory")->capture_default_str();
    bench_cmd->add_option("--detectors", bench.detectors, "Comma-separated detectors (default: all)");
    bench_cmd->add_option("--transforms", bench.transforms, "Comma-separated transforms (default: all)");
    bench_cmd->add_option("--params", bench.params_dir, "Directory of best_*.params from tune");
    bench_cmd->add_option("--seed", bench.seed, "Fitting seed")->capture_default_str();
    bench_cmd->add_flag("--no-timing", bench.no_timing, "Skip inference timing");
    bench_cmd->add_flag("--save-models", bench.save_models, "Persist a score bundle per combination");

    ScoreOptions score;
    auto* score_cmd = app.add_subcommand("score", "Score chunks from a file against a saved model");
    score_cmd->add_option("--model", score.model, "Score bundle path")->required();
    score_cmd->add_option("--input", score.input, "Dataset file with chunks to score")->required();

    std::string report_in = "out/report.csv";
    auto* report_cmd = app.add_subcommand("report", "Pretty-print a report.csv");
    report_cmd->add_option("--in", report_in, "Report file")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (generate->parsed()) return cmd_generate(gen);
        if (extract_cmd->parsed()) return cmd_extract(ext);
        if (tune_cmd->parsed()) return cmd_tune(tune);
        if (bench_cmd->parsed()) return cmd_benchmark(bench);
        if (score_cmd->parsed()) return cmd_score(score);
        if (report_cmd->parsed()) return cmd_report(report_in);
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const FileError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
    return kExitOk;
}
