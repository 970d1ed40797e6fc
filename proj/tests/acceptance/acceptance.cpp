// Acceptance suite: every criterion of the benchmark toolkit, one pass/fail
// line each, with the tolerances pinned in code. Exits nonzero when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "novabench/benchmark.hpp"
#include "novabench/hyperopt.hpp"
#include "novabench/report.hpp"
#include "novabench/rng.hpp"
#include "novabench/signal.hpp"

using namespace novabench;

namespace {

struct Outcome {
    bool passed = true;
    std::string detail;

    void fail(const std::string& why) {
        passed = false;
        if (!detail.empty()) detail += "; ";
        detail += why;
    }
    void note(const std::string& info) {
        if (detail.empty()) detail = info;
    }
};

std::vector<double> random_chunk(Rng& rng, std::size_t n = 1666) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.normal();
    return x;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// Shared full-pipeline state for criteria 8, 9, 10 and 12.
// ---------------------------------------------------------------------------

struct PipelineRun {
    BenchmarkResult result;
    std::string report_csv;
    std::string traces_csv;
    std::string report_json;
};

PipelineRun run_full_pipeline(bool with_timing) {
    const auto specs = default_dataset_specs(1e-3);  // the study's noise floor
    const Dataset ds = generate_dataset(specs, 0);
    BenchmarkConfig config;
    config.seed = 0;
    config.measure_timing = with_timing;
    PipelineRun run;
    run.result = run_benchmark(ds, config);
    run.report_csv = render_report_csv(run.result.rows);
    run.traces_csv = render_traces_csv(run.result);
    run.report_json = render_report_json(run.result, config);
    return run;
}

std::string strip_timing_columns(const std::string& report_csv) {
    std::string out;
    std::size_t start = 0;
    bool header = true;
    while (start < report_csv.size()) {
        const auto nl = report_csv.find('\n', start);
        const std::string line = report_csv.substr(start, nl - start);
        start = nl + 1;
        if (header) {
            out += line + '\n';
            header = false;
            continue;
        }
        auto fields = split_csv(line);
        std::string rebuilt;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) rebuilt += ',';
            rebuilt += (i == 9 || i == 10) ? "-" : std::string(fields[i]);
        }
        out += rebuilt + '\n';
    }
    return out;
}

// Scaled-NM medians per set for one detector/OF combination.
std::map<std::string, double> of_medians(const PipelineRun& run, DetectorKind detector) {
    for (std::size_t i = 0; i < run.result.rows.size(); ++i) {
        const auto& row = run.result.rows[i];
        if (row.detector != detector || row.transform != TransformKind::original) continue;
        std::map<std::string, std::vector<double>> by_set;
        for (const auto& p : run.result.traces[i]) by_set[p.set_name].push_back(p.nm_scaled);
        std::map<std::string, double> med;
        for (auto& [name, scores] : by_set) med[name] = median(std::move(scores));
        return med;
    }
    throw std::runtime_error("combination not found in the run");
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

Outcome criterion_feature_dimensionality() {
    Outcome o;
    const auto ts = chunk(scale_to_p2p(synth_signal(harmonic_spec(SignalType::v1), 2.0, 1666.0), 0.25),
                          1.0);
    const auto features = extract(ts[0], WaveletSpec{4, 6});
    if (features.size() != 70) o.fail("expected 70 features, got " + std::to_string(features.size()));
    o.note("L=6 -> " + std::to_string(features.size()) + " features");
    return o;
}

Outcome criterion_parseval() {
    Outcome o;
    Rng rng(101);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const auto x = random_chunk(rng);
        double energy = 0.0;
        for (double v : x) energy += v * v;
        for (int level = 1; level <= 6; ++level) {
            const auto norms = wpd_norms(x, WaveletSpec{4, level});
            double wpd_energy = 0.0;
            for (double v : norms) wpd_energy += v * v;
            worst = std::max(worst, std::abs(wpd_energy - energy) / energy);
        }
    }
    if (worst > 1e-9) o.fail("relative energy error " + format_double(worst));
    o.note("max relative error " + format_double(worst));
    return o;
}

Outcome criterion_kmeans_trichotomy() {
    Outcome o;
    KMeansModel m;
    m.k = 2;
    m.centroids = Matrix(2, 2);
    m.centroids(1, 0) = 50.0;
    m.radii = {1.0, 2.0};
    if (nm_kmeans(m, std::vector<double>{0.0, 0.0}) != -1.0) o.fail("centroid must score exactly -1");
    if (nm_kmeans(m, std::vector<double>{0.0, 1.0}) != 0.0) o.fail("radius sphere must score exactly 0");
    if (nm_kmeans(m, std::vector<double>{2.0, 0.0}) != 1.0) o.fail("2r must score exactly +1");
    return o;
}

Outcome criterion_dbscan_linearity() {
    Outcome o;
    DBSCANModel m;
    m.retained = Matrix(1, 1);
    m.epsilon = 0.25;
    for (double mult : {0.5, 1.0, 2.0, 7.0}) {
        const double nm = nm_dbscan(m, std::vector<double>{mult * m.epsilon});
        if (std::abs(nm - mult) > 1e-12) {
            o.fail("NM(" + format_double(mult) + "*eps) = " + format_double(nm));
        }
    }
    return o;
}

double silhouette_oracle(const Matrix& x, const std::vector<std::size_t>& assignment) {
    std::size_t k = 0;
    for (auto a : assignment) k = std::max(k, a + 1);
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        std::size_t own = 0;
        for (std::size_t j = 0; j < x.rows; ++j) own += assignment[j] == assignment[i];
        if (own == 1) continue;
        double a_sum = 0.0;
        for (std::size_t j = 0; j < x.rows; ++j)
            if (j != i && assignment[j] == assignment[i]) a_sum += distance(x.row(i), x.row(j));
        const double a = a_sum / static_cast<double>(own - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c == assignment[i]) continue;
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t j = 0; j < x.rows; ++j)
                if (assignment[j] == c) {
                    sum += distance(x.row(i), x.row(j));
                    ++count;
                }
            if (count) b = std::min(b, sum / static_cast<double>(count));
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(x.rows);
}

double lof_oracle(const Matrix& x, std::size_t k, std::span<const double> query) {
    const std::size_t n = x.rows;
    auto knn_of = [&](std::span<const double> p, bool exclude, std::size_t self) {
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t j = 0; j < n; ++j) {
            if (exclude && j == self) continue;
            d.emplace_back(distance(p, x.row(j)), j);
        }
        std::sort(d.begin(), d.end());
        std::size_t count = k;
        while (count < d.size() && d[count].first == d[k - 1].first) ++count;
        d.resize(count);
        return d;
    };
    std::vector<double> kdist(n);
    for (std::size_t i = 0; i < n; ++i) kdist[i] = knn_of(x.row(i), true, i)[k - 1].first;
    auto lrd_of = [&](const std::vector<std::pair<double, std::size_t>>& nb) {
        double reach = 0.0;
        for (const auto& [d, j] : nb) reach += std::max(kdist[j], d);
        return 1.0 / std::max(reach / static_cast<double>(nb.size()), 1e-12);
    };
    std::vector<double> lrd(n);
    for (std::size_t i = 0; i < n; ++i) lrd[i] = lrd_of(knn_of(x.row(i), true, i));
    const auto nb = knn_of(query, false, 0);
    double sum = 0.0;
    for (const auto& [d, j] : nb) sum += lrd[j];
    return sum / static_cast<double>(nb.size()) / lrd_of(nb);
}

Outcome criterion_oracles() {
    Outcome o;
    Rng rng(55);

    // Silhouette vs the literal equations on a 100-point instance.
    Matrix x(100, 3);
    for (double& v : x.data) v = rng.normal();
    std::vector<std::size_t> assignment(100);
    for (std::size_t i = 0; i < 100; ++i) assignment[i] = i % 3;  // every cluster nonempty
    const double sil = silhouette(x, assignment);
    const double sil_want = silhouette_oracle(x, assignment);
    if (std::abs(sil - sil_want) > 1e-9) o.fail("silhouette off by " + format_double(sil - sil_want));

    // LOF vs the O(n^2) direct definition.
    Matrix pts(100, 2);
    for (double& v : pts.data) v = rng.uniform(0.0, 10.0);
    const auto lof = fit_lof(pts, 20);
    double worst = 0.0;
    for (int rep = 0; rep < 25; ++rep) {
        const std::vector<double> q = {rng.uniform(-2.0, 12.0), rng.uniform(-2.0, 12.0)};
        worst = std::max(worst, std::abs(nm_lof(lof, q) - lof_oracle(pts, 20, q)));
    }
    if (worst > 1e-9) o.fail("LOF deviates from its oracle by " + format_double(worst));

    // OCSVM dual vs an exhaustive grid on 4 points.
    Matrix four(4, 2);
    four(1, 0) = 1.0;
    four(1, 1) = 0.3;
    four(2, 0) = 0.2;
    four(2, 1) = 1.1;
    four(3, 0) = 1.4;
    four(3, 1) = 1.2;
    OCSVMConfig svc;
    svc.nu = 0.5;
    svc.gamma = 0.7;
    svc.kkt_tolerance = 1e-6;
    const auto svm = fit_ocsvm(four, svc);
    const double c = 1.0 / (svc.nu * 4.0);
    Matrix kernel(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            kernel(i, j) = std::exp(-svc.gamma * squared_distance(four.row(i), four.row(j)));
    double grid_best = std::numeric_limits<double>::infinity();
    const double step = 0.0025;
    for (double a0 = 0.0; a0 <= c + 1e-12; a0 += step)
        for (double a1 = 0.0; a1 <= c + 1e-12; a1 += step)
            for (double a2 = 0.0; a2 <= c + 1e-12; a2 += step) {
                const double a3 = 1.0 - a0 - a1 - a2;
                if (a3 < -1e-12 || a3 > c + 1e-12) continue;
                const double a[4] = {a0, a1, a2, a3};
                double obj = 0.0;
                for (std::size_t i = 0; i < 4; ++i)
                    for (std::size_t j = 0; j < 4; ++j) obj += a[i] * a[j] * kernel(i, j);
                grid_best = std::min(grid_best, 0.5 * obj);
            }
    const double gap = std::abs(ocsvm_dual_objective(svm) - grid_best);
    if (gap > 1e-3) o.fail("OCSVM dual objective off the grid optimum by " + format_double(gap));
    o.note("silhouette/LOF/OCSVM oracle gaps: " + format_double(std::abs(sil - sil_want)) + ", " +
           format_double(worst) + ", " + format_double(gap));
    return o;
}

Outcome criterion_gmm_monotonic() {
    Outcome o;
    double worst_drop = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed * 7 + 1);
        Matrix x(120, 3);
        for (std::size_t i = 0; i < 120; ++i) {
            const bool second = i >= 60;
            for (std::size_t j = 0; j < 3; ++j) {
                x(i, j) = (second ? 3.5 : 0.0) + rng.normal();
            }
        }
        GMMConfig config;
        config.k_min = 1;
        config.k_max = 3;
        const auto m = fit_gmm(x, config, seed);
        for (std::size_t t = 1; t < m.loglik_trace.size(); ++t) {
            worst_drop = std::max(worst_drop, m.loglik_trace[t - 1] - m.loglik_trace[t]);
        }
    }
    if (worst_drop > 1e-9) o.fail("log-likelihood dropped by " + format_double(worst_drop));
    o.note("worst per-iteration drop " + format_double(worst_drop));
    return o;
}

Outcome criterion_ae_gradients() {
    Outcome o;
    Rng rng(77);
    Matrix x(5, 6);
    for (double& v : x.data) v = rng.normal();
    auto m = fit_autoencoder(x, AEVariant::undercomplete, {5, 3}, {0.01, 5, 0, 0.01}, 4);

    auto grads = detail::zero_gradients(m);
    for (std::size_t i = 0; i < x.rows; ++i) detail::accumulate_gradients(m, x.row(i), grads);
    const double denom = static_cast<double>(x.rows) * static_cast<double>(x.cols);

    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t layer = 0; layer < 4; ++layer) {
        for (std::size_t idx = 0; idx < m.weights[layer].data.size(); ++idx) {
            double& w = m.weights[layer].data[idx];
            const double saved = w;
            w = saved + h;
            const double up = reconstruction_loss(m, x);
            w = saved - h;
            const double down = reconstruction_loss(m, x);
            w = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = grads.weights[layer].data[idx] / denom;
            const double rel = std::abs(analytic - numeric) /
                               std::max({std::abs(analytic), std::abs(numeric), 1e-6});
            worst = std::max(worst, rel);
        }
    }
    if (worst > 1e-4) o.fail("worst relative gradient error " + format_double(worst));
    o.note("worst relative gradient error " + format_double(worst));
    return o;
}

Outcome criterion_benchmark_shape(const PipelineRun& run, double elapsed_seconds) {
    Outcome o;
    if (run.result.rows.size() != 24) {
        o.fail("expected 24 rows, got " + std::to_string(run.result.rows.size()));
    }
    for (std::size_t i = 0; i < run.result.rows.size(); ++i) {
        const auto& row = run.result.rows[i];
        const std::string tag = std::string(to_string(row.detector)) + "/" + to_string(row.transform);
        if (row.failed) {
            o.fail(tag + " failed: " + row.flags);
            continue;
        }
        if (row.n_f == 0 || !std::isfinite(row.fp_pct) || !std::isfinite(row.variance_scaled) ||
            !std::isfinite(row.variance_raw) || !std::isfinite(row.mean_nominal) ||
            !row.mean_novel || !row.reactivity || !(row.infer_us_mean > 0.0) ||
            !(row.infer_us_median > 0.0)) {
            o.fail(tag + " has unpopulated columns");
        }
        if (run.result.traces[i].size() != 1548) {
            o.fail(tag + " trace length " + std::to_string(run.result.traces[i].size()));
        }
    }
    if (elapsed_seconds >= 600.0) o.fail("run took " + format_double(elapsed_seconds) + " s");
    o.note("24 rows, 1548-chunk traces, " + format_double(elapsed_seconds) + " s");
    return o;
}

Outcome criterion_fig6_trend(const PipelineRun& run) {
    Outcome o;
    const std::vector<std::string> v1_sets = {"set1", "set2", "set3", "set4", "set5"};
    for (DetectorKind d :
         {DetectorKind::kmeans, DetectorKind::dbscan, DetectorKind::gmm, DetectorKind::lof}) {
        const auto med = of_medians(run, d);
        for (std::size_t s = 1; s < v1_sets.size(); ++s) {
            if (!(med.at(v1_sets[s]) > med.at(v1_sets[s - 1]))) {
                o.fail(std::string(to_string(d)) + ": median(" + v1_sets[s] + ") <= median(" +
                       v1_sets[s - 1] + ")");
            }
        }
        for (const char* novel : {"set6", "set7", "set8"}) {
            if (!(med.at(novel) > med.at("set2"))) {
                o.fail(std::string(to_string(d)) + ": median(" + novel + ") <= median(set2)");
            }
        }
    }
    const auto nusvm = of_medians(run, DetectorKind::nusvm);
    for (const char* novel : {"set2", "set3", "set4", "set5", "set6", "set7", "set8"}) {
        if (!(nusvm.at(novel) > 0.9)) {
            o.fail("nusvm median on " + std::string(novel) + " = " + format_double(nusvm.at(novel)));
        }
    }
    return o;
}

Outcome criterion_reactivity(const PipelineRun& run) {
    Outcome o;
    double weakest = std::numeric_limits<double>::infinity();
    for (const auto& row : run.result.rows) {
        if (row.transform != TransformKind::original) continue;
        if (row.failed || !row.reactivity) {
            o.fail(std::string(to_string(row.detector)) + "/of produced no reactivity");
            continue;
        }
        weakest = std::min(weakest, *row.reactivity);
        if (!(*row.reactivity > 0.5)) {
            o.fail(std::string(to_string(row.detector)) + "/of reactivity " +
                   format_double(*row.reactivity));
        }
    }
    o.note("weakest detector/OF reactivity " + format_double(weakest));
    return o;
}

Outcome criterion_hyperopt_toy() {
    Outcome o;
    SearchSpace space;
    space.params = {{"x", ParamKind::integer, 0, 1000, {}}};
    const auto quadratic = [](std::span<const double> p) {
        const double d = p[0] - 437.0;
        return d * d;
    };
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto result = optimize(space, quadratic, 30, seed);
        const double err = std::abs(result.best.params[0] - 437.0);
        if (err > 50.0) {
            o.fail("seed " + std::to_string(seed) + " missed the minimum by " + format_double(err));
        }
        double incumbent = std::numeric_limits<double>::infinity();
        double prev = incumbent;
        for (const auto& t : result.history) {
            if (!t.failed) incumbent = std::min(incumbent, t.objective);
            if (incumbent > prev) o.fail("incumbent increased");
            prev = incumbent;
        }
    }
    return o;
}

Outcome criterion_determinism(const PipelineRun& first, const PipelineRun& second) {
    Outcome o;
    if (strip_timing_columns(first.report_csv) != strip_timing_columns(second.report_csv)) {
        o.fail("report.csv differs outside the timing columns");
    }
    if (first.traces_csv != second.traces_csv) o.fail("traces.csv differs");
    if (first.report_json != second.report_json) o.fail("report.json differs");
    return o;
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    int failures = 0;
    int index = 0;

    const auto report = [&](const char* name, Outcome o, double seconds, double budget_seconds) {
        ++index;
        if (budget_seconds > 0.0 && seconds >= budget_seconds) {
            o.fail("exceeded the " + format_double(budget_seconds) + " s budget");
        }
        std::printf("[%2d/12] %-28s %s (%.2f s)%s%s\n", index, name, o.passed ? "PASS" : "FAIL",
                    seconds, o.detail.empty() ? "" : " -- ", o.detail.c_str());
        failures += !o.passed;
        std::fflush(stdout);
    };

    const auto timed = [&](const char* name, const std::function<Outcome()>& fn,
                           double budget_seconds = 0.0) {
        const auto t0 = clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        report(name, o, std::chrono::duration<double>(clock::now() - t0).count(), budget_seconds);
    };

    timed("feature-dimensionality", criterion_feature_dimensionality, 1.0);
    timed("wpd-parseval", criterion_parseval, 5.0);
    timed("kmeans-trichotomy", criterion_kmeans_trichotomy);
    timed("dbscan-linearity", criterion_dbscan_linearity);
    timed("oracle-equivalence", criterion_oracles, 30.0);
    timed("gmm-em-monotonicity", criterion_gmm_monotonic, 30.0);
    timed("ae-gradient-check", criterion_ae_gradients, 10.0);

    // One full pipeline run feeds criteria 8-10; a second one feeds 12.
    PipelineRun first;
    double first_seconds = 0.0;
    {
        const auto t0 = clock::now();
        try {
            first = run_full_pipeline(true);
        } catch (const std::exception& e) {
            Outcome o;
            o.fail(std::string("pipeline exception: ") + e.what());
            report("benchmark-shape", o, 0.0, 0.0);
            report("fig6-trend", o, 0.0, 0.0);
            report("reactivity-threshold", o, 0.0, 0.0);
            timed("hyperopt-toy-convergence", criterion_hyperopt_toy, 60.0);
            report("pipeline-determinism", o, 0.0, 0.0);
            std::printf("%d of 12 criteria failed\n", failures);
            return failures ? 1 : 0;
        }
        first_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    }
    report("benchmark-shape", criterion_benchmark_shape(first, first_seconds), first_seconds, 600.0);
    timed("fig6-trend", [&] { return criterion_fig6_trend(first); }, 600.0);
    timed("reactivity-threshold", [&] { return criterion_reactivity(first); });
    timed("hyperopt-toy-convergence", criterion_hyperopt_toy, 60.0);
    // Both full pipeline runs fit inside the determinism budget.
    timed("pipeline-determinism", [&] {
        const auto second = run_full_pipeline(true);
        return criterion_determinism(first, second);
    }, 1200.0 - first_seconds);

    if (failures == 0) {
        std::printf("all 12 criteria passed\n");
    } else {
        std::printf("%d of 12 criteria failed\n", failures);
    }
    return failures ? 1 : 0;
}
