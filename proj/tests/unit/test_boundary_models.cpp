#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "novabench/detector.hpp"
#include "novabench/iforest.hpp"
#include "novabench/lof.hpp"
#include "novabench/ocsvm.hpp"
#include "novabench/rng.hpp"

using namespace novabench;

namespace {

Matrix gaussian_blob(std::size_t n, std::vector<double> center, double spread, Rng& rng) {
    Matrix m(n, center.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < center.size(); ++j) m(i, j) = center[j] + spread * rng.normal();
    }
    return m;
}

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
}

// Exhaustive grid search of the one-class dual on a 4-point instance.
double ocsvm_grid_oracle(const Matrix& x, double nu, double gamma, double step) {
    const std::size_t n = x.rows;
    const double c = 1.0 / (nu * static_cast<double>(n));
    Matrix k(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            k(i, j) = std::exp(-gamma * squared_distance(x.row(i), x.row(j)));

    double best = std::numeric_limits<double>::infinity();
    for (double a0 = 0.0; a0 <= c + 1e-12; a0 += step) {
        for (double a1 = 0.0; a1 <= c + 1e-12; a1 += step) {
            for (double a2 = 0.0; a2 <= c + 1e-12; a2 += step) {
                const double a3 = 1.0 - a0 - a1 - a2;
                if (a3 < -1e-12 || a3 > c + 1e-12) continue;
                const double a[4] = {a0, a1, a2, a3};
                double objective = 0.0;
                for (std::size_t i = 0; i < 4; ++i)
                    for (std::size_t j = 0; j < 4; ++j) objective += a[i] * a[j] * k(i, j);
                best = std::min(best, 0.5 * objective);
            }
        }
    }
    return best;
}

// Direct-definition LOF in novelty mode, all O(n^2), used as the oracle.
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
    const double lrd_q = lrd_of(nb);
    double sum = 0.0;
    for (const auto& [d, j] : nb) sum += lrd[j];
    return sum / static_cast<double>(nb.size()) / lrd_q;
}

}  // namespace

TEST_CASE("fit_ocsvm") {
    Rng rng(12);

    SUBCASE("dual feasibility at convergence") {
        const auto x = gaussian_blob(60, {0, 0}, 1.0, rng);
        OCSVMConfig config;
        config.nu = 0.1;
        const auto m = fit_ocsvm(x, config);
        const double c = 1.0 / (config.nu * 60.0);
        double sum = 0.0;
        for (double a : m.alphas) {
            CHECK(a >= 0.0);
            CHECK(a <= c + 1e-9);
            sum += a;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }

    SUBCASE("nu bounds the training outlier fraction") {
        const auto x = gaussian_blob(500, {0, 0}, 1.0, rng);
        OCSVMConfig config;
        config.nu = 0.05;
        const auto m = fit_ocsvm(x, config);
        std::size_t outliers = 0;
        for (std::size_t i = 0; i < x.rows; ++i) outliers += ocsvm_decision(m, x.row(i)) < 0.0;
        const double fraction = static_cast<double>(outliers) / 500.0;
        CHECK(fraction <= config.nu + 2.0 / std::sqrt(500.0));
    }

    SUBCASE("4-point dual matches the grid-search oracle") {
        const auto x = from_rows({{0.0, 0.0}, {1.0, 0.3}, {0.2, 1.1}, {1.4, 1.2}});
        OCSVMConfig config;
        config.nu = 0.5;
        config.gamma = 0.7;
        config.kkt_tolerance = 1e-6;
        const auto m = fit_ocsvm(x, config);
        const double grid = ocsvm_grid_oracle(x, 0.5, 0.7, 0.0025);
        CHECK(ocsvm_dual_objective(m) == doctest::Approx(grid).epsilon(1e-3));
    }

    SUBCASE("decision function is invariant to training order") {
        const auto x = gaussian_blob(40, {0, 0, 0}, 1.0, rng);
        Matrix reversed(x.rows, x.cols);
        for (std::size_t i = 0; i < x.rows; ++i) {
            std::copy(x.row(x.rows - 1 - i).begin(), x.row(x.rows - 1 - i).end(),
                      reversed.row(i).begin());
        }
        OCSVMConfig config;
        config.kkt_tolerance = 1e-7;
        const auto a = fit_ocsvm(x, config);
        const auto b = fit_ocsvm(reversed, config);
        for (int rep = 0; rep < 10; ++rep) {
            const std::vector<double> q = {rng.normal(), rng.normal(), rng.normal()};
            CHECK(ocsvm_decision(a, q) == doctest::Approx(ocsvm_decision(b, q)).epsilon(1e-5));
        }
    }

    SUBCASE("parameter validation") {
        const auto x = gaussian_blob(10, {0}, 1.0, rng);
        OCSVMConfig config;
        config.nu = 0.0;
        CHECK_THROWS_AS(fit_ocsvm(x, config), std::invalid_argument);
        config.nu = 1.5;
        CHECK_THROWS_AS(fit_ocsvm(x, config), std::invalid_argument);
    }
}

TEST_CASE("nm_ocsvm") {
    Rng rng(13);
    const auto x = gaussian_blob(80, {0, 0}, 1.0, rng);
    OCSVMConfig config;
    config.nu = 0.1;
    const auto m = fit_ocsvm(x, config);

    SUBCASE("an interior training point scores negative") {
        // The deepest interior point has the largest decision value.
        double best = -1e300;
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double f = ocsvm_decision(m, x.row(i));
            if (f > best) {
                best = f;
                best_i = i;
            }
        }
        CHECK(nm_ocsvm(m, x.row(best_i)) < 0.0);
    }

    SUBCASE("zero decision value maps to zero metric") {
        OCSVMModel flat;
        flat.support_vectors = from_rows({{0.0, 0.0}});
        flat.alphas = {1.0};
        flat.gamma = 1.0;
        flat.rho = 1.0;  // f(origin) = k(0,0) - 1 = 0
        flat.w_norm = 1.0;
        CHECK(nm_ocsvm(flat, std::vector<double>{0.0, 0.0}) == 0.0);
    }

    SUBCASE("nondecreasing along an outbound ray past the boundary") {
        double prev = -std::numeric_limits<double>::infinity();
        for (double r = 4.0; r <= 40.0; r += 2.0) {
            const double nm = nm_ocsvm(m, std::vector<double>{r, 0.0});
            CHECK(nm >= prev - 1e-12);
            prev = nm;
        }
        CHECK(prev > 0.0);
    }
}

TEST_CASE("iforest") {
    Rng rng(14);

    SUBCASE("average path normalizer uses exact harmonic numbers") {
        CHECK(iforest_average_path(0) == 0.0);
        CHECK(iforest_average_path(1) == 0.0);
        CHECK(iforest_average_path(2) == 1.0);  // 2*H(1) - 2*(1/2)
        CHECK(iforest_average_path(4) ==
              doctest::Approx(2.0 * (1.0 + 0.5 + 1.0 / 3.0) - 1.5).epsilon(1e-12));
    }

    SUBCASE("identical points score exactly one half") {
        Matrix x(50, 3, 2.0);
        const auto m = fit_iforest(x, {100, 256, 0}, 0);
        CHECK(nm_iforest(m, std::vector<double>{2.0, 2.0, 2.0}) == doctest::Approx(0.5).epsilon(1e-12));
    }

    SUBCASE("score formula endpoints") {
        // A single all-leaf tree pins the expected path length, so the
        // anomaly score 2^(-E/c) can be checked directly.
        IForestModel m;
        m.dim = 1;
        m.subsample = 64;
        IsolationTree tree;
        IsolationNode leaf;
        leaf.size = 64;
        tree.nodes.push_back(leaf);
        m.trees.push_back(tree);

        m.normalizer = iforest_average_path(64);  // E = c -> 0.5
        CHECK(nm_iforest(m, std::vector<double>{0.0}) == doctest::Approx(0.5).epsilon(1e-12));
        m.normalizer = iforest_average_path(64) / 2.0;  // E = 2c -> 0.25
        CHECK(nm_iforest(m, std::vector<double>{0.0}) == doctest::Approx(0.25).epsilon(1e-12));
    }

    SUBCASE("scores stay strictly inside (0, 1)") {
        const auto x = gaussian_blob(200, {0, 0}, 1.0, rng);
        const auto m = fit_iforest(x, {100, 256, 0}, 1);
        for (int rep = 0; rep < 100; ++rep) {
            const std::vector<double> q = {rng.uniform(-20, 20), rng.uniform(-20, 20)};
            const double nm = nm_iforest(m, q);
            CHECK(nm > 0.0);
            CHECK(nm < 1.0);
        }
    }

    SUBCASE("far points score above the bulk") {
        const auto x = gaussian_blob(256, {0, 0}, 1.0, rng);
        const auto m = fit_iforest(x, {100, 256, 0}, 2);
        double bulk = 0.0;
        for (std::size_t i = 0; i < 50; ++i) bulk += nm_iforest(m, x.row(i));
        bulk /= 50.0;
        const double far = nm_iforest(m, std::vector<double>{30.0, -25.0});
        CHECK(far > bulk);
    }

    SUBCASE("ensemble variance across seeds shrinks with more trees") {
        const auto x = gaussian_blob(100, {0, 0}, 1.0, rng);
        const std::vector<double> q = {3.0, 3.0};
        auto spread = [&](std::size_t trees) {
            std::vector<double> scores;
            for (std::uint64_t seed = 0; seed < 10; ++seed) {
                scores.push_back(nm_iforest(fit_iforest(x, {trees, 100, 0}, seed), q));
            }
            double mean = 0.0;
            for (double s : scores) mean += s;
            mean /= static_cast<double>(scores.size());
            double var = 0.0;
            for (double s : scores) var += (s - mean) * (s - mean);
            return var / static_cast<double>(scores.size());
        };
        CHECK(spread(200) <= spread(10));
    }

    SUBCASE("deterministic given the seed") {
        const auto x = gaussian_blob(64, {0, 0}, 1.0, rng);
        const auto a = fit_iforest(x, {50, 64, 0}, 123);
        const auto b = fit_iforest(x, {50, 64, 0}, 123);
        const std::vector<double> q = {1.0, -1.0};
        CHECK(nm_iforest(a, q) == nm_iforest(b, q));
    }
}

TEST_CASE("lof") {
    Rng rng(16);

    SUBCASE("interior grid point scores about 1") {
        Matrix grid(121, 2);
        for (std::size_t i = 0; i < 121; ++i) {
            grid(i, 0) = static_cast<double>(i % 11);
            grid(i, 1) = static_cast<double>(i / 11);
        }
        const auto m = fit_lof(grid, 8);
        CHECK(nm_lof(m, std::vector<double>{5.2, 5.3}) == doctest::Approx(1.0).epsilon(0.15));
    }

    SUBCASE("far queries score much higher and increase with distance") {
        const auto x = gaussian_blob(100, {0, 0}, 1.0, rng);
        const auto m = fit_lof(x, 20);
        const double near = nm_lof(m, std::vector<double>{8.0, 0.0});
        const double far = nm_lof(m, std::vector<double>{25.0, 0.0});
        CHECK(near > 2.0);
        CHECK(far > near);
    }

    SUBCASE("matches the brute-force oracle on random instances") {
        Matrix x(100, 2);
        for (double& v : x.data) v = rng.uniform(0.0, 10.0);
        const auto m = fit_lof(x, 20);
        for (int rep = 0; rep < 20; ++rep) {
            const std::vector<double> q = {rng.uniform(-2.0, 12.0), rng.uniform(-2.0, 12.0)};
            CHECK(nm_lof(m, q) == doctest::Approx(lof_oracle(x, 20, q)).epsilon(1e-9));
        }
    }

    SUBCASE("duplicate-heavy data stays finite through the reachability floor") {
        Matrix x(30, 2, 1.0);  // all identical
        const auto m = fit_lof(x, 5);
        const double nm = nm_lof(m, std::vector<double>{1.0, 1.0});
        CHECK(std::isfinite(nm));
        CHECK(nm == doctest::Approx(1.0));
    }

    SUBCASE("k validation") {
        Matrix x(10, 1, 0.0);
        CHECK_THROWS_AS(fit_lof(x, 10), std::invalid_argument);
        CHECK_THROWS_AS(fit_lof(x, 0), std::invalid_argument);
    }
}

TEST_CASE("nm scaler") {
    SUBCASE("endpoints and midpoint") {
        const std::vector<double> scores = {3.0, 9.0, 5.0, 7.0};
        const auto s = fit_nm_scaler(scores);
        CHECK(scale_nm(s, 3.0) == 0.0);
        CHECK(scale_nm(s, 9.0) == 1.0);
        CHECK(scale_nm(s, 6.0) == doctest::Approx(0.5));
    }

    SUBCASE("values outside the fitted range extrapolate linearly") {
        const auto s = fit_nm_scaler(std::vector<double>{0.0, 2.0});
        CHECK(scale_nm(s, 4.0) == doctest::Approx(2.0));
        CHECK(scale_nm(s, -2.0) == doctest::Approx(-1.0));
    }

    SUBCASE("degenerate score sets rejected") {
        CHECK_THROWS_AS(fit_nm_scaler(std::vector<double>{1.0}), std::invalid_argument);
        CHECK_THROWS_AS(fit_nm_scaler(std::vector<double>{2.0, 2.0, 2.0}), std::runtime_error);
    }
}

TEST_CASE("detector persistence round trips") {
    Rng rng(19);
    const auto x = gaussian_blob(60, {0, 0, 0}, 1.0, rng);
    const auto path = (std::filesystem::temp_directory_path() / "novabench_detector.model").string();

    DetectorConfig config;
    config.kmeans.k_max = 3;
    config.gmm.k_max = 2;
    config.lof_k = 10;
    config.iforest.trees = 20;

    for (DetectorKind kind : all_detectors()) {
        const auto fitted = fit_detector(kind, x, config, 5);
        save_detector(fitted, path);
        const auto loaded = load_detector(path);
        REQUIRE(loaded.kind() == kind);
        for (int rep = 0; rep < 5; ++rep) {
            const std::vector<double> q = {rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4)};
            CHECK(novelty_metric(loaded, q) == novelty_metric(fitted, q));
        }
    }
}

TEST_CASE("score bundle round trips") {
    Rng rng(20);
    Matrix feats(40, 7);
    for (double& v : feats.data) v = rng.normal();

    ScoreBundle bundle;
    bundle.wavelet = {4, 0};
    bundle.normalizer = fit_normalizer(feats);
    bundle.transform.model = fit_pca(normalize_matrix(feats, bundle.normalizer), PCATarget::count(3));
    DetectorConfig config;
    config.kmeans.k_max = 3;
    bundle.detector = fit_detector(DetectorKind::kmeans,
                                   apply_transform_matrix(bundle.transform,
                                                normalize_matrix(feats, bundle.normalizer)),
                                   config, 2);
    bundle.scaler = {-1.0, 3.0};

    const auto path = (std::filesystem::temp_directory_path() / "novabench_bundle.model").string();
    save_bundle(bundle, path);
    const auto loaded = load_bundle(path);
    CHECK(loaded.wavelet.levels == 0);
    CHECK(loaded.normalizer == bundle.normalizer);
    CHECK(loaded.scaler.min == -1.0);
    const std::vector<double> v(feats.row(3).begin(), feats.row(3).end());
    const auto a = apply_transform(bundle.transform, normalize(v, bundle.normalizer));
    const auto b = apply_transform(loaded.transform, normalize(v, loaded.normalizer));
    CHECK(a == b);
    CHECK(novelty_metric(loaded.detector, a) == novelty_metric(bundle.detector, a));
}
