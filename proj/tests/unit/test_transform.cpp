#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "novabench/rng.hpp"
#include "novabench/transform.hpp"

using namespace novabench;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = scale * rng.normal();
    return m;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("fit_pca") {
    Rng rng(41);

    SUBCASE("rank-1 data needs one component for the full variance") {
        Matrix x(20, 2);
        for (std::size_t i = 0; i < 20; ++i) {
            const double t = rng.uniform(-2.0, 2.0);
            x(i, 0) = 3.0 * t;
            x(i, 1) = -4.0 * t;
        }
        const auto m = fit_pca(x, PCATarget::ratio(1.0));
        CHECK(m.latent_dim() == 1);
        CHECK(m.explained_variance_ratio[0] == doctest::Approx(1.0).epsilon(1e-9));
    }

    SUBCASE("ratio 1.0 keeps exactly the rank of the centered data") {
        // Three independent directions embedded in 6-D.
        Matrix x(40, 6);
        for (std::size_t i = 0; i < 40; ++i) {
            const double a = rng.normal(), b = rng.normal(), c = rng.normal();
            x(i, 0) = a;
            x(i, 1) = b;
            x(i, 2) = c;
            x(i, 3) = a + b;
            x(i, 4) = a - c;
            x(i, 5) = 2.0 * b + c;
        }
        const auto m = fit_pca(x, PCATarget::ratio(1.0));
        CHECK(m.latent_dim() == 3);
    }

    SUBCASE("component rows are orthonormal and ratios nonincreasing") {
        const auto x = random_matrix(60, 8, rng);
        const auto m = fit_pca(x, PCATarget::count(8));
        for (std::size_t i = 0; i < 8; ++i) {
            for (std::size_t j = 0; j < 8; ++j) {
                const double g = dot(m.components.row(i), m.components.row(j));
                CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) < 1e-8);
            }
        }
        double cum = 0.0;
        for (std::size_t i = 0; i + 1 < 8; ++i) {
            CHECK(m.explained_variance_ratio[i] >= m.explained_variance_ratio[i + 1]);
            cum += m.explained_variance_ratio[i];
        }
        CHECK(cum <= 1.0 + 1e-12);
    }

    SUBCASE("degenerate all-identical rows rejected") {
        Matrix x(5, 3, 2.5);
        CHECK_THROWS_AS(fit_pca(x, PCATarget::count(1)), std::invalid_argument);
    }

    SUBCASE("invalid targets rejected") {
        const auto x = random_matrix(10, 3, rng);
        CHECK_THROWS_AS(fit_pca(x, PCATarget::count(0)), std::invalid_argument);
        CHECK_THROWS_AS(fit_pca(x, PCATarget::count(4)), std::invalid_argument);
        CHECK_THROWS_AS(fit_pca(x, PCATarget::ratio(0.0)), std::invalid_argument);
        CHECK_THROWS_AS(fit_pca(x, PCATarget::ratio(1.5)), std::invalid_argument);
    }
}

TEST_CASE("pca_transform") {
    Rng rng(42);
    const auto x = random_matrix(50, 6, rng);

    SUBCASE("training mean maps to the zero vector") {
        const auto m = fit_pca(x, PCATarget::count(3));
        for (double v : pca_transform(m, m.means)) CHECK(v == doctest::Approx(0.0));
    }

    SUBCASE("full component set reconstructs the input") {
        const auto m = fit_pca(x, PCATarget::count(6));
        const auto v = std::vector<double>(x.row(7).begin(), x.row(7).end());
        const auto rec = pca_inverse(m, pca_transform(m, v));
        for (std::size_t j = 0; j < 6; ++j) CHECK(rec[j] == doctest::Approx(v[j]).epsilon(1e-8));
    }

    SUBCASE("projection never exceeds the centered norm") {
        const auto m = fit_pca(x, PCATarget::count(2));
        for (std::size_t i = 0; i < x.rows; ++i) {
            std::vector<double> centered(6);
            for (std::size_t j = 0; j < 6; ++j) centered[j] = x(i, j) - m.means[j];
            const auto z = pca_transform(m, x.row(i));
            CHECK(norm2(z) <= norm2(centered) + 1e-12);
        }
    }

    SUBCASE("transformed training columns are uncorrelated") {
        const auto m = fit_pca(x, PCATarget::count(4));
        Matrix z(x.rows, 4);
        for (std::size_t i = 0; i < x.rows; ++i) {
            const auto zi = pca_transform(m, x.row(i));
            std::copy(zi.begin(), zi.end(), z.row(i).begin());
        }
        const auto means = column_means(z);
        double trace_scale = 0.0;
        Matrix cov(4, 4);
        for (std::size_t i = 0; i < z.rows; ++i) {
            for (std::size_t a = 0; a < 4; ++a)
                for (std::size_t b = 0; b < 4; ++b)
                    cov(a, b) += (z(i, a) - means[a]) * (z(i, b) - means[b]);
        }
        for (std::size_t a = 0; a < 4; ++a) trace_scale += cov(a, a);
        for (std::size_t a = 0; a < 4; ++a)
            for (std::size_t b = 0; b < 4; ++b)
                if (a != b) CHECK(std::abs(cov(a, b)) < 1e-8 * trace_scale);
    }

    SUBCASE("dimension mismatch rejected") {
        const auto m = fit_pca(x, PCATarget::count(2));
        CHECK_THROWS_AS(pca_transform(m, std::vector<double>{1.0}), std::invalid_argument);
    }
}

TEST_CASE("fit_autoencoder") {
    Rng rng(7);

    SUBCASE("epochs 0 returns the initialization") {
        const auto x = random_matrix(12, 10, rng);
        const auto m = fit_autoencoder(x, AEVariant::undercomplete, {8, 4}, {0.05, 4, 0, 0.01}, 3);
        CHECK(m.final_loss == m.initial_loss);
        CHECK(m.final_loss == doctest::Approx(reconstruction_loss(m, x)));
    }

    SUBCASE("variant inequalities enforced") {
        const auto x = random_matrix(8, 10, rng);
        CHECK_THROWS_AS(fit_autoencoder(x, AEVariant::undercomplete, {12, 4}, {0.05, 4, 1, 0.01}, 0),
                        std::invalid_argument);
        CHECK_THROWS_AS(fit_autoencoder(x, AEVariant::overcomplete, {12, 11}, {0.05, 4, 1, 0.01}, 0),
                        std::invalid_argument);
        CHECK_THROWS_AS(fit_autoencoder(x, AEVariant::undercomplete, {8, 4}, {0.05, 9, 1, 0.01}, 0),
                        std::invalid_argument);
    }

    SUBCASE("the tuned undercomplete configuration trains and improves") {
        // 70 -> 61 -> 32 -> 61 -> 70 at lr 0.03, batch 64.
        const auto x = random_matrix(100, 70, rng, 0.5);
        const auto m = fit_autoencoder(x, AEVariant::undercomplete, {61, 32}, {0.03, 64, 40, 0.01}, 1);
        CHECK(m.final_loss < m.initial_loss);
        CHECK(encode(m, x.row(0)).size() == 32);
    }

    SUBCASE("the tuned overcomplete configuration yields an 85-wide latent") {
        const auto x = random_matrix(40, 70, rng, 0.5);
        const auto m = fit_autoencoder(x, AEVariant::overcomplete, {80, 85}, {0.08, 32, 5, 0.01}, 1);
        CHECK(m.latent_dim() == 85);
        CHECK(encode(m, x.row(0)).size() == 85);
    }

    SUBCASE("training is deterministic given the seed") {
        const auto x = random_matrix(20, 12, rng);
        const auto a = fit_autoencoder(x, AEVariant::undercomplete, {9, 5}, {0.05, 8, 10, 0.01}, 77);
        const auto b = fit_autoencoder(x, AEVariant::undercomplete, {9, 5}, {0.05, 8, 10, 0.01}, 77);
        CHECK(a.weights[0] == b.weights[0]);
        CHECK(a.weights[3] == b.weights[3]);
        CHECK(a.final_loss == b.final_loss);
    }

    SUBCASE("divergence names the epoch") {
        const auto x = random_matrix(16, 8, rng, 10.0);
        CHECK_THROWS_WITH_AS(
            fit_autoencoder(x, AEVariant::undercomplete, {6, 3}, {1e14, 4, 50, 0.01}, 0),
            doctest::Contains("epoch"), std::runtime_error);
    }
}

TEST_CASE("autoencoder gradients match central finite differences") {
    Rng rng(13);
    const auto x = random_matrix(5, 6, rng);
    auto m = fit_autoencoder(x, AEVariant::undercomplete, {5, 3}, {0.01, 5, 0, 0.01}, 9);

    auto grads = detail::zero_gradients(m);
    for (std::size_t i = 0; i < x.rows; ++i) detail::accumulate_gradients(m, x.row(i), grads);
    const double denom = static_cast<double>(x.rows) * static_cast<double>(x.cols);

    const double h = 1e-6;
    for (std::size_t layer = 0; layer < 4; ++layer) {
        for (std::size_t idx = 0; idx < m.weights[layer].data.size(); idx += 7) {
            double& w = m.weights[layer].data[idx];
            const double saved = w;
            w = saved + h;
            const double up = reconstruction_loss(m, x);
            w = saved - h;
            const double down = reconstruction_loss(m, x);
            w = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = grads.weights[layer].data[idx] / denom;
            CHECK(std::abs(analytic - numeric) <=
                  1e-4 * std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
        }
        for (std::size_t idx = 0; idx < m.biases[layer].size(); idx += 3) {
            double& b = m.biases[layer][idx];
            const double saved = b;
            b = saved + h;
            const double up = reconstruction_loss(m, x);
            b = saved - h;
            const double down = reconstruction_loss(m, x);
            b = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = grads.biases[layer][idx] / denom;
            CHECK(std::abs(analytic - numeric) <=
                  1e-4 * std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
        }
    }
}

TEST_CASE("activation conventions") {
    // Hand-built model: zero weights and biases give a zero latent; negative
    // pre-activations pass through ReLU as 0 and LeakyReLU as slope*x.
    AEModel m;
    m.variant = AEVariant::undercomplete;
    m.input_dim = 3;
    m.arch = {2, 1};
    m.config.leaky_slope = 0.01;
    m.weights = {Matrix(2, 3), Matrix(1, 2), Matrix(2, 1), Matrix(3, 2)};
    m.biases = {{0.0, 0.0}, {0.0}, {0.0, 0.0}, {0.0, 0.0, 0.0}};

    SUBCASE("zero weights, zero biases give a zero latent") {
        const auto z = encode(m, std::vector<double>{1.0, -2.0, 3.0});
        REQUIRE(z.size() == 1);
        CHECK(z[0] == 0.0);
    }

    SUBCASE("ReLU zeroes, LeakyReLU leaks") {
        m.biases[0] = {-2.0, 3.0};   // layer 1 pre-activations
        m.biases[1] = {-5.0};        // layer 2 pre-activation
        const auto z = encode(m, std::vector<double>{0.0, 0.0, 0.0});
        // ReLU(-2)=0, ReLU(3)=3; weights are zero so layer 2 sees only its
        // bias: LeakyReLU(-5) = -0.05.
        CHECK(z[0] == doctest::Approx(-0.05));
    }
}

TEST_CASE("transform dispatch") {
    Rng rng(23);
    const auto x = random_matrix(30, 70, rng);

    SUBCASE("identity returns the input unchanged") {
        TransformModel t;
        t.model = IdentityTransform{70};
        const std::vector<double> v(x.row(4).begin(), x.row(4).end());
        CHECK(apply_transform(t, v) == v);
        CHECK(t.latent_dim() == 70);
        CHECK(t.kind() == TransformKind::original);
    }

    SUBCASE("pca target count 2 gives 2-wide latents") {
        TransformModel t;
        t.model = fit_pca(x, PCATarget::count(2));
        CHECK(apply_transform(t, x.row(0)).size() == 2);
        CHECK(t.kind() == TransformKind::pca);
    }

    SUBCASE("overcomplete encoder at the tuned nusvm width gives 93") {
        TransformModel t;
        t.model = fit_autoencoder(x, AEVariant::overcomplete, {80, 93}, {0.09, 30, 2, 0.01}, 5);
        CHECK(apply_transform(t, x.row(1)).size() == 93);
        CHECK(t.kind() == TransformKind::aea);
    }

    SUBCASE("dimension mismatch propagates") {
        TransformModel t;
        t.model = IdentityTransform{70};
        CHECK_THROWS_AS(apply_transform(t, std::vector<double>{1.0}), std::invalid_argument);
    }
}

TEST_CASE("transform persistence round trips bit-exactly") {
    Rng rng(31);
    const auto x = random_matrix(25, 12, rng);

    SUBCASE("identity") {
        TransformModel t;
        t.model = IdentityTransform{12};
        const auto path = temp_path("novabench_of.model");
        save_transform(t, path);
        CHECK(load_transform(path).latent_dim() == 12);
    }

    SUBCASE("pca") {
        TransformModel t;
        t.model = fit_pca(x, PCATarget::count(5));
        const auto path = temp_path("novabench_pca.model");
        save_transform(t, path);
        const auto loaded = load_transform(path);
        const auto& a = std::get<PCAModel>(t.model);
        const auto& b = std::get<PCAModel>(loaded.model);
        CHECK(a.components == b.components);
        CHECK(a.means == b.means);
        CHECK(a.explained_variance_ratio == b.explained_variance_ratio);
    }

    SUBCASE("autoencoder") {
        TransformModel t;
        t.model = fit_autoencoder(x, AEVariant::undercomplete, {9, 4}, {0.02, 8, 3, 0.01}, 6);
        const auto path = temp_path("novabench_aer.model");
        save_transform(t, path);
        const auto loaded = load_transform(path);
        const auto& a = std::get<AEModel>(t.model);
        const auto& b = std::get<AEModel>(loaded.model);
        for (std::size_t l = 0; l < 4; ++l) {
            CHECK(a.weights[l] == b.weights[l]);
            CHECK(a.biases[l] == b.biases[l]);
        }
        CHECK(a.final_loss == b.final_loss);
        // A loaded model scores identically.
        const auto va = apply_transform(t, x.row(3));
        const auto vb = apply_transform(loaded, x.row(3));
        CHECK(va == vb);
    }

    SUBCASE("malformed model file is a parse error") {
        const auto path = temp_path("novabench_bad.model");
        write_file(path, "kind,pca\nmeans,1.0\nevr,nope\n");
        CHECK_THROWS_AS(load_transform(path), ParseError);
    }
}
