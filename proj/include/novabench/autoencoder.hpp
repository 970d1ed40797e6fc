// Fully connected autoencoder with a two-layer encoder and two-layer decoder:
//
//   input (n) -> E1 (ReLU) -> E2 (LeakyReLU, the latent) -> D1 (ReLU) -> output (n, LeakyReLU)
//
// The undercomplete variant (AER) squeezes the latent below the input width,
// the overcomplete one (AEA) expands it. Training is plain mini-batch SGD on
// the MSE reconstruction loss, shuffled per epoch from the seed, with
// Glorot-uniform initial weights.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "novabench/linalg.hpp"
#include "novabench/rng.hpp"

namespace novabench {

enum class AEVariant { undercomplete, overcomplete };

inline const char* to_string(AEVariant v) {
    return v == AEVariant::undercomplete ? "aer" : "aea";
}

struct AEArch {
    std::size_t n_e1 = 0;  // first encoder layer width, also the decoder's D1
    std::size_t n_e2 = 0;  // latent width
};

struct AETrainConfig {
    double learning_rate = 0.03;
    std::size_t batch_size = 64;
    std::size_t epochs = 100;
    double leaky_slope = 0.01;
};

struct AEModel {
    AEVariant variant = AEVariant::undercomplete;
    std::size_t input_dim = 0;
    AEArch arch;
    AETrainConfig config;
    // Layer order: enc1, enc2, dec1, dec2. weights[l] is (out x in).
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    double initial_loss = 0.0;
    double final_loss = 0.0;

    std::size_t latent_dim() const { return arch.n_e2; }
};

namespace detail {

inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double relu_grad(double x) { return x > 0.0 ? 1.0 : 0.0; }
inline double leaky(double x, double s) { return x > 0.0 ? x : s * x; }
inline double leaky_grad(double x, double s) { return x > 0.0 ? 1.0 : s; }

// Layer activations: 0,2 are ReLU; 1,3 are LeakyReLU.
inline bool layer_is_relu(std::size_t layer) { return layer % 2 == 0; }

inline std::vector<double> affine(const Matrix& w, const std::vector<double>& b,
                                  std::span<const double> x) {
    std::vector<double> out(w.rows);
    for (std::size_t i = 0; i < w.rows; ++i) {
        out[i] = b[i] + dot(w.row(i), x);
    }
    return out;
}

struct ForwardPass {
    // pre[l] and post[l] for each of the four layers.
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;
};

inline ForwardPass forward(const AEModel& m, std::span<const double> x) {
    ForwardPass fp;
    fp.pre.resize(4);
    fp.post.resize(4);
    std::vector<double> cur(x.begin(), x.end());
    for (std::size_t l = 0; l < 4; ++l) {
        fp.pre[l] = affine(m.weights[l], m.biases[l], cur);
        fp.post[l].resize(fp.pre[l].size());
        for (std::size_t i = 0; i < fp.pre[l].size(); ++i) {
            fp.post[l][i] = layer_is_relu(l) ? relu(fp.pre[l][i])
                                             : leaky(fp.pre[l][i], m.config.leaky_slope);
        }
        cur = fp.post[l];
    }
    return fp;
}

}  // namespace detail

inline void validate_arch(AEVariant variant, std::size_t input_dim, const AEArch& arch) {
    if (variant == AEVariant::undercomplete) {
        if (!(arch.n_e2 < arch.n_e1 && arch.n_e1 < input_dim)) {
            throw std::invalid_argument("undercomplete autoencoder requires N_E2 < N_E1 < N_feat");
        }
    } else {
        if (!(input_dim < arch.n_e1 && arch.n_e1 < arch.n_e2)) {
            throw std::invalid_argument("overcomplete autoencoder requires N_feat < N_E1 < N_E2");
        }
    }
}

/// Encoder layers only; output has the latent width N_E2.
inline std::vector<double> encode(const AEModel& m, std::span<const double> v) {
    if (v.size() != m.input_dim) throw std::invalid_argument("encode: dimension mismatch");
    auto h1 = detail::affine(m.weights[0], m.biases[0], v);
    for (double& x : h1) x = detail::relu(x);
    auto h2 = detail::affine(m.weights[1], m.biases[1], h1);
    for (double& x : h2) x = detail::leaky(x, m.config.leaky_slope);
    return h2;
}

/// Full encoder + decoder pass.
inline std::vector<double> reconstruct(const AEModel& m, std::span<const double> v) {
    if (v.size() != m.input_dim) throw std::invalid_argument("reconstruct: dimension mismatch");
    return detail::forward(m, v).post[3];
}

/// Mean squared reconstruction error over all rows and output dimensions.
inline double reconstruction_loss(const AEModel& m, const Matrix& x) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        const auto rec = reconstruct(m, x.row(i));
        const auto r = x.row(i);
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double d = rec[j] - r[j];
            total += d * d;
        }
    }
    return total / (static_cast<double>(x.rows) * static_cast<double>(x.cols));
}

namespace detail {

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

inline Gradients zero_gradients(const AEModel& m) {
    Gradients g;
    for (std::size_t l = 0; l < 4; ++l) {
        g.weights.emplace_back(m.weights[l].rows, m.weights[l].cols);
        g.biases.emplace_back(m.biases[l].size(), 0.0);
    }
    return g;
}

/// Accumulate d(loss contribution)/d(params) for one sample, where the per-
/// sample contribution is sum_j (xhat_j - x_j)^2 (normalization applied by the
/// caller).
inline void accumulate_gradients(const AEModel& m, std::span<const double> x, Gradients& g) {
    const ForwardPass fp = forward(m, x);

    std::vector<double> delta(fp.post[3].size());
    for (std::size_t j = 0; j < delta.size(); ++j) {
        delta[j] = 2.0 * (fp.post[3][j] - x[j]);
    }

    for (std::size_t li = 4; li-- > 0;) {
        // delta currently holds dL/d(post[li]); fold in the activation.
        for (std::size_t i = 0; i < delta.size(); ++i) {
            delta[i] *= layer_is_relu(li) ? relu_grad(fp.pre[li][i])
                                          : leaky_grad(fp.pre[li][i], m.config.leaky_slope);
        }
        const std::span<const double> input =
            li == 0 ? x : std::span<const double>(fp.post[li - 1]);
        for (std::size_t i = 0; i < m.weights[li].rows; ++i) {
            auto grow = g.weights[li].row(i);
            for (std::size_t j = 0; j < m.weights[li].cols; ++j) {
                grow[j] += delta[i] * input[j];
            }
            g.biases[li][i] += delta[i];
        }
        if (li > 0) {
            std::vector<double> prev(m.weights[li].cols, 0.0);
            for (std::size_t i = 0; i < m.weights[li].rows; ++i) {
                const auto wrow = m.weights[li].row(i);
                for (std::size_t j = 0; j < wrow.size(); ++j) prev[j] += delta[i] * wrow[j];
            }
            delta = std::move(prev);
        }
    }
}

}  // namespace detail

/// Train an autoencoder on the rows of x. Deterministic given the seed; throws
/// if the loss becomes non-finite, naming the offending epoch.
inline AEModel fit_autoencoder(const Matrix& x, AEVariant variant, const AEArch& arch,
                               const AETrainConfig& config, std::uint64_t seed) {
    if (x.rows == 0) throw std::invalid_argument("fit_autoencoder: empty training matrix");
    validate_arch(variant, x.cols, arch);
    if (!(config.learning_rate > 0.0)) throw std::invalid_argument("fit_autoencoder: lr must be positive");
    if (config.batch_size < 1 || config.batch_size > x.rows) {
        throw std::invalid_argument("fit_autoencoder: batch size must be in [1, rows]");
    }

    AEModel m;
    m.variant = variant;
    m.input_dim = x.cols;
    m.arch = arch;
    m.config = config;

    const std::size_t sizes[5] = {x.cols, arch.n_e1, arch.n_e2, arch.n_e1, x.cols};
    Rng rng(mix_seed(seed, 0x6165ULL));  // weight stream
    for (std::size_t l = 0; l < 4; ++l) {
        const std::size_t fan_in = sizes[l];
        const std::size_t fan_out = sizes[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (double& v : w.data) v = rng.uniform(-limit, limit);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(fan_out, 0.0);
    }

    m.initial_loss = reconstruction_loss(m, x);
    m.final_loss = m.initial_loss;
    if (config.epochs == 0) return m;

    std::vector<std::size_t> order(x.rows);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    Rng shuffle_rng(mix_seed(seed, 0x7368ULL));  // shuffle stream
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(start + config.batch_size, order.size());
            auto grads = detail::zero_gradients(m);
            for (std::size_t idx = start; idx < stop; ++idx) {
                detail::accumulate_gradients(m, x.row(order[idx]), grads);
            }
            const double scale =
                config.learning_rate / (static_cast<double>(stop - start) * static_cast<double>(x.cols));
            for (std::size_t l = 0; l < 4; ++l) {
                for (std::size_t k = 0; k < m.weights[l].data.size(); ++k) {
                    m.weights[l].data[k] -= scale * grads.weights[l].data[k];
                }
                for (std::size_t k = 0; k < m.biases[l].size(); ++k) {
                    m.biases[l][k] -= scale * grads.biases[l][k];
                }
            }
        }
        const double loss = reconstruction_loss(m, x);
        if (!std::isfinite(loss)) {
            throw std::runtime_error("autoencoder training diverged at epoch " + std::to_string(epoch + 1));
        }
        m.final_loss = loss;
    }
    return m;
}

}  // namespace novabench
