// Hyperparameter tuning: a Gaussian-process surrogate over a normalized
// search space, expected-improvement acquisition with random candidate
// sampling, and the tuning objective: the variance of the novelty metric
// over the held-out nominal slice.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "novabench/benchmark.hpp"
#include "novabench/io.hpp"
#include "novabench/linalg.hpp"
#include "novabench/rng.hpp"

namespace novabench {

enum class ParamKind { integer, categorical, log_real };

struct ParamSpec {
    std::string name;
    ParamKind kind = ParamKind::integer;
    double lo = 0.0;                  // integer / log_real bounds, inclusive
    double hi = 0.0;
    std::vector<double> categories;   // categorical values

    void validate() const {
        if (kind == ParamKind::categorical) {
            if (categories.empty()) throw std::invalid_argument("param '" + name + "': empty category set");
        } else if (!(lo <= hi)) {
            throw std::invalid_argument("param '" + name + "': unordered range");
        } else if (kind == ParamKind::log_real && !(lo > 0.0)) {
            throw std::invalid_argument("param '" + name + "': log range must be positive");
        }
    }
};

struct SearchSpace {
    std::vector<ParamSpec> params;

    std::size_t dim() const { return params.size(); }

    void validate() const {
        if (params.empty()) throw std::invalid_argument("search space is empty");
        for (const auto& p : params) p.validate();
    }

    std::vector<double> sample(Rng& rng) const {
        std::vector<double> v(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto& p = params[i];
            switch (p.kind) {
                case ParamKind::integer:
                    v[i] = p.lo + static_cast<double>(rng.uniform_int(
                                      static_cast<std::uint64_t>(p.hi - p.lo) + 1));
                    break;
                case ParamKind::categorical:
                    v[i] = p.categories[rng.uniform_int(p.categories.size())];
                    break;
                case ParamKind::log_real:
                    v[i] = rng.log_uniform(p.lo, p.hi);
                    break;
            }
        }
        return v;
    }

    /// Map a parameter vector into [0,1]^d for the surrogate.
    std::vector<double> to_unit(std::span<const double> v) const {
        std::vector<double> u(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto& p = params[i];
            switch (p.kind) {
                case ParamKind::integer:
                    u[i] = p.hi > p.lo ? (v[i] - p.lo) / (p.hi - p.lo) : 0.5;
                    break;
                case ParamKind::categorical: {
                    std::size_t idx = 0;
                    for (std::size_t c = 0; c < p.categories.size(); ++c) {
                        if (p.categories[c] == v[i]) idx = c;
                    }
                    u[i] = p.categories.size() > 1
                               ? static_cast<double>(idx) / static_cast<double>(p.categories.size() - 1)
                               : 0.5;
                    break;
                }
                case ParamKind::log_real:
                    u[i] = p.hi > p.lo ? (std::log(v[i]) - std::log(p.lo)) /
                                             (std::log(p.hi) - std::log(p.lo))
                                       : 0.5;
                    break;
            }
        }
        return u;
    }
};

struct Trial {
    std::vector<double> params;
    double objective = std::numeric_limits<double>::infinity();
    bool failed = false;
};

// ---------------------------------------------------------------------------
// Gaussian-process surrogate: squared-exponential kernel on the unit cube,
// observations standardized, jitter on the diagonal for numerical stability.
// ---------------------------------------------------------------------------

struct GPSurrogate {
    double length_scale = 0.25;
    double jitter = 1e-8;

    Matrix inputs;                // n x d, unit-cube coordinates
    std::vector<double> targets;  // standardized objectives
    double target_mean = 0.0;
    double target_std = 1.0;
    Matrix chol;                  // cached factorization of the kernel matrix
    std::vector<double> alpha;    // K^-1 y

    std::size_t observations() const { return inputs.rows; }

    double kernel(std::span<const double> a, std::span<const double> b) const {
        return std::exp(-0.5 * squared_distance(a, b) / (length_scale * length_scale));
    }

    void fit(const Matrix& x, std::span<const double> y) {
        inputs = x;
        target_mean = 0.0;
        for (double v : y) target_mean += v;
        target_mean /= static_cast<double>(y.size());
        double var = 0.0;
        for (double v : y) var += (v - target_mean) * (v - target_mean);
        target_std = std::sqrt(var / static_cast<double>(y.size()));
        if (!(target_std > 0.0)) target_std = 1.0;
        targets.resize(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) targets[i] = (y[i] - target_mean) / target_std;

        Matrix k(x.rows, x.rows);
        for (std::size_t i = 0; i < x.rows; ++i) {
            for (std::size_t j = i; j < x.rows; ++j) {
                k(i, j) = kernel(x.row(i), x.row(j));
                k(j, i) = k(i, j);
            }
            k(i, i) += jitter;
        }
        chol = cholesky(k);
        alpha = cholesky_solve(chol, targets);
    }

    struct Prediction {
        double mean = 0.0;     // in the original objective units
        double std_dev = 0.0;  // in standardized units times target_std
    };

    Prediction predict(std::span<const double> x) const {
        std::vector<double> ks(inputs.rows);
        for (std::size_t i = 0; i < inputs.rows; ++i) ks[i] = kernel(inputs.row(i), x);
        const double mean_std = dot(ks, alpha);
        const auto v = forward_solve(chol, ks);
        const double var = std::max(1.0 + jitter - dot(v, v), 0.0);
        return {target_mean + target_std * mean_std, target_std * std::sqrt(var)};
    }
};

inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double standard_normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
}

/// Expected improvement below `best` for a minimization problem. Zero
/// predictive uncertainty yields max(best - mean, 0), so re-suggesting the
/// incumbent scores 0.
inline double expected_improvement(double mean, double std_dev, double best) {
    if (std_dev <= 0.0) return std::max(best - mean, 0.0);
    const double z = (best - mean) / std_dev;
    return (best - mean) * standard_normal_cdf(z) + std_dev * standard_normal_pdf(z);
}

struct SuggestConfig {
    std::size_t candidates = 1024;
};

/// Next parameter assignment: random until the surrogate has d+1 completed
/// trials, then the best of `candidates` random draws under EI.
inline std::vector<double> suggest(const GPSurrogate& surrogate, const SearchSpace& space, Rng& rng,
                                   double incumbent, const SuggestConfig& config = {}) {
    if (surrogate.observations() < space.dim() + 1) {
        return space.sample(rng);
    }
    std::vector<double> best_params;
    double best_ei = -1.0;
    for (std::size_t c = 0; c < config.candidates; ++c) {
        auto candidate = space.sample(rng);
        const auto pred = surrogate.predict(space.to_unit(candidate));
        const double ei = expected_improvement(pred.mean, pred.std_dev, incumbent);
        if (ei > best_ei) {
            best_ei = ei;
            best_params = std::move(candidate);
        }
    }
    return best_params;
}

struct OptimizeResult {
    Trial best;
    std::vector<Trial> history;
};

struct OptimizeConfig {
    std::size_t n_trials = 50;
    std::uint64_t seed = 0;
    // 1 = fully sequential conditioning. Larger values draw that many
    // suggestions per surrogate refit and evaluate them on worker threads;
    // the surrogate conditions on the batch once it completes.
    std::size_t batch = 1;
};

namespace detail {

inline std::vector<double> next_suggestion(const GPSurrogate& surrogate, const SearchSpace& space,
                                           Rng& rng, double incumbent, bool surrogate_ready) {
    return surrogate_ready ? suggest(surrogate, space, rng, incumbent) : space.sample(rng);
}

}  // namespace detail

/// Minimize `objective` over the space. Failed evaluations (exception or
/// non-finite value) are recorded with an infinite objective and excluded
/// from the surrogate. Deterministic given the seed; `prior` trials, when
/// given, seed the history (resume semantics).
inline OptimizeResult optimize(const SearchSpace& space,
                               const std::function<double(std::span<const double>)>& objective,
                               const OptimizeConfig& config, std::vector<Trial> prior = {}) {
    space.validate();
    if (config.n_trials < 1) throw std::invalid_argument("optimize: need at least one trial");
    if (config.batch < 1) throw std::invalid_argument("optimize: batch must be >= 1");

    OptimizeResult result;
    result.history = std::move(prior);
    Rng rng(mix_seed(config.seed, 0x6f7074ULL));
    GPSurrogate surrogate;

    std::size_t remaining = config.n_trials;
    while (remaining > 0) {
        // Condition the surrogate on every completed trial so far.
        std::size_t ok = 0;
        for (const auto& trial : result.history) ok += !trial.failed;
        double incumbent = std::numeric_limits<double>::infinity();
        const bool ready = ok >= space.dim() + 1;
        if (ready) {
            Matrix x(ok, space.dim());
            std::vector<double> y(ok);
            std::size_t r = 0;
            for (const auto& trial : result.history) {
                if (trial.failed) continue;
                const auto u = space.to_unit(trial.params);
                std::copy(u.begin(), u.end(), x.row(r).begin());
                y[r] = trial.objective;
                incumbent = std::min(incumbent, trial.objective);
                ++r;
            }
            surrogate.fit(x, y);
        }

        // Suggestions are drawn up front, so evaluation order cannot change
        // the result.
        const std::size_t batch = std::min(config.batch, remaining);
        std::vector<Trial> trials(batch);
        for (std::size_t b = 0; b < batch; ++b) {
            trials[b].params = detail::next_suggestion(surrogate, space, rng, incumbent, ready);
        }

        auto evaluate = [&objective](Trial& trial) {
            try {
                trial.objective = objective(trial.params);
                trial.failed = !std::isfinite(trial.objective);
            } catch (const std::exception&) {
                trial.failed = true;
            }
            if (trial.failed) trial.objective = std::numeric_limits<double>::infinity();
        };
        if (batch == 1) {
            evaluate(trials[0]);
        } else {
            std::vector<std::thread> workers;
            workers.reserve(batch);
            for (auto& trial : trials) workers.emplace_back(evaluate, std::ref(trial));
            for (auto& w : workers) w.join();
        }
        for (auto& trial : trials) result.history.push_back(std::move(trial));
        remaining -= batch;
    }

    bool any = false;
    for (const auto& trial : result.history) {
        if (!trial.failed && (!any || trial.objective < result.best.objective)) {
            result.best = trial;
            any = true;
        }
    }
    if (!any) throw std::runtime_error("optimize: every trial failed");
    return result;
}

inline OptimizeResult optimize(const SearchSpace& space,
                               const std::function<double(std::span<const double>)>& objective,
                               std::size_t n_trials, std::uint64_t seed,
                               std::vector<Trial> prior = {}) {
    return optimize(space, objective, OptimizeConfig{n_trials, seed, 1}, std::move(prior));
}

// ---------------------------------------------------------------------------
// Study glue: search spaces from the standard tuning ranges and the
// variance-of-nominal-NM objective.
// ---------------------------------------------------------------------------

/// Search space for one transform kind. The autoencoder ranges follow the
/// realized tuned values (undercomplete: N_E1 in [50,65], N_E2 in [10,45];
/// overcomplete: N_E1 in [75,80], N_E2 in [85,100]); the identity transform
/// has nothing to tune.
inline SearchSpace search_space_for(TransformKind kind, std::size_t n_feat = 70) {
    SearchSpace space;
    switch (kind) {
        case TransformKind::original:
            throw std::invalid_argument("the identity transform has no hyperparameters to tune");
        case TransformKind::aer:
            space.params = {{"N_E1", ParamKind::integer, 50, 65, {}},
                            {"N_E2", ParamKind::integer, 10, 45, {}},
                            {"lr", ParamKind::log_real, 0.01, 0.1, {}},
                            {"bs", ParamKind::categorical, 0, 0, {32, 64}}};
            break;
        case TransformKind::aea:
            space.params = {{"N_E1", ParamKind::integer, 75, 80, {}},
                            {"N_E2", ParamKind::integer, 85, 100, {}},
                            {"lr", ParamKind::log_real, 0.01, 0.1, {}},
                            {"bs", ParamKind::categorical, 0, 0, {32, 64}}};
            break;
        case TransformKind::pca:
            space.params = {{"N_PCA", ParamKind::integer, 2, static_cast<double>(n_feat), {}}};
            break;
    }
    return space;
}

/// Fold a trial's parameters into the transform configuration for `kind`.
inline TransformConfig transform_config_from_params(TransformKind kind, const SearchSpace& space,
                                                    std::span<const double> params,
                                                    TransformConfig base = {}) {
    auto value = [&](std::string_view name) {
        for (std::size_t i = 0; i < space.params.size(); ++i) {
            if (space.params[i].name == name) return params[i];
        }
        throw std::invalid_argument("trial lacks parameter '" + std::string(name) + "'");
    };
    switch (kind) {
        case TransformKind::original: break;
        case TransformKind::aer:
            base.aer.n_e1 = static_cast<std::size_t>(std::llround(value("N_E1")));
            base.aer.n_e2 = static_cast<std::size_t>(std::llround(value("N_E2")));
            base.aer_train.learning_rate = value("lr");
            base.aer_train.batch_size = static_cast<std::size_t>(std::llround(value("bs")));
            break;
        case TransformKind::aea:
            base.aea.n_e1 = static_cast<std::size_t>(std::llround(value("N_E1")));
            base.aea.n_e2 = static_cast<std::size_t>(std::llround(value("N_E2")));
            base.aea_train.learning_rate = value("lr");
            base.aea_train.batch_size = static_cast<std::size_t>(std::llround(value("bs")));
            break;
        case TransformKind::pca:
            base.pca = PCATarget::count(static_cast<std::size_t>(std::llround(value("N_PCA"))));
            break;
    }
    return base;
}

/// Precomputed slices for the tuning objective: features of the training
/// chunks and of the held-out nominal chunks.
struct TuningData {
    Matrix train;
    Matrix nominal;
};

inline TuningData prepare_tuning_data(const Dataset& ds, const EvalProtocol& protocol,
                                      const WaveletSpec& wavelet) {
    const auto& train_set = ds.set(protocol.train.set_name);
    const auto [tb, te] = detail::resolve_slice(protocol.train, train_set.chunks.size(), "train");
    const auto& nominal_set = ds.set(protocol.nominal_eval.set_name);
    const auto [nb, ne] =
        detail::resolve_slice(protocol.nominal_eval, nominal_set.chunks.size(), "nominal_eval");

    TuningData data;
    std::vector<TimeSeries> train_chunks(train_set.chunks.begin() + static_cast<std::ptrdiff_t>(tb),
                                         train_set.chunks.begin() + static_cast<std::ptrdiff_t>(te));
    std::vector<TimeSeries> nominal_chunks(
        nominal_set.chunks.begin() + static_cast<std::ptrdiff_t>(nb),
        nominal_set.chunks.begin() + static_cast<std::ptrdiff_t>(ne));
    data.train = extract_matrix(train_chunks, wavelet);
    data.nominal = extract_matrix(nominal_chunks, wavelet);
    return data;
}

/// J(params) = variance of the raw NM over the held-out nominal slice, for a
/// transform built from the trial parameters and a detector fitted on the
/// transformed training slice. The detector seed is fixed per study.
inline std::function<double(std::span<const double>)> make_variance_objective(
    const TuningData& data, DetectorKind detector, TransformKind transform_kind,
    const SearchSpace& space, const DetectorConfig& detector_config, std::uint64_t seed) {
    return [&data, detector, transform_kind, space, detector_config,
            seed](std::span<const double> params) -> double {
        const TransformConfig tc = transform_config_from_params(transform_kind, space, params);
        const Normalizer normalizer = fit_normalizer(data.train);
        const Matrix norm_train = normalize_matrix(data.train, normalizer);
        const TransformModel transform =
            detail::fit_transform_for(transform_kind, tc, norm_train, seed);
        const Matrix latent_train = apply_transform_matrix(transform, norm_train);
        const NoveltyDetector model = fit_detector(detector, latent_train, detector_config, seed);

        std::vector<double> scores;
        scores.reserve(data.nominal.rows);
        for (std::size_t i = 0; i < data.nominal.rows; ++i) {
            const auto latent = apply_transform(transform, normalize(data.nominal.row(i), normalizer));
            scores.push_back(novelty_metric(model, latent));
        }
        return nm_variance(scores);
    };
}

// ---------------------------------------------------------------------------
// Tuning history file: CSV `trial,param:<name>...,J,status`, plus a
// best-params file of key=value lines.
// ---------------------------------------------------------------------------

inline std::string render_history_csv(const SearchSpace& space, std::span<const Trial> history) {
    std::string out = "trial";
    for (const auto& p : space.params) out += ",param:" + p.name;
    out += ",J,status\n";
    for (std::size_t i = 0; i < history.size(); ++i) {
        out += std::to_string(i);
        for (double v : history[i].params) out += ',' + format_double(v);
        out += ',' + (history[i].failed ? std::string("inf") : format_double(history[i].objective));
        out += history[i].failed ? ",failed\n" : ",ok\n";
    }
    return out;
}

inline std::vector<Trial> parse_history_csv(const std::vector<std::string>& lines,
                                            const SearchSpace& space) {
    if (lines.empty()) throw ParseError("empty history file", 1);
    const auto header = split_csv(lines[0]);
    if (header.size() != space.dim() + 3) {
        throw ParseError("history header does not match the search space", 1);
    }
    std::vector<Trial> trials;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto f = split_csv(lines[i]);
        if (f.size() != header.size()) throw ParseError("history row width mismatch", i + 1);
        Trial t;
        for (std::size_t p = 0; p < space.dim(); ++p) {
            t.params.push_back(parse_double(f[1 + p], i + 1, header[1 + p]));
        }
        t.failed = f.back() == "failed";
        t.objective = t.failed ? std::numeric_limits<double>::infinity()
                               : parse_double(f[space.dim() + 1], i + 1, "J");
        trials.push_back(std::move(t));
    }
    return trials;
}

inline std::string render_best_params(DetectorKind detector, TransformKind transform,
                                      const SearchSpace& space, const Trial& best) {
    std::string out;
    out += "detector=" + std::string(to_string(detector)) + '\n';
    out += "transform=" + std::string(to_string(transform)) + '\n';
    for (std::size_t i = 0; i < space.dim(); ++i) {
        out += space.params[i].name + '=' + format_double(best.params[i]) + '\n';
    }
    out += "J=" + format_double(best.objective) + '\n';
    return out;
}

inline std::map<std::string, std::string> parse_key_values(const std::vector<std::string>& lines) {
    std::map<std::string, std::string> kv;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& line = lines[i];
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value", i + 1);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

}  // namespace novabench
