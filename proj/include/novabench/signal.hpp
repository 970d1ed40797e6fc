// Synthetic vibration dataset lab: multi-harmonic signal synthesis,
// peak-to-peak rescaling, chunking, and a diffable text format for datasets.
//
// The built-in v1/v2 signal types are weighted sums of nine sinusoids; the
// default eight-set configuration sweeps their peak-to-peak amplitude the
// same way an operator would sweep the playback volume of a shaker rig.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "novabench/io.hpp"
#include "novabench/rng.hpp"

namespace novabench {

/// One fixed-rate acceleration record (arbitrary units).
struct TimeSeries {
    std::vector<double> samples;
    double sample_rate = 0.0;  // Hz

    bool operator==(const TimeSeries&) const = default;
};

/// Weighted sum of sinusoids: weights[i] * sin(2*pi*frequencies[i]*t).
struct HarmonicSpec {
    std::vector<double> weights;
    std::vector<double> frequencies;  // Hz, strictly positive

    void validate() const {
        if (weights.empty()) throw std::invalid_argument("HarmonicSpec: at least one harmonic required");
        if (weights.size() != frequencies.size())
            throw std::invalid_argument("HarmonicSpec: weights and frequencies differ in length");
        for (double f : frequencies)
            if (!(f > 0.0)) throw std::invalid_argument("HarmonicSpec: frequencies must be positive");
    }

    double max_frequency() const {
        return *std::max_element(frequencies.begin(), frequencies.end());
    }
};

enum class SignalType { v1, v2 };

inline const char* to_string(SignalType t) { return t == SignalType::v1 ? "v1" : "v2"; }

inline SignalType signal_type_from_string(std::string_view s) {
    if (s == "v1") return SignalType::v1;
    if (s == "v2") return SignalType::v2;
    throw std::invalid_argument("unknown signal type '" + std::string(s) + "'");
}

/// The two drive signals used by the study.
inline HarmonicSpec harmonic_spec(SignalType type) {
    static const HarmonicSpec v1{{0.5, 0.5, 0.5, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5},
                                 {50.0, 100.0, 150.0, 230.0, 300.0, 440.0, 460.0, 530.0, 600.0}};
    static const HarmonicSpec v2{{0.5, 0.5, 0.5, 1.0, 0.2, 1.0, 0.5, 0.5, 2.0},
                                 {50.0, 100.0, 150.0, 230.0, 300.0, 440.0, 460.0, 530.0, 600.0}};
    return type == SignalType::v1 ? v1 : v2;
}

constexpr double kDefaultSampleRate = 1666.0;  // Hz, above twice the 600 Hz top harmonic

/// Recipe for one recorded set.
struct DatasetSpec {
    std::string set_name;
    SignalType signal_type = SignalType::v1;
    double target_p2p = 1.0;   // volts
    double duration = 206.0;   // seconds
    double chunk_len = 1.0;    // seconds
    double sample_rate = kDefaultSampleRate;
    double noise_sigma = 0.0;  // additive white Gaussian noise, 0 = clean
};

struct DatasetSet {
    std::string name;
    SignalType signal_type = SignalType::v1;
    double target_p2p = 0.0;
    double sample_rate = 0.0;
    double chunk_len = 0.0;  // seconds
    std::vector<TimeSeries> chunks;

    bool operator==(const DatasetSet&) const = default;
};

struct Dataset {
    std::vector<DatasetSet> sets;

    const DatasetSet& set(std::string_view name) const {
        for (const auto& s : sets)
            if (s.name == name) return s;
        throw std::invalid_argument("dataset has no set named '" + std::string(name) + "'");
    }

    bool has_set(std::string_view name) const {
        return std::any_of(sets.begin(), sets.end(), [&](const auto& s) { return s.name == name; });
    }

    std::size_t total_chunks() const {
        std::size_t n = 0;
        for (const auto& s : sets) n += s.chunks.size();
        return n;
    }

    bool operator==(const Dataset&) const = default;
};

/// Sample spec.weights[i]*sin(2*pi*f_i*k/fs) for k = 0 .. duration*fs - 1.
/// Rejects sample rates at or below twice the highest harmonic.
inline TimeSeries synth_signal(const HarmonicSpec& spec, double duration, double sample_rate) {
    spec.validate();
    if (!(sample_rate > 2.0 * spec.max_frequency())) {
        throw std::invalid_argument(
            "Nyquist violation: sample rate " + format_double(sample_rate) +
            " Hz must exceed twice the highest harmonic (" +
            format_double(spec.max_frequency()) + " Hz)");
    }
    if (!(duration > 0.0)) throw std::invalid_argument("synth_signal: duration must be positive");

    const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
    TimeSeries ts;
    ts.sample_rate = sample_rate;
    ts.samples.resize(n, 0.0);
    constexpr double two_pi = 2.0 * 3.14159265358979323846;
    for (std::size_t i = 0; i < spec.weights.size(); ++i) {
        const double w = spec.weights[i];
        const double f = spec.frequencies[i];
        for (std::size_t k = 0; k < n; ++k) {
            // Reduce f*k modulo fs before dividing: the argument stays small
            // for long records, and for integer frequencies the reduction is
            // exact, so every repetition of the waveform samples identically.
            const double cycles = std::fmod(f * static_cast<double>(k), sample_rate) / sample_rate;
            ts.samples[k] += w * std::sin(two_pi * cycles);
        }
    }
    return ts;
}

/// Rescale so that max - min equals target_p2p. Pure gain, no offset.
inline TimeSeries scale_to_p2p(const TimeSeries& ts, double target_p2p) {
    if (!(target_p2p > 0.0)) throw std::invalid_argument("scale_to_p2p: target must be positive");
    const auto [mn, mx] = std::minmax_element(ts.samples.begin(), ts.samples.end());
    if (ts.samples.empty() || !(*mx > *mn)) {
        throw std::invalid_argument("scale_to_p2p: constant signal has no defined scale");
    }
    const double gain = target_p2p / (*mx - *mn);
    TimeSeries out;
    out.sample_rate = ts.sample_rate;
    out.samples.reserve(ts.samples.size());
    for (double v : ts.samples) out.samples.push_back(v * gain);
    return out;
}

/// Split into consecutive chunks of chunk_len seconds; the trailing remainder
/// that does not fill a chunk is dropped.
inline std::vector<TimeSeries> chunk(const TimeSeries& ts, double chunk_len) {
    const double exact = chunk_len * ts.sample_rate;
    const auto chunk_samples = static_cast<std::size_t>(std::llround(exact));
    if (chunk_samples < 1 || std::abs(exact - static_cast<double>(chunk_samples)) > 1e-9) {
        throw std::invalid_argument("chunk: chunk_len*sample_rate must be a positive integer");
    }
    const std::size_t count = ts.samples.size() / chunk_samples;
    if (count == 0) {
        throw std::invalid_argument("chunk: signal shorter than one chunk");
    }
    std::vector<TimeSeries> out;
    out.reserve(count);
    for (std::size_t c = 0; c < count; ++c) {
        TimeSeries piece;
        piece.sample_rate = ts.sample_rate;
        piece.samples.assign(ts.samples.begin() + static_cast<std::ptrdiff_t>(c * chunk_samples),
                             ts.samples.begin() + static_cast<std::ptrdiff_t>((c + 1) * chunk_samples));
        out.push_back(std::move(piece));
    }
    return out;
}

/// The eight-set sweep of the study: sets 1-5 drive v1 at P2P
/// {0.25, 0.50, 0.75, 1.00, 1.25} V, sets 6-8 drive v2 at {0.50, 0.75, 1.00} V.
inline std::vector<DatasetSpec> default_dataset_specs(double noise_sigma = 0.0) {
    std::vector<DatasetSpec> specs;
    const double v1_p2p[] = {0.25, 0.50, 0.75, 1.00, 1.25};
    const double v2_p2p[] = {0.50, 0.75, 1.00};
    int idx = 1;
    for (double p : v1_p2p) {
        DatasetSpec s;
        s.set_name = "set" + std::to_string(idx++);
        s.signal_type = SignalType::v1;
        s.target_p2p = p;
        s.noise_sigma = noise_sigma;
        specs.push_back(s);
    }
    for (double p : v2_p2p) {
        DatasetSpec s;
        s.set_name = "set" + std::to_string(idx++);
        s.signal_type = SignalType::v2;
        s.target_p2p = p;
        s.noise_sigma = noise_sigma;
        specs.push_back(s);
    }
    return specs;
}

/// Synthesize every set. Deterministic: the noise stream of each set is seeded
/// from (seed, set_name), so sets can be generated in any order or in parallel
/// without changing the result.
inline Dataset generate_dataset(const std::vector<DatasetSpec>& specs, std::uint64_t seed) {
    if (specs.empty()) throw std::invalid_argument("generate_dataset: no specs given");
    std::set<std::string> names;
    for (const auto& s : specs) {
        if (!names.insert(s.set_name).second) {
            throw std::invalid_argument("generate_dataset: duplicate set name '" + s.set_name + "'");
        }
    }

    Dataset ds;
    for (const auto& spec : specs) {
        if (!(spec.target_p2p > 0.0))
            throw std::invalid_argument("generate_dataset: target_p2p must be positive");
        if (!(spec.noise_sigma >= 0.0))
            throw std::invalid_argument("generate_dataset: noise_sigma must be nonnegative");

        TimeSeries clean = synth_signal(harmonic_spec(spec.signal_type), spec.duration, spec.sample_rate);
        // The gain is computed from the clean waveform; noise rides on top,
        // like sensor noise on a volume-controlled drive signal.
        TimeSeries scaled = scale_to_p2p(clean, spec.target_p2p);
        if (spec.noise_sigma > 0.0) {
            Rng rng(mix_seed(seed, fnv1a64(spec.set_name)));
            for (double& v : scaled.samples) v += rng.normal(0.0, spec.noise_sigma);
        }

        DatasetSet set;
        set.name = spec.set_name;
        set.signal_type = spec.signal_type;
        set.target_p2p = spec.target_p2p;
        set.sample_rate = spec.sample_rate;
        set.chunk_len = spec.chunk_len;
        set.chunks = chunk(scaled, spec.chunk_len);
        ds.sets.push_back(std::move(set));
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Dataset file format: a '#'-prefixed version line, then per set one header
//   set,<name>,<signal_type>,<p2p>,<fs>,<chunk_len>
// followed by one "chunk,<s0>,<s1>,..." line per chunk. Samples are written
// with shortest-round-trip formatting, so save/load is lossless.
// ---------------------------------------------------------------------------

inline constexpr const char* kDatasetMagic = "# novabench dataset v1";

inline std::string serialize_dataset(const Dataset& ds) {
    std::string out(kDatasetMagic);
    out += '\n';
    for (const auto& set : ds.sets) {
        out += "set," + set.name + ',' + to_string(set.signal_type) + ',' +
               format_double(set.target_p2p) + ',' + format_double(set.sample_rate) + ',' +
               format_double(set.chunk_len) + '\n';
        for (const auto& c : set.chunks) {
            out += "chunk";
            for (double v : c.samples) {
                out += ',';
                out += format_double(v);
            }
            out += '\n';
        }
    }
    return out;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
    write_file(path, serialize_dataset(ds));
}

inline Dataset parse_dataset(const std::vector<std::string>& lines) {
    if (lines.empty() || lines[0] != kDatasetMagic) {
        throw ParseError("missing dataset header '" + std::string(kDatasetMagic) + "'", 1);
    }
    Dataset ds;
    DatasetSet* current = nullptr;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t lineno = i + 1;
        const std::string& line = lines[i];
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_csv(line);
        if (fields[0] == "set") {
            if (fields.size() != 6) throw ParseError("set header needs 6 fields", lineno);
            DatasetSet set;
            set.name = std::string(fields[1]);
            if (set.name.empty()) throw ParseError("empty set name", lineno, "name");
            if (ds.has_set(set.name)) throw ParseError("duplicate set '" + set.name + "'", lineno, "name");
            set.signal_type = signal_type_from_string(fields[2]);
            set.target_p2p = parse_double(fields[3], lineno, "p2p");
            set.sample_rate = parse_double(fields[4], lineno, "fs");
            set.chunk_len = parse_double(fields[5], lineno, "chunk_len");
            ds.sets.push_back(std::move(set));
            current = &ds.sets.back();
        } else if (fields[0] == "chunk") {
            if (current == nullptr) throw ParseError("chunk record before any set header", lineno);
            TimeSeries ts;
            ts.sample_rate = current->sample_rate;
            ts.samples.reserve(fields.size() - 1);
            for (std::size_t f = 1; f < fields.size(); ++f) {
                ts.samples.push_back(parse_double(fields[f], lineno, "sample" + std::to_string(f - 1)));
            }
            if (!current->chunks.empty() && current->chunks.back().samples.size() != ts.samples.size()) {
                throw ParseError("chunk length differs from previous chunks of set '" + current->name + "'",
                                 lineno);
            }
            current->chunks.push_back(std::move(ts));
        } else {
            throw ParseError("unknown record type '" + std::string(fields[0]) + "'", lineno, "record");
        }
    }
    return ds;
}

inline Dataset load_dataset(const std::string& path) {
    return parse_dataset(read_lines(path));
}

}  // namespace novabench
