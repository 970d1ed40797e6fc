// Feature transformation stage: original features (identity), PCA, or one of
// the two autoencoder variants, behind a single dispatch type, plus the
// self-describing text persistence shared with the detector models.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "novabench/autoencoder.hpp"
#include "novabench/io.hpp"
#include "novabench/pca.hpp"

namespace novabench {

enum class TransformKind { original, pca, aer, aea };

inline const char* to_string(TransformKind k) {
    switch (k) {
        case TransformKind::original: return "of";
        case TransformKind::pca: return "pca";
        case TransformKind::aer: return "aer";
        case TransformKind::aea: return "aea";
    }
    return "?";
}

inline TransformKind transform_kind_from_string(std::string_view s) {
    if (s == "of") return TransformKind::original;
    if (s == "pca") return TransformKind::pca;
    if (s == "aer") return TransformKind::aer;
    if (s == "aea") return TransformKind::aea;
    throw std::invalid_argument("unknown transform '" + std::string(s) + "' (of|pca|aer|aea)");
}

struct IdentityTransform {
    std::size_t dim = 0;
};

struct TransformModel {
    std::variant<IdentityTransform, PCAModel, AEModel> model;

    TransformKind kind() const {
        if (std::holds_alternative<IdentityTransform>(model)) return TransformKind::original;
        if (std::holds_alternative<PCAModel>(model)) return TransformKind::pca;
        const auto& ae = std::get<AEModel>(model);
        return ae.variant == AEVariant::undercomplete ? TransformKind::aer : TransformKind::aea;
    }

    std::size_t input_dim() const {
        if (const auto* id = std::get_if<IdentityTransform>(&model)) return id->dim;
        if (const auto* pca = std::get_if<PCAModel>(&model)) return pca->input_dim();
        return std::get<AEModel>(model).input_dim;
    }

    std::size_t latent_dim() const {
        if (const auto* id = std::get_if<IdentityTransform>(&model)) return id->dim;
        if (const auto* pca = std::get_if<PCAModel>(&model)) return pca->latent_dim();
        return std::get<AEModel>(model).latent_dim();
    }
};

/// Map a normalized feature vector into the latent space.
inline std::vector<double> apply_transform(const TransformModel& t, std::span<const double> v) {
    if (v.size() != t.input_dim()) {
        throw std::invalid_argument("transform: input has dimension " + std::to_string(v.size()) +
                                    ", model expects " + std::to_string(t.input_dim()));
    }
    if (std::holds_alternative<IdentityTransform>(t.model)) return {v.begin(), v.end()};
    if (const auto* pca = std::get_if<PCAModel>(&t.model)) return pca_transform(*pca, v);
    return encode(std::get<AEModel>(t.model), v);
}

inline Matrix apply_transform_matrix(const TransformModel& t, const Matrix& x) {
    Matrix out(x.rows, t.latent_dim());
    for (std::size_t i = 0; i < x.rows; ++i) {
        const auto z = apply_transform(t, x.row(i));
        std::copy(z.begin(), z.end(), out.row(i).begin());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Persistence. Text blocks of the form
//   kind,<tag>
//   <field>,<values...>
// Vectors and matrix rows are written with shortest-round-trip doubles, so a
// save/load cycle reproduces the model bit for bit.
// ---------------------------------------------------------------------------

namespace detail {

inline void emit_vector(std::string& out, std::string_view name, std::span<const double> v) {
    out += name;
    for (double x : v) {
        out += ',';
        out += format_double(x);
    }
    out += '\n';
}

class BlockReader {
public:
    BlockReader(const std::vector<std::string>& lines, std::size_t begin, std::size_t end)
        : lines_(lines), pos_(begin), end_(end) {}

    bool done() const { return pos_ >= end_; }
    std::size_t lineno() const { return pos_ + 1; }

    /// Next non-empty, non-comment line split on commas; advances.
    std::vector<std::string_view> next(std::string_view expected_head) {
        while (pos_ < end_ && (lines_[pos_].empty() || lines_[pos_][0] == '#')) ++pos_;
        if (pos_ >= end_) throw ParseError("expected '" + std::string(expected_head) + "', got end of block",
                                           end_ + 1);
        const auto fields = split_csv(lines_[pos_]);
        if (!expected_head.empty() && fields[0] != expected_head) {
            throw ParseError("expected '" + std::string(expected_head) + "', got '" +
                                 std::string(fields[0]) + "'",
                             pos_ + 1);
        }
        ++pos_;
        return fields;
    }

    std::optional<std::vector<std::string_view>> peek() {
        while (pos_ < end_ && (lines_[pos_].empty() || lines_[pos_][0] == '#')) ++pos_;
        if (pos_ >= end_) return std::nullopt;
        return split_csv(lines_[pos_]);
    }

    std::vector<double> numbers(const std::vector<std::string_view>& fields, std::size_t from = 1) const {
        std::vector<double> out;
        out.reserve(fields.size() - from);
        for (std::size_t i = from; i < fields.size(); ++i) {
            out.push_back(parse_double(fields[i], pos_, fields[0]));
        }
        return out;
    }

private:
    const std::vector<std::string>& lines_;
    std::size_t pos_;
    std::size_t end_;
};

inline void emit_matrix(std::string& out, std::string_view name, const Matrix& m) {
    out += name;
    out += ',' + std::to_string(m.rows) + ',' + std::to_string(m.cols) + '\n';
    for (std::size_t i = 0; i < m.rows; ++i) emit_vector(out, "row", m.row(i));
}

inline Matrix read_matrix(BlockReader& r, std::string_view name) {
    const auto head = r.next(name);
    if (head.size() != 3) throw ParseError("matrix header needs rows,cols", r.lineno());
    const auto rows = static_cast<std::size_t>(parse_long(head[1], r.lineno(), "rows"));
    const auto cols = static_cast<std::size_t>(parse_long(head[2], r.lineno(), "cols"));
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto fields = r.next("row");
        if (fields.size() != cols + 1) throw ParseError("matrix row width mismatch", r.lineno());
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = parse_double(fields[j + 1], r.lineno(), "row");
    }
    return m;
}

}  // namespace detail

inline std::string serialize_transform(const TransformModel& t) {
    std::string out;
    out += "kind,";
    out += to_string(t.kind());
    out += '\n';
    if (const auto* id = std::get_if<IdentityTransform>(&t.model)) {
        out += "dim," + std::to_string(id->dim) + '\n';
    } else if (const auto* pca = std::get_if<PCAModel>(&t.model)) {
        detail::emit_vector(out, "means", pca->means);
        detail::emit_vector(out, "evr", pca->explained_variance_ratio);
        detail::emit_matrix(out, "components", pca->components);
    } else {
        const auto& ae = std::get<AEModel>(t.model);
        out += "dims," + std::to_string(ae.input_dim) + ',' + std::to_string(ae.arch.n_e1) + ',' +
               std::to_string(ae.arch.n_e2) + '\n';
        out += "train," + format_double(ae.config.learning_rate) + ',' +
               std::to_string(ae.config.batch_size) + ',' + std::to_string(ae.config.epochs) + ',' +
               format_double(ae.config.leaky_slope) + '\n';
        out += "loss," + format_double(ae.initial_loss) + ',' + format_double(ae.final_loss) + '\n';
        for (std::size_t l = 0; l < 4; ++l) {
            detail::emit_matrix(out, "weights", ae.weights[l]);
            detail::emit_vector(out, "biases", ae.biases[l]);
        }
    }
    return out;
}

inline TransformModel parse_transform(detail::BlockReader& r) {
    const auto kind_fields = r.next("kind");
    if (kind_fields.size() != 2) throw ParseError("kind line needs one value", r.lineno());
    const TransformKind kind = transform_kind_from_string(kind_fields[1]);

    TransformModel t;
    if (kind == TransformKind::original) {
        const auto dim = r.next("dim");
        t.model = IdentityTransform{static_cast<std::size_t>(parse_long(dim[1], r.lineno(), "dim"))};
    } else if (kind == TransformKind::pca) {
        PCAModel pca;
        pca.means = r.numbers(r.next("means"));
        pca.explained_variance_ratio = r.numbers(r.next("evr"));
        pca.components = detail::read_matrix(r, "components");
        t.model = std::move(pca);
    } else {
        AEModel ae;
        ae.variant = kind == TransformKind::aer ? AEVariant::undercomplete : AEVariant::overcomplete;
        const auto dims = r.next("dims");
        if (dims.size() != 4) throw ParseError("dims line needs 3 values", r.lineno());
        ae.input_dim = static_cast<std::size_t>(parse_long(dims[1], r.lineno(), "input"));
        ae.arch.n_e1 = static_cast<std::size_t>(parse_long(dims[2], r.lineno(), "n_e1"));
        ae.arch.n_e2 = static_cast<std::size_t>(parse_long(dims[3], r.lineno(), "n_e2"));
        const auto train = r.next("train");
        if (train.size() != 5) throw ParseError("train line needs 4 values", r.lineno());
        ae.config.learning_rate = parse_double(train[1], r.lineno(), "lr");
        ae.config.batch_size = static_cast<std::size_t>(parse_long(train[2], r.lineno(), "bs"));
        ae.config.epochs = static_cast<std::size_t>(parse_long(train[3], r.lineno(), "epochs"));
        ae.config.leaky_slope = parse_double(train[4], r.lineno(), "slope");
        const auto loss = r.next("loss");
        ae.initial_loss = parse_double(loss[1], r.lineno(), "initial");
        ae.final_loss = parse_double(loss[2], r.lineno(), "final");
        for (std::size_t l = 0; l < 4; ++l) {
            ae.weights.push_back(detail::read_matrix(r, "weights"));
            ae.biases.push_back(r.numbers(r.next("biases")));
        }
        t.model = std::move(ae);
    }
    return t;
}

inline void save_transform(const TransformModel& t, const std::string& path) {
    write_file(path, "# novabench transform v1\n" + serialize_transform(t));
}

inline TransformModel load_transform(const std::string& path) {
    const auto lines = read_lines(path);
    detail::BlockReader r(lines, 0, lines.size());
    return parse_transform(r);
}

}  // namespace novabench
