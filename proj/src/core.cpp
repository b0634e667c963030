#include "reid/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace reid {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MalformedHeader: return "MALFORMED_HEADER";
        case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
        case ErrorCode::NonFiniteValue: return "NON_FINITE_VALUE";
        case ErrorCode::IoFailure: return "IO_FAILURE";
        case ErrorCode::InvalidParam: return "INVALID_PARAM";
        case ErrorCode::KTooLarge: return "K_TOO_LARGE";
        case ErrorCode::SizeMismatch: return "SIZE_MISMATCH";
        case ErrorCode::DegenerateRow: return "DEGENERATE_ROW";
        case ErrorCode::EmptyPool: return "EMPTY_POOL";
        case ErrorCode::NegativeEps: return "NEGATIVE_EPS";
        case ErrorCode::DegenerateBatch: return "DEGENERATE_BATCH";
        case ErrorCode::BadTarget: return "BAD_TARGET";
        case ErrorCode::NonFiniteOutput: return "NON_FINITE_OUTPUT";
        case ErrorCode::TooFewIdentities: return "TOO_FEW_IDENTITIES";
        case ErrorCode::NonFiniteLoss: return "NON_FINITE_LOSS";
        case ErrorCode::AdaptationCollapsed: return "ADAPTATION_COLLAPSED";
        case ErrorCode::MissingCamera: return "MISSING_CAMERA";
        case ErrorCode::ShapeMismatch: return "SHAPE_MISMATCH";
        case ErrorCode::EmptySource: return "EMPTY_SOURCE";
        case ErrorCode::InvalidSpec: return "INVALID_SPEC";
    }
    return "UNKNOWN";
}

std::string_view to_string(DistanceKind kind) noexcept {
    switch (kind) {
        case DistanceKind::SqEuclidean: return "SQ_EUCLIDEAN";
        case DistanceKind::Kernelized: return "KERNELIZED";
        case DistanceKind::Jaccard: return "JACCARD";
        case DistanceKind::Combined: return "COMBINED";
        case DistanceKind::PlainJaccard: return "PLAIN_JACCARD";
        case DistanceKind::Euclidean: return "EUCLIDEAN";
    }
    return "UNKNOWN";
}

std::string_view to_string(MetricMode mode) noexcept {
    switch (mode) {
        case MetricMode::EuclideanBaseline: return "euclidean";
        case MetricMode::KReciprocal: return "kreciprocal";
        case MetricMode::PlainJaccard: return "jaccard";
    }
    return "unknown";
}

std::optional<MetricMode> parse_metric_mode(std::string_view text) noexcept {
    if (text == "euclidean" || text == "EUCLIDEAN_BASELINE") return MetricMode::EuclideanBaseline;
    if (text == "kreciprocal" || text == "KRECIPROCAL") return MetricMode::KReciprocal;
    if (text == "jaccard" || text == "PLAIN_JACCARD") return MetricMode::PlainJaccard;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// EmbeddingSet

bool EmbeddingSet::has_identities() const {
    for (const auto& m : meta)
        if (!m.identity) return false;
    return true;
}

bool EmbeddingSet::has_cameras() const {
    for (const auto& m : meta)
        if (!m.camera) return false;
    return true;
}

void EmbeddingSet::validate() const {
    if (size() == 0 || dim() == 0)
        throw Error(ErrorCode::DimensionMismatch, "embedding set '" + name + "' is empty");
    if (meta.size() != size())
        throw Error(ErrorCode::DimensionMismatch,
                    "metadata count " + std::to_string(meta.size()) + " != rows " + std::to_string(size()));
    for (std::size_t i = 0; i < size(); ++i) {
        const auto r = features.row(i);
        for (std::size_t j = 0; j < r.size(); ++j)
            if (!std::isfinite(r[j]))
                throw Error(ErrorCode::NonFiniteValue,
                            "row=" + std::to_string(i) + " col=" + std::to_string(j));
        const auto& m = meta[i];
        if (m.domain != meta.front().domain)
            throw Error(ErrorCode::DimensionMismatch, "mixed domain tags at row=" + std::to_string(i));
        if ((m.identity && *m.identity < 0) || (m.camera && *m.camera < 0))
            throw Error(ErrorCode::InvalidParam, "negative id at row=" + std::to_string(i));
    }
}

EmbeddingSet EmbeddingSet::subset(const std::vector<std::size_t>& rows) const {
    EmbeddingSet out;
    out.name = name;
    out.features = Matrix(rows.size(), dim());
    out.meta.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = features.row(rows[r]);
        std::copy(src.begin(), src.end(), out.features.row(r).begin());
        out.meta.push_back(meta[rows[r]]);
    }
    return out;
}

std::vector<std::int64_t> EmbeddingSet::identity_labels() const {
    std::vector<std::int64_t> out(meta.size());
    for (std::size_t i = 0; i < meta.size(); ++i) out[i] = meta[i].identity.value_or(-1);
    return out;
}

// ---------------------------------------------------------------------------
// Config

void validate_config(const AdaptConfig& c) {
    auto bad = [](const char* field, const std::string& why) {
        throw Error(ErrorCode::InvalidParam, std::string(field) + ": " + why);
    };
    if (!(c.balance_lambda >= 0.0 && c.balance_lambda <= 1.0)) bad("balance_lambda", "must be in [0,1]");
    if (!(c.percentage_p > 0.0 && c.percentage_p < 1.0)) bad("percentage_p", "must be in (0,1)");
    if (c.min_cluster_n1 < 1) bad("min_cluster_n1", "must be >= 1");
    if (c.iterations_n2 < 1) bad("iterations_n2", "must be >= 1");
    if (c.reciprocal_k < 2) bad("reciprocal_k", "must be >= 2");
    if (!(c.triplet_margin >= 0.0) || !std::isfinite(c.triplet_margin)) bad("triplet_margin", "must be >= 0");
    if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) bad("learning_rate", "must be > 0");
    if (c.epochs_per_iter < 1) bad("epochs_per_iter", "must be >= 1");
    if (c.pk_p < 2) bad("pk_p", "must be >= 2");
    if (c.pk_k < 2) bad("pk_k", "must be >= 2");
    if (!(c.momentum >= 0.0 && c.momentum < 1.0)) bad("momentum", "must be in [0,1)");
    if (!(c.source_learning_rate > 0.0) || !std::isfinite(c.source_learning_rate))
        bad("source_learning_rate", "must be > 0");
    if (c.source_epochs < 1) bad("source_epochs", "must be >= 1");
    if (c.hidden_dim < 0) bad("hidden_dim", "must be >= 0");
    if (c.output_dim < 0 || c.output_dim == 1) bad("output_dim", "must be 0 or >= 2");
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

bool parse_bool(std::string_view s, bool& out) {
    if (s == "1" || s == "true") return out = true, true;
    if (s == "0" || s == "false") return out = false, true;
    return false;
}

}  // namespace

AdaptConfig parse_config(std::string_view text, AdaptConfig cfg) {
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        const auto where = " (line " + std::to_string(line_no) + ")";
        if (eq == std::string_view::npos)
            throw Error(ErrorCode::InvalidParam, "expected key = value" + where);
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));

        bool ok = false;
        if (key == "balance_lambda") ok = parse_number(value, cfg.balance_lambda);
        else if (key == "percentage_p") ok = parse_number(value, cfg.percentage_p);
        else if (key == "min_cluster_n1") ok = parse_number(value, cfg.min_cluster_n1);
        else if (key == "iterations_n2") ok = parse_number(value, cfg.iterations_n2);
        else if (key == "reciprocal_k") ok = parse_number(value, cfg.reciprocal_k);
        else if (key == "metric_mode") {
            if (auto m = parse_metric_mode(value)) cfg.metric_mode = *m, ok = true;
        }
        else if (key == "use_dw") ok = parse_bool(value, cfg.use_dw);
        else if (key == "triplet_margin") ok = parse_number(value, cfg.triplet_margin);
        else if (key == "learning_rate") ok = parse_number(value, cfg.learning_rate);
        else if (key == "epochs_per_iter") ok = parse_number(value, cfg.epochs_per_iter);
        else if (key == "pk_p") ok = parse_number(value, cfg.pk_p);
        else if (key == "pk_k") ok = parse_number(value, cfg.pk_k);
        else if (key == "seed") ok = parse_number(value, cfg.seed);
        else if (key == "momentum") ok = parse_number(value, cfg.momentum);
        else if (key == "source_learning_rate") ok = parse_number(value, cfg.source_learning_rate);
        else if (key == "source_epochs") ok = parse_number(value, cfg.source_epochs);
        else if (key == "hidden_dim") ok = parse_number(value, cfg.hidden_dim);
        else if (key == "output_dim") ok = parse_number(value, cfg.output_dim);
        else throw Error(ErrorCode::InvalidParam, "unknown key '" + std::string(key) + "'" + where);

        if (!ok)
            throw Error(ErrorCode::InvalidParam,
                        std::string(key) + ": cannot parse '" + std::string(value) + "'" + where);
    }
    return cfg;
}

AdaptConfig load_config(const std::filesystem::path& path, AdaptConfig base) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), base);
}

std::string format_config(const AdaptConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "balance_lambda = " << c.balance_lambda << '\n'
       << "percentage_p = " << c.percentage_p << '\n'
       << "min_cluster_n1 = " << c.min_cluster_n1 << '\n'
       << "iterations_n2 = " << c.iterations_n2 << '\n'
       << "reciprocal_k = " << c.reciprocal_k << '\n'
       << "metric_mode = " << to_string(c.metric_mode) << '\n'
       << "use_dw = " << (c.use_dw ? 1 : 0) << '\n'
       << "triplet_margin = " << c.triplet_margin << '\n'
       << "learning_rate = " << c.learning_rate << '\n'
       << "epochs_per_iter = " << c.epochs_per_iter << '\n'
       << "pk_p = " << c.pk_p << '\n'
       << "pk_k = " << c.pk_k << '\n'
       << "seed = " << c.seed << '\n'
       << "momentum = " << c.momentum << '\n'
       << "source_learning_rate = " << c.source_learning_rate << '\n'
       << "source_epochs = " << c.source_epochs << '\n'
       << "hidden_dim = " << c.hidden_dim << '\n'
       << "output_dim = " << c.output_dim << '\n';
    return os.str();
}

}  // namespace reid
