#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reid/error.hpp"
#include "reid/matrix.hpp"

namespace reid {

enum class Domain : std::uint8_t { Source, Target };

/// Identities are never shared across domains; the domain tag keeps the two id
/// namespaces apart even when the raw integers collide.
struct SampleMeta {
    std::optional<std::int64_t> identity;
    std::optional<std::int64_t> camera;
    Domain domain = Domain::Target;

    friend bool operator==(const SampleMeta&, const SampleMeta&) = default;
};

struct EmbeddingSet {
    Matrix features;  // n x d
    std::vector<SampleMeta> meta;
    std::string name;

    std::size_t size() const noexcept { return features.rows(); }
    std::size_t dim() const noexcept { return features.cols(); }
    bool has_identities() const;
    bool has_cameras() const;

    /// Throws on any violated invariant (empty, non-finite entries, mixed domains).
    void validate() const;

    /// Row subset in the given order; metadata follows.
    EmbeddingSet subset(const std::vector<std::size_t>& rows) const;

    /// Identity labels with ABSENT mapped to -1.
    std::vector<std::int64_t> identity_labels() const;
};

enum class DistanceKind : std::uint8_t {
    SqEuclidean = 0,
    Kernelized = 1,
    Jaccard = 2,
    Combined = 3,
    PlainJaccard = 4,
    Euclidean = 5,
};

std::string_view to_string(DistanceKind kind) noexcept;

struct DistanceMatrix {
    Matrix values;  // n x n
    DistanceKind kind = DistanceKind::SqEuclidean;
    bool symmetric = true;

    std::size_t size() const noexcept { return values.rows(); }
};

enum class MetricMode : std::uint8_t { EuclideanBaseline, KReciprocal, PlainJaccard };

enum class Activation : std::uint8_t { None = 0, Relu = 1 };

struct AdaptConfig {
    double balance_lambda = 0.1;
    double percentage_p = 1.6e-3;
    int min_cluster_n1 = 4;
    int iterations_n2 = 20;
    int reciprocal_k = 20;
    MetricMode metric_mode = MetricMode::KReciprocal;
    bool use_dw = true;
    double triplet_margin = 0.3;
    double learning_rate = 0.005;
    int epochs_per_iter = 6;
    int pk_p = 4;  // P=8 cannot be filled at small p, see README
    int pk_k = 4;
    std::uint64_t seed = 42;

    // Encoder / optimizer shape.
    double momentum = 0.9;
    double source_learning_rate = 0.003;
    int source_epochs = 2;
    int hidden_dim = 0;   // 0 = single affine layer
    int output_dim = 0;   // 0 = same as input dimension

    friend bool operator==(const AdaptConfig&, const AdaptConfig&) = default;
};

/// Throws Error(InvalidParam) naming the first offending field.
void validate_config(const AdaptConfig& cfg);

/// Flat `key = value` config text. Unknown keys and malformed values are InvalidParam.
AdaptConfig parse_config(std::string_view text, AdaptConfig base = {});
AdaptConfig load_config(const std::filesystem::path& path, AdaptConfig base = {});
std::string format_config(const AdaptConfig& cfg);

std::string_view to_string(MetricMode mode) noexcept;
std::optional<MetricMode> parse_metric_mode(std::string_view text) noexcept;

enum class FileFormat { Binary, Csv };

/// Loads an embedding file. Every sample gets the given domain tag (the file does not store it).
EmbeddingSet load_embeddings(const std::filesystem::path& path, FileFormat format,
                             Domain domain = Domain::Target);
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path, FileFormat format);

/// Picks the format from the extension: ".csv" is CSV, anything else BINARY.
FileFormat format_for(const std::filesystem::path& path);

}  // namespace reid
