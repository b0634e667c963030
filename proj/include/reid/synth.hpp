#pragma once

// Deterministic synthetic domains for desk-scale experiments. All randomness
// comes from std::mt19937_64 seeded through derive_seed(spec.seed, stream);
// see rng.hpp for the conversions. Generated features are rounded to float so
// that in-memory sets equal their BINARY files bit for bit.

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "reid/core.hpp"

namespace reid {

struct SynthSpec {
    int num_ids_source = 32;
    int num_ids_target = 32;
    int samples_per_id = 20;
    int dim = 16;
    double cluster_sigma = 0.15;
    double mean_scale = 1.0;  // std-dev of identity means per coordinate
    int signal_dim = 0;       // identity means vary only in the first signal_dim coordinates; 0 = all
    // target shift: x -> R x + translation + camera_offset[cam]
    double rotation_angle = 0.0;  // radians, applied in consecutive planes of a seeded orthogonal basis
    std::vector<double> translation;  // empty = zero, one value = broadcast, else dim values
    double camera_offset_scale = 0.0;
    int cameras = 4;
    std::uint64_t seed = 42;
};

/// The pinned scenario used by the acceptance suite.
SynthSpec reference_spec();

/// Throws InvalidSpec on any non-positive size, sigma <= 0, cameras < 2 or a bad translation length.
void validate_spec(const SynthSpec& spec);

SynthSpec parse_synth_spec(std::string_view text);
SynthSpec load_synth_spec(const std::filesystem::path& path);

struct Domains {
    EmbeddingSet source;
    EmbeddingSet target;
};

/// Source: Gaussian blobs around per-identity means. Target: fresh means and
/// samples pushed through the shift, plus a per-camera additive offset.
/// Sample s of an identity is seen by camera s % cameras. Target identity ids
/// start at num_ids_source so the two namespaces never overlap.
Domains gen_domains(const SynthSpec& spec);

/// Query = first target sample of every (identity, camera); gallery = the whole target set.
struct QueryGallery {
    EmbeddingSet query;
    EmbeddingSet gallery;
};
QueryGallery make_query_gallery(const EmbeddingSet& target);

/// Source and target drawn from one shared mixture (same means), with
/// disjoint id namespaces; target id = source id + num_ids.
Domains gen_aligned_domains(int num_ids, int source_per_id, int target_per_id, int dim, double sigma,
                            std::uint64_t seed);

/// 2-D scene: each target identity has an "easy" core sitting on a source
/// cluster and a drifting tail that bridges toward the next identity.
struct WeightRatioToy {
    EmbeddingSet source;
    EmbeddingSet target;
    std::vector<std::int64_t> expected;  // true identity per target row
    std::vector<bool> easy;              // row belongs to an easy core
    double sigma = 0.0;                  // core spread
    AdaptConfig config;                  // clustering settings the scene is tuned for
};
WeightRatioToy gen_weight_ratio_toy(std::uint64_t seed);

}  // namespace reid
