#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "reid/cluster.hpp"
#include "reid/core.hpp"

namespace reid {

struct RetrievalResult {
    std::vector<double> cmc;  // cmc[r] = fraction of valid queries matched within rank r+1
    double map = 0.0;
    std::size_t valid_queries = 0;
    std::size_t total_queries = 0;

    double rank(std::size_t r) const { return cmc.empty() ? 0.0 : cmc[std::min(r, cmc.size()) - 1]; }
};

/// Multi-gallery-shot CMC and mAP. Gallery entries sharing both identity and
/// camera with the query are junk and skipped; gallery entries without an
/// identity are kept as distractors. Queries left with no correct match are
/// not counted. `dist` is queries x gallery.
RetrievalResult cmc_map(const EmbeddingSet& query, const EmbeddingSet& gallery, const Matrix& dist);

/// ARI between predicted clusters (NOISE as singletons) and true labels.
double adjusted_rand_index(const ClusterAssignment& pred, const std::vector<std::int64_t>& truth);
double adjusted_rand_index(const std::vector<int>& pred, const std::vector<std::int64_t>& truth);

struct NnRiskProbeConfig {
    std::size_t source_size_m = 1000;
    std::size_t num_pair_draws = 100000;
    std::uint64_t seed = 0;
};

/// Uniform pairs of distinct target indices, deterministic in the seed.
std::vector<std::pair<std::size_t, std::size_t>> draw_pairs(std::size_t n, std::size_t count, std::uint64_t seed);

/// Empirical risk of the nearest-source-neighbor pair classifier on target
/// pairs: fraction of drawn pairs where [id(N_S(t1)) == id(N_S(t2))] disagrees
/// with [id(t1) == id(t2)]. The source is subsampled to source_size_m rows.
double nn_pair_risk(const EmbeddingSet& source, const EmbeddingSet& target, const NnRiskProbeConfig& probe);

/// `rank,cmc` rows for ranks 1..max_rank followed by `map,<value>`.
void save_eval_csv(const RetrievalResult& r, const std::filesystem::path& path, std::size_t max_rank = 50);

}  // namespace reid
