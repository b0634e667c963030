#pragma once

// Pairwise distance machinery over target features: squared Euclidean matrix,
// k-NN / mutual k-NN sets, k-reciprocal robust sets, the kernelized neighbor
// matrix, its Jaccard distance, the plain neighbor-set Jaccard distance, the
// source-proximity confidence and the combined distance.
//
// Matrix producers parallelize over rows with OpenMP. Each row is computed
// independently with a fixed in-row summation order, so results are bitwise
// identical for any thread count. Serial references with identical arithmetic
// live in reid::serial (metric_serial.hpp).

#include <filesystem>
#include <vector>

#include "reid/core.hpp"

namespace reid {

/// Index sets; sets[i] is sorted ascending and always contains i.
struct NeighborSets {
    int k = 0;
    std::vector<std::vector<std::size_t>> sets;

    std::size_t size() const noexcept { return sets.size(); }
};

struct WeightConfidence {
    std::vector<double> raw;         // 1 - exp(-min squared distance to source)
    std::vector<double> normalized;  // raw / max(raw), or all zero when max is 0
};

DistanceMatrix sq_euclidean_matrix(const Matrix& features);
inline DistanceMatrix sq_euclidean_matrix(const EmbeddingSet& set) { return sq_euclidean_matrix(set.features); }

/// Plain (non-squared) norm matrix, used by the Euclidean self-training baseline.
DistanceMatrix euclidean_matrix(const Matrix& features);

/// Rectangular plain-norm distances, rows = queries, cols = gallery.
Matrix cross_euclidean(const Matrix& query, const Matrix& gallery);

/// For each i, the k nearest other indices by (distance, index). Requires 1 <= k < n.
std::vector<std::vector<std::size_t>> knn_lists(const DistanceMatrix& d, int k);

/// sets[i] = {i} plus every j in knn(i) that also has i in knn(j).
NeighborSets mutual_knn(const DistanceMatrix& d, int k);

/// k-reciprocal robust sets: the mutual k-NN set, expanded by each member's
/// mutual floor(k/2)-NN set whenever at least two thirds of it already lies in
/// the original mutual k-NN set. Accepts 2 <= k <= n; neighborhood sizes are
/// capped at n - 1.
NeighborSets robust_sets(const DistanceMatrix& d, int k);

/// M[i][j] = exp(-D[i][j]) for j in I_i, else 0. Not symmetric in general.
DistanceMatrix kernelized_matrix(const DistanceMatrix& sq_euclidean, const NeighborSets& robust);

/// d_J(i,j) = 1 - sum_k min(M_ik, M_jk) / sum_k max(M_ik, M_jk).
DistanceMatrix jaccard_distance(const DistanceMatrix& kernelized);

/// 1 - |A_i n A_j| / |A_i u A_j| with A_i = {i} u knn(i).
DistanceMatrix plain_jaccard(const DistanceMatrix& sq_euclidean, int k);

WeightConfidence weight_confidence(const Matrix& target, const Matrix& source);
inline WeightConfidence weight_confidence(const EmbeddingSet& target, const EmbeddingSet& source) {
    return weight_confidence(target.features, source.features);
}

/// (1 - lambda) * D[i][j] + lambda * (w[i] + w[j]) using the normalized confidence.
DistanceMatrix combined_distance(const DistanceMatrix& base, const WeightConfidence& w, double lambda);

/// Full k-reciprocal pipeline: squared Euclidean -> robust sets -> kernelized -> Jaccard.
DistanceMatrix kreciprocal_jaccard(const Matrix& features, int k);

/// "DMAT" dump: magic, kind u8, n u32, then n*n little-endian f32 row-major.
void save_distance_dump(const DistanceMatrix& d, const std::filesystem::path& path);
DistanceMatrix load_distance_dump(const std::filesystem::path& path);

}  // namespace reid
