#pragma once

#include "reid/metric.hpp"

namespace reid::detail {

enum class Exec { Serial, Parallel };

DistanceMatrix sq_euclidean_matrix(const Matrix& features, Exec exec);
DistanceMatrix euclidean_matrix(const Matrix& features, Exec exec);
Matrix cross_euclidean(const Matrix& query, const Matrix& gallery, Exec exec);
std::vector<std::vector<std::size_t>> knn_lists(const DistanceMatrix& d, int k, Exec exec);
DistanceMatrix kernelized_matrix(const DistanceMatrix& d, const NeighborSets& robust, Exec exec);
DistanceMatrix jaccard_distance(const DistanceMatrix& m, Exec exec);
DistanceMatrix plain_jaccard(const DistanceMatrix& d, int k, Exec exec);
WeightConfidence weight_confidence(const Matrix& target, const Matrix& source, Exec exec);
DistanceMatrix combined_distance(const DistanceMatrix& base, const WeightConfidence& w, double lambda, Exec exec);

}  // namespace reid::detail
