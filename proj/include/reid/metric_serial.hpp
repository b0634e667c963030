#pragma once

// Single-threaded references for the OpenMP kernels in metric.hpp. Same
// arithmetic in the same order, so outputs must match bitwise. Kept for tests
// and for the parallel-vs-serial benchmark.

#include "reid/metric.hpp"

namespace reid::serial {

DistanceMatrix sq_euclidean_matrix(const Matrix& features);
DistanceMatrix euclidean_matrix(const Matrix& features);
Matrix cross_euclidean(const Matrix& query, const Matrix& gallery);
std::vector<std::vector<std::size_t>> knn_lists(const DistanceMatrix& d, int k);
DistanceMatrix kernelized_matrix(const DistanceMatrix& sq_euclidean, const NeighborSets& robust);
DistanceMatrix jaccard_distance(const DistanceMatrix& kernelized);
DistanceMatrix plain_jaccard(const DistanceMatrix& sq_euclidean, int k);
WeightConfidence weight_confidence(const Matrix& target, const Matrix& source);
DistanceMatrix combined_distance(const DistanceMatrix& base, const WeightConfidence& w, double lambda);

}  // namespace reid::serial
