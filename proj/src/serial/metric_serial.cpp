#include "reid/metric_serial.hpp"

#include "../metric_detail.hpp"

namespace reid::serial {

using detail::Exec;

DistanceMatrix sq_euclidean_matrix(const Matrix& f) { return detail::sq_euclidean_matrix(f, Exec::Serial); }
DistanceMatrix euclidean_matrix(const Matrix& f) { return detail::euclidean_matrix(f, Exec::Serial); }
Matrix cross_euclidean(const Matrix& q, const Matrix& g) { return detail::cross_euclidean(q, g, Exec::Serial); }
std::vector<std::vector<std::size_t>> knn_lists(const DistanceMatrix& d, int k) {
    return detail::knn_lists(d, k, Exec::Serial);
}
DistanceMatrix kernelized_matrix(const DistanceMatrix& d, const NeighborSets& r) {
    return detail::kernelized_matrix(d, r, Exec::Serial);
}
DistanceMatrix jaccard_distance(const DistanceMatrix& m) { return detail::jaccard_distance(m, Exec::Serial); }
DistanceMatrix plain_jaccard(const DistanceMatrix& d, int k) { return detail::plain_jaccard(d, k, Exec::Serial); }
WeightConfidence weight_confidence(const Matrix& t, const Matrix& s) {
    return detail::weight_confidence(t, s, Exec::Serial);
}
DistanceMatrix combined_distance(const DistanceMatrix& b, const WeightConfidence& w, double lambda) {
    return detail::combined_distance(b, w, lambda, Exec::Serial);
}

}  // namespace reid::serial
