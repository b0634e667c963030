#pragma once

// Diagnostic losses over a clustering (intra/inter cluster distance sums and
// the target-to-source proximity loss) and the two training losses used by
// the encoder: batch-hard triplet and softmax cross-entropy, each with an
// analytic gradient.

#include <cstdint>
#include <vector>

#include "reid/cluster.hpp"
#include "reid/matrix.hpp"

namespace reid {

struct LossReport {
    double l_intra = 0.0;
    double l_inter = 0.0;
    double l_wr = 0.0;
    PairCounts pair_counts;
};

/// Sum of plain norms over unordered pairs sharing a cluster.
double loss_intra(const Matrix& encoded, const ClusterAssignment& a);

/// Negated sum of plain norms over unordered pairs in different clusters (NOISE excluded).
double loss_inter(const Matrix& encoded, const ClusterAssignment& a);

/// Mean over target rows of the plain-norm distance to the nearest source row.
double loss_wr(const Matrix& target, const Matrix& source);

LossReport loss_report(const Matrix& target, const Matrix& source, const ClusterAssignment& a);

/// Distances below this have no usable gradient; their contribution is dropped.
inline constexpr double kDistanceGradGuard = 1e-12;

struct LossAndGrad {
    double loss = 0.0;
    Matrix grad;  // same shape as the input
    std::size_t active = 0;  // anchors with a positive hinge (triplet only)
};

/// Batch-hard triplet loss. For each anchor: hardest positive (largest
/// same-label distance) and hardest negative (smallest different-label
/// distance), ties to the lower index. Loss is the mean hinge over anchors.
LossAndGrad triplet_batch_hard(const Matrix& features, const std::vector<std::int64_t>& labels, double margin);

/// Mean cross-entropy with log-sum-exp stabilization; grad = (softmax - onehot) / b.
LossAndGrad softmax_ce(const Matrix& logits, const std::vector<std::size_t>& targets);

}  // namespace reid
