#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "reid/cluster.hpp"
#include "reid/core.hpp"
#include "reid/encoder.hpp"
#include "reid/eval.hpp"
#include "reid/losses.hpp"

namespace reid {

struct EvalScores {
    double rank1 = 0.0, rank5 = 0.0, rank10 = 0.0, map = 0.0;

    friend bool operator==(const EvalScores&, const EvalScores&) = default;
};

struct IterationReport {
    int iteration = -1;  // -1 is the direct-transfer row
    double tau = 0.0;
    int num_clusters = 0;
    std::size_t noise_count = 0;
    double l_intra = 0.0, l_inter = 0.0, l_wr = 0.0;
    std::optional<EvalScores> eval;
    std::optional<double> ari;
    bool skipped = false;  // refinement skipped for lack of pseudo-identities; encoder unchanged

    friend bool operator==(const IterationReport&, const IterationReport&) = default;
};

struct EvalData {
    EmbeddingSet query;
    EmbeddingSet gallery;
};

struct AdaptResult {
    EncoderModel model;
    std::vector<IterationReport> reports;  // direct transfer first, then one per iteration
    ClusterAssignment final_assignment;
};

/// Distance over encoded target features per cfg.metric_mode, mixed with the
/// source-proximity confidence when cfg.use_dw.
DistanceMatrix adaptation_distance(const Matrix& target_encoded, const Matrix& source_encoded,
                                   const AdaptConfig& cfg);

/// One labeling pass: distance, then DBSCAN(tau, N_1). Computes tau from this
/// matrix when none is given.
struct PseudoLabels {
    Threshold threshold;
    ClusterAssignment assignment;
};
PseudoLabels pseudo_label(const Matrix& target_encoded, const Matrix& source_encoded, const AdaptConfig& cfg,
                          std::optional<double> tau = std::nullopt);

/// The self-training loop: train on source, label the target by clustering,
/// refine on the pseudo-labels, re-encode the raw inputs, repeat N_2 times.
/// tau is fixed from the first distance matrix.
AdaptResult run_adaptation(const EmbeddingSet& source, const EmbeddingSet& target, const AdaptConfig& cfg,
                           const std::optional<EvalData>& eval_data = std::nullopt);

/// Same loop starting from an already source-trained encoder.
AdaptResult run_adaptation_from(EncoderModel model, const EmbeddingSet& source, const EmbeddingSet& target,
                                const AdaptConfig& cfg, const std::optional<EvalData>& eval_data = std::nullopt);

/// CSV `iter,tau,clusters,noise,l_intra,l_inter,l_wr,rank1,rank5,rank10,map,ari`.
std::string format_reports_csv(const std::vector<IterationReport>& reports);
void save_reports_csv(const std::vector<IterationReport>& reports, const std::filesystem::path& path);

}  // namespace reid
