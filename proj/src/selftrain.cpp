#include "reid/selftrain.hpp"

#include <charconv>
#include <fstream>

#include "reid/log.hpp"
#include "reid/metric.hpp"

namespace reid {

DistanceMatrix adaptation_distance(const Matrix& target, const Matrix& source, const AdaptConfig& cfg) {
    DistanceMatrix base;
    switch (cfg.metric_mode) {
        case MetricMode::EuclideanBaseline: base = euclidean_matrix(target); break;
        case MetricMode::KReciprocal: base = kreciprocal_jaccard(target, cfg.reciprocal_k); break;
        case MetricMode::PlainJaccard: base = plain_jaccard(sq_euclidean_matrix(target), cfg.reciprocal_k); break;
    }
    if (!cfg.use_dw) return base;
    return combined_distance(base, weight_confidence(target, source), cfg.balance_lambda);
}

PseudoLabels pseudo_label(const Matrix& target, const Matrix& source, const AdaptConfig& cfg,
                          std::optional<double> tau) {
    const auto dist = adaptation_distance(target, source, cfg);
    PseudoLabels out;
    if (tau) {
        out.threshold.tau = *tau;
        out.threshold.pool_size = dist.size() * (dist.size() - 1) / 2;
    } else {
        out.threshold = select_threshold(dist, cfg.percentage_p);
    }
    out.assignment = dbscan(dist, out.threshold.tau, cfg.min_cluster_n1);
    return out;
}

namespace {

IterationReport make_report(int iteration, double tau, const PseudoLabels& labels, const Matrix& target_enc,
                            const Matrix& source_enc, const EncoderModel& model, const EmbeddingSet& target,
                            const std::optional<EvalData>& eval_data) {
    IterationReport r;
    r.iteration = iteration;
    r.tau = tau;
    r.num_clusters = labels.assignment.num_clusters;
    r.noise_count = labels.assignment.noise_count();
    const auto losses = loss_report(target_enc, source_enc, labels.assignment);
    r.l_intra = losses.l_intra;
    r.l_inter = losses.l_inter;
    r.l_wr = losses.l_wr;
    if (eval_data) {
        const auto q = encode(model, eval_data->query);
        const auto g = encode(model, eval_data->gallery);
        const auto res = cmc_map(eval_data->query, eval_data->gallery, cross_euclidean(q, g));
        r.eval = EvalScores{res.rank(1), res.rank(5), res.rank(10), res.map};
    }
    if (target.has_identities()) r.ari = adjusted_rand_index(labels.assignment, target.identity_labels());
    return r;
}

std::string describe(const IterationReport& r) {
    std::string s = "iter " + std::to_string(r.iteration) + " clusters " + std::to_string(r.num_clusters) +
                    " noise " + std::to_string(r.noise_count);
    if (r.eval) s += " mAP " + std::to_string(r.eval->map) + " rank1 " + std::to_string(r.eval->rank1);
    if (r.ari) s += " ARI " + std::to_string(*r.ari);
    if (r.skipped) s += " (skipped)";
    return s;
}

}  // namespace

AdaptResult run_adaptation(const EmbeddingSet& source, const EmbeddingSet& target, const AdaptConfig& cfg,
                           const std::optional<EvalData>& eval_data) {
    validate_config(cfg);
    source.validate();
    target.validate();
    auto model = train_source(make_encoder(source.dim(), cfg), source, cfg);
    return run_adaptation_from(std::move(model), source, target, cfg, eval_data);
}

AdaptResult run_adaptation_from(EncoderModel model, const EmbeddingSet& source, const EmbeddingSet& target,
                                const AdaptConfig& cfg, const std::optional<EvalData>& eval_data) {
    validate_config(cfg);
    if (source.dim() != target.dim())
        throw Error(ErrorCode::DimensionMismatch, "source and target dimensions differ");

    Matrix target_enc = encode(model, target);
    Matrix source_enc = encode(model, source);
    auto labels = pseudo_label(target_enc, source_enc, cfg);
    const double tau = labels.threshold.tau;
    log_info("threshold tau = " + std::to_string(tau) + " from " + std::to_string(labels.threshold.top_count) +
             " of " + std::to_string(labels.threshold.pool_size) + " pairs");

    AdaptResult result;
    result.reports.push_back(make_report(-1, tau, labels, target_enc, source_enc, model, target, eval_data));
    log_info(describe(result.reports.back()));

    int trained = 0;
    for (int it = 0; it < cfg.iterations_n2; ++it) {
        bool skipped = false;
        try {
            model = refine_target(model, target.features, labels.assignment, cfg,
                                  static_cast<std::uint64_t>(it));
            ++trained;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::TooFewIdentities) throw;
            skipped = true;
            log_info("iteration " + std::to_string(it) + " skipped: " + e.what());
        }
        if (!skipped) {
            target_enc = encode(model, target);
            source_enc = encode(model, source);
            labels = pseudo_label(target_enc, source_enc, cfg, tau);
        }
        auto report = make_report(it, tau, labels, target_enc, source_enc, model, target, eval_data);
        report.skipped = skipped;
        result.reports.push_back(report);
        log_info(describe(report));
    }
    if (trained == 0)
        throw Error(ErrorCode::AdaptationCollapsed,
                    "no iteration produced " + std::to_string(cfg.pk_p) + " or more pseudo-identities");
    result.model = std::move(model);
    result.final_assignment = std::move(labels.assignment);
    return result;
}

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, p);
}

}  // namespace

std::string format_reports_csv(const std::vector<IterationReport>& reports) {
    std::string out = "iter,tau,clusters,noise,l_intra,l_inter,l_wr,rank1,rank5,rank10,map,ari\n";
    for (const auto& r : reports) {
        out += std::to_string(r.iteration) + ',';
        append_double(out, r.tau);
        out += ',' + std::to_string(r.num_clusters) + ',' + std::to_string(r.noise_count) + ',';
        append_double(out, r.l_intra);
        out += ',';
        append_double(out, r.l_inter);
        out += ',';
        append_double(out, r.l_wr);
        for (double v : {r.eval ? r.eval->rank1 : 0.0, r.eval ? r.eval->rank5 : 0.0, r.eval ? r.eval->rank10 : 0.0,
                         r.eval ? r.eval->map : 0.0}) {
            out += ',';
            if (r.eval) append_double(out, v);
        }
        out += ',';
        if (r.ari) append_double(out, *r.ari);
        out += '\n';
    }
    return out;
}

void save_reports_csv(const std::vector<IterationReport>& reports, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out << format_reports_csv(reports);
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace reid
