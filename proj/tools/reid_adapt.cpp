// reid-adapt: command-line driver for the self-training domain adaptation pipeline.
//
//   reid-adapt synth        --spec FILE | --reference   --out DIR
//   reid-adapt train-source --source FILE [--config FILE] --out DIR
//   reid-adapt adapt        --source FILE --target FILE [--config FILE] --out DIR
//   reid-adapt eval         --query FILE --gallery FILE [--model FILE] --out FILE
//   reid-adapt rerank       --embeddings FILE --k INT --out FILE
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical divergence.

#include <omp.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "reid/cluster.hpp"
#include "reid/core.hpp"
#include "reid/encoder.hpp"
#include "reid/eval.hpp"
#include "reid/log.hpp"
#include "reid/metric.hpp"
#include "reid/selftrain.hpp"
#include "reid/synth.hpp"

namespace fs = std::filesystem;
using namespace reid;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;

struct ConfigFlags {
    std::string config_path;
    std::string metric;
    bool no_dw = false;
    std::optional<double> lambda;
    std::optional<double> p;
    std::optional<int> k;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "flat key = value config file");
        cmd->add_option("--metric", metric, "euclidean | kreciprocal | jaccard")
            ->check(CLI::IsMember({"euclidean", "kreciprocal", "jaccard"}));
        cmd->add_flag("--no-dw", no_dw, "disable the source-proximity confidence term");
        cmd->add_option("--lambda", lambda, "balance between Jaccard distance and confidence");
        cmd->add_option("--p", p, "fraction of pairs averaged into the clustering threshold");
        cmd->add_option("--k", k, "reciprocal neighborhood size");
        cmd->add_option("--seed", seed, "random seed");
    }

    AdaptConfig resolve() const {
        AdaptConfig cfg = config_path.empty() ? AdaptConfig{} : load_config(config_path);
        if (!metric.empty()) cfg.metric_mode = *parse_metric_mode(metric);
        if (no_dw) cfg.use_dw = false;
        if (lambda) cfg.balance_lambda = *lambda;
        if (p) cfg.percentage_p = *p;
        if (k) cfg.reciprocal_k = *k;
        if (seed) cfg.seed = *seed;
        validate_config(cfg);
        return cfg;
    }
};

EmbeddingSet load(const std::string& path, Domain domain) {
    if (!fs::exists(path)) throw Error(ErrorCode::IoFailure, "no such file: " + path);
    return load_embeddings(path, format_for(path), domain);
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::IoFailure, "cannot create output directory " + dir);
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidParam: return kExitUsage;
        case ErrorCode::NonFiniteLoss:
        case ErrorCode::NonFiniteOutput: return kExitDiverged;
        default: return kExitData;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-training unsupervised domain adaptation for re-identification embeddings"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "upper bound on worker threads (results do not depend on it)")
        ->check(CLI::NonNegativeNumber);

    // synth
    auto* synth = app.add_subcommand("synth", "generate synthetic source/target domains");
    std::string spec_path, synth_out;
    bool reference = false;
    synth->add_option("--spec", spec_path, "synthetic spec file (key = value)");
    synth->add_flag("--reference", reference, "use the built-in reference scenario");
    synth->add_option("--out", synth_out, "output directory")->required();

    // train-source
    auto* train = app.add_subcommand("train-source", "train the encoder on the labeled source domain");
    std::string train_source_path, train_out;
    ConfigFlags train_flags;
    train->add_option("--source", train_source_path, "source embeddings")->required();
    train->add_option("--out", train_out, "output directory")->required();
    train_flags.attach(train);

    // adapt
    auto* adapt = app.add_subcommand("adapt", "run the self-training adaptation loop");
    std::string adapt_source, adapt_target, adapt_out, adapt_query, adapt_gallery;
    ConfigFlags adapt_flags;
    adapt->add_option("--source", adapt_source, "source embeddings")->required();
    adapt->add_option("--target", adapt_target, "target embeddings")->required();
    adapt->add_option("--out", adapt_out, "output directory")->required();
    adapt->add_option("--query", adapt_query, "evaluation queries (default: split from labeled target)");
    adapt->add_option("--gallery", adapt_gallery, "evaluation gallery");
    adapt_flags.attach(adapt);

    // eval
    auto* eval = app.add_subcommand("eval", "CMC / mAP of an encoder on query and gallery sets");
    std::string eval_query, eval_gallery, eval_model, eval_out;
    eval->add_option("--query", eval_query, "query embeddings")->required();
    eval->add_option("--gallery", eval_gallery, "gallery embeddings")->required();
    eval->add_option("--model", eval_model, "encoder checkpoint (default: raw features)");
    eval->add_option("--out", eval_out, "report CSV")->required();

    // rerank
    auto* rerank = app.add_subcommand("rerank", "k-reciprocal Jaccard distance matrix dump");
    std::string rerank_in, rerank_out;
    int rerank_k = 20;
    rerank->add_option("--embeddings", rerank_in, "embeddings")->required();
    rerank->add_option("--k", rerank_k, "reciprocal neighborhood size");
    rerank->add_option("--out", rerank_out, "DMAT output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }
    if (threads > 0) omp_set_num_threads(threads);

    try {
        if (*synth) {
            if (reference == !spec_path.empty())
                throw Error(ErrorCode::InvalidParam, "give exactly one of --spec or --reference");
            const SynthSpec spec = reference ? reference_spec() : load_synth_spec(spec_path);
            const auto domains = gen_domains(spec);
            ensure_dir(synth_out);
            const fs::path out(synth_out);
            save_embeddings(domains.source, out / "source.emb", FileFormat::Binary);
            save_embeddings(domains.target, out / "target.emb", FileFormat::Binary);
            const auto qg = make_query_gallery(domains.target);
            save_embeddings(qg.query, out / "query.emb", FileFormat::Binary);
            save_embeddings(qg.gallery, out / "gallery.emb", FileFormat::Binary);
            log_info("wrote " + std::to_string(domains.source.size()) + " source and " +
                     std::to_string(domains.target.size()) + " target samples to " + synth_out);
        } else if (*train) {
            const auto cfg = train_flags.resolve();
            const auto source = load(train_source_path, Domain::Source);
            const auto model = train_source(make_encoder(source.dim(), cfg), source, cfg);
            ensure_dir(train_out);
            save_checkpoint(model, fs::path(train_out) / "model.encm");
        } else if (*adapt) {
            const auto cfg = adapt_flags.resolve();
            const auto source = load(adapt_source, Domain::Source);
            const auto target = load(adapt_target, Domain::Target);
            std::optional<EvalData> eval_data;
            if (!adapt_query.empty() || !adapt_gallery.empty()) {
                if (adapt_query.empty() || adapt_gallery.empty())
                    throw Error(ErrorCode::InvalidParam, "--query and --gallery go together");
                eval_data = EvalData{load(adapt_query, Domain::Target), load(adapt_gallery, Domain::Target)};
            } else if (target.has_identities() && target.has_cameras()) {
                auto qg = make_query_gallery(target);
                eval_data = EvalData{std::move(qg.query), std::move(qg.gallery)};
            }
            ensure_dir(adapt_out);
            const auto result = run_adaptation(source, target, cfg, eval_data);
            const fs::path out(adapt_out);
            save_checkpoint(result.model, out / "model.encm");
            save_reports_csv(result.reports, out / "report.csv");
            save_assignment_csv(result.final_assignment, out / "pseudo_labels.csv");
        } else if (*eval) {
            const auto query = load(eval_query, Domain::Target);
            const auto gallery = load(eval_gallery, Domain::Target);
            Matrix q = query.features, g = gallery.features;
            if (!eval_model.empty()) {
                const auto model = load_checkpoint(eval_model);
                q = encode(model, query);
                g = encode(model, gallery);
            }
            const auto res = cmc_map(query, gallery, cross_euclidean(q, g));
            save_eval_csv(res, eval_out);
            log_info("mAP " + std::to_string(res.map) + " rank-1 " + std::to_string(res.rank(1)));
        } else if (*rerank) {
            const auto set = load(rerank_in, Domain::Target);
            save_distance_dump(kreciprocal_jaccard(set.features, rerank_k), rerank_out);
        }
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "IO_FAILURE: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}
