#include "reid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "reid/rng.hpp"

namespace reid {

RetrievalResult cmc_map(const EmbeddingSet& query, const EmbeddingSet& gallery, const Matrix& dist) {
    if (dist.rows() != query.size() || dist.cols() != gallery.size())
        throw Error(ErrorCode::ShapeMismatch, "distance is " + std::to_string(dist.rows()) + "x" +
                                                  std::to_string(dist.cols()) + ", expected " +
                                                  std::to_string(query.size()) + "x" + std::to_string(gallery.size()));
    if (!query.has_cameras() || !gallery.has_cameras())
        throw Error(ErrorCode::MissingCamera, "query and gallery need camera ids");

    const std::size_t nq = query.size(), ng = gallery.size();
    std::vector<std::ptrdiff_t> first_hit(nq, -1);  // -1: invalid query
    std::vector<double> ap(nq, 0.0);

#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t qi = 0; qi < static_cast<std::ptrdiff_t>(nq); ++qi) {
        const auto q = static_cast<std::size_t>(qi);
        const auto& qm = query.meta[q];
        if (!qm.identity) continue;
        std::vector<std::size_t> order;
        order.reserve(ng);
        for (std::size_t g = 0; g < ng; ++g) {
            const auto& gm = gallery.meta[g];
            if (gm.identity == qm.identity && gm.camera == qm.camera) continue;
            order.push_back(g);
        }
        const auto row = dist.row(q);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return row[a] < row[b] || (row[a] == row[b] && a < b); });
        std::size_t hits = 0;
        double precision_sum = 0.0;
        for (std::size_t r = 0; r < order.size(); ++r) {
            if (gallery.meta[order[r]].identity != qm.identity) continue;
            if (hits == 0) first_hit[q] = static_cast<std::ptrdiff_t>(r);
            ++hits;
            precision_sum += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
        if (hits > 0) ap[q] = precision_sum / static_cast<double>(hits);
    }

    RetrievalResult res;
    res.total_queries = nq;
    res.cmc.assign(ng, 0.0);
    std::vector<std::size_t> hit_at(ng, 0);
    double ap_sum = 0.0;
    for (std::size_t q = 0; q < nq; ++q) {
        if (first_hit[q] < 0) continue;
        ++res.valid_queries;
        ++hit_at[static_cast<std::size_t>(first_hit[q])];
        ap_sum += ap[q];
    }
    if (res.valid_queries == 0) return res;
    std::size_t cumulative = 0;
    for (std::size_t r = 0; r < ng; ++r) {
        cumulative += hit_at[r];
        res.cmc[r] = static_cast<double>(cumulative) / static_cast<double>(res.valid_queries);
    }
    res.map = ap_sum / static_cast<double>(res.valid_queries);
    return res;
}

double adjusted_rand_index(const ClusterAssignment& pred, const std::vector<std::int64_t>& truth) {
    return adjusted_rand_index(pred.labels, truth);
}

double adjusted_rand_index(const std::vector<int>& pred, const std::vector<std::int64_t>& truth) {
    if (pred.size() != truth.size())
        throw Error(ErrorCode::SizeMismatch, "prediction has " + std::to_string(pred.size()) + " entries, truth has " +
                                                 std::to_string(truth.size()));
    const std::size_t n = pred.size();
    if (n < 2) return 1.0;

    // NOISE points become their own singleton clusters
    std::vector<std::int64_t> p(n);
    std::int64_t fresh = 0;
    for (int l : pred) fresh = std::max<std::int64_t>(fresh, l + 1);
    for (std::size_t i = 0; i < n; ++i) p[i] = pred[i] == kNoise ? fresh++ : pred[i];

    std::map<std::pair<std::int64_t, std::int64_t>, double> table;
    std::map<std::int64_t, double> rows, cols;
    for (std::size_t i = 0; i < n; ++i) {
        table[{p[i], truth[i]}] += 1.0;
        rows[p[i]] += 1.0;
        cols[truth[i]] += 1.0;
    }
    auto comb2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, c] : table) index += comb2(c);
    for (const auto& [key, c] : rows) sum_rows += comb2(c);
    for (const auto& [key, c] : cols) sum_cols += comb2(c);
    const double expected = sum_rows * sum_cols / comb2(static_cast<double>(n));
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0;  // both partitions trivial
    return (index - expected) / (max_index - expected);
}

std::vector<std::pair<std::size_t, std::size_t>> draw_pairs(std::size_t n, std::size_t count, std::uint64_t seed) {
    if (n < 2) throw Error(ErrorCode::InvalidParam, "need at least two samples to draw pairs");
    Rng rng(derive_seed(seed, 0x5041495253ULL));
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
        const auto a = static_cast<std::size_t>(rng.below(n));
        auto b = static_cast<std::size_t>(rng.below(n - 1));
        if (b >= a) ++b;
        out.emplace_back(a, b);
    }
    return out;
}

double nn_pair_risk(const EmbeddingSet& source, const EmbeddingSet& target, const NnRiskProbeConfig& probe) {
    if (source.size() == 0 || probe.source_size_m == 0) throw Error(ErrorCode::EmptySource, "nn_pair_risk: empty source");
    if (source.dim() != target.dim())
        throw Error(ErrorCode::DimensionMismatch, "nn_pair_risk: source and target dims differ");
    if (!source.has_identities() || !target.has_identities())
        throw Error(ErrorCode::InvalidParam, "nn_pair_risk needs labeled source and target");
    if (probe.num_pair_draws == 0) throw Error(ErrorCode::InvalidParam, "num_pair_draws must be >= 1");

    // subsample: partial Fisher-Yates, then ascending order so NN ties resolve by original index
    std::vector<std::size_t> idx(source.size());
    std::iota(idx.begin(), idx.end(), 0);
    const std::size_t m = std::min(probe.source_size_m, source.size());
    Rng rng(derive_seed(probe.seed, 0x4E4E5249534BULL));
    for (std::size_t s = 0; s < m; ++s) std::swap(idx[s], idx[s + rng.below(idx.size() - s)]);
    idx.resize(m);
    std::sort(idx.begin(), idx.end());

    const std::size_t nt = target.size();
    std::vector<std::int64_t> nn_id(nt);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ti = 0; ti < static_cast<std::ptrdiff_t>(nt); ++ti) {
        const auto t = static_cast<std::size_t>(ti);
        std::size_t best = idx[0];
        double best_d = squared_distance(target.features.row(t), source.features.row(best));
        for (std::size_t s = 1; s < idx.size(); ++s) {
            const double d = squared_distance(target.features.row(t), source.features.row(idx[s]));
            if (d < best_d) best_d = d, best = idx[s];
        }
        nn_id[t] = *source.meta[best].identity;
    }

    std::size_t wrong = 0;
    for (const auto& [a, b] : draw_pairs(nt, probe.num_pair_draws, probe.seed)) {
        const bool predicted = nn_id[a] == nn_id[b];
        const bool truth = target.meta[a].identity == target.meta[b].identity;
        wrong += predicted != truth;
    }
    return static_cast<double>(wrong) / static_cast<double>(probe.num_pair_draws);
}

void save_eval_csv(const RetrievalResult& r, const std::filesystem::path& path, std::size_t max_rank) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out.precision(17);
    out << "rank,cmc\n";
    for (std::size_t k = 0; k < std::min(max_rank, r.cmc.size()); ++k) out << k + 1 << ',' << r.cmc[k] << '\n';
    out << "map," << r.map << '\n';
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace reid
