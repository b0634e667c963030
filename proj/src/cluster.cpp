#include "reid/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>

namespace reid {

std::size_t ClusterAssignment::noise_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
}

std::vector<std::size_t> ClusterAssignment::cluster_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(num_clusters), 0);
    for (int l : labels)
        if (l != kNoise) ++sizes[static_cast<std::size_t>(l)];
    return sizes;
}

Threshold select_threshold(const DistanceMatrix& d, double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidParam, "percentage_p must be in (0,1)");
    const std::size_t n = d.size();
    if (n < 2 || d.values.cols() != n) throw Error(ErrorCode::EmptyPool, "need at least two samples to form a pair");

    std::vector<double> pool;
    pool.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pool.push_back(d.values(i, j));

    Threshold t;
    t.pool_size = pool.size();
    const auto rounded = static_cast<std::size_t>(std::floor(p * static_cast<double>(t.pool_size) + 0.5));
    t.top_count = std::clamp<std::size_t>(rounded, 1, t.pool_size);

    // equal values are interchangeable, so the smallest prefix sums identically to a full sort
    const auto mid = pool.begin() + static_cast<std::ptrdiff_t>(t.top_count);
    std::partial_sort(pool.begin(), mid, pool.end());
    double sum = 0.0;
    for (auto it = pool.begin(); it != mid; ++it) sum += *it;
    t.tau = sum / static_cast<double>(t.top_count);
    return t;
}

ClusterAssignment dbscan(const DistanceMatrix& d, double eps, int min_pts) {
    if (eps < 0.0 || std::isnan(eps)) throw Error(ErrorCode::NegativeEps, "eps=" + std::to_string(eps));
    if (min_pts < 1) throw Error(ErrorCode::InvalidParam, "min_pts must be >= 1");
    const std::size_t n = d.size();
    if (d.values.cols() != n) throw Error(ErrorCode::SizeMismatch, "dbscan needs a square matrix");

    // region queries are independent per point; the scan below is sequential
    std::vector<std::vector<std::size_t>> neighbors(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const auto row = d.values.row(i);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && row[j] <= eps) neighbors[i].push_back(j);
    }

    ClusterAssignment a;
    a.labels.assign(n, kNoise);
    a.core_flags.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) a.core_flags[i] = neighbors[i].size() + 1 >= static_cast<std::size_t>(min_pts);

    std::vector<bool> queued(n, false);
    std::deque<std::size_t> frontier;
    int next = 0;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (!a.core_flags[seed] || a.labels[seed] != kNoise) continue;
        const int c = next++;
        a.labels[seed] = c;
        queued[seed] = true;
        frontier.push_back(seed);
        while (!frontier.empty()) {
            const std::size_t p = frontier.front();
            frontier.pop_front();
            for (std::size_t q : neighbors[p]) {
                if (a.labels[q] == kNoise) a.labels[q] = c;
                if (a.core_flags[q] && !queued[q] && a.labels[q] == c) {
                    queued[q] = true;
                    frontier.push_back(q);
                }
            }
        }
    }
    a.labels = canonical_labels(a.labels);
    a.num_clusters = next;
    return a;
}

std::vector<int> canonical_labels(const std::vector<int>& labels) {
    int mx = -1;
    for (int l : labels) mx = std::max(mx, l);
    std::vector<int> remap(static_cast<std::size_t>(mx + 1), kNoise);
    int next = 0;
    std::vector<int> out(labels.size(), kNoise);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kNoise) continue;
        auto& r = remap[static_cast<std::size_t>(labels[i])];
        if (r == kNoise) r = next++;
        out[i] = r;
    }
    return out;
}

PairCounts pseudo_label_pairs(const ClusterAssignment& a) {
    const std::uint64_t n = a.size();
    const std::uint64_t clustered = n - a.noise_count();
    PairCounts pc;
    for (std::size_t s : a.cluster_sizes()) pc.same += static_cast<std::uint64_t>(s) * (s - 1) / 2;
    const std::uint64_t clustered_pairs = clustered * (clustered - (clustered > 0 ? 1 : 0)) / 2;
    pc.diff = clustered_pairs - pc.same;
    pc.excluded = n * (n - (n > 0 ? 1 : 0)) / 2 - clustered_pairs;
    return pc;
}

void save_assignment_csv(const ClusterAssignment& a, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out << "index,label\n";
    for (std::size_t i = 0; i < a.size(); ++i) out << i << ',' << a.labels[i] << '\n';
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace reid
