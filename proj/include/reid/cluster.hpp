#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "reid/core.hpp"

namespace reid {

inline constexpr int kNoise = -1;

/// Pseudo-labels. Cluster ids are 0..num_clusters-1 in order of first
/// appearance by sample index; kNoise marks unselected samples.
struct ClusterAssignment {
    std::vector<int> labels;
    int num_clusters = 0;
    std::vector<bool> core_flags;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t noise_count() const;
    std::vector<std::size_t> cluster_sizes() const;
};

struct Threshold {
    double tau = 0.0;
    std::size_t pool_size = 0;  // N = n(n-1)/2
    std::size_t top_count = 0;  // max(1, round_half_up(p * N))
};

/// Mean of the smallest max(1, round(p*N)) strict-upper-triangle entries.
Threshold select_threshold(const DistanceMatrix& d, double p);

/// DBSCAN over a precomputed symmetric matrix with closed eps-balls.
/// Core: |{j != i : D[i][j] <= eps}| + 1 >= min_pts. Seeds are scanned in
/// ascending index order and expanded FIFO with neighbors visited in ascending
/// index order; a border point joins the first cluster that reaches it.
ClusterAssignment dbscan(const DistanceMatrix& d, double eps, int min_pts);

struct PairCounts {
    std::uint64_t same = 0;      // both in one cluster
    std::uint64_t diff = 0;      // both clustered, different clusters
    std::uint64_t excluded = 0;  // at least one NOISE member

    friend bool operator==(const PairCounts&, const PairCounts&) = default;
};

PairCounts pseudo_label_pairs(const ClusterAssignment& a);

/// Relabels clusters by first appearance; used to compare partitions.
std::vector<int> canonical_labels(const std::vector<int>& labels);

/// CSV `index,label` with header, -1 for NOISE.
void save_assignment_csv(const ClusterAssignment& a, const std::filesystem::path& path);

}  // namespace reid
