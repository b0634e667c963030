#pragma once

// Per-row kernels shared by the OpenMP drivers (metric.cpp) and the serial
// references (serial/metric_serial.cpp). Everything a row needs is computed
// inside the row, in ascending index order.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "reid/metric.hpp"

namespace reid::kernels {

inline void require_square(const DistanceMatrix& d, const char* what) {
    if (d.values.rows() != d.values.cols() || d.values.rows() == 0)
        throw Error(ErrorCode::SizeMismatch, std::string(what) + ": distance matrix must be square and non-empty");
}

inline void require_k_below_n(const DistanceMatrix& d, int k) {
    if (k < 1) throw Error(ErrorCode::InvalidParam, "k must be >= 1");
    if (static_cast<std::size_t>(k) >= d.size())
        throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " with n=" + std::to_string(d.size()));
}

inline void require_kind(const DistanceMatrix& d, DistanceKind kind, const char* what) {
    if (d.kind != kind)
        throw Error(ErrorCode::InvalidParam, std::string(what) + ": expected " + std::string(to_string(kind)) +
                                                 " input, got " + std::string(to_string(d.kind)));
}

inline void sq_euclidean_row(const Matrix& x, std::size_t i, std::span<double> out) {
    const auto xi = x.row(i);
    for (std::size_t j = 0; j < x.rows(); ++j) out[j] = i == j ? 0.0 : squared_distance(xi, x.row(j));
}

inline void euclidean_row(const Matrix& x, std::size_t i, std::span<double> out) {
    const auto xi = x.row(i);
    for (std::size_t j = 0; j < x.rows(); ++j) out[j] = i == j ? 0.0 : std::sqrt(squared_distance(xi, x.row(j)));
}

inline void cross_euclidean_row(const Matrix& q, const Matrix& g, std::size_t i, std::span<double> out) {
    const auto qi = q.row(i);
    for (std::size_t j = 0; j < g.rows(); ++j) out[j] = std::sqrt(squared_distance(qi, g.row(j)));
}

/// k nearest others of i, ordered by (distance, index).
inline std::vector<std::size_t> knn_row(const Matrix& d, std::size_t i, std::size_t k) {
    std::vector<std::size_t> idx;
    idx.reserve(d.cols() - 1);
    for (std::size_t j = 0; j < d.cols(); ++j)
        if (j != i) idx.push_back(j);
    const auto row = d.row(i);
    auto closer = [&](std::size_t a, std::size_t b) { return row[a] < row[b] || (row[a] == row[b] && a < b); };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), closer);
    idx.resize(k);
    return idx;
}

inline void kernelized_row(const Matrix& d, const std::vector<std::size_t>& robust, std::size_t i,
                           std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t j : robust) out[j] = std::exp(-d(i, j));
}

/// Sparse view of a kernelized matrix: nonzeros per row (ascending column),
/// nonzeros per column (ascending row), and row sums in ascending column order.
struct SparseRows {
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;
    std::vector<std::vector<std::pair<std::size_t, double>>> cols;
    std::vector<double> row_sums;
};

inline SparseRows make_sparse(const Matrix& m) {
    const std::size_t n = m.rows();
    SparseRows s;
    s.rows.resize(n);
    s.cols.resize(n);
    s.row_sums.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const double v = m(i, k);
            if (v > 0.0) {
                s.rows[i].emplace_back(k, v);
                s.cols[k].emplace_back(i, v);
                s.row_sums[i] += v;
            }
        }
    }
    return s;
}

/// Row i of the Jaccard distance. `acc` is scratch of size n.
/// sum max = sum_i + sum_j - sum min, so only the shared support is visited.
inline void jaccard_row(const SparseRows& s, std::size_t i, std::vector<double>& acc, std::span<double> out) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (const auto& [k, mik] : s.rows[i])
        for (const auto& [j, mjk] : s.cols[k]) acc[j] += std::min(mik, mjk);
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (j == i) {
            out[j] = 0.0;
            continue;
        }
        const double mins = acc[j];
        const double maxs = s.row_sums[i] + s.row_sums[j] - mins;
        out[j] = std::clamp(1.0 - mins / maxs, 0.0, 1.0);
    }
}

inline std::size_t sorted_intersection_size(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::size_t count = 0;
    auto ia = a.begin(), ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) ++ia;
        else if (*ib < *ia) ++ib;
        else ++count, ++ia, ++ib;
    }
    return count;
}

/// Row i of the plain Jaccard distance; sets are sorted and of equal size k+1.
inline void plain_jaccard_row(const std::vector<std::vector<std::size_t>>& sets, std::size_t i,
                              std::span<double> out) {
    for (std::size_t j = 0; j < sets.size(); ++j) {
        if (j == i) {
            out[j] = 0.0;
            continue;
        }
        const double inter = static_cast<double>(sorted_intersection_size(sets[i], sets[j]));
        const double uni = static_cast<double>(sets[i].size() + sets[j].size()) - inter;
        out[j] = 1.0 - inter / uni;
    }
}

inline double weight_raw(const Matrix& target, const Matrix& source, std::size_t i) {
    const auto ti = target.row(i);
    double best = squared_distance(ti, source.row(0));
    for (std::size_t s = 1; s < source.rows(); ++s) best = std::min(best, squared_distance(ti, source.row(s)));
    return 1.0 - std::exp(-best);
}

inline std::vector<double> normalize_by_max(const std::vector<double>& raw) {
    const double mx = raw.empty() ? 0.0 : *std::max_element(raw.begin(), raw.end());
    std::vector<double> out(raw.size(), 0.0);
    if (mx > 0.0)
        for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / mx;
    return out;
}

inline void combined_row(const Matrix& base, const std::vector<double>& w, double lambda, std::size_t i,
                         std::span<double> out) {
    const auto b = base.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = (1.0 - lambda) * b[j] + lambda * (w[i] + w[j]);
}

}  // namespace reid::kernels
