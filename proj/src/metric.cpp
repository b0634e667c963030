#include "reid/metric.hpp"

#include <fstream>

#include "binio.hpp"
#include "metric_detail.hpp"
#include "metric_kernels.hpp"

namespace reid {

namespace detail {

namespace {

/// Runs fn(i) for every row; rows are independent so the schedule cannot change results.
template <typename Fn>
void for_rows(std::size_t n, Exec exec, Fn&& fn) {
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (std::ptrdiff_t i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
}

}  // namespace

DistanceMatrix sq_euclidean_matrix(const Matrix& x, Exec exec) {
    if (x.rows() == 0) throw Error(ErrorCode::SizeMismatch, "sq_euclidean_matrix: empty feature matrix");
    DistanceMatrix d{Matrix(x.rows(), x.rows()), DistanceKind::SqEuclidean, true};
    for_rows(x.rows(), exec, [&](std::size_t i) { kernels::sq_euclidean_row(x, i, d.values.row(i)); });
    return d;
}

DistanceMatrix euclidean_matrix(const Matrix& x, Exec exec) {
    if (x.rows() == 0) throw Error(ErrorCode::SizeMismatch, "euclidean_matrix: empty feature matrix");
    DistanceMatrix d{Matrix(x.rows(), x.rows()), DistanceKind::Euclidean, true};
    for_rows(x.rows(), exec, [&](std::size_t i) { kernels::euclidean_row(x, i, d.values.row(i)); });
    return d;
}

Matrix cross_euclidean(const Matrix& q, const Matrix& g, Exec exec) {
    if (q.cols() != g.cols())
        throw Error(ErrorCode::DimensionMismatch,
                    "query dim " + std::to_string(q.cols()) + " != gallery dim " + std::to_string(g.cols()));
    Matrix out(q.rows(), g.rows());
    for_rows(q.rows(), exec, [&](std::size_t i) { kernels::cross_euclidean_row(q, g, i, out.row(i)); });
    return out;
}

std::vector<std::vector<std::size_t>> knn_lists(const DistanceMatrix& d, int k, Exec exec) {
    kernels::require_square(d, "knn_lists");
    kernels::require_k_below_n(d, k);
    std::vector<std::vector<std::size_t>> out(d.size());
    for_rows(d.size(), exec,
             [&](std::size_t i) { out[i] = kernels::knn_row(d.values, i, static_cast<std::size_t>(k)); });
    return out;
}

DistanceMatrix kernelized_matrix(const DistanceMatrix& d, const NeighborSets& robust, Exec exec) {
    kernels::require_square(d, "kernelized_matrix");
    kernels::require_kind(d, DistanceKind::SqEuclidean, "kernelized_matrix");
    if (robust.size() != d.size())
        throw Error(ErrorCode::SizeMismatch, "robust sets cover " + std::to_string(robust.size()) +
                                                 " samples, matrix has " + std::to_string(d.size()));
    for (const auto& s : robust.sets)
        for (std::size_t j : s)
            if (j >= d.size()) throw Error(ErrorCode::SizeMismatch, "robust set index out of range");
    DistanceMatrix m{Matrix(d.size(), d.size()), DistanceKind::Kernelized, false};
    for_rows(d.size(), exec,
             [&](std::size_t i) { kernels::kernelized_row(d.values, robust.sets[i], i, m.values.row(i)); });
    return m;
}

DistanceMatrix jaccard_distance(const DistanceMatrix& m, Exec exec) {
    kernels::require_square(m, "jaccard_distance");
    kernels::require_kind(m, DistanceKind::Kernelized, "jaccard_distance");
    const auto sparse = kernels::make_sparse(m.values);
    for (std::size_t i = 0; i < m.size(); ++i)
        if (!(sparse.row_sums[i] > 0.0))
            throw Error(ErrorCode::DegenerateRow, "kernelized row " + std::to_string(i) + " has no positive entry");
    const std::size_t n = m.size();
    DistanceMatrix out{Matrix(n, n), DistanceKind::Jaccard, true};
#pragma omp parallel if (exec == Exec::Parallel)
    {
        std::vector<double> acc(n);
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            const auto row = static_cast<std::size_t>(i);
            kernels::jaccard_row(sparse, row, acc, out.values.row(row));
        }
    }
    return out;
}

DistanceMatrix plain_jaccard(const DistanceMatrix& d, int k, Exec exec) {
    kernels::require_kind(d, DistanceKind::SqEuclidean, "plain_jaccard");
    auto sets = knn_lists(d, k, exec);
    for (std::size_t i = 0; i < sets.size(); ++i) {
        sets[i].push_back(i);
        std::sort(sets[i].begin(), sets[i].end());
    }
    DistanceMatrix out{Matrix(d.size(), d.size()), DistanceKind::PlainJaccard, true};
    for_rows(d.size(), exec, [&](std::size_t i) { kernels::plain_jaccard_row(sets, i, out.values.row(i)); });
    return out;
}

WeightConfidence weight_confidence(const Matrix& target, const Matrix& source, Exec exec) {
    if (source.rows() == 0) throw Error(ErrorCode::EmptySource, "weight_confidence: empty source set");
    if (target.cols() != source.cols())
        throw Error(ErrorCode::DimensionMismatch, "target dim " + std::to_string(target.cols()) +
                                                      " != source dim " + std::to_string(source.cols()));
    WeightConfidence w;
    w.raw.resize(target.rows());
    for_rows(target.rows(), exec, [&](std::size_t i) { w.raw[i] = kernels::weight_raw(target, source, i); });
    w.normalized = kernels::normalize_by_max(w.raw);
    return w;
}

DistanceMatrix combined_distance(const DistanceMatrix& base, const WeightConfidence& w, double lambda, Exec exec) {
    kernels::require_square(base, "combined_distance");
    if (!base.symmetric || base.kind == DistanceKind::Kernelized)
        throw Error(ErrorCode::InvalidParam, "combined_distance needs a symmetric pairwise distance");
    if (w.normalized.size() != base.size())
        throw Error(ErrorCode::SizeMismatch, "confidence has " + std::to_string(w.normalized.size()) +
                                                 " entries, matrix has " + std::to_string(base.size()));
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::InvalidParam, "lambda must be in [0,1]");
    DistanceMatrix out{Matrix(base.size(), base.size()), DistanceKind::Combined, true};
    for_rows(base.size(), exec,
             [&](std::size_t i) { kernels::combined_row(base.values, w.normalized, lambda, i, out.values.row(i)); });
    return out;
}

}  // namespace detail

DistanceMatrix sq_euclidean_matrix(const Matrix& f) { return detail::sq_euclidean_matrix(f, detail::Exec::Parallel); }
DistanceMatrix euclidean_matrix(const Matrix& f) { return detail::euclidean_matrix(f, detail::Exec::Parallel); }
Matrix cross_euclidean(const Matrix& q, const Matrix& g) {
    return detail::cross_euclidean(q, g, detail::Exec::Parallel);
}
std::vector<std::vector<std::size_t>> knn_lists(const DistanceMatrix& d, int k) {
    return detail::knn_lists(d, k, detail::Exec::Parallel);
}
DistanceMatrix kernelized_matrix(const DistanceMatrix& d, const NeighborSets& r) {
    return detail::kernelized_matrix(d, r, detail::Exec::Parallel);
}
DistanceMatrix jaccard_distance(const DistanceMatrix& m) { return detail::jaccard_distance(m, detail::Exec::Parallel); }
DistanceMatrix plain_jaccard(const DistanceMatrix& d, int k) {
    return detail::plain_jaccard(d, k, detail::Exec::Parallel);
}
WeightConfidence weight_confidence(const Matrix& t, const Matrix& s) {
    return detail::weight_confidence(t, s, detail::Exec::Parallel);
}
DistanceMatrix combined_distance(const DistanceMatrix& b, const WeightConfidence& w, double lambda) {
    return detail::combined_distance(b, w, lambda, detail::Exec::Parallel);
}

namespace {

NeighborSets mutual_from_lists(const std::vector<std::vector<std::size_t>>& lists, int k) {
    const std::size_t n = lists.size();
    // in_list[j] sorted so membership tests are binary searches
    std::vector<std::vector<std::size_t>> sorted = lists;
    for (auto& l : sorted) std::sort(l.begin(), l.end());
    NeighborSets out;
    out.k = k;
    out.sets.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& s = out.sets[i];
        s.push_back(i);
        for (std::size_t j : sorted[i])
            if (std::binary_search(sorted[j].begin(), sorted[j].end(), i)) s.push_back(j);
        std::sort(s.begin(), s.end());
    }
    return out;
}

}  // namespace

NeighborSets mutual_knn(const DistanceMatrix& d, int k) { return mutual_from_lists(knn_lists(d, k), k); }

NeighborSets robust_sets(const DistanceMatrix& d, int k) {
    kernels::require_square(d, "robust_sets");
    if (k < 2) throw Error(ErrorCode::InvalidParam, "robust_sets: k must be >= 2");
    const std::size_t n = d.size();
    if (static_cast<std::size_t>(k) > n)
        throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " with n=" + std::to_string(n));
    if (n == 1) return NeighborSets{k, {{0}}};

    const int full = std::min(k, static_cast<int>(n - 1));
    const int half = std::min(k / 2, static_cast<int>(n - 1));
    const auto lists = knn_lists(d, full);
    const auto kk = mutual_from_lists(lists, full);
    NeighborSets kh;
    if (half == full) {
        kh = kk;
    } else {
        // the half-neighborhood lists are prefixes of the full ranked lists
        std::vector<std::vector<std::size_t>> half_lists(n);
        for (std::size_t i = 0; i < n; ++i)
            half_lists[i].assign(lists[i].begin(), lists[i].begin() + half);
        kh = mutual_from_lists(half_lists, half);
    }

    NeighborSets out;
    out.k = k;
    out.sets.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> grown = kk.sets[i];
        for (std::size_t s : kk.sets[i]) {
            const auto& cand = kh.sets[s];
            const std::size_t overlap = kernels::sorted_intersection_size(kk.sets[i], cand);
            if (3 * overlap >= 2 * cand.size()) {
                std::vector<std::size_t> merged;
                std::set_union(grown.begin(), grown.end(), cand.begin(), cand.end(), std::back_inserter(merged));
                grown = std::move(merged);
            }
        }
        out.sets[i] = std::move(grown);
    }
    return out;
}

DistanceMatrix kreciprocal_jaccard(const Matrix& features, int k) {
    const auto sq = sq_euclidean_matrix(features);
    return jaccard_distance(kernelized_matrix(sq, robust_sets(sq, k)));
}

void save_distance_dump(const DistanceMatrix& d, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out.write("DMAT", 4);
    binio::put_uint<std::uint8_t>(out, static_cast<std::uint8_t>(d.kind));
    binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(d.size()));
    for (double v : d.values.data()) binio::put_f32(out, static_cast<float>(v));
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

DistanceMatrix load_distance_dump(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::uint8_t kind = 0;
    std::uint32_t n = 0;
    if (!binio::get_magic(in, "DMAT") || !binio::get_uint(in, kind) || !binio::get_uint(in, n) || kind > 5)
        throw Error(ErrorCode::MalformedHeader, "bad DMAT header in " + path.string());
    DistanceMatrix d{Matrix(n, n), static_cast<DistanceKind>(kind), kind != 1};
    for (double& v : d.values.data()) {
        float f;
        if (!binio::get_f32(in, f)) throw Error(ErrorCode::DimensionMismatch, "DMAT payload ends early");
        v = f;
    }
    return d;
}

}  // namespace reid
