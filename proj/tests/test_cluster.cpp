#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "reid/cluster.hpp"
#include "reid/metric.hpp"

using namespace reid;

namespace {

DistanceMatrix from_upper(std::size_t n, std::initializer_list<double> upper) {
    DistanceMatrix d{Matrix(n, n), DistanceKind::Combined, true};
    auto it = upper.begin();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) d.values(i, j) = d.values(j, i) = *it++;
    return d;
}

DistanceMatrix random_symmetric(std::size_t n, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DistanceMatrix d{Matrix(n, n), DistanceKind::Combined, true};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) d.values(i, j) = d.values(j, i) = u(gen);
    return d;
}

ClusterAssignment assignment(std::vector<int> labels) {
    ClusterAssignment a;
    a.labels = std::move(labels);
    for (int l : a.labels) a.num_clusters = std::max(a.num_clusters, l + 1);
    a.core_flags.assign(a.labels.size(), false);
    return a;
}

}  // namespace

TEST_SUITE("cluster") {

TEST_CASE("threshold from the sorted upper triangle") {
    const auto d = from_upper(4, {0.4, 0.1, 0.6, 0.3, 0.5, 0.2});
    const auto t = select_threshold(d, 2.0 / 6.0);
    CHECK(t.pool_size == 6);
    CHECK(t.top_count == 2);
    CHECK(t.tau == doctest::Approx(0.15).epsilon(1e-15));

    const auto flat = from_upper(4, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
    for (double p : {1e-6, 0.3, 0.99}) CHECK(select_threshold(flat, p).tau == 0.5);

    const auto tiny = select_threshold(d, 1e-6);
    CHECK(tiny.top_count == 1);
    CHECK(tiny.tau == 0.1);
}

TEST_CASE("threshold rounds half up") {
    // N = 10, p = 0.25 -> 2.5 -> 3
    const auto d = from_upper(5, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    const auto t = select_threshold(d, 0.25);
    CHECK(t.top_count == 3);
    CHECK(t.tau == 2.0);
}

TEST_CASE("threshold against full sort") {
    std::mt19937_64 gen(20);
    for (int rep = 0; rep < 20; ++rep) {
        const auto d = random_symmetric(10 + rep, gen);
        for (double p : {1.6e-3, 0.05, 0.5}) CHECK(select_threshold(d, p).tau == oracle::threshold(d.values, p));
    }
}

TEST_CASE("dbscan small cases") {
    const auto close = from_upper(5, {0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1});
    const auto one = dbscan(close, 0.2, 4);
    CHECK(one.num_clusters == 1);
    CHECK(one.labels == std::vector<int>(5, 0));

    const auto far = from_upper(4, {1, 1, 1, 1, 1, 1});
    const auto none = dbscan(far, 0.5, 2);
    CHECK(none.num_clusters == 0);
    CHECK(none.noise_count() == 4);

    // closed ball: distance exactly eps counts
    const auto edge = from_upper(2, {0.5});
    CHECK(dbscan(edge, 0.5, 2).num_clusters == 1);

    CHECK_THROWS_AS(dbscan(edge, -0.1, 2), Error);
}

TEST_CASE("dbscan border goes to the first cluster that reaches it") {
    // point 0 is a border touching core 8 (cluster B) and core 4 (cluster A); A = {1..4}, B = {5..8}
    DistanceMatrix d{Matrix(9, 9, 5.0), DistanceKind::Combined, true};
    auto link = [&](std::size_t i, std::size_t j, double v) { d.values(i, j) = d.values(j, i) = v; };
    for (std::size_t i = 0; i < 9; ++i) d.values(i, i) = 0.0;
    for (std::size_t i = 1; i <= 4; ++i)
        for (std::size_t j = i + 1; j <= 4; ++j) link(i, j, 0.5);
    for (std::size_t i = 5; i <= 8; ++i)
        for (std::size_t j = i + 1; j <= 8; ++j) link(i, j, 0.5);
    link(0, 8, 1.0);
    link(0, 4, 1.0);
    const auto a = dbscan(d, 1.0, 4);
    CHECK(a.labels == std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1, 1});
    CHECK_FALSE(a.core_flags[0]);
    CHECK(a.labels == canonical_labels(oracle::dbscan(d.values, 1.0, 4)));
}

TEST_CASE("dbscan against the union-find reference") {
    std::mt19937_64 gen(21);
    std::uniform_int_distribution<int> npts(20, 200);
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t n = static_cast<std::size_t>(npts(gen));
        const auto x = oracle::random_points(n, 2, gen);
        const auto d = euclidean_matrix(x);
        const double eps = 0.15 + 0.05 * (rep % 5);
        const int min_pts = 2 + rep % 5;
        const auto a = dbscan(d, eps, min_pts);
        const auto want = oracle::dbscan(d.values, eps, min_pts);
        CHECK(oracle::same_partition(a.labels, want));
        CHECK(a.labels == canonical_labels(want));
    }
}

TEST_CASE("labels are canonical") {
    CHECK(canonical_labels({3, -1, 3, 1, 0, 1}) == std::vector<int>{0, -1, 0, 1, 2, 1});
}

TEST_CASE("pair counts") {
    CHECK(pseudo_label_pairs(assignment({-1, -1, -1, -1})) == PairCounts{0, 0, 6});
    CHECK(pseudo_label_pairs(assignment({0, 0, 0, -1, -1})) == PairCounts{3, 0, 7});
    CHECK(pseudo_label_pairs(assignment({0, 0, 1, 1})) == PairCounts{2, 4, 0});
}

}  // TEST_SUITE
