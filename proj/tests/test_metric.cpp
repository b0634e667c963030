#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "reid/metric.hpp"
#include "reid/metric_serial.hpp"

using namespace reid;

namespace {

Matrix points_1d(std::initializer_list<double> xs) {
    Matrix m(xs.size(), 1);
    std::size_t i = 0;
    for (double x : xs) m(i++, 0) = x;
    return m;
}

std::set<std::size_t> as_set(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

// Runs f at 1, 2 and 4 threads and restores the previous setting.
template <class F>
void at_thread_counts(F&& f) {
    const int saved = omp_get_max_threads();
    for (int t : {1, 2, 4}) {
        omp_set_num_threads(t);
        f(t);
    }
    omp_set_num_threads(saved);
}

}  // namespace

TEST_SUITE("metric") {

TEST_CASE("squared euclidean basics") {
    auto one = sq_euclidean_matrix(points_1d({3.0}));
    CHECK(one.values.rows() == 1);
    CHECK(one.values(0, 0) == 0.0);

    Matrix two(2, 2);
    two(1, 0) = 3.0;
    two(1, 1) = 4.0;
    auto d = sq_euclidean_matrix(two);
    CHECK(d.kind == DistanceKind::SqEuclidean);
    CHECK(d.values(0, 1) == 25.0);
    CHECK(d.values(1, 0) == 25.0);
    CHECK(euclidean_matrix(two).values(0, 1) == 5.0);
}

TEST_CASE("squared euclidean equals the double loop exactly") {
    std::mt19937_64 gen(1);
    for (int rep = 0; rep < 5; ++rep) {
        const auto x = oracle::random_points(5 + rep, 3, gen);
        CHECK(sq_euclidean_matrix(x).values == oracle::sq_euclidean(x));
    }
}

TEST_CASE("knn tie goes to the lower index") {
    auto d = sq_euclidean_matrix(points_1d({0, 1, 2, 10}));
    auto lists = knn_lists(d, 1);
    CHECK(lists == std::vector<std::vector<std::size_t>>{{1}, {0}, {1}, {2}});

    auto pair = knn_lists(sq_euclidean_matrix(points_1d({0, 5})), 1);
    CHECK(pair == std::vector<std::vector<std::size_t>>{{1}, {0}});

    CHECK_THROWS_AS(knn_lists(d, 4), Error);
}

TEST_CASE("knn against a full sort") {
    std::mt19937_64 gen(2);
    const auto x = oracle::random_points(30, 4, gen);
    const auto d = sq_euclidean_matrix(x);
    const auto lists = knn_lists(d, 5);
    for (std::size_t i = 0; i < 30; ++i) CHECK(lists[i] == oracle::knn(d.values, i, 5));
}

TEST_CASE("mutual knn") {
    auto two = mutual_knn(sq_euclidean_matrix(points_1d({0, 1})), 1);
    CHECK(two.sets[0] == std::vector<std::size_t>{0, 1});
    CHECK(two.sets[1] == std::vector<std::size_t>{0, 1});

    auto line = mutual_knn(sq_euclidean_matrix(points_1d({0, 1, 2, 10})), 1);
    CHECK(line.sets[0] == std::vector<std::size_t>{0, 1});
    CHECK(line.sets[1] == std::vector<std::size_t>{0, 1});
    CHECK(line.sets[2] == std::vector<std::size_t>{2});
    CHECK(line.sets[3] == std::vector<std::size_t>{3});

    std::mt19937_64 gen(3);
    const auto d = sq_euclidean_matrix(oracle::random_points(30, 4, gen));
    const auto m = mutual_knn(d, 5);
    for (std::size_t i = 0; i < 30; ++i) {
        CHECK(as_set(m.sets[i]) == oracle::mutual(d.values, i, 5));
        for (std::size_t j : m.sets[i])
            if (j != i) CHECK(as_set(m.sets[j]).count(i) == 1);
    }
}

TEST_CASE("robust sets") {
    auto two = robust_sets(sq_euclidean_matrix(points_1d({0, 1})), 2);
    CHECK(two.sets[0] == std::vector<std::size_t>{0, 1});
    CHECK(two.sets[1] == std::vector<std::size_t>{0, 1});

    // the middle point ties both ends, so the ends only see each other via expansion
    auto three = robust_sets(sq_euclidean_matrix(points_1d({0, 1, 2})), 2);
    for (const auto& s : three.sets) CHECK(s == std::vector<std::size_t>{0, 1, 2});

    std::mt19937_64 gen(4);
    const auto d = sq_euclidean_matrix(oracle::random_points(40, 4, gen));
    const auto r = robust_sets(d, 6);
    for (std::size_t i = 0; i < 40; ++i) CHECK(as_set(r.sets[i]) == oracle::robust(d.values, i, 6));

    CHECK_THROWS_AS(robust_sets(sq_euclidean_matrix(points_1d({0, 1})), 3), Error);
    CHECK_THROWS_AS(robust_sets(d, 1), Error);
}

TEST_CASE("kernelized matrix") {
    auto d = sq_euclidean_matrix(points_1d({0, 0, 7}));
    NeighborSets sets{2, {{0, 1}, {0, 1}, {2}}};
    auto m = kernelized_matrix(d, sets);
    CHECK(m.kind == DistanceKind::Kernelized);
    CHECK(m.values(0, 1) == 1.0);
    CHECK(m.values(1, 0) == 1.0);
    CHECK(m.values(0, 2) == 0.0);
    CHECK(m.values(2, 2) == 1.0);

    std::mt19937_64 gen(5);
    const auto sq = sq_euclidean_matrix(oracle::random_points(25, 3, gen, 0.5));
    const auto r = robust_sets(sq, 5);
    std::vector<std::set<std::size_t>> sets2;
    for (const auto& s : r.sets) sets2.push_back(as_set(s));
    CHECK(kernelized_matrix(sq, r).values == oracle::kernelized(sq.values, sets2));
}

TEST_CASE("jaccard distance edge cases") {
    DistanceMatrix m{Matrix(3, 3), DistanceKind::Kernelized, false};
    m.values(0, 0) = 1.0, m.values(0, 1) = 0.5;
    m.values(1, 0) = 1.0, m.values(1, 1) = 0.5;
    m.values(2, 2) = 1.0;
    auto j = jaccard_distance(m);
    CHECK(j.values(0, 1) == 0.0);
    CHECK(j.values(0, 2) == 1.0);
    CHECK(j.values(1, 2) == 1.0);
    CHECK(j.values(2, 2) == 0.0);
}

TEST_CASE("jaccard distance against the dense double loop") {
    std::mt19937_64 gen(6);
    const auto sq = sq_euclidean_matrix(oracle::random_points(20, 3, gen, 0.5));
    const auto m = kernelized_matrix(sq, robust_sets(sq, 6));
    const auto got = jaccard_distance(m).values;
    const auto want = oracle::jaccard(m.values);
    double worst = 0.0;
    for (std::size_t i = 0; i < got.data().size(); ++i)
        worst = std::max(worst, std::abs(got.data()[i] - want.data()[i]));
    CHECK(worst <= 1e-15);
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t k = 0; k < 20; ++k) CHECK(got(i, k) == got(k, i));
}

TEST_CASE("plain jaccard") {
    auto d = sq_euclidean_matrix(points_1d({0, 1, 100, 101}));
    auto j = plain_jaccard(d, 1);
    CHECK(j.values(0, 0) == 0.0);
    CHECK(j.values(0, 1) == 0.0);
    CHECK(j.values(0, 2) == 1.0);

    std::mt19937_64 gen(7);
    const auto sq = sq_euclidean_matrix(oracle::random_points(30, 4, gen));
    CHECK(oracle::max_rel_err(plain_jaccard(sq, 5).values, oracle::plain_jaccard(sq.values, 5)) == 0.0);
}

TEST_CASE("weight confidence") {
    auto w = weight_confidence(points_1d({0, 1}), points_1d({0}));
    CHECK(w.raw[0] == 0.0);
    CHECK(w.raw[1] == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));
    CHECK(w.normalized[0] == 0.0);
    CHECK(w.normalized[1] == 1.0);

    auto all_on = weight_confidence(points_1d({2, 3}), points_1d({3, 2}));
    CHECK(all_on.normalized == std::vector<double>{0.0, 0.0});

    std::mt19937_64 gen(8);
    const auto t = oracle::random_points(30, 4, gen);
    const auto s = oracle::random_points(45, 4, gen);
    const auto got = weight_confidence(t, s);
    const auto want = oracle::weight_raw(t, s);
    for (std::size_t i = 0; i < 30; ++i) CHECK(oracle::rel_err(got.raw[i], want[i]) <= 1e-12);
}

TEST_CASE("combined distance") {
    std::mt19937_64 gen(9);
    const auto t = oracle::random_points(20, 3, gen);
    const auto s = oracle::random_points(20, 3, gen);
    const auto dj = kreciprocal_jaccard(t, 5);
    const auto w = weight_confidence(t, s);

    CHECK(combined_distance(dj, w, 0.0).values == dj.values);
    const auto all_w = combined_distance(dj, w, 1.0);
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 20; ++j)
            if (i != j) CHECK(all_w.values(i, j) == w.normalized[i] + w.normalized[j]);

    const auto mix = combined_distance(dj, w, 0.1);
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 20; ++j) {
            if (i == j) continue;
            const double want = 0.9 * dj.values(i, j) + 0.1 * (w.normalized[i] + w.normalized[j]);
            CHECK(oracle::rel_err(mix.values(i, j), want) <= 1e-12);
        }
}

TEST_CASE("parallel kernels match the serial reference bitwise") {
    std::mt19937_64 gen(10);
    const auto t = oracle::random_points(90, 6, gen);
    const auto s = oracle::random_points(70, 6, gen);

    const auto sq_ref = serial::sq_euclidean_matrix(t);
    const auto ker_ref = serial::kernelized_matrix(sq_ref, robust_sets(sq_ref, 12));
    const auto jac_ref = serial::jaccard_distance(ker_ref);
    const auto w_ref = serial::weight_confidence(t, s);
    const auto comb_ref = serial::combined_distance(jac_ref, w_ref, 0.1);
    const auto plain_ref = serial::plain_jaccard(sq_ref, 7);
    const auto eu_ref = serial::euclidean_matrix(t);
    const auto cross_ref = serial::cross_euclidean(t, s);
    const auto knn_ref = serial::knn_lists(sq_ref, 9);

    at_thread_counts([&](int threads) {
        CAPTURE(threads);
        const auto sq = sq_euclidean_matrix(t);
        CHECK(sq.values == sq_ref.values);
        const auto ker = kernelized_matrix(sq, robust_sets(sq, 12));
        CHECK(ker.values == ker_ref.values);
        CHECK(jaccard_distance(ker).values == jac_ref.values);
        const auto w = weight_confidence(t, s);
        CHECK(w.raw == w_ref.raw);
        CHECK(w.normalized == w_ref.normalized);
        CHECK(combined_distance(jac_ref, w, 0.1).values == comb_ref.values);
        CHECK(plain_jaccard(sq, 7).values == plain_ref.values);
        CHECK(euclidean_matrix(t).values == eu_ref.values);
        CHECK(cross_euclidean(t, s) == cross_ref);
        CHECK(knn_lists(sq, 9) == knn_ref);
    });
}

TEST_CASE("distance dump round trip") {
    std::mt19937_64 gen(11);
    const auto d = kreciprocal_jaccard(oracle::random_points(12, 3, gen), 4);
    const auto path = std::filesystem::temp_directory_path() / "reid_metric_dump.dmat";
    save_distance_dump(d, path);
    const auto back = load_distance_dump(path);
    CHECK(back.kind == DistanceKind::Jaccard);
    REQUIRE(back.size() == 12);
    for (std::size_t i = 0; i < 144; ++i)
        CHECK(back.values.data()[i] == static_cast<double>(static_cast<float>(d.values.data()[i])));
    std::filesystem::remove(path);
}

}  // TEST_SUITE
