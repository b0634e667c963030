#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "reid/eval.hpp"
#include "reid/metric.hpp"
#include "reid/synth.hpp"

using namespace reid;

namespace {

EmbeddingSet labeled(std::size_t n, std::size_t d, const std::vector<std::int64_t>& ids,
                     const std::vector<std::int64_t>& cams) {
    EmbeddingSet s;
    s.features = Matrix(n, d);
    for (std::size_t i = 0; i < n; ++i) s.meta.push_back({ids[i], cams[i], Domain::Target});
    return s;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("single query with its match first") {
    const auto q = labeled(1, 1, {5}, {0});
    const auto g = labeled(3, 1, {5, 6, 7}, {1, 1, 1});
    Matrix dist(1, 3);
    dist(0, 0) = 0.1, dist(0, 1) = 0.5, dist(0, 2) = 0.9;
    const auto r = cmc_map(q, g, dist);
    CHECK(r.rank(1) == 1.0);
    CHECK(r.map == 1.0);
    CHECK(r.valid_queries == 1);
}

TEST_CASE("same-camera matches are junk") {
    const auto q = labeled(2, 1, {5, 6}, {0, 0});
    const auto g = labeled(3, 1, {5, 6, 6}, {0, 0, 1});
    Matrix dist(2, 3);
    dist(0, 0) = 0.0, dist(0, 1) = 1.0, dist(0, 2) = 2.0;
    dist(1, 0) = 0.5, dist(1, 1) = 0.0, dist(1, 2) = 3.0;
    const auto r = cmc_map(q, g, dist);
    CHECK(r.total_queries == 2);
    CHECK(r.valid_queries == 1);
    // query 1: junk at rank 0 skipped, then id 5 (wrong), then its true match
    CHECK(r.rank(1) == 0.0);
    CHECK(r.rank(2) == 1.0);
    CHECK(r.map == 0.5);

    auto nocam = q;
    nocam.meta[0].camera.reset();
    CHECK_THROWS_AS(cmc_map(nocam, g, dist), Error);
    CHECK_THROWS_AS(cmc_map(q, g, Matrix(2, 2)), Error);
}

TEST_CASE("retrieval against the exhaustive oracle") {
    std::mt19937_64 gen(50);
    std::uniform_int_distribution<std::int64_t> id(0, 19), cam(0, 2);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<std::int64_t> qid(100), qcam(100), gid(300), gcam(300);
        for (auto& v : qid) v = id(gen);
        for (auto& v : qcam) v = cam(gen);
        for (auto& v : gid) v = id(gen);
        for (auto& v : gcam) v = cam(gen);
        const auto q = labeled(100, 1, qid, qcam);
        const auto g = labeled(300, 1, gid, gcam);
        auto dist = oracle::random_points(100, 300, gen);
        // integer-valued distances create ties, broken by gallery index on both sides
        if (rep % 2) for (double& v : dist.data()) v = std::round(v * 2.0);
        const auto got = cmc_map(q, g, dist);
        const auto want = oracle::retrieval(qid, qcam, gid, gcam, dist);
        CHECK(got.valid_queries == want.valid);
        CHECK(std::abs(got.map - want.map) <= 1e-9);
        for (std::size_t r = 1; r <= 50; ++r) CHECK(std::abs(got.rank(r) - want.cmc[r - 1]) <= 1e-9);
    }
}

TEST_CASE("adjusted rand index") {
    const std::vector<std::int64_t> truth{1, 1, 2, 2, 3, 3};
    CHECK(adjusted_rand_index(std::vector<int>{0, 0, 1, 1, 2, 2}, truth) == 1.0);
    CHECK(adjusted_rand_index(std::vector<int>{0, 0, 0, 0, 0, 0}, truth) <= 1e-12);

    std::mt19937_64 gen(51);
    std::uniform_int_distribution<int> lab(-1, 5);
    std::uniform_int_distribution<std::int64_t> tl(0, 4);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<int> pred(30);
        std::vector<std::int64_t> t(30);
        for (auto& v : pred) v = lab(gen);
        for (auto& v : t) v = tl(gen);
        CHECK(std::abs(adjusted_rand_index(pred, t) - oracle::ari(pred, t)) <= 1e-12);
    }
}

TEST_CASE("pair risk edge cases") {
    const auto dom = gen_aligned_domains(5, 10, 10, 3, 0.2, 4);
    NnRiskProbeConfig probe{1000, 5000, 2};
    auto self = dom.source;
    CHECK(nn_pair_risk(dom.source, self, probe) == 0.0);

    const auto one = dom.source.subset({0});
    std::size_t different = 0;
    for (const auto& [a, b] : draw_pairs(dom.target.size(), probe.num_pair_draws, probe.seed))
        different += dom.target.meta[a].identity != dom.target.meta[b].identity;
    CHECK(nn_pair_risk(one, dom.target, probe) ==
          static_cast<double>(different) / static_cast<double>(probe.num_pair_draws));

    for (const auto& [a, b] : draw_pairs(7, 200, 3)) {
        CHECK(a != b);
        CHECK(a < 7);
        CHECK(b < 7);
    }
}

TEST_CASE("eval csv layout") {
    const auto q = labeled(1, 1, {5}, {0});
    const auto g = labeled(2, 1, {5, 6}, {1, 1});
    Matrix dist(1, 2);
    dist(0, 1) = 1.0;
    const auto path = std::filesystem::temp_directory_path() / "reid_eval.csv";
    save_eval_csv(cmc_map(q, g, dist), path, 3);
    std::ifstream in(path);
    std::string all((std::istreambuf_iterator<char>(in)), {});
    CHECK(all.find("map,1") != std::string::npos);
    std::filesystem::remove(path);
}

}  // TEST_SUITE
