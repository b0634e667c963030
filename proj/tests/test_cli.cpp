#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "reid/metric.hpp"
#include "reid/synth.hpp"

using namespace reid;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string err;
};

fs::path work_dir() {
    static const fs::path dir = [] {
        auto p = fs::temp_directory_path() / "reid_cli_tests";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

Run run(const std::string& args) {
    const auto err_path = work_dir() / "stderr.txt";
    const std::string cmd = std::string(REID_ADAPT_BIN) + " " + args + " 2> " + err_path.string() + " > /dev/null";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(err_path);
    std::stringstream ss;
    ss << in.rdbuf();
    r.err = ss.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// small scenario + fast config, shared by the adapt tests
fs::path small_inputs() {
    static const fs::path dir = [] {
        const auto d = work_dir() / "small";
        write_text(work_dir() / "small.spec",
                   "num_ids_source = 12\nnum_ids_target = 12\nsamples_per_id = 8\ndim = 8\nmean_scale = 0.5\n"
                   "rotation_angle = 0.4\ntranslation = 0.3\ncamera_offset_scale = 0.05\nseed = 5\n");
        write_text(work_dir() / "small.cfg",
                   "reciprocal_k = 8\npercentage_p = 0.02\niterations_n2 = 2\npk_p = 4\nsource_epochs = 2\n"
                   "source_learning_rate = 0.01\nlearning_rate = 0.01\nepochs_per_iter = 4\n");
        const auto r = run("synth --spec " + (work_dir() / "small.spec").string() + " --out " + d.string());
        REQUIRE(r.code == 0);
        return d;
    }();
    return dir;
}

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth writes loadable, reproducible files") {
    const auto a = work_dir() / "ref_a", b = work_dir() / "ref_b";
    REQUIRE(run("synth --reference --out " + a.string()).code == 0);
    REQUIRE(run("synth --reference --out " + b.string()).code == 0);
    for (const char* f : {"source.emb", "target.emb", "query.emb", "gallery.emb"})
        CHECK(slurp(a / f) == slurp(b / f));
    const auto src = load_embeddings(a / "source.emb", FileFormat::Binary, Domain::Source);
    const auto want = gen_domains(reference_spec());
    CHECK(src.features == want.source.features);
    CHECK(load_embeddings(a / "target.emb", FileFormat::Binary).features == want.target.features);
}

TEST_CASE("malformed spec names its line") {
    const auto spec = work_dir() / "bad.spec";
    write_text(spec, "dim = 4\n\ncameras = many\n");
    const auto r = run("synth --spec " + spec.string() + " --out " + (work_dir() / "bad").string());
    CHECK(r.code == 3);
    CHECK(r.err.find("INVALID_SPEC") != std::string::npos);
    CHECK(r.err.find("line 3") != std::string::npos);
}

TEST_CASE("usage errors") {
    CHECK(run("").code == 2);
    CHECK(run("adapt --source x").code == 2);
    CHECK(run("synth --out " + (work_dir() / "u").string()).code == 2);
    const auto d = small_inputs();
    const auto r = run("adapt --source " + (d / "source.emb").string() + " --target " + (d / "target.emb").string() +
                       " --lambda 3 --out " + (work_dir() / "u").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("balance_lambda") != std::string::npos);
}

TEST_CASE("adapt writes model, report and labels") {
    const auto d = small_inputs();
    const auto out = work_dir() / "adapt";
    const auto r = run("adapt --source " + (d / "source.emb").string() + " --target " + (d / "target.emb").string() +
                       " --config " + (work_dir() / "small.cfg").string() + " --out " + out.string());
    REQUIRE(r.code == 0);
    CHECK(fs::exists(out / "model.encm"));
    CHECK(line_count(slurp(out / "report.csv")) == 2 + 2);
    CHECK(line_count(slurp(out / "pseudo_labels.csv")) == 1 + 96);
}

TEST_CASE("adapt is identical at any thread count") {
    const auto d = small_inputs();
    auto go = [&](int threads, const std::string& name) {
        const auto out = work_dir() / name;
        const auto r = run("--threads " + std::to_string(threads) + " adapt --source " + (d / "source.emb").string() +
                           " --target " + (d / "target.emb").string() + " --config " +
                           (work_dir() / "small.cfg").string() + " --out " + out.string());
        REQUIRE(r.code == 0);
        return slurp(out / "report.csv") + slurp(out / "model.encm") + slurp(out / "pseudo_labels.csv");
    };
    const auto one = go(1, "t1");
    CHECK(one == go(4, "t4"));
    CHECK(one == go(1, "t1b"));
}

TEST_CASE("baseline flags") {
    const auto d = small_inputs();
    const auto out = work_dir() / "baseline";
    const auto r = run("adapt --source " + (d / "source.emb").string() + " --target " + (d / "target.emb").string() +
                       " --config " + (work_dir() / "small.cfg").string() +
                       " --metric euclidean --no-dw --lambda 0.7 --out " + out.string());
    CHECK(r.code == 0);
    // lambda does nothing without the confidence term
    const auto same = work_dir() / "baseline_b";
    REQUIRE(run("adapt --source " + (d / "source.emb").string() + " --target " + (d / "target.emb").string() +
                " --config " + (work_dir() / "small.cfg").string() + " --metric euclidean --no-dw --out " +
                same.string())
                .code == 0);
    CHECK(slurp(out / "report.csv") == slurp(same / "report.csv"));
}

TEST_CASE("missing target file") {
    const auto d = small_inputs();
    const auto r = run("adapt --source " + (d / "source.emb").string() + " --target /nonexistent/t.emb --out " +
                       (work_dir() / "m").string());
    CHECK(r.code == 3);
    CHECK(r.err.find("IO_FAILURE") != std::string::npos);
}

TEST_CASE("rerank") {
    EmbeddingSet two;
    two.features = Matrix(2, 2);
    two.features(1, 0) = 1.0;
    two.meta.resize(2);
    save_embeddings(two, work_dir() / "two.emb", FileFormat::Binary);
    REQUIRE(run("rerank --embeddings " + (work_dir() / "two.emb").string() + " --k 2 --out " +
                (work_dir() / "two.dmat").string())
                .code == 0);
    const auto d2 = load_distance_dump(work_dir() / "two.dmat");
    CHECK(d2.kind == DistanceKind::Jaccard);
    CHECK(d2.size() == 2);
    CHECK(d2.values(0, 0) == 0.0);
    CHECK(d2.values(1, 1) == 0.0);

    std::mt19937_64 gen(60);
    std::normal_distribution<float> nd;
    EmbeddingSet fifty;
    fifty.features = Matrix(50, 4);
    for (double& v : fifty.features.data()) v = nd(gen);
    fifty.meta.resize(50);
    save_embeddings(fifty, work_dir() / "fifty.emb", FileFormat::Binary);
    REQUIRE(run("rerank --embeddings " + (work_dir() / "fifty.emb").string() + " --k 6 --out " +
                (work_dir() / "fifty.dmat").string())
                .code == 0);
    const auto got = load_distance_dump(work_dir() / "fifty.dmat");
    const auto want = kreciprocal_jaccard(fifty.features, 6);
    bool same = true;
    for (std::size_t i = 0; i < 2500; ++i)
        same &= static_cast<float>(got.values.data()[i]) == static_cast<float>(want.values.data()[i]);
    CHECK(same);

    const auto r = run("rerank --embeddings " + (work_dir() / "two.emb").string() + " --k 3 --out " +
                       (work_dir() / "x.dmat").string());
    CHECK(r.code == 3);
    CHECK(r.err.find("K_TOO_LARGE") != std::string::npos);
}

TEST_CASE("eval") {
    EmbeddingSet q, g;
    q.features = Matrix(1, 2, 0.5);
    q.meta = {{1, 0, Domain::Target}};
    g.features = Matrix(2, 2, 0.5);
    g.features(1, 0) = 3.0;
    g.meta = {{1, 1, Domain::Target}, {2, 1, Domain::Target}};
    save_embeddings(q, work_dir() / "q.emb", FileFormat::Binary);
    save_embeddings(g, work_dir() / "g.emb", FileFormat::Binary);
    const auto out = work_dir() / "eval.csv";
    REQUIRE(run("eval --query " + (work_dir() / "q.emb").string() + " --gallery " + (work_dir() / "g.emb").string() +
                " --out " + out.string())
                .code == 0);
    const auto text = slurp(out);
    CHECK(text.find("1,1\n") != std::string::npos);
    CHECK(text.find("map,1\n") != std::string::npos);

    q.meta[0].camera.reset();
    save_embeddings(q, work_dir() / "q_nocam.emb", FileFormat::Binary);
    const auto r = run("eval --query " + (work_dir() / "q_nocam.emb").string() + " --gallery " +
                       (work_dir() / "g.emb").string() + " --out " + out.string());
    CHECK(r.code == 3);
    CHECK(r.err.find("MISSING_CAMERA") != std::string::npos);
}

}  // TEST_SUITE
