#include "reid/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "reid/rng.hpp"

namespace reid {

namespace {

constexpr std::uint64_t kStreamSourceMeans = 11;
constexpr std::uint64_t kStreamSourceNoise = 12;
constexpr std::uint64_t kStreamTargetMeans = 13;
constexpr std::uint64_t kStreamTargetNoise = 14;
constexpr std::uint64_t kStreamBasis = 15;
constexpr std::uint64_t kStreamCameras = 16;

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

/// Seeded orthogonal basis (columns) by Gram-Schmidt on a Gaussian matrix.
Matrix random_orthogonal(std::size_t d, Rng& rng) {
    Matrix q(d, d);
    for (double& v : q.data()) v = rng.normal();
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t p = 0; p < c; ++p) {
            double dot = 0.0;
            for (std::size_t r = 0; r < d; ++r) dot += q(r, c) * q(r, p);
            for (std::size_t r = 0; r < d; ++r) q(r, c) -= dot * q(r, p);
        }
        double norm = 0.0;
        for (std::size_t r = 0; r < d; ++r) norm += q(r, c) * q(r, c);
        norm = std::sqrt(norm);
        for (std::size_t r = 0; r < d; ++r) q(r, c) /= norm;
    }
    return q;
}

/// R = Q G Q^T with G rotating each plane (2m, 2m+1) by `angle`.
Matrix rotation(std::size_t d, double angle, Rng& rng) {
    const Matrix q = random_orthogonal(d, rng);
    Matrix g(d, d);
    for (std::size_t i = 0; i < d; ++i) g(i, i) = 1.0;
    const double c = std::cos(angle), s = std::sin(angle);
    for (std::size_t m = 0; m + 1 < d; m += 2) {
        g(m, m) = c;
        g(m, m + 1) = -s;
        g(m + 1, m) = s;
        g(m + 1, m + 1) = c;
    }
    Matrix qg(d, d), r(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t k = 0; k < d; ++k) qg(i, j) += q(i, k) * g(k, j);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t k = 0; k < d; ++k) r(i, j) += qg(i, k) * q(j, k);
    return r;
}

Matrix draw_means(int count, int dim, int signal_dim, double scale, Rng& rng) {
    Matrix m(static_cast<std::size_t>(count), static_cast<std::size_t>(dim));
    const auto active = static_cast<std::size_t>(signal_dim > 0 ? signal_dim : dim);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t c = 0; c < active; ++c) m(i, c) = scale * rng.normal();
    return m;
}

}  // namespace

SynthSpec reference_spec() {
    SynthSpec s;
    s.num_ids_source = 32;
    s.num_ids_target = 32;
    s.samples_per_id = 20;
    s.dim = 16;
    s.cluster_sigma = 0.15;
    s.mean_scale = 0.25;
    s.rotation_angle = 0.3;
    s.translation = {0.5};
    s.camera_offset_scale = 0.1;
    s.cameras = 4;
    s.seed = 42;
    return s;
}

void validate_spec(const SynthSpec& s) {
    auto bad = [](const std::string& why) { throw Error(ErrorCode::InvalidSpec, why); };
    if (s.num_ids_source < 1 || s.num_ids_target < 1) bad("identity counts must be >= 1");
    if (s.samples_per_id < 1) bad("samples_per_id must be >= 1");
    if (s.dim < 1) bad("dim must be >= 1");
    if (!(s.cluster_sigma > 0.0) || !std::isfinite(s.cluster_sigma)) bad("cluster_sigma must be > 0");
    if (!(s.mean_scale > 0.0) || !std::isfinite(s.mean_scale)) bad("mean_scale must be > 0");
    if (s.signal_dim < 0 || s.signal_dim > s.dim) bad("signal_dim must be in [0, dim]");
    if (!std::isfinite(s.rotation_angle)) bad("rotation_angle must be finite");
    if (!(s.camera_offset_scale >= 0.0) || !std::isfinite(s.camera_offset_scale))
        bad("camera_offset_scale must be >= 0");
    if (s.cameras < 2) bad("cameras must be >= 2");
    if (s.translation.size() > 1 && s.translation.size() != static_cast<std::size_t>(s.dim))
        bad("translation needs 1 or dim values");
    for (double t : s.translation)
        if (!std::isfinite(t)) bad("translation must be finite");
}

SynthSpec parse_synth_spec(std::string_view text) {
    SynthSpec s;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        auto trim = [](std::string_view v) {
            while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
            while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
            return v;
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto where = "line " + std::to_string(line_no);
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw Error(ErrorCode::InvalidSpec, where + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));

        auto num = [&](auto& out) {
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
            if (ec != std::errc() || p != value.data() + value.size())
                throw Error(ErrorCode::InvalidSpec, where + ": cannot parse '" + std::string(value) + "'");
        };
        if (key == "num_ids_source") num(s.num_ids_source);
        else if (key == "num_ids_target") num(s.num_ids_target);
        else if (key == "samples_per_id") num(s.samples_per_id);
        else if (key == "dim") num(s.dim);
        else if (key == "cluster_sigma") num(s.cluster_sigma);
        else if (key == "mean_scale") num(s.mean_scale);
        else if (key == "signal_dim") num(s.signal_dim);
        else if (key == "rotation_angle") num(s.rotation_angle);
        else if (key == "camera_offset_scale") num(s.camera_offset_scale);
        else if (key == "cameras") num(s.cameras);
        else if (key == "seed") num(s.seed);
        else if (key == "translation") {
            s.translation.clear();
            std::string_view rest = value;
            while (true) {
                const auto comma = rest.find(',');
                const auto tok = trim(rest.substr(0, comma));
                double v = 0.0;
                auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
                if (tok.empty() || ec != std::errc() || p != tok.data() + tok.size())
                    throw Error(ErrorCode::InvalidSpec, where + ": bad translation value '" + std::string(tok) + "'");
                s.translation.push_back(v);
                if (comma == std::string_view::npos) break;
                rest = rest.substr(comma + 1);
            }
        } else {
            throw Error(ErrorCode::InvalidSpec, where + ": unknown key '" + std::string(key) + "'");
        }
    }
    validate_spec(s);
    return s;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open spec " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_synth_spec(ss.str());
}

Domains gen_domains(const SynthSpec& spec) {
    validate_spec(spec);
    const auto d = static_cast<std::size_t>(spec.dim);
    const auto per = static_cast<std::size_t>(spec.samples_per_id);

    Rng source_means_rng(derive_seed(spec.seed, kStreamSourceMeans));
    Rng source_noise_rng(derive_seed(spec.seed, kStreamSourceNoise));
    Rng target_means_rng(derive_seed(spec.seed, kStreamTargetMeans));
    Rng target_noise_rng(derive_seed(spec.seed, kStreamTargetNoise));
    Rng basis_rng(derive_seed(spec.seed, kStreamBasis));
    Rng camera_rng(derive_seed(spec.seed, kStreamCameras));

    const Matrix source_means = draw_means(spec.num_ids_source, spec.dim, spec.signal_dim, spec.mean_scale, source_means_rng);
    const Matrix target_means = draw_means(spec.num_ids_target, spec.dim, spec.signal_dim, spec.mean_scale, target_means_rng);
    const bool rotate = spec.rotation_angle != 0.0;
    const Matrix rot = rotate ? rotation(d, spec.rotation_angle, basis_rng) : Matrix();
    std::vector<double> shift(d, 0.0);
    if (spec.translation.size() == 1) shift.assign(d, spec.translation[0]);
    else if (spec.translation.size() == d) shift = spec.translation;
    Matrix cam_offsets(static_cast<std::size_t>(spec.cameras), d);
    for (double& v : cam_offsets.data()) v = spec.camera_offset_scale * camera_rng.normal();

    Domains out;
    auto fill = [&](EmbeddingSet& set, const Matrix& means, Rng& noise, Domain domain, std::int64_t id_base,
                    bool shifted) {
        const std::size_t ids = means.rows();
        set.features = Matrix(ids * per, d);
        set.meta.reserve(ids * per);
        std::vector<double> x(d);
        for (std::size_t id = 0; id < ids; ++id) {
            for (std::size_t s = 0; s < per; ++s) {
                const std::size_t row = id * per + s;
                const auto cam = static_cast<std::int64_t>(s % static_cast<std::size_t>(spec.cameras));
                for (std::size_t c = 0; c < d; ++c) x[c] = means(id, c) + spec.cluster_sigma * noise.normal();
                auto y = set.features.row(row);
                for (std::size_t r = 0; r < d; ++r) {
                    double v = x[r];
                    if (shifted) {
                        if (rotate) {
                            v = 0.0;
                            for (std::size_t c = 0; c < d; ++c) v += rot(r, c) * x[c];
                        }
                        v += shift[r] + cam_offsets(static_cast<std::size_t>(cam), r);
                    }
                    y[r] = to_f32(v);
                }
                set.meta.push_back({id_base + static_cast<std::int64_t>(id), cam, domain});
            }
        }
    };
    out.source.name = "source";
    out.target.name = "target";
    fill(out.source, source_means, source_noise_rng, Domain::Source, 0, false);
    fill(out.target, target_means, target_noise_rng, Domain::Target, spec.num_ids_source, true);
    return out;
}

QueryGallery make_query_gallery(const EmbeddingSet& target) {
    std::vector<std::size_t> query_rows;
    std::vector<std::pair<std::int64_t, std::int64_t>> seen;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const auto& m = target.meta[i];
        if (!m.identity || !m.camera) continue;
        const std::pair key{*m.identity, *m.camera};
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        query_rows.push_back(i);
    }
    QueryGallery qg{target.subset(query_rows), target};
    qg.query.name = target.name + "_query";
    qg.gallery.name = target.name + "_gallery";
    return qg;
}

Domains gen_aligned_domains(int num_ids, int source_per_id, int target_per_id, int dim, double sigma,
                            std::uint64_t seed) {
    if (num_ids < 1 || source_per_id < 1 || target_per_id < 1 || dim < 1 || !(sigma > 0.0))
        throw Error(ErrorCode::InvalidSpec, "aligned domains need positive sizes and sigma");
    Rng means_rng(derive_seed(seed, kStreamSourceMeans));
    Rng noise_rng(derive_seed(seed, kStreamSourceNoise));
    const Matrix means = draw_means(num_ids, dim, 0, 1.0, means_rng);
    const auto d = static_cast<std::size_t>(dim);

    auto make = [&](int per, Domain domain, std::int64_t id_base, const char* name) {
        EmbeddingSet set;
        set.name = name;
        // interleave identities so any prefix covers every identity evenly
        set.features = Matrix(static_cast<std::size_t>(num_ids) * static_cast<std::size_t>(per), d);
        std::size_t row = 0;
        for (int s = 0; s < per; ++s) {
            for (int id = 0; id < num_ids; ++id, ++row) {
                auto y = set.features.row(row);
                for (std::size_t c = 0; c < d; ++c)
                    y[c] = to_f32(means(static_cast<std::size_t>(id), c) + sigma * noise_rng.normal());
                set.meta.push_back({id_base + id, static_cast<std::int64_t>(s % 2), domain});
            }
        }
        return set;
    };
    Domains out;
    out.source = make(source_per_id, Domain::Source, 0, "aligned_source");
    out.target = make(target_per_id, Domain::Target, num_ids, "aligned_target");
    return out;
}

WeightRatioToy gen_weight_ratio_toy(std::uint64_t seed) {
    constexpr int kIds = 4;
    constexpr int kCore = 12;
    constexpr int kTail = 10;
    constexpr int kSourcePerCluster = 30;
    constexpr double kSpacing = 3.0;
    constexpr double kSigma = 0.25;
    constexpr double kArcHeight = 1.4;

    Rng rng(derive_seed(seed, 21));
    WeightRatioToy toy;
    toy.sigma = kSigma;

    toy.source.name = "toy_source";
    toy.source.features = Matrix(kIds * kSourcePerCluster, 2);
    for (int c = 0; c < kIds; ++c) {
        for (int s = 0; s < kSourcePerCluster; ++s) {
            const auto row = static_cast<std::size_t>(c * kSourcePerCluster + s);
            toy.source.features(row, 0) = to_f32(c * kSpacing + kSigma * rng.normal());
            toy.source.features(row, 1) = to_f32(kSigma * rng.normal());
            toy.source.meta.push_back({c, 0, Domain::Source});
        }
    }

    toy.target.name = "toy_target";
    toy.target.features = Matrix(kIds * (kCore + kTail), 2);
    std::size_t row = 0;
    for (int id = 0; id < kIds; ++id) {
        const double cx = id * kSpacing;
        for (int s = 0; s < kCore; ++s, ++row) {
            toy.target.features(row, 0) = to_f32(cx + kSigma * rng.normal());
            toy.target.features(row, 1) = to_f32(kSigma * rng.normal());
            toy.easy.push_back(true);
        }
        // the tail arcs away from the source toward the next identity (the last one wraps back)
        const double dir = id + 1 < kIds ? 1.0 : -1.0;
        for (int s = 0; s < kTail; ++s, ++row) {
            const double t = (s + 1.0) / (kTail + 1.0);
            toy.target.features(row, 0) = to_f32(cx + dir * kSpacing * t + 0.05 * rng.normal());
            toy.target.features(row, 1) = to_f32(kArcHeight * std::sin(std::numbers::pi * t) + 0.05 * rng.normal());
            toy.easy.push_back(false);
        }
        for (int s = 0; s < kCore + kTail; ++s) {
            toy.target.meta.push_back({kIds + id, s % 2, Domain::Target});
            toy.expected.push_back(kIds + id);
        }
    }

    toy.config.metric_mode = MetricMode::KReciprocal;
    toy.config.reciprocal_k = 8;
    toy.config.percentage_p = 0.05;
    toy.config.min_cluster_n1 = 4;
    toy.config.balance_lambda = 0.1;
    toy.config.use_dw = true;
    return toy;
}

}  // namespace reid
