#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

#include "binio.hpp"
#include "reid/core.hpp"

namespace reid {

namespace {

constexpr std::uint16_t kEmbeddingVersion = 1;
constexpr std::uint16_t kFlagIdentity = 0x1;
constexpr std::uint16_t kFlagCamera = 0x2;

std::string at(std::size_t row, std::size_t col) {
    return "row=" + std::to_string(row) + " col=" + std::to_string(col);
}

bool any_identity(const EmbeddingSet& s) {
    for (const auto& m : s.meta)
        if (m.identity) return true;
    return false;
}

bool any_camera(const EmbeddingSet& s) {
    for (const auto& m : s.meta)
        if (m.camera) return true;
    return false;
}

std::optional<std::int64_t> from_label(std::int64_t v) {
    return v < 0 ? std::nullopt : std::optional<std::int64_t>(v);
}

EmbeddingSet load_binary(const std::filesystem::path& path, Domain domain) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());

    std::uint16_t version = 0, flags = 0;
    std::uint32_t n = 0, d = 0;
    if (!binio::get_magic(in, "EMBD")) throw Error(ErrorCode::MalformedHeader, "bad magic in " + path.string());
    if (!binio::get_uint(in, version) || !binio::get_uint(in, flags) || !binio::get_uint(in, n) ||
        !binio::get_uint(in, d))
        throw Error(ErrorCode::MalformedHeader, "truncated header in " + path.string());
    if (version != kEmbeddingVersion)
        throw Error(ErrorCode::MalformedHeader, "unsupported version " + std::to_string(version));
    if ((flags & ~(kFlagIdentity | kFlagCamera)) != 0)
        throw Error(ErrorCode::MalformedHeader, "unknown flag bits " + std::to_string(flags));
    if (n == 0 || d == 0) throw Error(ErrorCode::MalformedHeader, "n and d must be >= 1");

    EmbeddingSet set;
    set.name = path.stem().string();
    set.features = Matrix(n, d);
    set.meta.assign(n, SampleMeta{std::nullopt, std::nullopt, domain});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            float v;
            if (!binio::get_f32(in, v))
                throw Error(ErrorCode::DimensionMismatch, "feature payload ends early at " + at(i, j));
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, at(i, j));
            set.features(i, j) = v;
        }
    }
    auto read_labels = [&](const char* what, auto member) {
        for (std::size_t i = 0; i < n; ++i) {
            std::int64_t v;
            if (!binio::get_i64(in, v))
                throw Error(ErrorCode::DimensionMismatch, std::string(what) + " payload ends early at row=" +
                                                               std::to_string(i));
            set.meta[i].*member = from_label(v);
        }
    };
    if (flags & kFlagIdentity) read_labels("identity", &SampleMeta::identity);
    if (flags & kFlagCamera) read_labels("camera", &SampleMeta::camera);
    if (in.peek() != std::char_traits<char>::eof())
        throw Error(ErrorCode::DimensionMismatch, "trailing bytes after payload in " + path.string());
    return set;
}

void save_binary(const EmbeddingSet& set, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    const bool ids = any_identity(set), cams = any_camera(set);
    out.write("EMBD", 4);
    binio::put_uint<std::uint16_t>(out, kEmbeddingVersion);
    binio::put_uint<std::uint16_t>(out, (ids ? kFlagIdentity : 0) | (cams ? kFlagCamera : 0));
    binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(set.size()));
    binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(set.dim()));
    for (double v : set.features.data()) binio::put_f32(out, static_cast<float>(v));
    if (ids)
        for (const auto& m : set.meta) binio::put_i64(out, m.identity.value_or(-1));
    if (cams)
        for (const auto& m : set.meta) binio::put_i64(out, m.camera.value_or(-1));
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

// CSV -----------------------------------------------------------------------

bool parse_flag(std::string_view field, std::string_view key, int& out) {
    if (field.substr(0, key.size()) != key) return false;
    field.remove_prefix(key.size());
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    return ec == std::errc() && p == field.data() + field.size() && (key == "dim=" ? out >= 1 : (out == 0 || out == 1));
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        auto tok = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
        while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
        out.push_back(tok);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

EmbeddingSet load_csv(const std::filesystem::path& path, Domain domain) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedHeader, "missing header in " + path.string());
    const auto header = split(line);
    int d = 0, labels = 0, cameras = 0;
    if (header.size() != 3 || !parse_flag(header[0], "dim=", d) || !parse_flag(header[1], "labels=", labels) ||
        !parse_flag(header[2], "cameras=", cameras))
        throw Error(ErrorCode::MalformedHeader, "expected dim=<d>,labels=<0|1>,cameras=<0|1>, got '" + line + "'");

    const std::size_t width = static_cast<std::size_t>(d) + labels + cameras;
    std::vector<double> values;
    std::vector<SampleMeta> meta;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto fields = split(line);
        if (fields.size() != width)
            throw Error(ErrorCode::DimensionMismatch, "row=" + std::to_string(row) + " has " +
                                                          std::to_string(fields.size()) + " fields, expected " +
                                                          std::to_string(width));
        for (std::size_t j = 0; j < static_cast<std::size_t>(d); ++j) {
            double v = 0.0;
            const auto f = fields[j];
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(v))
                throw Error(ErrorCode::NonFiniteValue, at(row, j) + " token '" + std::string(f) + "'");
            values.push_back(v);
        }
        SampleMeta m{std::nullopt, std::nullopt, domain};
        auto read_label = [&](std::size_t j) {
            std::int64_t v = 0;
            const auto f = fields[j];
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || p != f.data() + f.size() || v < -1)
                throw Error(ErrorCode::NonFiniteValue, at(row, j) + " bad label '" + std::string(f) + "'");
            return from_label(v);
        };
        std::size_t col = static_cast<std::size_t>(d);
        if (labels) m.identity = read_label(col++);
        if (cameras) m.camera = read_label(col++);
        meta.push_back(m);
        ++row;
    }
    if (row == 0) throw Error(ErrorCode::MalformedHeader, "no samples in " + path.string());

    EmbeddingSet set;
    set.name = path.stem().string();
    set.features = Matrix(row, static_cast<std::size_t>(d));
    set.features.data() = std::move(values);
    set.meta = std::move(meta);
    return set;
}

void append_number(std::string& out, double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, p);
}

void save_csv(const EmbeddingSet& set, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    const bool ids = any_identity(set), cams = any_camera(set);
    out << "dim=" << set.dim() << ",labels=" << (ids ? 1 : 0) << ",cameras=" << (cams ? 1 : 0) << '\n';
    std::string line;
    for (std::size_t i = 0; i < set.size(); ++i) {
        line.clear();
        const auto r = set.features.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (j) line += ',';
            append_number(line, r[j]);
        }
        if (ids) line += ',' + std::to_string(set.meta[i].identity.value_or(-1));
        if (cams) line += ',' + std::to_string(set.meta[i].camera.value_or(-1));
        out << line << '\n';
    }
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace

FileFormat format_for(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? FileFormat::Csv : FileFormat::Binary;
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, FileFormat format, Domain domain) {
    auto set = format == FileFormat::Binary ? load_binary(path, domain) : load_csv(path, domain);
    set.validate();
    return set;
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path, FileFormat format) {
    if (format == FileFormat::Binary)
        save_binary(set, path);
    else
        save_csv(set, path);
}

}  // namespace reid
