#include "reid/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "reid/error.hpp"

namespace reid {

namespace {

void require_rows(const Matrix& m, std::size_t n, const char* what) {
    if (m.rows() != n)
        throw Error(ErrorCode::SizeMismatch, std::string(what) + ": " + std::to_string(m.rows()) +
                                                 " rows vs " + std::to_string(n) + " labels");
}

}  // namespace

double loss_intra(const Matrix& x, const ClusterAssignment& a) {
    require_rows(x, a.size(), "loss_intra");
    double sum = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        if (a.labels[i] == kNoise) continue;
        for (std::size_t j = i + 1; j < x.rows(); ++j)
            if (a.labels[j] == a.labels[i]) sum += std::sqrt(squared_distance(x.row(i), x.row(j)));
    }
    return sum;
}

double loss_inter(const Matrix& x, const ClusterAssignment& a) {
    require_rows(x, a.size(), "loss_inter");
    double sum = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        if (a.labels[i] == kNoise) continue;
        for (std::size_t j = i + 1; j < x.rows(); ++j)
            if (a.labels[j] != kNoise && a.labels[j] != a.labels[i])
                sum -= std::sqrt(squared_distance(x.row(i), x.row(j)));
    }
    return sum;
}

double loss_wr(const Matrix& target, const Matrix& source) {
    if (source.rows() == 0) throw Error(ErrorCode::EmptySource, "loss_wr: empty source");
    if (target.cols() != source.cols())
        throw Error(ErrorCode::DimensionMismatch, "loss_wr: target dim " + std::to_string(target.cols()) +
                                                      " != source dim " + std::to_string(source.cols()));
    if (target.rows() == 0) return 0.0;
    std::vector<double> nearest(target.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(target.rows()); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double best = squared_distance(target.row(i), source.row(0));
        for (std::size_t s = 1; s < source.rows(); ++s)
            best = std::min(best, squared_distance(target.row(i), source.row(s)));
        nearest[i] = std::sqrt(best);
    }
    double sum = 0.0;
    for (double v : nearest) sum += v;
    return sum / static_cast<double>(target.rows());
}

LossReport loss_report(const Matrix& target, const Matrix& source, const ClusterAssignment& a) {
    return {loss_intra(target, a), loss_inter(target, a), loss_wr(target, source), pseudo_label_pairs(a)};
}

LossAndGrad triplet_batch_hard(const Matrix& f, const std::vector<std::int64_t>& labels, double margin) {
    const std::size_t b = f.rows();
    if (labels.size() != b) throw Error(ErrorCode::SizeMismatch, "triplet: label count != batch rows");
    std::map<std::int64_t, std::size_t> counts;
    for (auto l : labels) ++counts[l];
    if (counts.size() < 2) throw Error(ErrorCode::DegenerateBatch, "triplet batch needs at least two labels");
    for (const auto& [label, c] : counts)
        if (c < 2) throw Error(ErrorCode::DegenerateBatch, "label " + std::to_string(label) + " has no positive");

    Matrix dist(b, b);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = i + 1; j < b; ++j) dist(i, j) = dist(j, i) = std::sqrt(squared_distance(f.row(i), f.row(j)));

    LossAndGrad out;
    out.grad = Matrix(b, f.cols());
    const double scale = 1.0 / static_cast<double>(b);

    // adds s * d||f_u - f_v|| / d f into the gradient for both endpoints
    auto add_distance_grad = [&](std::size_t u, std::size_t v, double s) {
        const double d = dist(u, v);
        if (d < kDistanceGradGuard) return;
        const auto fu = f.row(u), fv = f.row(v);
        auto gu = out.grad.row(u), gv = out.grad.row(v);
        for (std::size_t c = 0; c < f.cols(); ++c) {
            const double g = s * (fu[c] - fv[c]) / d;
            gu[c] += g;
            gv[c] -= g;
        }
    };

    double total = 0.0;
    for (std::size_t a = 0; a < b; ++a) {
        std::size_t pos = b, neg = b;
        for (std::size_t j = 0; j < b; ++j) {
            if (j == a) continue;
            if (labels[j] == labels[a]) {
                if (pos == b || dist(a, j) > dist(a, pos)) pos = j;
            } else {
                if (neg == b || dist(a, j) < dist(a, neg)) neg = j;
            }
        }
        const double hinge = margin + dist(a, pos) - dist(a, neg);
        if (hinge <= 0.0) continue;
        total += hinge;
        ++out.active;
        add_distance_grad(a, pos, scale);
        add_distance_grad(a, neg, -scale);
    }
    out.loss = total * scale;
    return out;
}

LossAndGrad softmax_ce(const Matrix& logits, const std::vector<std::size_t>& targets) {
    const std::size_t b = logits.rows(), classes = logits.cols();
    if (targets.size() != b) throw Error(ErrorCode::SizeMismatch, "softmax_ce: target count != rows");
    if (b == 0) throw Error(ErrorCode::SizeMismatch, "softmax_ce: empty batch");
    for (std::size_t t : targets)
        if (t >= classes) throw Error(ErrorCode::BadTarget, "class " + std::to_string(t) + " >= " + std::to_string(classes));

    LossAndGrad out;
    out.grad = Matrix(b, classes);
    const double scale = 1.0 / static_cast<double>(b);
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const auto z = logits.row(i);
        const double mx = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        for (double v : z) denom += std::exp(v - mx);
        const double log_denom = std::log(denom);
        total += log_denom - (z[targets[i]] - mx);
        auto g = out.grad.row(i);
        for (std::size_t c = 0; c < classes; ++c) g[c] = std::exp(z[c] - mx) / denom * scale;
        g[targets[i]] -= scale;
    }
    out.loss = total * scale;
    return out;
}

}  // namespace reid
