#include "reid/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "binio.hpp"
#include "reid/log.hpp"
#include "reid/losses.hpp"

namespace reid {

namespace {

constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamSourceBatches = 2;
constexpr std::uint64_t kStreamHead = 3;
constexpr std::uint64_t kStreamRefineBase = 1000;

Layer make_layer(std::size_t in, std::size_t out, Rng& rng) {
    Layer l{Matrix(out, in), std::vector<double>(out)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& w : l.weight.data()) w = rng.uniform(-bound, bound);
    for (double& b : l.bias) b = rng.uniform(-bound, bound);
    return l;
}

Layer zeros_like(const Layer& l) { return {Matrix(l.out_dim(), l.in_dim()), std::vector<double>(l.bias.size())}; }

void affine_row(const Layer& l, std::span<const double> x, std::span<double> y) {
    for (std::size_t o = 0; o < l.out_dim(); ++o) {
        const auto w = l.weight.row(o);
        double s = l.bias[o];
        for (std::size_t c = 0; c < w.size(); ++c) s += w[c] * x[c];
        y[o] = s;
    }
}

Matrix affine(const Layer& l, const Matrix& x) {
    Matrix y(x.rows(), l.out_dim());
    for (std::size_t i = 0; i < x.rows(); ++i) affine_row(l, x.row(i), y.row(i));
    return y;
}

void relu_inplace(Matrix& m) {
    for (double& v : m.data()) v = std::max(v, 0.0);
}

/// Gradient of an affine layer; returns grad w.r.t. its input.
Matrix affine_backward(const Layer& l, const Matrix& x, const Matrix& gy, Layer& g) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto xi = x.row(i);
        const auto gi = gy.row(i);
        for (std::size_t o = 0; o < l.out_dim(); ++o) {
            if (gi[o] == 0.0) continue;
            auto gw = g.weight.row(o);
            for (std::size_t c = 0; c < xi.size(); ++c) gw[c] += gi[o] * xi[c];
            g.bias[o] += gi[o];
        }
    }
    Matrix gx(x.rows(), l.in_dim());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto gi = gy.row(i);
        auto out = gx.row(i);
        for (std::size_t o = 0; o < l.out_dim(); ++o) {
            const auto w = l.weight.row(o);
            for (std::size_t c = 0; c < w.size(); ++c) out[c] += gi[o] * w[c];
        }
    }
    return gx;
}

bool all_finite(const std::vector<Layer>& layers) {
    for (const auto& l : layers) {
        for (double v : l.weight.data())
            if (!std::isfinite(v)) return false;
        for (double v : l.bias)
            if (!std::isfinite(v)) return false;
    }
    return true;
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix out(idx.size(), m.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto src = m.row(idx[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

std::size_t batches_per_epoch(std::size_t eligible, const AdaptConfig& cfg) {
    const auto batch = static_cast<std::size_t>(cfg.pk_p) * static_cast<std::size_t>(cfg.pk_k);
    return std::max<std::size_t>(1, eligible / batch);
}

std::size_t count_labels(const std::vector<std::int64_t>& labels) {
    std::vector<std::int64_t> u;
    for (auto l : labels)
        if (l >= 0) u.push_back(l);
    std::sort(u.begin(), u.end());
    return static_cast<std::size_t>(std::unique(u.begin(), u.end()) - u.begin());
}

void check_finite_loss(double loss, std::size_t epoch, const char* phase) {
    if (!std::isfinite(loss))
        throw Error(ErrorCode::NonFiniteLoss, std::string(phase) + " diverged in epoch " + std::to_string(epoch));
}

}  // namespace

void EncoderModel::validate() const {
    if (layers.empty()) throw Error(ErrorCode::InvalidParam, "encoder has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].bias.size() != layers[l].out_dim() || layers[l].in_dim() == 0)
            throw Error(ErrorCode::InvalidParam, "layer " + std::to_string(l) + " has inconsistent shape");
        if (l > 0 && layers[l].in_dim() != layers[l - 1].out_dim())
            throw Error(ErrorCode::InvalidParam, "layer " + std::to_string(l) + " does not chain");
    }
    if (out_dim() < 2) throw Error(ErrorCode::InvalidParam, "encoder output dimension must be >= 2");
    if (!all_finite(layers)) throw Error(ErrorCode::InvalidParam, "encoder has non-finite parameters");
}

EncoderModel make_encoder(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim, Activation act,
                          std::uint64_t seed) {
    Rng rng(seed);
    EncoderModel m;
    m.activation = act;
    if (hidden_dim > 0) {
        m.layers.push_back(make_layer(in_dim, hidden_dim, rng));
        m.layers.push_back(make_layer(hidden_dim, out_dim, rng));
    } else {
        m.layers.push_back(make_layer(in_dim, out_dim, rng));
    }
    m.validate();
    return m;
}

EncoderModel make_encoder(std::size_t in_dim, const AdaptConfig& cfg) {
    const std::size_t out = cfg.output_dim > 0 ? static_cast<std::size_t>(cfg.output_dim) : in_dim;
    return make_encoder(in_dim, static_cast<std::size_t>(cfg.hidden_dim), out,
                        cfg.hidden_dim > 0 ? Activation::Relu : Activation::None, derive_seed(cfg.seed, kStreamInit));
}

Matrix encode(const EncoderModel& model, const Matrix& inputs) {
    if (inputs.cols() != model.in_dim())
        throw Error(ErrorCode::DimensionMismatch, "encoder expects dim " + std::to_string(model.in_dim()) +
                                                      ", got " + std::to_string(inputs.cols()));
    Matrix out(inputs.rows(), model.out_dim());
    bool finite = true;
#pragma omp parallel
    {
        std::vector<std::vector<double>> buf(model.layers.size());
        for (std::size_t l = 0; l < model.layers.size(); ++l) buf[l].resize(model.layers[l].out_dim());
#pragma omp for schedule(static) reduction(&& : finite)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(inputs.rows()); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            std::span<const double> x = inputs.row(i);
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                affine_row(model.layers[l], x, buf[l]);
                if (l + 1 < model.layers.size() && model.activation == Activation::Relu)
                    for (double& v : buf[l]) v = std::max(v, 0.0);
                x = buf[l];
            }
            auto y = out.row(i);
            for (std::size_t c = 0; c < y.size(); ++c) {
                y[c] = x[c];
                finite = finite && std::isfinite(x[c]);
            }
        }
    }
    if (!finite) throw Error(ErrorCode::NonFiniteOutput, "encoder produced a non-finite feature");
    return out;
}

ForwardCache forward(const EncoderModel& model, const Matrix& inputs) {
    if (inputs.cols() != model.in_dim())
        throw Error(ErrorCode::DimensionMismatch, "encoder expects dim " + std::to_string(model.in_dim()));
    ForwardCache c;
    Matrix x = inputs;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        c.inputs.push_back(x);
        Matrix z = affine(model.layers[l], x);
        c.preactivations.push_back(z);
        if (l + 1 < model.layers.size() && model.activation == Activation::Relu) relu_inplace(z);
        x = std::move(z);
    }
    c.output = std::move(x);
    return c;
}

Gradients backward(const EncoderModel& model, const ForwardCache& cache, const Matrix& grad_output,
                   Matrix* grad_inputs) {
    Gradients g;
    for (const auto& l : model.layers) g.layers.push_back(zeros_like(l));
    Matrix gy = grad_output;
    for (std::size_t l = model.layers.size(); l-- > 0;) {
        if (l + 1 < model.layers.size() && model.activation == Activation::Relu) {
            const auto& z = cache.preactivations[l];
            for (std::size_t t = 0; t < gy.data().size(); ++t)
                if (z.data()[t] <= 0.0) gy.data()[t] = 0.0;
        }
        gy = affine_backward(model.layers[l], cache.inputs[l], gy, g.layers[l]);
    }
    if (grad_inputs) *grad_inputs = std::move(gy);
    return g;
}

void OptimState::step(std::vector<Layer>& params, const std::vector<Layer>& grads) {
    if (velocity.empty())
        for (const auto& p : params) velocity.push_back(zeros_like(p));
    for (std::size_t l = 0; l < params.size(); ++l) {
        auto update = [&](std::vector<double>& p, std::vector<double>& v, const std::vector<double>& g) {
            for (std::size_t t = 0; t < p.size(); ++t) {
                v[t] = momentum * v[t] + g[t];
                p[t] -= learning_rate * v[t];
            }
        };
        update(params[l].weight.data(), velocity[l].weight.data(), grads[l].weight.data());
        update(params[l].bias, velocity[l].bias, grads[l].bias);
    }
}

std::vector<std::size_t> pk_sample(const std::vector<std::int64_t>& labels, int p, int k, Rng& rng) {
    if (p < 1 || k < 1) throw Error(ErrorCode::InvalidParam, "P and K must be positive");
    std::map<std::int64_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= 0) groups[labels[i]].push_back(i);
    if (groups.size() < static_cast<std::size_t>(p))
        throw Error(ErrorCode::TooFewIdentities,
                    std::to_string(groups.size()) + " identities available, P=" + std::to_string(p));

    std::vector<const std::vector<std::size_t>*> order;
    for (const auto& [label, members] : groups) order.push_back(&members);
    std::vector<std::size_t> batch;
    batch.reserve(static_cast<std::size_t>(p) * static_cast<std::size_t>(k));
    for (std::size_t a = 0; a < static_cast<std::size_t>(p); ++a) {
        const auto pick = a + rng.below(order.size() - a);
        std::swap(order[a], order[pick]);
        std::vector<std::size_t> members = *order[a];
        if (members.size() >= static_cast<std::size_t>(k)) {
            for (std::size_t s = 0; s < static_cast<std::size_t>(k); ++s) {
                std::swap(members[s], members[s + rng.below(members.size() - s)]);
                batch.push_back(members[s]);
            }
        } else {
            for (int s = 0; s < k; ++s) batch.push_back(members[rng.below(members.size())]);
        }
    }
    return batch;
}

EncoderModel train_source(EncoderModel model, const EmbeddingSet& source, const AdaptConfig& cfg, TrainLog* log) {
    if (!source.has_identities())
        throw Error(ErrorCode::TooFewIdentities, "source set '" + source.name + "' has unlabeled samples");
    const auto labels = source.identity_labels();
    std::map<std::int64_t, std::size_t> class_of;
    for (auto l : labels) class_of.emplace(l, 0);
    if (class_of.size() < static_cast<std::size_t>(cfg.pk_p))
        throw Error(ErrorCode::TooFewIdentities,
                    std::to_string(class_of.size()) + " source identities, P=" + std::to_string(cfg.pk_p));
    std::size_t next = 0;
    for (auto& [id, c] : class_of) c = next++;

    Rng head_rng(derive_seed(cfg.seed, kStreamHead));
    std::vector<Layer> params = model.layers;
    params.push_back(make_layer(model.out_dim(), class_of.size(), head_rng));
    const std::size_t head = params.size() - 1;

    OptimState opt{cfg.source_learning_rate, cfg.momentum, {}};
    Rng rng(derive_seed(cfg.seed, kStreamSourceBatches));
    const std::size_t per_epoch = batches_per_epoch(source.size(), cfg);
    TrainLog local;

    for (int epoch = 0; epoch < cfg.source_epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t step = 0; step < per_epoch; ++step) {
            const auto idx = pk_sample(labels, cfg.pk_p, cfg.pk_k, rng);
            std::vector<std::int64_t> batch_labels(idx.size());
            std::vector<std::size_t> targets(idx.size());
            for (std::size_t r = 0; r < idx.size(); ++r) {
                batch_labels[r] = labels[idx[r]];
                targets[r] = class_of.at(labels[idx[r]]);
            }
            model.layers.assign(params.begin(), params.end() - 1);
            const auto cache = forward(model, gather_rows(source.features, idx));
            const auto trip = triplet_batch_hard(cache.output, batch_labels, cfg.triplet_margin);
            const auto logits = affine(params[head], cache.output);
            const auto ce = softmax_ce(logits, targets);
            const double loss = trip.loss + ce.loss;
            check_finite_loss(loss, static_cast<std::size_t>(epoch), "source training");
            epoch_loss += loss;

            Layer head_grad = zeros_like(params[head]);
            Matrix grad_out = affine_backward(params[head], cache.output, ce.grad, head_grad);
            for (std::size_t t = 0; t < grad_out.data().size(); ++t) grad_out.data()[t] += trip.grad.data()[t];
            auto grads = backward(model, cache, grad_out).layers;
            grads.push_back(std::move(head_grad));
            opt.step(params, grads);
            if (!all_finite(params))
                throw Error(ErrorCode::NonFiniteLoss, "source training parameters diverged in epoch " +
                                                          std::to_string(epoch));
            ++local.steps;
        }
        local.epoch_losses.push_back(epoch_loss / static_cast<double>(per_epoch));
        log_debug("source epoch " + std::to_string(epoch) + " loss " + std::to_string(local.epoch_losses.back()));
    }
    model.layers.assign(params.begin(), params.end() - 1);
    if (log) *log = std::move(local);
    return model;
}

EncoderModel refine_target(EncoderModel model, const Matrix& target, const ClusterAssignment& a,
                           const AdaptConfig& cfg, std::uint64_t stream, TrainLog* log) {
    if (a.size() != target.rows())
        throw Error(ErrorCode::SizeMismatch, "assignment covers " + std::to_string(a.size()) + " samples, target has " +
                                                 std::to_string(target.rows()));
    std::vector<std::int64_t> labels(a.labels.begin(), a.labels.end());
    const std::size_t clusters = count_labels(labels);
    if (clusters < static_cast<std::size_t>(cfg.pk_p))
        throw Error(ErrorCode::TooFewIdentities,
                    std::to_string(clusters) + " pseudo-identities, P=" + std::to_string(cfg.pk_p));
    const std::size_t eligible = a.size() - a.noise_count();

    OptimState opt{cfg.learning_rate, cfg.momentum, {}};
    Rng rng(derive_seed(cfg.seed, kStreamRefineBase + stream));
    const std::size_t per_epoch = batches_per_epoch(eligible, cfg);
    TrainLog local;

    for (int epoch = 0; epoch < cfg.epochs_per_iter; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t step = 0; step < per_epoch; ++step) {
            const auto idx = pk_sample(labels, cfg.pk_p, cfg.pk_k, rng);
            std::vector<std::int64_t> batch_labels(idx.size());
            for (std::size_t r = 0; r < idx.size(); ++r) batch_labels[r] = labels[idx[r]];
            const auto cache = forward(model, gather_rows(target, idx));
            const auto trip = triplet_batch_hard(cache.output, batch_labels, cfg.triplet_margin);
            check_finite_loss(trip.loss, static_cast<std::size_t>(epoch), "target refinement");
            epoch_loss += trip.loss;
            ++local.steps;
            if (trip.active == 0) continue;
            opt.step(model.layers, backward(model, cache, trip.grad).layers);
            if (!all_finite(model.layers))
                throw Error(ErrorCode::NonFiniteLoss, "target refinement parameters diverged");
        }
        local.epoch_losses.push_back(epoch_loss / static_cast<double>(per_epoch));
    }
    if (log) *log = std::move(local);
    return model;
}

void save_checkpoint(const EncoderModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out.write("ENCM", 4);
    binio::put_uint<std::uint16_t>(out, 1);
    binio::put_uint<std::uint8_t>(out, static_cast<std::uint8_t>(model.activation));
    binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(model.layers.size()));
    for (const auto& l : model.layers) {
        binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(l.out_dim()));
        binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(l.in_dim()));
        for (double w : l.weight.data()) binio::put_f64(out, w);
        for (double b : l.bias) binio::put_f64(out, b);
    }
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

EncoderModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::uint16_t version = 0;
    std::uint8_t act = 0;
    std::uint32_t count = 0;
    if (!binio::get_magic(in, "ENCM") || !binio::get_uint(in, version) || version != 1 ||
        !binio::get_uint(in, act) || act > 1 || !binio::get_uint(in, count) || count == 0 || count > 64)
        throw Error(ErrorCode::MalformedHeader, "bad ENCM header in " + path.string());
    EncoderModel m;
    m.activation = static_cast<Activation>(act);
    for (std::uint32_t l = 0; l < count; ++l) {
        std::uint32_t out = 0, inp = 0;
        if (!binio::get_uint(in, out) || !binio::get_uint(in, inp) || out == 0 || inp == 0 ||
            static_cast<std::uint64_t>(out) * inp > (1ULL << 28))
            throw Error(ErrorCode::MalformedHeader, "bad layer header " + std::to_string(l));
        Layer layer{Matrix(out, inp), std::vector<double>(out)};
        for (double& w : layer.weight.data())
            if (!binio::get_f64(in, w)) throw Error(ErrorCode::DimensionMismatch, "checkpoint payload ends early");
        for (double& b : layer.bias)
            if (!binio::get_f64(in, b)) throw Error(ErrorCode::DimensionMismatch, "checkpoint payload ends early");
        m.layers.push_back(std::move(layer));
    }
    m.validate();
    return m;
}

}  // namespace reid
