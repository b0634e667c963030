#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "reid/cluster.hpp"
#include "reid/core.hpp"
#include "reid/rng.hpp"

namespace reid {

/// y = W x + b, W is out x in.
struct Layer {
    Matrix weight;
    std::vector<double> bias;

    std::size_t in_dim() const noexcept { return weight.cols(); }
    std::size_t out_dim() const noexcept { return weight.rows(); }

    friend bool operator==(const Layer&, const Layer&) = default;
};

/// Feature encoder: a chain of affine layers with an optional activation between them.
struct EncoderModel {
    std::vector<Layer> layers;
    Activation activation = Activation::None;

    std::size_t in_dim() const { return layers.front().in_dim(); }
    std::size_t out_dim() const { return layers.back().out_dim(); }

    /// Throws InvalidParam unless shapes chain, parameters are finite and out_dim >= 2.
    void validate() const;

    friend bool operator==(const EncoderModel&, const EncoderModel&) = default;
};

/// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; hidden_dim == 0 gives a single affine layer.
EncoderModel make_encoder(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim, Activation act,
                          std::uint64_t seed);
EncoderModel make_encoder(std::size_t in_dim, const AdaptConfig& cfg);

/// Deterministic forward pass, parallel over rows.
Matrix encode(const EncoderModel& model, const Matrix& inputs);
inline Matrix encode(const EncoderModel& model, const EmbeddingSet& set) { return encode(model, set.features); }

/// Activations kept for the backward pass.
struct ForwardCache {
    std::vector<Matrix> inputs;       // input to each layer
    std::vector<Matrix> preactivations;
    Matrix output;
};

ForwardCache forward(const EncoderModel& model, const Matrix& inputs);

/// Parameter gradients laid out like the model's layers.
struct Gradients {
    std::vector<Layer> layers;
};

/// Backpropagates d loss / d output. If grad_inputs is non-null it receives d loss / d inputs.
Gradients backward(const EncoderModel& model, const ForwardCache& cache, const Matrix& grad_output,
                   Matrix* grad_inputs = nullptr);

/// SGD with momentum: v = mu * v + g; p -= lr * v.
struct OptimState {
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::vector<Layer> velocity;

    void step(std::vector<Layer>& params, const std::vector<Layer>& grads);
};

/// P labels drawn without replacement, K rows each (with replacement when a
/// label has fewer than K rows). Labels < 0 are ignored.
std::vector<std::size_t> pk_sample(const std::vector<std::int64_t>& labels, int p, int k, Rng& rng);

struct TrainLog {
    std::vector<double> epoch_losses;  // mean batch loss per epoch
    std::size_t steps = 0;
};

/// Source-domain training: triplet on the encoder output plus cross-entropy
/// through a temporary linear classifier head, summed with equal weight.
/// Runs cfg.source_epochs epochs.
EncoderModel train_source(EncoderModel model, const EmbeddingSet& source, const AdaptConfig& cfg,
                          TrainLog* log = nullptr);

/// Target refinement on pseudo-labels: triplet only, NOISE rows excluded,
/// cfg.epochs_per_iter epochs. `stream` separates the sampling stream of each call.
EncoderModel refine_target(EncoderModel model, const Matrix& target, const ClusterAssignment& a,
                           const AdaptConfig& cfg, std::uint64_t stream, TrainLog* log = nullptr);

/// "ENCM" checkpoint: magic, u16 version, u8 activation, u32 layer count, then per
/// layer u32 out, u32 in, f64 weights (row-major), f64 bias. Little-endian.
void save_checkpoint(const EncoderModel& model, const std::filesystem::path& path);
EncoderModel load_checkpoint(const std::filesystem::path& path);

}  // namespace reid
