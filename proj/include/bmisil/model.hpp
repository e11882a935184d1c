#pragma once

#include "bmisil/dataset.hpp"
#include "bmisil/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bmisil::nn {

enum class LayerKind : std::uint32_t {
    Conv2d = 1,
    MaxPool2x2 = 2,
    Relu = 3,
    Sigmoid = 4,
    Flatten = 5,
    Dense = 6,
};

struct Layer {
    LayerKind kind = LayerKind::Relu;
    // Conv2d: out_channels, kernel, stride, pad. Dense: out_units in `units`.
    int out_channels = 0;
    int kernel = 0;
    int stride = 1;
    int pad = 0;
    int units = 0;
    Tensor weight;
    Tensor bias;

    bool has_params() const noexcept { return kind == LayerKind::Conv2d || kind == LayerKind::Dense; }
    friend bool operator==(const Layer&, const Layer&) = default;
};

/// Per-layer activations saved by the forward pass for backprop.
struct ForwardCache {
    std::vector<Tensor> inputs;
    std::vector<Tensor> outputs;
    std::vector<std::vector<std::size_t>> pool_argmax;
};

/// Parameter gradients, one (weight, bias) pair per layer (empty for
/// parameter-free layers).
struct Gradients {
    std::vector<Tensor> weight;
    std::vector<Tensor> bias;
};

class Model {
public:
    static constexpr std::size_t kInputChannels = 1;
    static constexpr std::size_t kInputSize = 64;

    std::vector<Layer> layers;
    dataset::NormMeta norm;
    std::uint64_t init_seed = 0;
    std::uint64_t train_seed = 0;

    /// x is [N, 1, 64, 64]; returns [N, 1].
    Tensor forward(const Tensor& x, ForwardCache* cache = nullptr) const;
    Gradients backward(const ForwardCache& cache, const Tensor& grad_out) const;

    /// Throws ShapeMismatch when layer shapes do not chain from (1, 64, 64) to (1).
    void validate() const;

    std::size_t parameter_count() const;

    std::vector<std::uint8_t> serialize() const;
    static Model deserialize(std::span<const std::uint8_t> bytes);

    void save(const std::string& path) const;
    static Model load(const std::string& path);

    friend bool operator==(const Model&, const Model&) = default;
};

/// Five conv(8)-relu-pool blocks (64x64 down to 2x2), flatten, dense(8)-relu-dense(1)-sigmoid,
/// 3x3 kernels with stride 1 and pad 1. He-uniform init for layers feeding a
/// ReLU, Glorot-uniform for the output layer, zero biases.
Model build_default_model(std::uint64_t seed);

}  // namespace bmisil::nn
