#include "bmisil/model.hpp"

#include "bmisil/error.hpp"
#include "bmisil/rng.hpp"
#include "bmisil/tensor_ops.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace bmisil::nn {

namespace {

Layer conv_layer(int in_ch, int out_ch, Rng& rng) {
    Layer l{LayerKind::Conv2d, out_ch, 3, 1, 1, 0, {}, {}};
    const std::size_t fan_in = static_cast<std::size_t>(in_ch) * 9;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    l.weight = Tensor({static_cast<std::size_t>(out_ch), static_cast<std::size_t>(in_ch), 3, 3});
    for (auto& v : l.weight.data()) v = rng.uniform(-bound, bound);
    l.bias = Tensor({static_cast<std::size_t>(out_ch)});
    return l;
}

Layer dense_layer(std::size_t fan_in, int units, bool glorot, Rng& rng) {
    Layer l{LayerKind::Dense, 0, 0, 1, 0, units, {}, {}};
    const double denom = glorot ? static_cast<double>(fan_in + units) : static_cast<double>(fan_in);
    const double bound = std::sqrt(6.0 / denom);
    l.weight = Tensor({fan_in, static_cast<std::size_t>(units)});
    for (auto& v : l.weight.data()) v = rng.uniform(-bound, bound);
    l.bias = Tensor({static_cast<std::size_t>(units)});
    return l;
}

Layer simple(LayerKind k) { return Layer{k, 0, 0, 1, 0, 0, {}, {}}; }

}  // namespace

Model build_default_model(std::uint64_t seed) {
    Rng rng(seed);
    Model m;
    m.init_seed = seed;
    int in_ch = 1;
    for (int block = 0; block < 5; ++block) {
        m.layers.push_back(conv_layer(in_ch, 8, rng));
        m.layers.push_back(simple(LayerKind::Relu));
        m.layers.push_back(simple(LayerKind::MaxPool2x2));
        in_ch = 8;
    }
    m.layers.push_back(simple(LayerKind::Flatten));
    m.layers.push_back(dense_layer(8 * 2 * 2, 8, false, rng));
    m.layers.push_back(simple(LayerKind::Relu));
    m.layers.push_back(dense_layer(8, 1, true, rng));
    m.layers.push_back(simple(LayerKind::Sigmoid));
    return m;
}

void Model::validate() const {
    // Shape per sample: {C, H, W} before flatten, {D} after.
    std::vector<std::size_t> shape{kInputChannels, kInputSize, kInputSize};
    if (layers.empty()) fail(ErrorCode::ShapeMismatch, "model has no layers");
    for (const auto& l : layers) {
        switch (l.kind) {
            case LayerKind::Conv2d: {
                if (shape.size() != 3 || l.kernel < 1 || l.kernel % 2 == 0 || l.stride < 1 || l.pad < 0 ||
                    l.weight.shape() != std::vector<std::size_t>{static_cast<std::size_t>(l.out_channels), shape[0],
                                                                 static_cast<std::size_t>(l.kernel),
                                                                 static_cast<std::size_t>(l.kernel)} ||
                    l.bias.size() != static_cast<std::size_t>(l.out_channels)) {
                    fail(ErrorCode::ShapeMismatch, "conv layer does not fit its input");
                }
                const long long sh = static_cast<long long>(shape[1]) + 2 * l.pad - l.kernel;
                const long long sw = static_cast<long long>(shape[2]) + 2 * l.pad - l.kernel;
                if (sh < 0 || sw < 0 || sh % l.stride || sw % l.stride) {
                    fail(ErrorCode::NonIntegralOutput, "conv layer output size is not integral");
                }
                shape = {static_cast<std::size_t>(l.out_channels), static_cast<std::size_t>(sh / l.stride + 1),
                         static_cast<std::size_t>(sw / l.stride + 1)};
                break;
            }
            case LayerKind::MaxPool2x2:
                if (shape.size() != 3 || shape[1] % 2 || shape[2] % 2) {
                    fail(ErrorCode::OddSpatialDims, "maxpool input must have even spatial dims");
                }
                shape = {shape[0], shape[1] / 2, shape[2] / 2};
                break;
            case LayerKind::Flatten:
                shape = {Tensor::count(shape)};
                break;
            case LayerKind::Dense:
                if (shape.size() != 1 ||
                    l.weight.shape() != std::vector<std::size_t>{shape[0], static_cast<std::size_t>(l.units)} ||
                    l.bias.size() != static_cast<std::size_t>(l.units)) {
                    fail(ErrorCode::ShapeMismatch, "dense layer does not fit its input");
                }
                shape = {static_cast<std::size_t>(l.units)};
                break;
            case LayerKind::Relu:
            case LayerKind::Sigmoid:
                break;
            default:
                fail(ErrorCode::ShapeMismatch, "unknown layer kind");
        }
    }
    if (shape != std::vector<std::size_t>{1} || layers.back().kind != LayerKind::Sigmoid) {
        fail(ErrorCode::ShapeMismatch, "model must end in a single sigmoid unit");
    }
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

Tensor Model::forward(const Tensor& x, ForwardCache* cache) const {
    if (x.rank() != 4 || x.dim(1) != kInputChannels || x.dim(2) != kInputSize || x.dim(3) != kInputSize) {
        fail(ErrorCode::ShapeMismatch, "model input must be [N, 1, 64, 64]");
    }
    if (cache) {
        cache->inputs.clear();
        cache->outputs.clear();
        cache->pool_argmax.assign(layers.size(), {});
    }
    Tensor cur = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        Tensor next;
        switch (l.kind) {
            case LayerKind::Conv2d:
                next = conv2d_forward(cur, l.weight, l.bias, l.stride, l.pad);
                break;
            case LayerKind::MaxPool2x2: {
                auto pr = maxpool2x2_forward(cur);
                next = std::move(pr.pooled);
                if (cache) cache->pool_argmax[i] = std::move(pr.argmax);
                break;
            }
            case LayerKind::Relu:
                next = relu_forward(cur);
                break;
            case LayerKind::Sigmoid:
                next = sigmoid_forward(cur);
                break;
            case LayerKind::Flatten:
                next = cur.reshaped({cur.dim(0), cur.size() / cur.dim(0)});
                break;
            case LayerKind::Dense:
                next = dense_forward(cur, l.weight, l.bias);
                break;
        }
        if (cache) {
            cache->inputs.push_back(std::move(cur));
        }
        cur = std::move(next);
        if (cache) cache->outputs.push_back(cur);
    }
    return cur;
}

Gradients Model::backward(const ForwardCache& cache, const Tensor& grad_out) const {
    if (cache.inputs.size() != layers.size()) fail(ErrorCode::ShapeMismatch, "forward cache does not match model");
    Gradients g;
    g.weight.resize(layers.size());
    g.bias.resize(layers.size());
    Tensor grad = grad_out;
    for (std::size_t idx = layers.size(); idx-- > 0;) {
        const Layer& l = layers[idx];
        const Tensor& in = cache.inputs[idx];
        switch (l.kind) {
            case LayerKind::Conv2d: {
                auto cg = conv2d_backward(in, l.weight, l.stride, l.pad, grad, idx != 0);
                g.weight[idx] = std::move(cg.grad_w);
                g.bias[idx] = std::move(cg.grad_b);
                grad = std::move(cg.grad_x);
                break;
            }
            case LayerKind::MaxPool2x2:
                grad = maxpool2x2_backward(cache.pool_argmax[idx], in.shape(), grad);
                break;
            case LayerKind::Relu:
                grad = relu_backward(in, grad);
                break;
            case LayerKind::Sigmoid:
                grad = sigmoid_backward(cache.outputs[idx], grad);
                break;
            case LayerKind::Flatten:
                grad = grad.reshaped(in.shape());
                break;
            case LayerKind::Dense: {
                auto dg = dense_backward(in, l.weight, grad);
                g.weight[idx] = std::move(dg.grad_w);
                g.bias[idx] = std::move(dg.grad_b);
                grad = std::move(dg.grad_x);
                break;
            }
        }
    }
    return g;
}

// Binary layout, all integers and floats little-endian:
//   "BMISILNN" | u32 version | u64 init_seed | u64 train_seed | f64 bmi_min | f64 bmi_max
//   | u32 C | u32 H | u32 W | u32 layer_count
//   per layer: u32 kind | u32 out_channels | u32 kernel | u32 stride | u32 pad | u32 units
//              | u8 has_params [ | tensor weight | tensor bias ]
//   tensor: u32 rank | u32 dims[rank] | f64 data[prod(dims)]
namespace {

constexpr char kMagic[8] = {'B', 'M', 'I', 'S', 'I', 'L', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    void u8(std::uint8_t v) { out.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void tensor(const Tensor& t) {
        u32(static_cast<std::uint32_t>(t.rank()));
        for (auto d : t.shape()) u32(static_cast<std::uint32_t>(d));
        for (double v : t.data()) f64(v);
    }
    std::vector<std::uint8_t> out;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : bytes(b) {}
    std::uint8_t u8() {
        need(1);
        return bytes[pos++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    Tensor tensor() {
        const std::uint32_t rank = u32();
        if (rank > 4) fail(ErrorCode::ModelFormat, "tensor rank above 4");
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = u32();
        const std::size_t n = Tensor::count(shape);
        need(n * 8);
        std::vector<double> data(n);
        for (auto& v : data) v = f64();
        return Tensor(std::move(shape), std::move(data));
    }
    bool done() const { return pos == bytes.size(); }

private:
    void need(std::size_t n) const {
        if (bytes.size() - pos < n) fail(ErrorCode::ModelFormat, "model file truncated");
    }
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;
};

}  // namespace

std::vector<std::uint8_t> Model::serialize() const {
    Writer w;
    for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
    w.u32(kVersion);
    w.u64(init_seed);
    w.u64(train_seed);
    w.f64(norm.bmi_min);
    w.f64(norm.bmi_max);
    w.u32(kInputChannels);
    w.u32(kInputSize);
    w.u32(kInputSize);
    w.u32(static_cast<std::uint32_t>(layers.size()));
    for (const auto& l : layers) {
        w.u32(static_cast<std::uint32_t>(l.kind));
        w.u32(static_cast<std::uint32_t>(l.out_channels));
        w.u32(static_cast<std::uint32_t>(l.kernel));
        w.u32(static_cast<std::uint32_t>(l.stride));
        w.u32(static_cast<std::uint32_t>(l.pad));
        w.u32(static_cast<std::uint32_t>(l.units));
        w.u8(l.has_params() ? 1 : 0);
        if (l.has_params()) {
            w.tensor(l.weight);
            w.tensor(l.bias);
        }
    }
    return std::move(w.out);
}

Model Model::deserialize(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    for (char c : kMagic) {
        if (r.u8() != static_cast<std::uint8_t>(c)) fail(ErrorCode::ModelFormat, "bad model magic");
    }
    if (const auto v = r.u32(); v != kVersion) {
        fail(ErrorCode::ModelFormat, "unsupported model version " + std::to_string(v));
    }
    Model m;
    m.init_seed = r.u64();
    m.train_seed = r.u64();
    m.norm.bmi_min = r.f64();
    m.norm.bmi_max = r.f64();
    if (r.u32() != kInputChannels || r.u32() != kInputSize || r.u32() != kInputSize) {
        fail(ErrorCode::ModelFormat, "unsupported input shape");
    }
    const std::uint32_t n = r.u32();
    if (n > 1024) fail(ErrorCode::ModelFormat, "implausible layer count");
    for (std::uint32_t i = 0; i < n; ++i) {
        Layer l;
        const auto kind = r.u32();
        if (kind < 1 || kind > 6) fail(ErrorCode::ModelFormat, "unknown layer kind");
        l.kind = static_cast<LayerKind>(kind);
        l.out_channels = static_cast<int>(r.u32());
        l.kernel = static_cast<int>(r.u32());
        l.stride = static_cast<int>(r.u32());
        l.pad = static_cast<int>(r.u32());
        l.units = static_cast<int>(r.u32());
        const bool has = r.u8() != 0;
        if (has != l.has_params()) fail(ErrorCode::ModelFormat, "parameter flag does not match layer kind");
        if (has) {
            l.weight = r.tensor();
            l.bias = r.tensor();
        }
        m.layers.push_back(std::move(l));
    }
    if (!r.done()) fail(ErrorCode::ModelFormat, "trailing bytes after model");
    m.validate();
    return m;
}

void Model::save(const std::string& path) const {
    const auto bytes = serialize();
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

Model Model::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace bmisil::nn
