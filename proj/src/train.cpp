#include "bmisil/train.hpp"

#include "bmisil/error.hpp"
#include "bmisil/tensor_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bmisil::nn {

using dataset::LabeledSample;

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        fail(ErrorCode::InvalidArgument, "learning_rate must be > 0");
    }
    if (!(decay >= 0.0)) fail(ErrorCode::InvalidArgument, "decay must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
        fail(ErrorCode::InvalidArgument, "Adam betas must be in [0, 1)");
    }
    if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be > 0");
    if (batch_size < 1) fail(ErrorCode::InvalidArgument, "batch_size must be >= 1");
    if (max_epochs < 1) fail(ErrorCode::InvalidArgument, "max_epochs must be >= 1");
    if (patience < 1) fail(ErrorCode::InvalidArgument, "patience must be >= 1");
    augment.validate();
}

double effective_lr(const TrainConfig& cfg, std::uint64_t t) {
    return cfg.learning_rate / (1.0 + cfg.decay * static_cast<double>(t - 1));
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state,
               const TrainConfig& cfg) {
    if (params.size() != grads.size()) fail(ErrorCode::ShapeMismatch, "adam: params/grads count mismatch");
    if (state.m.empty()) {
        for (const Tensor* p : params) {
            state.m.emplace_back(p->shape());
            state.v.emplace_back(p->shape());
        }
    }
    if (state.m.size() != params.size()) fail(ErrorCode::ShapeMismatch, "adam: state does not match params");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->shape() != grads[i]->shape() || state.m[i].shape() != params[i]->shape()) {
            fail(ErrorCode::ShapeMismatch, "adam: tensor shape mismatch");
        }
    }

    state.t += 1;
    const double lr = effective_lr(cfg, state.t);
    const double t = static_cast<double>(state.t);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i]->data();
        const auto g = grads[i]->data();
        auto m = state.m[i].data();
        auto v = state.v[i].data();
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            p[j] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
}

bool EarlyStopping::update(int epoch, double val_loss) {
    if (val_loss < best_ - min_delta_) {
        best_ = val_loss;
        best_epoch_ = epoch;
        since_best_ = 0;
        return true;
    }
    ++since_best_;
    return false;
}

Tensor images_to_tensor(std::span<const raster::RasterImage> images) {
    const std::size_t side = Model::kInputSize;
    Tensor x({images.size(), 1, side, side});
    auto out = x.data();
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& img = images[i];
        if (img.width() != static_cast<int>(side) || img.height() != static_cast<int>(side)) {
            fail(ErrorCode::WrongImageSize, "expected a 64x64 image, got " + std::to_string(img.width()) + "x" +
                                                std::to_string(img.height()));
        }
        if (img.kind() != raster::PixelKind::Binary) fail(ErrorCode::WrongKind, "model input must be Binary");
        const auto px = img.pixels();
        for (std::size_t j = 0; j < px.size(); ++j) out[i * side * side + j] = px[j] ? 1.0 : 0.0;
    }
    return x;
}

std::vector<double> predict(const Model& model, std::span<const raster::RasterImage> images) {
    constexpr std::size_t kChunk = 32;
    std::vector<double> out;
    out.reserve(images.size());
    for (std::size_t i = 0; i < images.size(); i += kChunk) {
        const auto chunk = images.subspan(i, std::min(kChunk, images.size() - i));
        const Tensor y = model.forward(images_to_tensor(chunk));
        out.insert(out.end(), y.data().begin(), y.data().end());
    }
    return out;
}

double evaluate_mse(const Model& model, const std::vector<LabeledSample>& samples) {
    if (samples.empty()) fail(ErrorCode::EmptyDataset, "no samples to evaluate");
    std::vector<raster::RasterImage> images;
    images.reserve(samples.size());
    for (const auto& s : samples) images.push_back(s.image);
    const auto pred = predict(model, images);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - samples[i].target;
        sum += d * d;
    }
    return sum / static_cast<double>(pred.size());
}

namespace {

// Beyond this magnitude exp() overflows and the sigmoid gradient is exactly zero.
constexpr double kSaturatedLogit = 709.0;

std::vector<Tensor*> parameter_tensors(Model& m) {
    std::vector<Tensor*> ps;
    for (auto& l : m.layers) {
        if (!l.has_params()) continue;
        ps.push_back(&l.weight);
        ps.push_back(&l.bias);
    }
    return ps;
}

bool parameters_finite(const Model& m) {
    return std::all_of(m.layers.begin(), m.layers.end(),
                       [](const Layer& l) { return l.weight.all_finite() && l.bias.all_finite(); });
}

}  // namespace

TrainResult train(Model model, const std::vector<LabeledSample>& train_set,
                  const std::vector<LabeledSample>& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    if (train_set.empty() || val_set.empty()) fail(ErrorCode::EmptyDataset, "train and val sets must be nonempty");
    model.validate();
    model.train_seed = cfg.seed;

    const std::size_t side = Model::kInputSize;
    const std::size_t plane = side * side;
    const std::vector<Tensor*> params = parameter_tensors(model);
    AdamState adam;
    EarlyStopping stopper(cfg.patience, cfg.min_delta);
    TrainResult result;
    Model best = model;

    std::vector<std::size_t> order(train_set.size());
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(epoch), 0));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t n = std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
            Tensor x({n, 1, side, side});
            Tensor y({n, 1});
            for (std::size_t b = 0; b < n; ++b) {
                const std::size_t idx = order[start + b];
                Rng aug_rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(epoch), idx + 1));
                const auto img = augment::sample_augmented(train_set[idx].image, cfg.augment, aug_rng);
                if (img.width() != static_cast<int>(side) || img.height() != static_cast<int>(side)) {
                    fail(ErrorCode::WrongImageSize, "training images must be 64x64");
                }
                const auto px = img.pixels();
                for (std::size_t j = 0; j < plane; ++j) x[b * plane + j] = px[j] ? 1.0 : 0.0;
                y[b] = train_set[idx].target;
            }
            ForwardCache cache;
            const Tensor pred = model.forward(x, &cache);
            const LossResult loss = mse_loss(pred, y);
            if (!std::isfinite(loss.loss)) fail(ErrorCode::DivergedLoss, "training loss is not finite");
            for (const double z : cache.inputs.back().data()) {
                if (!(std::abs(z) < kSaturatedLogit)) fail(ErrorCode::DivergedLoss, "output sigmoid saturated");
            }
            loss_sum += loss.loss * static_cast<double>(n);

            const Gradients g = model.backward(cache, loss.grad);
            std::vector<const Tensor*> grads;
            for (std::size_t li = 0; li < model.layers.size(); ++li) {
                if (!model.layers[li].has_params()) continue;
                grads.push_back(&g.weight[li]);
                grads.push_back(&g.bias[li]);
            }
            adam_step(params, grads, adam, cfg);
        }
        if (!parameters_finite(model)) fail(ErrorCode::DivergedLoss, "parameters became non-finite");

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        rec.val_loss = evaluate_mse(model, val_set);
        rec.effective_lr = effective_lr(cfg, std::max<std::uint64_t>(adam.t, 1));
        if (!std::isfinite(rec.val_loss)) fail(ErrorCode::DivergedLoss, "validation loss is not finite");
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (stopper.update(epoch, rec.val_loss)) best = model;
        if (stopper.should_stop()) break;
    }

    result.model = std::move(best);
    result.best_epoch = stopper.best_epoch();
    result.best_val_loss = stopper.best_loss();
    return result;
}

GridSearchResult grid_search(const std::vector<double>& learning_rates, const std::vector<double>& decays,
                             const std::vector<LabeledSample>& train_set, const std::vector<LabeledSample>& val_set,
                             const TrainConfig& short_cfg, std::uint64_t model_seed, const dataset::NormMeta& norm) {
    if (learning_rates.empty() || decays.empty()) fail(ErrorCode::EmptyGrid, "grid has no combinations");
    GridSearchResult res;
    bool found = false;
    for (double lr : learning_rates) {
        for (double decay : decays) {
            TrainConfig cfg = short_cfg;
            cfg.learning_rate = lr;
            cfg.decay = decay;
            GridRow row{lr, decay, std::numeric_limits<double>::infinity(), false};
            Model m = build_default_model(model_seed);
            m.norm = norm;
            try {
                row.val_loss = train(std::move(m), train_set, val_set, cfg).best_val_loss;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::DivergedLoss) throw;
                row.diverged = true;
            }
            if (!row.diverged && (!found || row.val_loss < res.table[res.best_index].val_loss)) {
                res.best_index = res.table.size();
                res.best = cfg;
                found = true;
            }
            res.table.push_back(row);
        }
    }
    if (!found) fail(ErrorCode::DivergedLoss, "every grid configuration diverged");
    return res;
}

}  // namespace bmisil::nn
