#pragma once

#include "bmisil/augment.hpp"
#include "bmisil/dataset.hpp"
#include "bmisil/model.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace bmisil::nn {

struct TrainConfig {
    double learning_rate = 0.02;
    double decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 16;
    int max_epochs = 2000;
    int patience = 50;
    /// Minimum decrease in validation loss that counts as an improvement.
    double min_delta = 1e-6;
    augment::AugmentParams augment;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Adam moment buffers, one pair per parameter tensor.
struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::uint64_t t = 0;
};

/// learning_rate / (1 + decay * (t - 1)) for optimizer step t >= 1.
double effective_lr(const TrainConfig& cfg, std::uint64_t t);

/// One Adam update with bias correction and time-based decay.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state,
               const TrainConfig& cfg);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double effective_lr = 0.0;
};

using History = std::vector<EpochRecord>;

/// Patience-based early stopping on validation loss.
class EarlyStopping {
public:
    EarlyStopping(int patience, double min_delta) : patience_(patience), min_delta_(min_delta) {}

    /// Records one epoch's loss; returns true when it is a new best.
    bool update(int epoch, double val_loss);
    bool should_stop() const noexcept { return since_best_ >= patience_; }
    int best_epoch() const noexcept { return best_epoch_; }
    double best_loss() const noexcept { return best_; }

private:
    int patience_;
    double min_delta_;
    double best_ = std::numeric_limits<double>::infinity();
    int best_epoch_ = 0;
    int since_best_ = 0;
};

struct TrainResult {
    Model model;
    History history;
    int best_epoch = 0;
    double best_val_loss = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Minibatch Adam on MSE with fresh augmentation every epoch; restores the
/// weights of the best validation epoch. Throws DivergedLoss on non-finite
/// loss or parameters, or once an output logit saturates the sigmoid (|z| >= 709).
TrainResult train(Model model, const std::vector<dataset::LabeledSample>& train_set,
                  const std::vector<dataset::LabeledSample>& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Binary 64x64 images -> [N, 1, 64, 64] with foreground 1.0.
Tensor images_to_tensor(std::span<const raster::RasterImage> images);

/// Normalised predictions in (0, 1).
std::vector<double> predict(const Model& model, std::span<const raster::RasterImage> images);

/// Un-augmented MSE against normalised targets.
double evaluate_mse(const Model& model, const std::vector<dataset::LabeledSample>& samples);

struct GridRow {
    double learning_rate = 0.0;
    double decay = 0.0;
    /// Best validation loss, +inf when training diverged.
    double val_loss = 0.0;
    bool diverged = false;
};

struct GridSearchResult {
    TrainConfig best;
    std::size_t best_index = 0;
    std::vector<GridRow> table;
};

/// Trains a fresh default model (seeded by model_seed) per (lr, decay) pair
/// in row-major grid order; ties go to the earliest row.
GridSearchResult grid_search(const std::vector<double>& learning_rates, const std::vector<double>& decays,
                             const std::vector<dataset::LabeledSample>& train_set,
                             const std::vector<dataset::LabeledSample>& val_set, const TrainConfig& short_cfg,
                             std::uint64_t model_seed, const dataset::NormMeta& norm);

}  // namespace bmisil::nn
