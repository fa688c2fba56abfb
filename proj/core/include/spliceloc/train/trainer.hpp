#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spliceloc/model/network.hpp"

namespace spliceloc::train {

struct Example {
    model::WindowInput input;
    std::vector<std::uint8_t> labels;
};

std::vector<Example> to_examples(std::span<const features::FeatureWindow> windows, const model::ModelConfig& config);

struct TrainConfig {
    double learning_rate = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t batch_size = 32;
    std::size_t patience = 20;
    std::size_t epoch_cap = 1000;
    double dropout = 0.2;
    std::uint64_t seed = 0;
    bool shuffle = true;
    // 0 disables periodic checkpoints; the best snapshot is still written
    // when a directory is set.
    std::size_t checkpoint_every = 0;
    std::string checkpoint_dir;
    // stop as soon as the validation score reaches this value
    std::optional<double> target_score;

    /// Throws InvalidArgument.
    void validate() const;
};

/// Mean cross-entropy over the rows, probabilities clamped at 1e-12.
/// Throws ShapeMismatch.
double loss(const model::Matrix& probs, const std::vector<std::uint8_t>& labels);

/// Dropout seed of window `i` in a batch whose seed is `batch_seed`.
std::uint64_t window_seed(std::uint64_t batch_seed, std::size_t i) noexcept;

struct BatchGradients {
    model::ParameterSet grads;
    double loss = 0.0;  // mean over the batch
};

/// Exact derivatives of the mean batch loss under the dropout masks implied
/// by `seed` (train mode) or without dropout (eval mode).
/// Throws EmptyDataset for an empty batch and NonFiniteLoss.
BatchGradients gradients(std::span<const Example> batch, const model::ModelParameters& params, std::uint64_t seed,
                         model::Mode mode = model::Mode::train);

/// Mean loss of the batch, computed by forward passes only; the quantity
/// `gradients` differentiates.
double batch_loss(std::span<const Example> batch, const model::ModelParameters& params, std::uint64_t seed,
                  model::Mode mode = model::Mode::train);

struct AdamState {
    model::ParameterSet m, v;
    std::uint64_t step = 0;

    static AdamState for_parameters(const model::ModelParameters& params);
};

/// One bias-corrected Adam update of every tensor. Throws ShapeMismatch.
void adam_step(model::ModelParameters& params, AdamState& state, const model::ParameterSet& grads,
               const TrainConfig& config);

/// Frame-level balanced accuracy (percent) of eval-mode predictions over
/// the concatenation of all windows.
double validation_balanced_accuracy(const model::ModelParameters& params, std::span<const Example> val);

/// Frame-level plain accuracy (percent), eval mode.
double frame_accuracy(const model::ModelParameters& params, std::span<const Example> set);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_balanced_accuracy = 0.0;
    bool improved = false;

    std::string to_json() const;
};

struct TrainResult {
    model::ModelParameters best;
    std::size_t best_epoch = 0;
    double best_val_balanced_accuracy = 0.0;
    std::vector<EpochRecord> history;
    bool stopped_by_patience = false;
};

/// Validation score of the parameters after `epoch`; replaces the default
/// balanced-accuracy evaluation (e.g. with a stub in tests).
using Evaluator = std::function<double(const model::ModelParameters&, std::size_t epoch)>;
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam until the validation score fails to exceed its best value
/// for `patience` consecutive epochs, or `epoch_cap` epochs. Returns the
/// snapshot of the best epoch. Throws EmptyDataset.
TrainResult train(model::ModelParameters initial, std::span<const Example> train_set,
                  std::span<const Example> val_set, const TrainConfig& config, Evaluator evaluator = {},
                  EpochCallback on_epoch = {});

}  // namespace spliceloc::train
