#include "spliceloc/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <random>

#include "json.hpp"
#include "spliceloc/error.hpp"
#include "spliceloc/metrics/metrics.hpp"

namespace spliceloc::train {
namespace {

std::uint64_t splitmix(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

void predictions(const model::ModelParameters& params, std::span<const Example> set, std::vector<std::uint8_t>& y,
                 std::vector<std::uint8_t>& y_hat) {
    for (const auto& ex : set) {
        const auto pred = model::predict_labels(model::forward(ex.input, params));
        y.insert(y.end(), ex.labels.begin(), ex.labels.end());
        y_hat.insert(y_hat.end(), pred.y.begin(), pred.y.end());
    }
}

std::string epoch_file(std::size_t epoch) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "epoch_%04zu.weights", epoch);
    return buf;
}

}  // namespace

std::vector<Example> to_examples(std::span<const features::FeatureWindow> windows, const model::ModelConfig& config) {
    std::vector<Example> out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back({model::to_input(w, config), w.labels});
    return out;
}

void TrainConfig::validate() const {
    auto need = [](bool ok, const char* what) {
        if (!ok) throw Error(Errc::invalid_argument, what);
    };
    need(learning_rate > 0.0, "learning rate must be positive");
    need(patience >= 1, "patience must be at least 1");
    need(batch_size >= 1, "batch size must be at least 1");
    need(epoch_cap >= 1, "epoch cap must be at least 1");
    need(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
    need(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0, "Adam betas must lie in [0, 1)");
    need(adam_epsilon > 0.0, "Adam epsilon must be positive");
}

double loss(const model::Matrix& probs, const std::vector<std::uint8_t>& labels) {
    return model::cross_entropy(probs, labels);
}

std::uint64_t window_seed(std::uint64_t batch_seed, std::size_t i) noexcept {
    return splitmix(batch_seed ^ splitmix(static_cast<std::uint64_t>(i)));
}

BatchGradients gradients(std::span<const Example> batch, const model::ModelParameters& params, std::uint64_t seed,
                         model::Mode mode) {
    if (batch.empty()) throw Error(Errc::empty_dataset, "empty batch");
    BatchGradients out{params.set.zeros_like(), 0.0};
    const double weight = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        out.loss += weight * model::accumulate_gradients(batch[i].input, batch[i].labels, params, mode,
                                                         window_seed(seed, i), weight, out.grads);
    }
    return out;
}

double batch_loss(std::span<const Example> batch, const model::ModelParameters& params, std::uint64_t seed,
                  model::Mode mode) {
    if (batch.empty()) throw Error(Errc::empty_dataset, "empty batch");
    double sum = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i)
        sum += loss(model::forward(batch[i].input, params, mode, window_seed(seed, i)), batch[i].labels);
    return sum / static_cast<double>(batch.size());
}

AdamState AdamState::for_parameters(const model::ModelParameters& params) {
    return {params.set.zeros_like(), params.set.zeros_like(), 0};
}

void adam_step(model::ModelParameters& params, AdamState& state, const model::ParameterSet& grads,
               const TrainConfig& c) {
    if (!grads.same_layout(params.set) || !state.m.same_layout(params.set) || !state.v.same_layout(params.set))
        throw Error(Errc::shape_mismatch, "optimizer state does not match the parameters");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double corr1 = 1.0 - std::pow(c.adam_beta1, t);
    const double corr2 = 1.0 - std::pow(c.adam_beta2, t);
    for (std::size_t k = 0; k < params.set.count(); ++k) {
        auto& w = params.set[k].data;
        auto& m = state.m[k].data;
        auto& v = state.v[k].data;
        const auto& g = grads[k].data;
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = c.adam_beta1 * m[i] + (1.0 - c.adam_beta1) * g[i];
            v[i] = c.adam_beta2 * v[i] + (1.0 - c.adam_beta2) * g[i] * g[i];
            w[i] -= c.learning_rate * (m[i] / corr1) / (std::sqrt(v[i] / corr2) + c.adam_epsilon);
        }
    }
}

double validation_balanced_accuracy(const model::ModelParameters& params, std::span<const Example> val) {
    std::vector<std::uint8_t> y, y_hat;
    predictions(params, val, y, y_hat);
    return metrics::balanced_accuracy(y, y_hat).value;
}

double frame_accuracy(const model::ModelParameters& params, std::span<const Example> set) {
    std::vector<std::uint8_t> y, y_hat;
    predictions(params, set, y, y_hat);
    if (y.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hits += y[i] == y_hat[i];
    return 100.0 * static_cast<double>(hits) / static_cast<double>(y.size());
}

std::string EpochRecord::to_json() const {
    return nlohmann::json{{"epoch", epoch},
                          {"train_loss", train_loss},
                          {"val_balanced_accuracy", val_balanced_accuracy},
                          {"improved", improved}}
        .dump();
}

TrainResult train(model::ModelParameters params, std::span<const Example> train_set,
                  std::span<const Example> val_set, const TrainConfig& config, Evaluator evaluator,
                  EpochCallback on_epoch) {
    config.validate();
    if (train_set.empty()) throw Error(Errc::empty_dataset, "training set is empty");
    if (!evaluator && val_set.empty()) throw Error(Errc::empty_dataset, "validation set is empty");
    if (!evaluator) {
        evaluator = [val_set](const model::ModelParameters& p, std::size_t) {
            return validation_balanced_accuracy(p, val_set);
        };
    }
    params.config.dropout = config.dropout;
    params.audit();

    const bool checkpoints = !config.checkpoint_dir.empty();
    if (checkpoints) std::filesystem::create_directories(config.checkpoint_dir);
    const std::filesystem::path dir(config.checkpoint_dir);

    AdamState state = AdamState::for_parameters(params);
    std::mt19937_64 order_rng(config.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    result.best = params;
    bool have_best = false;
    std::size_t since_best = 0;
    std::vector<Example> batch;

    for (std::size_t epoch = 1; epoch <= config.epoch_cap; ++epoch) {
        if (config.shuffle) std::shuffle(order.begin(), order.end(), order_rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);
            const auto g = gradients(batch, params, splitmix(config.seed ^ splitmix(state.step + 1)));
            loss_sum += g.loss * static_cast<double>(batch.size());
            adam_step(params, state, g.grads, config);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        rec.val_balanced_accuracy = evaluator(params, epoch);
        rec.improved = !have_best || rec.val_balanced_accuracy > result.best_val_balanced_accuracy;
        if (rec.improved) {
            have_best = true;
            since_best = 0;
            result.best = params;
            result.best_epoch = epoch;
            result.best_val_balanced_accuracy = rec.val_balanced_accuracy;
            if (checkpoints) params.save((dir / "best.weights").string());
        } else {
            ++since_best;
        }
        if (checkpoints && config.checkpoint_every && epoch % config.checkpoint_every == 0)
            params.save((dir / epoch_file(epoch)).string());
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);
        if (config.target_score && rec.val_balanced_accuracy >= *config.target_score) break;
        if (since_best >= config.patience) {
            result.stopped_by_patience = true;
            break;
        }
    }
    return result;
}

}  // namespace spliceloc::train
