#include "valex/encoder.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

#include "valex/error.hpp"
#include "valex/rng.hpp"

namespace valex {

std::string to_string(Objective o) {
    return o == Objective::mse ? "mse" : "cross_entropy";
}

Objective objective_from_string(const std::string& s) {
    if (s == "mse") return Objective::mse;
    if (s == "cross_entropy") return Objective::cross_entropy;
    throw ValidationError("unknown objective '" + s + "'");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0)) throw ValidationError("learning rate must be positive");
    if (max_epochs < 1) throw ValidationError("max epochs must be positive");
    if (patience < 1) throw ValidationError("patience must be positive");
    if (patience > max_epochs) throw ValidationError("patience exceeds max epochs");
    if (!(dropout >= 0 && dropout < 1)) throw ValidationError("dropout must lie in [0,1)");
    if (max_tokens < 1) throw ValidationError("max tokens must be positive");
    if (batch_size < 1) throw ValidationError("batch size must be positive");
}

TrainConfig TrainConfig::lexicon_defaults() {
    TrainConfig c;
    c.max_epochs = 100;
    c.max_tokens = 10;
    return c;
}

TrainConfig TrainConfig::sentence_defaults() {
    TrainConfig c;
    c.max_epochs = 20;
    c.max_tokens = 512;
    return c;
}

TrainingCurve fit(EncoderBackend& backend, std::span<const TrainExample> train,
                  std::span<const TrainExample> val, Objective objective, const TrainConfig& config) {
    config.validate();
    if (train.empty()) throw ValidationError("empty training set");
    if (val.empty()) throw ValidationError("empty validation set");
    {
        std::unordered_set<std::string> train_texts;
        for (const auto& e : train) train_texts.insert(e.text);
        for (const auto& e : val) {
            if (train_texts.count(e.text)) {
                throw ValidationError("train and validation sets overlap on '" + e.text + "'");
            }
        }
    }

    backend.prepare(train, config);

    Rng shuffle_rng(config.seed);
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainingCurve curve;
    Scalar best = std::numeric_limits<Scalar>::infinity();
    std::vector<Scalar> best_params;
    int since_best = 0;

    std::vector<TrainExample> batch;
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        Scalar loss_sum = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            std::size_t end = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
            Scalar batch_loss = backend.train_step(batch, objective, config);
            loss_sum += batch_loss * static_cast<Scalar>(end - start);
        }
        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<Scalar>(train.size());
        stats.val_loss = backend.batch_loss(val, objective);
        curve.epochs.push_back(stats);

        if (stats.val_loss < best) {
            best = stats.val_loss;
            curve.best_epoch = epoch;
            best_params = backend.parameters();
            since_best = 0;
        } else {
            ++since_best;
            if (since_best >= config.patience) {
                curve.stopped_early = true;
                break;
            }
        }
    }
    curve.best_val_loss = best;
    if (!best_params.empty()) backend.set_parameters(best_params);
    return curve;
}

Scalar predict_valence(EncoderBackend& backend, const std::string& text) {
    if (backend.output_dim() != 1) {
        throw ValidationError("valence prediction needs a regression head, got " +
                              std::to_string(backend.output_dim()) + " outputs");
    }
    return clamp_valence(backend.forward(text, RunMode::eval)(0));
}

}  // namespace valex
