#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "valex/types.hpp"

namespace valex {

enum class Objective { mse, cross_entropy };
enum class RunMode { train, eval };

std::string to_string(Objective o);
Objective objective_from_string(const std::string& s);

// One supervised example. For mse the target is a real score; for
// cross_entropy it must hold an integral class index in [0, K).
struct TrainExample {
    std::string text;
    Scalar target = 0.0;
};

struct TrainConfig {
    Scalar learning_rate = 1e-2;  // reference-encoder default; transformer adapters want ~2e-5
    int max_epochs = 100;
    int patience = 5;
    Scalar dropout = 0.2;
    int max_tokens = 10;
    int batch_size = 32;
    std::uint64_t seed = 0;

    // Throws ValidationError if any field is out of range.
    void validate() const;

    static TrainConfig lexicon_defaults();   // word-level jobs: max 10 tokens, 100 epochs
    static TrainConfig sentence_defaults();  // sentence-level jobs: max 512 tokens, 20 epochs
};

// Trainable text-scoring contract: tokenize, embed, average-pool, linear head.
// Implementations must be deterministic given their seed; forward in eval
// mode never touches RNG state.
class EncoderBackend {
public:
    virtual ~EncoderBackend() = default;

    // Head width: 1 for regression, K for K-way classification. Reconfiguring
    // reinitializes the head only.
    virtual int output_dim() const = 0;
    virtual void configure_head(int k) = 0;

    virtual std::vector<int> tokenize(const std::string& text) const = 0;

    // head(mean over token embeddings). Throws ValidationError when the text
    // tokenizes to nothing.
    virtual Vector forward(const std::string& text, RunMode mode) = 0;

    // One gradient update over the batch; returns the pre-update batch loss.
    // Throws DivergenceError on a non-finite loss.
    virtual Scalar train_step(std::span<const TrainExample> batch, Objective objective,
                              const TrainConfig& config) = 0;

    // Dropout-free loss with no update; the evaluation half of early stopping.
    virtual Scalar batch_loss(std::span<const TrainExample> batch, Objective objective) const = 0;

    // Called once before an epoch loop; grows vocabulary (warm start keeps
    // existing rows) and adopts token-length/dropout settings.
    virtual void prepare(std::span<const TrainExample> train, const TrainConfig& config) = 0;

    virtual void set_max_tokens(int n) = 0;

    // Flat parameter snapshot, used to restore the best validation epoch.
    virtual std::vector<Scalar> parameters() const = 0;
    virtual void set_parameters(const std::vector<Scalar>& flat) = 0;

    // Full serializable state for checkpoints.
    virtual nlohmann::json state() const = 0;
    virtual void load_state(const nlohmann::json& j) = 0;
    virtual std::string kind() const = 0;

    virtual std::unique_ptr<EncoderBackend> clone() const = 0;
};

struct EpochStats {
    Scalar train_loss = 0.0;
    Scalar val_loss = 0.0;
};

struct TrainingCurve {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;  // 0-based index into epochs
    Scalar best_val_loss = 0.0;
    bool stopped_early = false;
};

// Epoch loop with early stopping: stops once validation loss has not improved
// for `patience` consecutive epochs, then restores the best epoch's
// parameters. Train order is reshuffled every epoch from the config seed.
TrainingCurve fit(EncoderBackend& backend, std::span<const TrainExample> train,
                  std::span<const TrainExample> val, Objective objective, const TrainConfig& config);

// Eval-mode regression score clamped to the valence scale. Inference-side
// only; training losses see the raw head output.
Scalar predict_valence(EncoderBackend& backend, const std::string& text);

}  // namespace valex
