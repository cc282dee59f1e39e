#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "valex/checkpoint.hpp"
#include "valex/dataset.hpp"
#include "valex/encoder.hpp"
#include "valex/lexicon.hpp"

namespace valex {

enum class PretrainObjective { regression, classification_binary, classification_3way };
std::string to_string(PretrainObjective o);
PretrainObjective pretrain_objective_from_string(const std::string& s);

// Word-level pretraining over a valence lexicon. Classification jobs derive
// their labels from the valence scores; regression trains on the scores
// directly.
struct PretrainJob {
    ValenceLexicon lexicon;
    PretrainObjective objective = PretrainObjective::regression;
    TrainConfig config = TrainConfig::lexicon_defaults();
};

struct PretrainOutcome {
    Checkpoint checkpoint;
    TrainingCurve curve;
};

PretrainOutcome pretrain(const PretrainJob& job, EncoderBackend& backend);

// Sentence-level fine-tuning with an arbitrary label set; also covers the
// English sentence-data transfer baseline (it is just a fine-tuning run).
struct FinetuneJob {
    LabeledSentenceSet dataset;
    TrainConfig config = TrainConfig::sentence_defaults();
    std::optional<Checkpoint> base;  // warm start from a pretraining checkpoint
};

struct FinetuneOutcome {
    Checkpoint checkpoint;
    TrainingCurve curve;
};

FinetuneOutcome finetune(const FinetuneJob& job, EncoderBackend& backend);

// Argmax classification of each text under the backend's current head.
std::vector<std::string> classify_texts(EncoderBackend& backend, const std::vector<std::string>& texts,
                                        const std::vector<std::string>& labels);

using BackendFactory = std::function<std::unique_ptr<EncoderBackend>(std::uint64_t seed)>;

struct SeedRun {
    std::uint64_t seed = 0;
    Checkpoint checkpoint;
    Scalar test_metric = 0.0;  // weighted macro-F1 over the test split
};

struct SeedSweep {
    std::vector<SeedRun> runs;
    Scalar mean_metric = 0.0;
};

// Repeats the fine-tuning job once per seed and reports the arithmetic mean
// of the per-seed test metrics; per-seed values are retained.
SeedSweep run_seeds(const FinetuneJob& job, const std::vector<std::uint64_t>& seeds,
                    const BackendFactory& make_backend);

}  // namespace valex
