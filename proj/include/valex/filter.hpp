#pragma once

#include <optional>
#include <string>
#include <vector>

#include "valex/encoder.hpp"
#include "valex/lexicon.hpp"

namespace valex {

struct FilterConfig {
    Scalar alpha = 2.5;       // accept when |predicted - original| < alpha, strictly
    std::size_t beta = 1000;  // stop once an iteration accepts fewer than this
    Scalar split_ratio = 0.8;
    int max_iterations = 50;  // hard cap; the loop must terminate even with alpha = 0+
    bool cold_start = false;  // reset weights before each retraining instead of warm start
    TrainConfig trainer = TrainConfig::lexicon_defaults();

    void validate() const;
};

// One translated lexeme moving through the filter.
struct FilterCandidate {
    LexiconEntry entry;
    Scalar original_valence = 0.0;           // the projected English score
    Scalar predicted_valence = 0.0;          // latest model prediction, clamped to [-5,5]
    std::optional<int> accepted_at_iteration;
};

enum class FilterTermination { below_beta, pool_empty, max_iterations };
std::string to_string(FilterTermination t);

struct FilterIterationStats {
    int iteration = 0;  // 1-based
    std::size_t accepted = 0;
    std::size_t pool_remaining = 0;
    Scalar validation_loss = 0.0;
};

struct FilterTrace {
    std::vector<FilterIterationStats> iterations;
    FilterTermination termination = FilterTermination::below_beta;

    // One JSON record per iteration plus a final termination record.
    std::string to_jsonl() const;
};

struct FilterResult {
    ValenceLexicon lexicon;  // base plus every accepted candidate
    FilterTrace trace;
    std::vector<FilterCandidate> candidates;  // all candidates with final predictions
};

// Iterative self-training filter: train a regressor on the English base,
// score the candidate pool, keep candidates whose score sits within alpha of
// their projected valence, fold them into the training data, and repeat until
// an iteration accepts fewer than beta, the pool drains, or the iteration cap
// hits. Retraining warm-starts from the previous weights unless cold_start.
FilterResult run_filter(const ValenceLexicon& base_en, const ValenceLexicon& candidates,
                        const FilterConfig& config, EncoderBackend& backend);

}  // namespace valex
