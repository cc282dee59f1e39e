#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "valex/checkpoint.hpp"
#include "valex/lexicon.hpp"

namespace valex {

struct PredictionRecord {
    std::string text;
    std::optional<std::string> gold;
    std::string pred;
    std::vector<Scalar> scores;  // [valence] for regression, logits for classification
    std::string model_id;
};

struct PredictOptions {
    int max_tokens = 512;  // sentence-level inference window
};

// Sentence-level zero-shot prediction. Regression checkpoints map the clamped
// score through the class boundaries (neutral on [-1,1) for three-way, 0 for
// binary); classification checkpoints take the argmax and must match the task
// arity.
std::vector<PredictionRecord> predict_zero_shot(const Checkpoint& checkpoint,
                                                const std::vector<std::string>& texts, ClassMode task,
                                                const PredictOptions& options = {});
std::vector<PredictionRecord> predict_zero_shot(const Checkpoint& checkpoint,
                                                const std::vector<std::string>& texts,
                                                const std::vector<std::string>& golds, ClassMode task,
                                                const PredictOptions& options = {});

// Support-weighted mean of per-class F1 scores; a class with zero precision
// and recall contributes F1 = 0.
Scalar weighted_macro_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred);

// Named language groups for report aggregation. A language belongs to at most
// one group; exclusions keep a member's score out of its group mean (the
// English-out-of-high-resource convention).
struct GroupSpec {
    struct Group {
        std::string name;
        std::set<std::string> languages;
        std::set<std::string> exclusions;
    };
    std::vector<Group> groups;
    std::set<std::string> ungrouped;  // scored but deliberately outside every group

    void validate() const;
    nlohmann::json to_json() const;
    static GroupSpec from_json(const nlohmann::json& j);
    static GroupSpec load(const std::filesystem::path& path);

    // Single group holding every given language.
    static GroupSpec single_group(const std::string& name, const std::set<std::string>& languages);
};

struct EvalReport {
    static constexpr int kSchemaVersion = 1;

    std::map<std::string, Scalar> per_language;
    std::vector<std::pair<std::string, Scalar>> group_means;  // spec order, empty groups dropped
    Scalar average = 0.0;                                     // unweighted mean of group means
    std::map<std::string, std::vector<Scalar>> seed_breakdown;

    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static EvalReport load(const std::filesystem::path& path);
};

EvalReport aggregate_report(const std::map<std::string, Scalar>& per_language, const GroupSpec& groups);

// Predictions JSONL: one object per line with text, gold, pred, score, model.
void save_predictions(const std::vector<PredictionRecord>& records, const std::filesystem::path& path);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

}  // namespace valex
