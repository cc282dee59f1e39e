#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "valex/dataset.hpp"
#include "valex/types.hpp"

namespace valex {

// English prompt template with [INPUT] and [LABELS] exactly once and
// [OPTIONS] at most once.
struct PromptTemplate {
    int id = 0;  // 1..6
    std::string text;

    static PromptTemplate make(int id, std::string text);
    // The six built-in templates used for label scoring.
    static std::vector<PromptTemplate> builtin_six();
    // Loads `template_1.txt` .. `template_6.txt` from a directory; a file's
    // trailing newline is not part of the template.
    static std::vector<PromptTemplate> load_dir(const std::filesystem::path& dir);
};

// Literal placeholder substitution; [OPTIONS] becomes a comma-separated label
// list in canonical (lexicographic) order.
std::string render(const PromptTemplate& tpl, const std::string& input,
                   const std::vector<std::string>& option_labels, const std::string& label);

struct RenderedPrompt {
    std::string context;     // everything before the label slot
    std::string completion;  // the label verbalizer
    std::string full() const { return context + completion; }
};

RenderedPrompt render_split(const PromptTemplate& tpl, const std::string& input,
                            const std::vector<std::string>& option_labels, const std::string& label);

// Abstract completion scorer: per-token log-probabilities of `completion`
// given `context`. Implementations must be safe to call from several threads.
class CompletionScorer {
public:
    virtual ~CompletionScorer() = default;
    virtual std::vector<Scalar> score(const std::string& context, const std::string& completion) = 0;
};

struct PromptEvalConfig {
    int parallelism = 1;
    std::size_t max_retries = 3;
    double retry_backoff_seconds = 0.25;  // doubles after each failed attempt

    void validate() const;
};

struct LabelScore {
    std::string label;
    Scalar mean_logprob = 0.0;
};

struct ClassifyResult {
    std::string label;
    std::vector<LabelScore> scores;  // canonical label order
    bool tie = false;
};

// Scores every label as a completion of the rendered context and picks the
// highest mean per-token log-probability. "Normalized log-likelihood" means
// the label tokens only, averaged per token; ties go to the first label in
// canonical order.
ClassifyResult classify(CompletionScorer& scorer, const PromptTemplate& tpl, const std::string& text,
                        const std::vector<std::string>& labels);

struct TemplateOutcome {
    int template_id = 0;
    bool ok = false;
    std::string error;
    Scalar f1 = 0.0;
    std::size_t ties = 0;
};

struct PromptEvalReport {
    std::vector<TemplateOutcome> per_template;
    std::optional<Scalar> average_f1;  // withheld unless every template succeeded

    bool complete() const { return average_f1.has_value(); }
    nlohmann::json to_json() const;
};

// Runs classify for all six templates over the dataset and averages the
// per-template weighted macro-F1. A failed template marks the report
// incomplete; there is no silent averaging over fewer templates.
PromptEvalReport evaluate_prompts(CompletionScorer& scorer, const std::vector<PromptTemplate>& templates,
                                  const std::vector<LabeledSentence>& data,
                                  const std::vector<std::string>& labels,
                                  const PromptEvalConfig& config = {});

// Table-driven scorer for tests and offline runs. Entries keyed by
// (context, completion); per-completion defaults match any context.
class MockScorer : public CompletionScorer {
public:
    MockScorer() = default;
    MockScorer(MockScorer&& other) noexcept
        : table_(std::move(other.table_)),
          defaults_(std::move(other.defaults_)),
          calls_(other.calls_.load()) {}

    void set(const std::string& context, const std::string& completion, std::vector<Scalar> logprobs);
    void set_default(const std::string& completion, std::vector<Scalar> logprobs);
    static MockScorer from_json_file(const std::filesystem::path& path);

    std::vector<Scalar> score(const std::string& context, const std::string& completion) override;
    std::size_t calls() const { return calls_.load(); }

private:
    std::map<std::pair<std::string, std::string>, std::vector<Scalar>> table_;
    std::map<std::string, std::vector<Scalar>> defaults_;
    std::atomic<std::size_t> calls_{0};
};

// Remote scorer speaking the wire contract
//   request  {"context": string, "completion": string}
//   response {"token_logprobs": [number, ...]}
// with bounded exponential-backoff retries and a response cache keyed by
// (context, completion), so repeated runs do not re-issue requests.
class HttpCompletionScorer : public CompletionScorer {
public:
    HttpCompletionScorer(std::string endpoint, std::size_t max_retries = 3,
                         double retry_backoff_seconds = 0.25);

    std::vector<Scalar> score(const std::string& context, const std::string& completion) override;
    std::size_t requests_sent() const { return requests_.load(); }

private:
    std::string host_;
    int port_ = 80;
    std::string path_ = "/";
    std::size_t max_retries_;
    double backoff_seconds_;
    std::mutex cache_mutex_;
    std::unordered_map<std::string, std::vector<Scalar>> cache_;
    std::atomic<std::size_t> requests_{0};
};

}  // namespace valex
