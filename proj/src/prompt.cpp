#include "valex/prompt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "valex/error.hpp"
#include "valex/eval.hpp"

namespace valex {

namespace {

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

std::string replace_all(std::string text, const std::string& needle, const std::string& value) {
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + value.size())) {
        text.replace(pos, needle.size(), value);
    }
    return text;
}

std::vector<std::string> canonical_labels(std::vector<std::string> labels) {
    std::sort(labels.begin(), labels.end());
    return labels;
}

std::string join_comma(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += items[i];
    }
    return out;
}

// Bounded-parallel indexed map with order-stable results. Worker exceptions
// are rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, int parallelism, Fn&& fn) {
    if (parallelism <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error) return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    int workers = std::min<std::size_t>(static_cast<std::size_t>(parallelism), n);
    threads.reserve(workers);
    for (int t = 0; t < workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

PromptTemplate PromptTemplate::make(int id, std::string text) {
    if (count_occurrences(text, "[INPUT]") != 1) {
        throw ValidationError("template " + std::to_string(id) + " must contain [INPUT] exactly once");
    }
    if (count_occurrences(text, "[LABELS]") != 1) {
        throw ValidationError("template " + std::to_string(id) + " must contain [LABELS] exactly once");
    }
    if (count_occurrences(text, "[OPTIONS]") > 1) {
        throw ValidationError("template " + std::to_string(id) + " may contain [OPTIONS] at most once");
    }
    return PromptTemplate{id, std::move(text)};
}

std::vector<PromptTemplate> PromptTemplate::builtin_six() {
    return {
        make(1, "[INPUT]\nWhat would be the sentiment of the text above? [LABELS]"),
        make(2, "What is the sentiment of this text?\nText: [INPUT]\nSentiment: [LABELS]"),
        make(3, "Text: [INPUT]\nPlease classify the sentiment of above text: [LABELS]"),
        make(4, "[INPUT]\nWhat would be the sentiment of the text above? [OPTIONS]? [LABELS]"),
        make(5, "What is the sentiment of this text?\nText: [INPUT]\nAnswer with [OPTIONS]: [LABELS]"),
        make(6, "Text: [INPUT]\nPlease classify the sentiment of above text. Answer with [OPTIONS]: [LABELS]"),
    };
}

std::vector<PromptTemplate> PromptTemplate::load_dir(const std::filesystem::path& dir) {
    std::vector<PromptTemplate> templates;
    for (int id = 1; id <= 6; ++id) {
        auto path = dir / ("template_" + std::to_string(id) + ".txt");
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open '" + path.string() + "'");
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (!text.empty() && text.back() == '\n') text.pop_back();
        templates.push_back(PromptTemplate::make(id, std::move(text)));
    }
    return templates;
}

RenderedPrompt render_split(const PromptTemplate& tpl, const std::string& input,
                            const std::vector<std::string>& option_labels, const std::string& label) {
    if (label.empty()) throw ValidationError("empty label verbalizer");
    // Split at the label slot of the raw template first, so input text that
    // happens to contain placeholder-looking strings stays literal.
    auto slot = tpl.text.find("[LABELS]");
    if (slot == std::string::npos) {
        throw ValidationError("template " + std::to_string(tpl.id) + " lost its [LABELS] placeholder");
    }
    auto substitute = [&](std::string text) {
        text = replace_all(std::move(text), "[INPUT]", input);
        if (text.find("[OPTIONS]") != std::string::npos) {
            if (option_labels.empty()) {
                throw ValidationError("template " + std::to_string(tpl.id) +
                                      " has [OPTIONS] but no options were supplied");
            }
            text = replace_all(std::move(text), "[OPTIONS]", join_comma(canonical_labels(option_labels)));
        }
        return text;
    };
    RenderedPrompt rendered;
    rendered.context = substitute(tpl.text.substr(0, slot));
    rendered.completion = label + substitute(tpl.text.substr(slot + std::string("[LABELS]").size()));
    return rendered;
}

std::string render(const PromptTemplate& tpl, const std::string& input,
                   const std::vector<std::string>& option_labels, const std::string& label) {
    return render_split(tpl, input, option_labels, label).full();
}

void PromptEvalConfig::validate() const {
    if (parallelism < 1) throw ValidationError("parallelism must be positive");
}

ClassifyResult classify(CompletionScorer& scorer, const PromptTemplate& tpl, const std::string& text,
                        const std::vector<std::string>& labels) {
    if (labels.size() < 2) throw ValidationError("classification needs at least 2 labels");
    auto ordered = canonical_labels(labels);
    if (std::adjacent_find(ordered.begin(), ordered.end()) != ordered.end()) {
        throw ValidationError("label verbalizers must be distinct");
    }

    ClassifyResult result;
    for (const auto& label : ordered) {
        auto rendered = render_split(tpl, text, labels, label);
        std::vector<Scalar> logprobs;
        try {
            logprobs = scorer.score(rendered.context, rendered.completion);
        } catch (const std::exception& e) {
            throw Error("template " + std::to_string(tpl.id) + ", label '" + label +
                        "': scorer failed: " + e.what());
        }
        if (logprobs.empty()) {
            throw Error("template " + std::to_string(tpl.id) + ", label '" + label +
                        "': scorer returned no tokens");
        }
        Scalar sum = 0;
        for (Scalar lp : logprobs) {
            if (!std::isfinite(lp)) {
                throw Error("template " + std::to_string(tpl.id) + ", label '" + label +
                            "': non-finite log-probability");
            }
            sum += lp;
        }
        result.scores.push_back(LabelScore{label, sum / static_cast<Scalar>(logprobs.size())});
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < result.scores.size(); ++i) {
        if (result.scores[i].mean_logprob > result.scores[best].mean_logprob) best = i;
    }
    for (std::size_t i = 0; i < result.scores.size(); ++i) {
        if (i != best && result.scores[i].mean_logprob == result.scores[best].mean_logprob) {
            result.tie = true;
        }
    }
    result.label = result.scores[best].label;
    return result;
}

PromptEvalReport evaluate_prompts(CompletionScorer& scorer, const std::vector<PromptTemplate>& templates,
                                  const std::vector<LabeledSentence>& data,
                                  const std::vector<std::string>& labels,
                                  const PromptEvalConfig& config) {
    config.validate();
    if (templates.size() != 6) {
        throw ValidationError("expected all 6 templates, got " + std::to_string(templates.size()));
    }
    if (data.empty()) throw ValidationError("empty evaluation data");

    PromptEvalReport report;
    Scalar f1_sum = 0;
    bool all_ok = true;
    for (const auto& tpl : templates) {
        TemplateOutcome outcome;
        outcome.template_id = tpl.id;
        try {
            std::vector<std::string> pred(data.size());
            std::vector<std::string> gold(data.size());
            std::atomic<std::size_t> ties{0};
            parallel_for(data.size(), config.parallelism, [&](std::size_t i) {
                auto r = classify(scorer, tpl, data[i].text, labels);
                pred[i] = r.label;
                gold[i] = data[i].label;
                if (r.tie) ties.fetch_add(1);
            });
            outcome.f1 = weighted_macro_f1(gold, pred);
            outcome.ties = ties.load();
            outcome.ok = true;
            f1_sum += outcome.f1;
        } catch (const std::exception& e) {
            outcome.ok = false;
            outcome.error = e.what();
            all_ok = false;
        }
        report.per_template.push_back(std::move(outcome));
    }
    if (all_ok) report.average_f1 = f1_sum / static_cast<Scalar>(templates.size());
    return report;
}

nlohmann::json PromptEvalReport::to_json() const {
    nlohmann::json j;
    j["per_template"] = nlohmann::json::array();
    for (const auto& t : per_template) {
        nlohmann::json tj;
        tj["template_id"] = t.template_id;
        tj["ok"] = t.ok;
        if (t.ok) {
            tj["f1"] = t.f1;
            tj["ties"] = t.ties;
        } else {
            tj["error"] = t.error;
        }
        j["per_template"].push_back(std::move(tj));
    }
    j["complete"] = complete();
    if (average_f1) {
        j["average_f1"] = *average_f1;
    } else {
        j["average_f1"] = nullptr;
    }
    return j;
}

void MockScorer::set(const std::string& context, const std::string& completion,
                     std::vector<Scalar> logprobs) {
    table_[{context, completion}] = std::move(logprobs);
}

void MockScorer::set_default(const std::string& completion, std::vector<Scalar> logprobs) {
    defaults_[completion] = std::move(logprobs);
}

MockScorer MockScorer::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed score table '" + path.string() + "': " + e.what());
    }
    MockScorer scorer;
    for (const auto& entry : j.at("defaults").items()) {
        scorer.set_default(entry.key(), entry.value().get<std::vector<Scalar>>());
    }
    if (j.contains("entries")) {
        for (const auto& entry : j.at("entries")) {
            scorer.set(entry.at("context").get<std::string>(), entry.at("completion").get<std::string>(),
                       entry.at("token_logprobs").get<std::vector<Scalar>>());
        }
    }
    return scorer;
}

std::vector<Scalar> MockScorer::score(const std::string& context, const std::string& completion) {
    calls_.fetch_add(1);
    if (auto it = table_.find({context, completion}); it != table_.end()) return it->second;
    if (auto it = defaults_.find(completion); it != defaults_.end()) return it->second;
    throw Error("mock scorer has no entry for completion '" + completion + "'");
}

HttpCompletionScorer::HttpCompletionScorer(std::string endpoint, std::size_t max_retries,
                                           double retry_backoff_seconds)
    : max_retries_(max_retries), backoff_seconds_(retry_backoff_seconds) {
    const std::string prefix = "http://";
    if (endpoint.rfind(prefix, 0) != 0) {
        throw ConfigError("scorer endpoint must start with http://, got '" + endpoint + "'");
    }
    std::string rest = endpoint.substr(prefix.size());
    auto slash = rest.find('/');
    std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : rest.substr(slash);
    auto colon = hostport.find(':');
    if (colon == std::string::npos) {
        host_ = hostport;
        port_ = 80;
    } else {
        host_ = hostport.substr(0, colon);
        port_ = std::stoi(hostport.substr(colon + 1));
    }
    if (host_.empty()) throw ConfigError("scorer endpoint has no host: '" + endpoint + "'");
}

std::vector<Scalar> HttpCompletionScorer::score(const std::string& context, const std::string& completion) {
    const std::string key = context + '\x1f' + completion;
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }

    nlohmann::json request;
    request["context"] = context;
    request["completion"] = completion;
    const std::string body = request.dump();

    std::string last_error;
    for (std::size_t attempt = 0; attempt <= max_retries_; ++attempt) {
        if (attempt > 0) {
            auto delay = backoff_seconds_ * std::pow(2.0, static_cast<double>(attempt - 1));
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        requests_.fetch_add(1);
        httplib::Client client(host_, port_);
        auto response = client.Post(path_, body, "application/json");
        if (!response) {
            last_error = "connection failed: " + httplib::to_string(response.error());
            continue;
        }
        if (response->status != 200) {
            last_error = "HTTP " + std::to_string(response->status);
            continue;
        }
        try {
            auto j = nlohmann::json::parse(response->body);
            auto logprobs = j.at("token_logprobs").get<std::vector<Scalar>>();
            std::lock_guard<std::mutex> lock(cache_mutex_);
            cache_.emplace(key, logprobs);
            return logprobs;
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("bad response body: ") + e.what();
        }
    }
    throw Error("scorer request failed after " + std::to_string(max_retries_ + 1) + " attempts: " +
                last_error);
}

}  // namespace valex
