#include "valex/eval.hpp"

#include <fstream>

#include "valex/error.hpp"

namespace valex {

namespace {

std::vector<PredictionRecord> predict_impl(const Checkpoint& checkpoint,
                                           const std::vector<std::string>& texts,
                                           const std::vector<std::string>* golds, ClassMode task,
                                           const PredictOptions& options) {
    if (golds && golds->size() != texts.size()) {
        throw ValidationError("texts and gold labels differ in length");
    }
    const bool regression = checkpoint.objective == Objective::mse;
    const std::size_t want = task == ClassMode::binary ? 2 : 3;
    if (!regression && checkpoint.labels.size() != want) {
        throw ValidationError("classification checkpoint has " + std::to_string(checkpoint.labels.size()) +
                              " labels but the task needs " + std::to_string(want));
    }

    auto backend = checkpoint.instantiate();
    backend->set_max_tokens(options.max_tokens);
    const std::string model_id = checkpoint.content_id();

    std::vector<PredictionRecord> records;
    records.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        PredictionRecord r;
        r.text = texts[i];
        if (golds) r.gold = (*golds)[i];
        r.model_id = model_id;
        if (regression) {
            Scalar score = predict_valence(*backend, texts[i]);
            r.scores = {score};
            r.pred = to_string(class_of(score, task));
        } else {
            Vector logits = backend->forward(texts[i], RunMode::eval);
            r.scores.assign(logits.data(), logits.data() + logits.size());
            Eigen::Index best = 0;
            logits.maxCoeff(&best);
            r.pred = checkpoint.labels[static_cast<std::size_t>(best)];
        }
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace

std::vector<PredictionRecord> predict_zero_shot(const Checkpoint& checkpoint,
                                                const std::vector<std::string>& texts, ClassMode task,
                                                const PredictOptions& options) {
    return predict_impl(checkpoint, texts, nullptr, task, options);
}

std::vector<PredictionRecord> predict_zero_shot(const Checkpoint& checkpoint,
                                                const std::vector<std::string>& texts,
                                                const std::vector<std::string>& golds, ClassMode task,
                                                const PredictOptions& options) {
    return predict_impl(checkpoint, texts, &golds, task, options);
}

Scalar weighted_macro_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
    if (gold.empty()) throw ValidationError("empty label sequences");
    if (gold.size() != pred.size()) {
        throw ValidationError("gold has " + std::to_string(gold.size()) + " labels, predictions " +
                              std::to_string(pred.size()));
    }
    struct Counts {
        std::size_t tp = 0, fp = 0, fn = 0, support = 0;
    };
    std::map<std::string, Counts> classes;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        classes[gold[i]].support += 1;
        if (gold[i] == pred[i]) {
            classes[gold[i]].tp += 1;
        } else {
            classes[gold[i]].fn += 1;
            classes[pred[i]].fp += 1;
        }
    }
    Scalar weighted = 0;
    const Scalar n = static_cast<Scalar>(gold.size());
    for (const auto& [label, c] : classes) {
        if (c.support == 0) continue;  // predicted-only class carries no weight
        Scalar precision = c.tp + c.fp == 0 ? 0.0 : static_cast<Scalar>(c.tp) / static_cast<Scalar>(c.tp + c.fp);
        Scalar recall = c.tp + c.fn == 0 ? 0.0 : static_cast<Scalar>(c.tp) / static_cast<Scalar>(c.tp + c.fn);
        Scalar f1 = precision + recall == 0 ? 0.0 : 2 * precision * recall / (precision + recall);
        weighted += static_cast<Scalar>(c.support) / n * f1;
    }
    return weighted;
}

void GroupSpec::validate() const {
    std::map<std::string, std::string> owner;
    for (const auto& g : groups) {
        for (const auto& lang : g.languages) {
            auto [it, inserted] = owner.emplace(lang, g.name);
            if (!inserted) {
                throw ValidationError("language '" + lang + "' appears in groups '" + it->second +
                                      "' and '" + g.name + "'");
            }
        }
        for (const auto& lang : g.exclusions) {
            if (!g.languages.count(lang)) {
                throw ValidationError("group '" + g.name + "' excludes non-member '" + lang + "'");
            }
        }
    }
}

nlohmann::json GroupSpec::to_json() const {
    nlohmann::json j;
    j["groups"] = nlohmann::json::array();
    for (const auto& g : groups) {
        nlohmann::json gj;
        gj["name"] = g.name;
        gj["languages"] = g.languages;
        gj["exclusions"] = g.exclusions;
        j["groups"].push_back(std::move(gj));
    }
    j["ungrouped"] = ungrouped;
    return j;
}

GroupSpec GroupSpec::from_json(const nlohmann::json& j) {
    GroupSpec spec;
    for (const auto& gj : j.at("groups")) {
        Group g;
        g.name = gj.at("name").get<std::string>();
        g.languages = gj.at("languages").get<std::set<std::string>>();
        if (gj.contains("exclusions")) g.exclusions = gj.at("exclusions").get<std::set<std::string>>();
        spec.groups.push_back(std::move(g));
    }
    if (j.contains("ungrouped")) spec.ungrouped = j.at("ungrouped").get<std::set<std::string>>();
    spec.validate();
    return spec;
}

GroupSpec GroupSpec::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed group spec '" + path.string() + "': " + e.what());
    }
    return from_json(j);
}

GroupSpec GroupSpec::single_group(const std::string& name, const std::set<std::string>& languages) {
    GroupSpec spec;
    spec.groups.push_back(Group{name, languages, {}});
    return spec;
}

EvalReport aggregate_report(const std::map<std::string, Scalar>& per_language, const GroupSpec& groups) {
    groups.validate();
    if (per_language.empty()) throw ValidationError("no per-language scores");

    for (const auto& [lang, score] : per_language) {
        bool known = groups.ungrouped.count(lang) > 0;
        for (const auto& g : groups.groups) known = known || g.languages.count(lang) > 0;
        if (!known) {
            throw ValidationError("language '" + lang + "' is neither grouped nor declared ungrouped");
        }
    }

    EvalReport report;
    report.per_language = per_language;
    Scalar mean_sum = 0;
    for (const auto& g : groups.groups) {
        Scalar sum = 0;
        std::size_t count = 0;
        for (const auto& lang : g.languages) {
            if (g.exclusions.count(lang)) continue;
            auto it = per_language.find(lang);
            if (it == per_language.end()) continue;
            sum += it->second;
            ++count;
        }
        if (count == 0) continue;
        Scalar mean = sum / static_cast<Scalar>(count);
        report.group_means.emplace_back(g.name, mean);
        mean_sum += mean;
    }
    if (report.group_means.empty()) throw ValidationError("no group received any score");
    report.average = mean_sum / static_cast<Scalar>(report.group_means.size());
    return report;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["per_language"] = per_language;
    j["group_means"] = nlohmann::json::array();
    for (const auto& [name, mean] : group_means) {
        j["group_means"].push_back({{"group", name}, {"mean", mean}});
    }
    j["average"] = average;
    if (!seed_breakdown.empty()) j["seed_breakdown"] = seed_breakdown;
    return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
        throw ValidationError("unsupported report schema version " + j.at("schema_version").dump());
    }
    EvalReport report;
    report.per_language = j.at("per_language").get<std::map<std::string, Scalar>>();
    for (const auto& gj : j.at("group_means")) {
        report.group_means.emplace_back(gj.at("group").get<std::string>(), gj.at("mean").get<Scalar>());
    }
    report.average = j.at("average").get<Scalar>();
    if (j.contains("seed_breakdown")) {
        report.seed_breakdown = j.at("seed_breakdown").get<std::map<std::string, std::vector<Scalar>>>();
    }
    return report;
}

void EvalReport::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << to_json().dump(2) << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

EvalReport EvalReport::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed report '" + path.string() + "': " + e.what());
    }
    return from_json(j);
}

void save_predictions(const std::vector<PredictionRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    for (const auto& r : records) {
        nlohmann::json j;
        j["text"] = r.text;
        j["gold"] = r.gold ? nlohmann::json(*r.gold) : nlohmann::json();
        j["pred"] = r.pred;
        j["score"] = r.scores.size() == 1 ? nlohmann::json(r.scores[0]) : nlohmann::json(r.scores);
        j["model"] = r.model_id;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<PredictionRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw IoError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
        }
        PredictionRecord r;
        r.text = j.at("text").get<std::string>();
        if (j.contains("gold") && !j.at("gold").is_null()) r.gold = j.at("gold").get<std::string>();
        r.pred = j.at("pred").get<std::string>();
        if (j.contains("score")) {
            if (j.at("score").is_array()) {
                r.scores = j.at("score").get<std::vector<Scalar>>();
            } else {
                r.scores = {j.at("score").get<Scalar>()};
            }
        }
        r.model_id = j.value("model", "");
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace valex
