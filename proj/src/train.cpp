#include "valex/train.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "valex/error.hpp"
#include "valex/eval.hpp"

namespace valex {

std::string to_string(PretrainObjective o) {
    switch (o) {
        case PretrainObjective::regression: return "regression";
        case PretrainObjective::classification_binary: return "classification_binary";
        case PretrainObjective::classification_3way: return "classification_3way";
    }
    throw Error("unreachable pretrain objective");
}

PretrainObjective pretrain_objective_from_string(const std::string& s) {
    if (s == "regression") return PretrainObjective::regression;
    if (s == "classification_binary") return PretrainObjective::classification_binary;
    if (s == "classification_3way") return PretrainObjective::classification_3way;
    throw ValidationError("unknown pretraining objective '" + s + "'");
}

PretrainOutcome pretrain(const PretrainJob& job, EncoderBackend& backend) {
    if (job.lexicon.empty()) throw ValidationError("empty lexicon");
    job.config.validate();

    ValenceLexicon lexicon = job.lexicon;
    if (!lexicon.has_split()) lexicon.assign_split(0.8, job.config.seed);

    const bool regression = job.objective == PretrainObjective::regression;
    const ClassMode mode = job.objective == PretrainObjective::classification_binary
                               ? ClassMode::binary
                               : ClassMode::three_way;
    std::vector<std::string> labels;
    if (!regression) {
        labels = mode == ClassMode::binary
                     ? std::vector<std::string>{"negative", "positive"}
                     : std::vector<std::string>{"negative", "neutral", "positive"};
    }
    auto class_index = [&](Scalar valence) -> Scalar {
        SentimentClass c = class_of(valence, mode);
        if (mode == ClassMode::binary) return c == SentimentClass::negative ? 0.0 : 1.0;
        return c == SentimentClass::negative ? 0.0 : (c == SentimentClass::neutral ? 1.0 : 2.0);
    };

    std::vector<TrainExample> train_set;
    std::vector<TrainExample> val_set;
    bool any_neutral = false;
    for (const auto& e : lexicon.entries()) {
        Scalar target = regression ? e.valence : class_index(e.valence);
        if (!regression && mode == ClassMode::three_way && target == 1.0) any_neutral = true;
        auto slot = lexicon.split_of(e);
        (slot == SplitSlot::train ? train_set : val_set).push_back({e.word, target});
    }

    const int head = regression ? 1 : static_cast<int>(labels.size());
    if (backend.output_dim() != head) backend.configure_head(head);

    PretrainOutcome out;
    out.curve = fit(backend, train_set, val_set, regression ? Objective::mse : Objective::cross_entropy,
                    job.config);

    std::ostringstream hash_hex;
    hash_hex << std::hex << lexicon.content_hash();

    out.checkpoint.backend_kind = backend.kind();
    out.checkpoint.backend_state = backend.state();
    out.checkpoint.objective = regression ? Objective::mse : Objective::cross_entropy;
    out.checkpoint.labels = labels;
    out.checkpoint.config = job.config;
    out.checkpoint.metadata["job"] = "pretrain";
    out.checkpoint.metadata["pretrain_objective"] = to_string(job.objective);
    out.checkpoint.metadata["lexicon_hash"] = hash_hex.str();
    out.checkpoint.metadata["lexicon_entries"] = lexicon.size();
    out.checkpoint.metadata["best_epoch"] = out.curve.best_epoch;
    out.checkpoint.metadata["best_val_loss"] = out.curve.best_val_loss;
    if (!regression && mode == ClassMode::three_way && !any_neutral) {
        out.checkpoint.metadata["warnings"] =
            nlohmann::json::array({"no word in the lexicon falls in the neutral class"});
    }
    return out;
}

FinetuneOutcome finetune(const FinetuneJob& job, EncoderBackend& backend) {
    job.dataset.validate();
    job.config.validate();
    if (job.dataset.train.empty()) throw ValidationError("empty train split");
    if (job.dataset.dev.empty()) throw ValidationError("empty dev split");

    auto train_seen = job.dataset.observed_labels(job.dataset.train);
    auto dev_seen = job.dataset.observed_labels(job.dataset.dev);
    if (train_seen.size() < 2) throw ValidationError("training split has a single class");
    if (train_seen != dev_seen) {
        throw ValidationError("label vocabulary mismatch between train and dev splits");
    }

    const auto& labels = job.dataset.labels;
    const int head = static_cast<int>(labels.size());

    if (job.base) {
        if (job.base->backend_kind != backend.kind()) {
            throw ValidationError("checkpoint backend '" + job.base->backend_kind +
                                  "' does not match '" + backend.kind() + "'");
        }
        backend.load_state(job.base->backend_state);
        // Heads transfer only when the widths line up; otherwise the encoder
        // body carries over and the head restarts.
        if (backend.output_dim() != head) backend.configure_head(head);
    } else if (backend.output_dim() != head) {
        backend.configure_head(head);
    }

    auto examples = [&](const std::vector<LabeledSentence>& split) {
        std::vector<TrainExample> out;
        out.reserve(split.size());
        for (const auto& r : split) {
            out.push_back({r.text, static_cast<Scalar>(job.dataset.label_index(r.label))});
        }
        return out;
    };

    FinetuneOutcome out;
    out.curve = fit(backend, examples(job.dataset.train), examples(job.dataset.dev),
                    Objective::cross_entropy, job.config);

    out.checkpoint.backend_kind = backend.kind();
    out.checkpoint.backend_state = backend.state();
    out.checkpoint.objective = Objective::cross_entropy;
    out.checkpoint.labels = labels;
    out.checkpoint.config = job.config;
    out.checkpoint.metadata["job"] = "finetune";
    out.checkpoint.metadata["train_rows"] = job.dataset.train.size();
    out.checkpoint.metadata["dev_rows"] = job.dataset.dev.size();
    out.checkpoint.metadata["best_epoch"] = out.curve.best_epoch;
    out.checkpoint.metadata["best_val_loss"] = out.curve.best_val_loss;
    if (job.base) out.checkpoint.metadata["base_checkpoint"] = job.base->content_id();
    return out;
}

std::vector<std::string> classify_texts(EncoderBackend& backend, const std::vector<std::string>& texts,
                                        const std::vector<std::string>& labels) {
    if (static_cast<int>(labels.size()) != backend.output_dim()) {
        throw ValidationError("backend has " + std::to_string(backend.output_dim()) +
                              " outputs for " + std::to_string(labels.size()) + " labels");
    }
    std::vector<std::string> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        Vector logits = backend.forward(text, RunMode::eval);
        Eigen::Index best = 0;
        logits.maxCoeff(&best);
        out.push_back(labels[static_cast<std::size_t>(best)]);
    }
    return out;
}

SeedSweep run_seeds(const FinetuneJob& job, const std::vector<std::uint64_t>& seeds,
                    const BackendFactory& make_backend) {
    if (seeds.empty()) throw ValidationError("no seeds given");
    SeedSweep sweep;
    Scalar sum = 0;
    for (auto seed : seeds) {
        try {
            FinetuneJob seeded = job;
            seeded.config.seed = seed;
            auto backend = make_backend(seed);
            auto outcome = finetune(seeded, *backend);

            std::vector<std::string> texts;
            std::vector<std::string> gold;
            for (const auto& r : job.dataset.test) {
                texts.push_back(r.text);
                gold.push_back(r.label);
            }
            Scalar metric = 0;
            if (!texts.empty()) {
                auto pred = classify_texts(*backend, texts, job.dataset.labels);
                metric = weighted_macro_f1(gold, pred);
            }
            sweep.runs.push_back(SeedRun{seed, std::move(outcome.checkpoint), metric});
            sum += metric;
        } catch (const Error& e) {
            throw Error("seed " + std::to_string(seed) + ": " + e.what());
        }
    }
    sweep.mean_metric = sum / static_cast<Scalar>(sweep.runs.size());
    return sweep;
}

}  // namespace valex
