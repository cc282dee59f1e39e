#include "valex/filter.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "valex/error.hpp"

namespace valex {

void FilterConfig::validate() const {
    if (!(alpha >= 0)) throw ValidationError("alpha must be non-negative");
    if (beta < 1) throw ValidationError("beta must be positive");
    if (!(split_ratio > 0 && split_ratio < 1)) throw ValidationError("split ratio outside (0,1)");
    if (max_iterations < 1) throw ValidationError("max iterations must be positive");
    trainer.validate();
}

std::string to_string(FilterTermination t) {
    switch (t) {
        case FilterTermination::below_beta: return "below_beta";
        case FilterTermination::pool_empty: return "pool_empty";
        case FilterTermination::max_iterations: return "max_iterations";
    }
    throw Error("unreachable filter termination");
}

std::string FilterTrace::to_jsonl() const {
    std::string out;
    for (const auto& it : iterations) {
        nlohmann::json j;
        j["iteration"] = it.iteration;
        j["accepted"] = it.accepted;
        j["pool_remaining"] = it.pool_remaining;
        j["validation_loss"] = it.validation_loss;
        out += j.dump();
        out += '\n';
    }
    nlohmann::json tail;
    tail["termination"] = to_string(termination);
    out += tail.dump();
    out += '\n';
    return out;
}

FilterResult run_filter(const ValenceLexicon& base_en, const ValenceLexicon& candidates,
                        const FilterConfig& config, EncoderBackend& backend) {
    config.validate();
    if (base_en.empty()) throw ValidationError("empty base lexicon");
    for (const auto& e : base_en.entries()) {
        if (e.lang != "en") {
            throw ValidationError("base lexicon must be English-only, found '" + e.word + "' (" + e.lang + ")");
        }
    }
    for (const auto& e : candidates.entries()) {
        if (base_en.contains(e.word, e.lang)) {
            throw ValidationError("candidate (" + e.word + ", " + e.lang + ") collides with the base lexicon");
        }
    }

    ValenceLexicon accepted_lexicon = base_en;
    if (!accepted_lexicon.has_split()) {
        accepted_lexicon.assign_split(config.split_ratio, config.trainer.seed);
    }
    std::vector<TrainExample> train_set;
    std::vector<TrainExample> val_set;
    for (const auto& e : accepted_lexicon.entries()) {
        auto slot = accepted_lexicon.split_of(e);
        (slot == SplitSlot::train ? train_set : val_set).push_back({e.word, e.valence});
    }

    std::vector<FilterCandidate> pool;
    pool.reserve(candidates.size());
    for (const auto& e : candidates.sorted_entries()) {
        pool.push_back(FilterCandidate{e, e.valence, 0.0, std::nullopt});
    }
    std::vector<FilterCandidate> done;
    done.reserve(pool.size());

    const nlohmann::json initial_state = config.cold_start ? backend.state() : nlohmann::json();

    FilterResult result;
    for (int iteration = 1;; ++iteration) {
        if (config.cold_start && iteration > 1) backend.load_state(initial_state);

        TrainingCurve curve;
        try {
            curve = fit(backend, train_set, val_set, Objective::mse, config.trainer);
        } catch (const DivergenceError& e) {
            throw DivergenceError("iteration " + std::to_string(iteration) + ": " + e.what());
        }

        // Score the remaining pool and peel off the accepted candidates.
        std::vector<FilterCandidate> accepted_now;
        std::vector<FilterCandidate> still_pooled;
        for (auto& candidate : pool) {
            candidate.predicted_valence = predict_valence(backend, candidate.entry.word);
            Scalar diff = std::abs(candidate.predicted_valence - candidate.original_valence);
            if (diff < config.alpha) {
                candidate.accepted_at_iteration = iteration;
                accepted_now.push_back(std::move(candidate));
            } else {
                still_pooled.push_back(std::move(candidate));
            }
        }
        pool = std::move(still_pooled);

        std::vector<std::string> keys;
        keys.reserve(accepted_now.size());
        for (const auto& c : accepted_now) keys.push_back(c.entry.key());
        auto slots = ValenceLexicon::split_batch(keys, config.split_ratio, config.trainer.seed);
        for (std::size_t i = 0; i < accepted_now.size(); ++i) {
            LexiconEntry entry = accepted_now[i].entry;
            entry.source = EntrySource::accepted_by_filter;
            accepted_lexicon.add(entry);
            accepted_lexicon.set_split(entry, slots[i]);
            (slots[i] == SplitSlot::train ? train_set : val_set).push_back({entry.word, entry.valence});
            done.push_back(std::move(accepted_now[i]));
        }

        result.trace.iterations.push_back(FilterIterationStats{
            iteration, accepted_now.size(), pool.size(), curve.best_val_loss});

        if (pool.empty()) {
            result.trace.termination = FilterTermination::pool_empty;
            break;
        }
        if (accepted_now.size() < config.beta) {
            result.trace.termination = FilterTermination::below_beta;
            break;
        }
        if (iteration >= config.max_iterations) {
            result.trace.termination = FilterTermination::max_iterations;
            break;
        }
    }

    for (auto& c : pool) done.push_back(std::move(c));
    result.candidates = std::move(done);
    result.lexicon = std::move(accepted_lexicon);
    return result;
}

}  // namespace valex
