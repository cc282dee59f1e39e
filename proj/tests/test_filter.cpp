#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>
#include <map>

#include "helpers.hpp"
#include "valex/error.hpp"
#include "valex/filter.hpp"
#include "valex/reference_encoder.hpp"

#include <nlohmann/json.hpp>

using namespace valex;
using namespace valex_test;

namespace {

// Backend with scripted predictions: candidate word -> value per fit round.
// Lets the boundary and termination cases pin |v_hat - v| exactly.
class ScriptedBackend : public EncoderBackend {
public:
    using Script = std::map<std::string, std::vector<Scalar>>;  // word -> value per round

    explicit ScriptedBackend(Script script) : script_(std::move(script)) {}

    int output_dim() const override { return 1; }
    void configure_head(int k) override {
        if (k != 1) throw ValidationError("scripted backend is regression-only");
    }
    std::vector<int> tokenize(const std::string&) const override { return {0}; }
    Vector forward(const std::string& text, RunMode) override {
        Vector out(1);
        auto it = script_.find(text);
        if (it == script_.end()) {
            out(0) = 0.0;
            return out;
        }
        std::size_t round = fits_ == 0 ? 0 : std::min(fits_ - 1, it->second.size() - 1);
        out(0) = it->second[round];
        return out;
    }
    Scalar train_step(std::span<const TrainExample>, Objective, const TrainConfig&) override { return 0.0; }
    Scalar batch_loss(std::span<const TrainExample>, Objective) const override { return 0.0; }
    void prepare(std::span<const TrainExample>, const TrainConfig&) override { ++fits_; }
    void set_max_tokens(int) override {}
    std::vector<Scalar> parameters() const override { return {}; }
    void set_parameters(const std::vector<Scalar>&) override {}
    nlohmann::json state() const override { return {{"fits", fits_}}; }
    void load_state(const nlohmann::json& j) override { fits_ = j.at("fits").get<std::size_t>(); }
    std::string kind() const override { return "scripted-test"; }
    std::unique_ptr<EncoderBackend> clone() const override {
        return std::make_unique<ScriptedBackend>(*this);
    }

    std::size_t fits() const { return fits_; }

private:
    Script script_;
    std::size_t fits_ = 0;
};

ValenceLexicon english_base(std::size_t n = 10) {
    ValenceLexicon base;
    for (std::size_t i = 0; i < n; ++i) {
        base.add(LexiconEntry::make("base" + std::to_string(i), "en",
                                    (static_cast<Scalar>(i % 9) - 4.0)));
    }
    return base;
}

ValenceLexicon candidate_pool(std::size_t n) {
    ValenceLexicon pool;
    for (std::size_t i = 0; i < n; ++i) {
        pool.add(LexiconEntry::make("kata" + std::to_string(i), "id",
                                    (static_cast<Scalar>(i % 11) - 5.0)));
    }
    return pool;
}

FilterConfig quick_filter_config() {
    FilterConfig c;
    c.beta = 5;
    c.trainer.dropout = 0.0;
    c.trainer.max_epochs = 10;
    c.trainer.learning_rate = 0.2;
    c.trainer.batch_size = 8;
    c.trainer.seed = 13;
    return c;
}

}  // namespace

TEST_CASE("alpha infinity accepts everything in one iteration and empties the pool") {
    auto config = quick_filter_config();
    config.alpha = std::numeric_limits<Scalar>::infinity();
    ScriptedBackend backend({});
    auto base = english_base();
    auto pool = candidate_pool(37);
    auto result = run_filter(base, pool, config, backend);

    CHECK(result.trace.termination == FilterTermination::pool_empty);
    REQUIRE(result.trace.iterations.size() == 1);
    CHECK(result.trace.iterations[0].accepted == 37);
    CHECK(result.trace.iterations[0].pool_remaining == 0);
    CHECK(result.lexicon.size() == base.size() + pool.size());
    for (const auto& e : pool.entries()) {
        const auto* out = result.lexicon.find(e.word, e.lang);
        REQUIRE(out != nullptr);
        CHECK(out->source == EntrySource::accepted_by_filter);
    }
}

TEST_CASE("alpha zero accepts nothing and terminates below beta after one iteration") {
    auto config = quick_filter_config();
    config.alpha = 0.0;
    ScriptedBackend backend({});
    auto base = english_base();
    auto result = run_filter(base, candidate_pool(37), config, backend);

    CHECK(result.trace.termination == FilterTermination::below_beta);
    REQUIRE(result.trace.iterations.size() == 1);
    CHECK(result.trace.iterations[0].accepted == 0);
    CHECK(result.trace.iterations[0].pool_remaining == 37);
    CHECK(result.lexicon == base);
}

TEST_CASE("a candidate with difference exactly alpha is rejected") {
    auto config = quick_filter_config();
    config.alpha = 2.5;
    config.beta = 1;

    ValenceLexicon pool;
    pool.add(LexiconEntry::make("exact", "id", 2.0));    // prediction 4.5 -> diff 2.5, rejected
    pool.add(LexiconEntry::make("inside", "id", 2.0));   // prediction 4.4 -> diff 2.4, accepted
    pool.add(LexiconEntry::make("outside", "id", 2.0));  // prediction 4.6 -> diff 2.6, rejected
    ScriptedBackend backend({{"exact", {4.5}}, {"inside", {4.4}}, {"outside", {4.6}}});

    auto result = run_filter(english_base(), pool, config, backend);
    CHECK(result.lexicon.contains("inside", "id"));
    CHECK_FALSE(result.lexicon.contains("exact", "id"));
    CHECK_FALSE(result.lexicon.contains("outside", "id"));
    for (const auto& c : result.candidates) {
        if (c.entry.word == "exact") CHECK_FALSE(c.accepted_at_iteration.has_value());
        if (c.entry.word == "inside") CHECK(c.accepted_at_iteration == 1);
    }
}

TEST_CASE("predictions are clamped before the difference test") {
    auto config = quick_filter_config();
    config.alpha = 1.5;
    config.beta = 1;
    ValenceLexicon pool;
    pool.add(LexiconEntry::make("spiky", "id", 4.0));  // raw prediction 40 clamps to 5 -> diff 1.0
    ScriptedBackend backend({{"spiky", {40.0}}});
    auto result = run_filter(english_base(), pool, config, backend);
    CHECK(result.lexicon.contains("spiky", "id"));
    REQUIRE(result.candidates.size() == 1);
    CHECK(result.candidates[0].predicted_valence == 5.0);
}

TEST_CASE("iterative acceptance re-scores the pool and the cap terminates the loop") {
    // Round r unlocks candidates 10r..10r+9 (prediction matches original);
    // everything else predicts far away. beta=10 keeps the loop going.
    ScriptedBackend::Script script;
    for (int k = 0; k < 50; ++k) {
        std::vector<Scalar> rounds(6, -5.0);
        for (int r = k / 10; r < 6; ++r) rounds[static_cast<std::size_t>(r)] = 3.0;
        script["cand" + std::to_string(k)] = rounds;
    }
    ValenceLexicon pool;
    for (int k = 0; k < 50; ++k) pool.add(LexiconEntry::make("cand" + std::to_string(k), "id", 3.0));

    auto config = quick_filter_config();
    config.alpha = 0.5;
    config.beta = 10;
    config.max_iterations = 3;
    ScriptedBackend backend(script);
    auto result = run_filter(english_base(), pool, config, backend);

    CHECK(result.trace.termination == FilterTermination::max_iterations);
    REQUIRE(result.trace.iterations.size() == 3);
    std::size_t expected_pool = 50;
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(result.trace.iterations[i].accepted == 10);
        expected_pool -= result.trace.iterations[i].accepted;
        CHECK(result.trace.iterations[i].pool_remaining == expected_pool);
        CHECK(result.trace.iterations[i].iteration == static_cast<int>(i + 1));
    }
    CHECK(result.lexicon.size() == english_base().size() + 30);
}

TEST_CASE("accepted batches split 80:20 within one entry per batch") {
    auto config = quick_filter_config();
    config.alpha = std::numeric_limits<Scalar>::infinity();
    ScriptedBackend backend({});
    auto pool = candidate_pool(41);
    auto result = run_filter(english_base(), pool, config, backend);

    std::size_t train_n = 0, val_n = 0;
    for (const auto& e : pool.entries()) {
        auto slot = result.lexicon.split_of(*result.lexicon.find(e.word, e.lang));
        REQUIRE(slot.has_value());
        (*slot == SplitSlot::train ? train_n : val_n) += 1;
    }
    CHECK(train_n + val_n == 41);
    CHECK(std::abs(static_cast<double>(train_n) - 0.8 * 41) <= 1.0);
}

TEST_CASE("filter validates its inputs") {
    auto config = quick_filter_config();
    ScriptedBackend backend({});

    ValenceLexicon empty;
    CHECK_THROWS_AS(run_filter(empty, candidate_pool(3), config, backend), ValidationError);

    ValenceLexicon mixed = english_base();
    mixed.add(LexiconEntry::make("kata", "id", 1.0));
    CHECK_THROWS_WITH_AS(run_filter(mixed, candidate_pool(3), config, backend),
                         doctest::Contains("English-only"), ValidationError);

    ValenceLexicon colliding;
    colliding.add(LexiconEntry::make("base1", "en", 1.0));
    CHECK_THROWS_WITH_AS(run_filter(english_base(), colliding, config, backend),
                         doctest::Contains("collides"), ValidationError);
}

TEST_CASE("training divergence is annotated with the iteration index") {
    class DivergingBackend final : public ScriptedBackend {
    public:
        DivergingBackend() : ScriptedBackend({}) {}
        Scalar train_step(std::span<const TrainExample>, Objective, const TrainConfig&) override {
            throw DivergenceError("non-finite training loss");
        }
    };
    DivergingBackend backend;
    auto config = quick_filter_config();
    CHECK_THROWS_WITH_AS(run_filter(english_base(), candidate_pool(3), config, backend),
                         doctest::Contains("iteration 1"), DivergenceError);
}

TEST_CASE("trace serializes one JSONL record per iteration plus a termination record") {
    auto config = quick_filter_config();
    config.alpha = std::numeric_limits<Scalar>::infinity();
    ScriptedBackend backend({});
    auto result = run_filter(english_base(), candidate_pool(7), config, backend);
    auto jsonl = result.trace.to_jsonl();

    std::vector<std::string> lines;
    std::size_t start = 0;
    for (auto nl = jsonl.find('\n'); nl != std::string::npos; nl = jsonl.find('\n', start)) {
        lines.push_back(jsonl.substr(start, nl - start));
        start = nl + 1;
    }
    REQUIRE(lines.size() == 2);
    auto first = nlohmann::json::parse(lines[0]);
    CHECK(first.at("iteration") == 1);
    CHECK(first.at("accepted") == 7);
    CHECK(first.at("pool_remaining") == 0);
    CHECK(first.contains("validation_loss"));
    auto tail = nlohmann::json::parse(lines[1]);
    CHECK(tail.at("termination") == "pool_empty");
}

TEST_CASE("two identical runs with the reference encoder are bitwise identical") {
    auto base = toy_lexicon();
    ValenceLexicon base_en;
    for (const auto& e : base.entries()) {
        if (e.lang == "en") base_en.add(e);
    }
    ValenceLexicon pool;
    for (const auto& e : base.entries()) {
        if (e.lang == "id") pool.add(e);
    }

    auto run_once = [&] {
        FilterConfig config = quick_filter_config();
        config.alpha = 2.5;
        config.beta = 2;
        config.trainer.max_epochs = 15;
        ReferenceEncoder backend(99);
        auto result = run_filter(base_en, pool, config, backend);
        return std::make_pair(result.trace.to_jsonl(), lexicon_to_tsv(result.lexicon));
    };
    auto [trace_a, lex_a] = run_once();
    auto [trace_b, lex_b] = run_once();
    CHECK(trace_a == trace_b);
    CHECK(lex_a == lex_b);
}

TEST_CASE("cold start restores the initial weights each iteration") {
    // Warm start sees fits 1,2,3... while cold start replays from the initial
    // state, so the scripted rounds stay pinned at the first entry.
    ScriptedBackend::Script script;
    script["probe"] = {0.0, 4.0};  // round 1 accepts, later rounds would reject
    ValenceLexicon pool;
    pool.add(LexiconEntry::make("probe", "id", 0.0));
    pool.add(LexiconEntry::make("far", "id", -5.0));  // never accepted, keeps loop alive

    auto config = quick_filter_config();
    config.alpha = 1.0;
    config.beta = 1;
    config.max_iterations = 2;

    SUBCASE("warm start advances the script") {
        ScriptedBackend backend(script);
        auto result = run_filter(english_base(), pool, config, backend);
        CHECK(backend.fits() == 2);
    }
    SUBCASE("cold start replays round one") {
        config.cold_start = true;
        ScriptedBackend backend(script);
        auto result = run_filter(english_base(), pool, config, backend);
        // load_state reset the counter to the initial snapshot before the
        // second fit, so only that one fit is visible afterwards.
        CHECK(backend.fits() == 1);
        REQUIRE(result.trace.iterations.size() == 2);
    }
}

TEST_CASE("accepted set grows weakly and pool shrinks by the acceptance count") {
    ScriptedBackend::Script script;
    for (int k = 0; k < 20; ++k) {
        std::vector<Scalar> rounds = {k < 8 ? 1.0 : 5.0, k < 14 ? 1.0 : 5.0, 1.0};
        script["w" + std::to_string(k)] = rounds;
    }
    ValenceLexicon pool;
    for (int k = 0; k < 20; ++k) pool.add(LexiconEntry::make("w" + std::to_string(k), "id", 1.0));

    auto config = quick_filter_config();
    config.alpha = 0.5;
    config.beta = 4;
    ScriptedBackend backend(script);
    auto result = run_filter(english_base(), pool, config, backend);

    std::size_t pool_size = 20;
    std::size_t accepted_total = 0;
    for (const auto& it : result.trace.iterations) {
        accepted_total += it.accepted;
        pool_size -= it.accepted;
        CHECK(it.pool_remaining == pool_size);
    }
    CHECK(result.lexicon.size() == english_base().size() + accepted_total);
    // No rejected key leaks into the output.
    for (const auto& c : result.candidates) {
        CHECK(result.lexicon.contains(c.entry.word, c.entry.lang) == c.accepted_at_iteration.has_value());
    }
}
