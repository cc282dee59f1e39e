#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "valex/eval.hpp"
#include "valex/extend.hpp"
#include "valex/prompt.hpp"
#include "valex/filter.hpp"
#include "valex/train.hpp"

using namespace valex;
using namespace valex_test;

namespace {

// English base plus a suffixed synthetic language, polar by construction.
struct ToyWorld {
    ValenceLexicon base_en;
    std::vector<TranslationEdge> edges;

    ToyWorld() {
        const std::pair<const char*, double> words[] = {
            {"good", 4.0},   {"great", 4.5},  {"warm", 2.5},  {"bright", 3.5}, {"nice", 3.0},
            {"sweet", 2.0},  {"happy", 4.2},  {"calm", 1.8},  {"safe", 2.2},   {"gentle", 1.6},
            {"bad", -4.0},   {"awful", -4.5}, {"cold", -2.5}, {"dark", -3.5},  {"nasty", -3.0},
            {"sour", -2.0},  {"sad", -4.2},   {"rough", -1.8}, {"harsh", -2.2}, {"cruel", -1.6},
        };
        for (const auto& [word, valence] : words) {
            base_en.add(LexiconEntry::make(word, "en", valence));
            edges.push_back(TranslationEdge::make(word, "en", std::string(word) + "ku", "id"));
        }
    }
};

}  // namespace

TEST_CASE("extend, filter, pretrain, and zero-shot evaluate chain together") {
    ToyWorld world;

    // 1. Projection copies the English scores onto the synthetic language.
    auto projection = project_scores(world.base_en, world.edges, {"id"});
    CHECK(projection.projected.size() == 20);
    CHECK(projection.report.total_added() + projection.report.duplicates_merged ==
          projection.report.usable_edges);

    // 2. Filtering keeps candidates whose predicted valence tracks the source.
    FilterConfig filter_config;
    filter_config.alpha = 2.5;
    filter_config.beta = 2;
    filter_config.trainer.dropout = 0.0;
    filter_config.trainer.learning_rate = 0.2;
    filter_config.trainer.batch_size = 8;
    filter_config.trainer.patience = 20;
    filter_config.trainer.seed = 11;
    ReferenceEncoder filter_encoder(11);
    auto filtered = run_filter(world.base_en, projection.projected, filter_config, filter_encoder);
    CHECK(filtered.lexicon.size() >= world.base_en.size());
    CHECK(filtered.lexicon.size() <= world.base_en.size() + projection.projected.size());
    // Suffix sharing means most candidates agree with their source scores.
    std::size_t accepted = filtered.lexicon.size() - world.base_en.size();
    CHECK(accepted >= projection.projected.size() / 2);

    // 3. Pretrain a regressor on the filtered bilingual lexicon.
    PretrainJob job;
    job.lexicon = filtered.lexicon;
    job.lexicon.clear_split();  // fresh 80:20 for pretraining
    job.objective = PretrainObjective::regression;
    job.config.dropout = 0.0;
    job.config.learning_rate = 0.2;
    job.config.batch_size = 8;
    job.config.seed = 11;
    ReferenceEncoder model(11);
    auto outcome = pretrain(job, model);

    // 4. Zero-shot sentence prediction in both languages.
    std::vector<std::string> texts = {
        "good great bright", "happy nice sweet", "goodku greatku brightku", "happyku niceku",
        "bad awful dark",    "sad nasty sour",   "badku awfulku darkku",    "sadku nastyku",
    };
    std::vector<std::string> gold = {"positive", "positive", "positive", "positive",
                                     "negative", "negative", "negative", "negative"};
    auto records = predict_zero_shot(outcome.checkpoint, texts, gold, ClassMode::binary);
    std::vector<std::string> pred;
    for (const auto& r : records) pred.push_back(r.pred);
    Scalar f1 = weighted_macro_f1(gold, pred);
    CHECK(f1 >= 0.75);

    // 5. Aggregate per-language scores the way the reports do.
    std::vector<std::string> gold_en(gold.begin(), gold.begin() + 2);
    std::vector<std::string> pred_en(pred.begin(), pred.begin() + 2);
    std::vector<std::string> gold_id(gold.begin() + 2, gold.begin() + 4);
    std::vector<std::string> pred_id(pred.begin() + 2, pred.begin() + 4);
    std::map<std::string, Scalar> per_language = {
        {"en", weighted_macro_f1(gold_en, pred_en)},
        {"id", weighted_macro_f1(gold_id, pred_id)},
    };
    GroupSpec groups;
    groups.groups.push_back({"HM-R", {"en"}, {}});
    groups.groups.push_back({"synthetic", {"id"}, {}});
    auto report = aggregate_report(per_language, groups);
    CHECK(report.group_means.size() == 2);
    CHECK(report.average ==
          doctest::Approx((report.group_means[0].second + report.group_means[1].second) / 2));
}

TEST_CASE("filtering rejects a poisoned candidate that a clean one survives") {
    // English base built from word families, so held-out words share subword
    // units with their train-split siblings and validation is informative.
    ValenceLexicon base;
    const std::pair<const char*, double> roots[] = {
        {"good", 4.0}, {"nice", 3.0}, {"warm", 2.5}, {"glad", 3.5}, {"fine", 2.0}, {"bold", 1.5},
        {"bad", -4.0}, {"foul", -3.0}, {"grim", -2.5}, {"cold", -3.5}, {"dark", -2.0}, {"sour", -1.5},
    };
    for (const auto& [root, valence] : roots) {
        base.add(LexiconEntry::make(root, "en", valence));
        base.add(LexiconEntry::make(std::string(root) + "est", "en", valence));
        base.add(LexiconEntry::make(std::string(root) + "ness", "en", valence));
    }

    // Two candidates: one faithful copy, one with a wildly wrong projected score.
    ValenceLexicon candidates;
    candidates.add(LexiconEntry::make("goodku", "id", 4.0));
    candidates.add(LexiconEntry::make("xyzqw", "id", 4.8));  // no subword support, score misleading

    FilterConfig config;
    config.alpha = 3.0;
    config.beta = 1;
    config.max_iterations = 4;
    config.trainer.dropout = 0.0;
    config.trainer.learning_rate = 0.2;
    config.trainer.batch_size = 8;
    config.trainer.patience = 20;
    config.trainer.seed = 13;
    ReferenceEncoder encoder(13);
    auto result = run_filter(base, candidates, config, encoder);

    // "goodku" shares its root trigrams with the good-family (+4), so its
    // prediction lands well above zero and the copy survives; "xyzqw" has no
    // lexical support, predicts near zero, and 4.8 is more than alpha away.
    CHECK(result.lexicon.contains("goodku", "id"));
    CHECK_FALSE(result.lexicon.contains("xyzqw", "id"));
}

TEST_CASE("prompting baseline and encoder pipeline agree on an easy dataset") {
    std::vector<LabeledSentence> data = {
        {"i love this so much", "positive"},
        {"absolutely wonderful experience", "positive"},
        {"i hate this", "negative"},
        {"truly terrible outcome", "negative"},
    };
    MockScorer scorer;
    auto templates = PromptTemplate::builtin_six();
    for (const auto& tpl : templates) {
        for (const auto& r : data) {
            bool positive = r.label == "positive";
            auto pos_split = render_split(tpl, r.text, {"negative", "positive"}, "positive");
            auto neg_split = render_split(tpl, r.text, {"negative", "positive"}, "negative");
            scorer.set(pos_split.context, "positive", {positive ? -0.3 : -3.0});
            scorer.set(neg_split.context, "negative", {positive ? -3.0 : -0.3});
        }
    }
    auto report = evaluate_prompts(scorer, templates, data, {"negative", "positive"});
    REQUIRE(report.complete());
    CHECK(*report.average_f1 == 1.0);
}
