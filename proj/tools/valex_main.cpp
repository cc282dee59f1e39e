// valex: multilingual valence-lexicon sentiment pipeline.
//
// Every subcommand resolves its configuration (defaults, then --config file,
// then explicit flags), creates a fresh run directory under
// <workdir>/runs/<timestamp>-<confighash>, writes the manifest there before
// finalizing any artifact, and exits nonzero with a structured JSON error
// line on stderr when anything fails.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "valex/checkpoint.hpp"
#include "valex/error.hpp"
#include "valex/eval.hpp"
#include "valex/extend.hpp"
#include "valex/filter.hpp"
#include "valex/lexicon.hpp"
#include "valex/manifest.hpp"
#include "valex/prompt.hpp"
#include "valex/reference_encoder.hpp"
#include "valex/rng.hpp"
#include "valex/train.hpp"

#include <CLI11.hpp>

namespace fs = std::filesystem;
using namespace valex;

namespace {

struct CommandContext {
    std::string command;
    fs::path workdir = ".";
    PipelineConfig config = PipelineConfig::defaults();
    bool dry_run = false;

    std::string config_file;                                      // --config
    std::vector<std::pair<std::string, std::string>> overrides;   // flag-supplied key=value

    fs::path run_dir;
    std::map<std::string, std::string> input_hashes;
    std::vector<std::string> outputs;

    void resolve_config() {
        if (!config_file.empty()) config = PipelineConfig::load(resolve(config_file));
        for (const auto& [key, value] : overrides) config.set(key, value);
    }

    fs::path resolve(const fs::path& path) const {
        return path.is_absolute() ? path : workdir / path;
    }

    fs::path note_input(const fs::path& path) {
        fs::path resolved = resolve(path);
        if (!fs::exists(resolved)) throw IoError("input file not found: '" + resolved.string() + "'");
        input_hashes[resolved.string()] = file_hash_hex(resolved);
        return resolved;
    }

    void note_input_dir(const fs::path& dir) {
        fs::path resolved = resolve(dir);
        if (!fs::is_directory(resolved)) {
            throw IoError("input directory not found: '" + resolved.string() + "'");
        }
        for (const char* name : {"train.tsv", "dev.tsv", "test.tsv"}) {
            auto file = resolved / name;
            if (fs::exists(file)) input_hashes[file.string()] = file_hash_hex(file);
        }
    }

    // Output path: explicit flag value relative to the workdir, or a default
    // name inside the run directory.
    fs::path out_path(const std::string& flag_value, const std::string& default_name) {
        fs::path path = flag_value.empty() ? run_dir / default_name : resolve(flag_value);
        outputs.push_back(path.string());
        return path;
    }

    void open_run_dir() {
        auto digest = fnv1a64(config.to_json().dump(), fnv1a64(command));
        std::ostringstream hash8;
        hash8 << std::hex << (digest & 0xffffffffull);
        fs::path base = workdir / "runs" / (utc_timestamp_compact() + "-" + hash8.str());
        run_dir = base;
        for (int n = 2; fs::exists(run_dir); ++n) {
            run_dir = base;
            run_dir += "-" + std::to_string(n);
        }
        fs::create_directories(run_dir);
    }

    void write_manifest() {
        RunManifest manifest;
        manifest.command = command;
        manifest.resolved_config = config.to_json();
        manifest.input_hashes = input_hashes;
        manifest.seed = config.get_u64("seed");
        manifest.tool_version = tool_version();
        manifest.started_at_utc = utc_timestamp();
        manifest.outputs = outputs;
        manifest.write_atomic(run_dir / "manifest.json");
    }
};

// Declares a flag that maps 1:1 onto a config key.
void config_flag(CLI::App* cmd, CommandContext& ctx, const std::string& flag, const std::string& key,
                 const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&ctx, key](const std::string& value) { ctx.overrides.emplace_back(key, value); }, help);
}

TrainConfig train_config_from(const PipelineConfig& c, bool sentence_level) {
    TrainConfig t;
    t.learning_rate = c.get_double("learning_rate");
    t.max_epochs = c.get_int(sentence_level ? "finetune_max_epochs" : "pretrain_max_epochs");
    t.max_tokens = c.get_int(sentence_level ? "finetune_max_tokens" : "pretrain_max_tokens");
    t.patience = c.get_int("patience");
    t.dropout = c.get_double("dropout");
    t.batch_size = c.get_int("batch_size");
    t.seed = c.get_u64("seed");
    t.validate();
    return t;
}

MergePolicy merge_policy_from(const PipelineConfig& c) {
    auto name = c.get("merge_policy");
    if (name == "mean") return MergePolicy::mean;
    if (name == "keep_first") return MergePolicy::keep_first;
    if (name == "error") return MergePolicy::error;
    throw ConfigError("unknown merge policy '" + name + "'");
}

std::unique_ptr<ReferenceEncoder> make_encoder(const PipelineConfig& c) {
    return std::make_unique<ReferenceEncoder>(c.get_u64("seed"), c.get_int("encoder_dim"));
}

std::vector<std::string> split_commas(const std::string& list) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= list.size()) {
        auto comma = list.find(',', start);
        auto token = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!token.empty()) items.push_back(token);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return items;
}

void print_wrote(const fs::path& path) { std::cout << "wrote " << path.string() << "\n"; }

// ---------------------------------------------------------------------------
// Subcommand bodies. The shared wrapper in main() resolves configuration and
// handles dry-run, run-directory, and error reporting around these.

struct NormalizeArgs {
    std::string in, out;
};

void run_normalize(CommandContext& ctx, const NormalizeArgs& args) {
    auto lexicon = load_lexicon(ctx.note_input(args.in), merge_policy_from(ctx.config));
    if (ctx.dry_run) return;
    ctx.open_run_dir();
    auto out = ctx.out_path(args.out, "normalized.tsv");
    ctx.write_manifest();
    save_lexicon(lexicon, out);
    print_wrote(out);
    std::cout << "entries " << lexicon.size() << "\n";
}

struct ExtendArgs {
    std::string base, edges, targets, out, report, merged;
};

void run_extend(CommandContext& ctx, const ExtendArgs& args) {
    auto base = load_lexicon(ctx.note_input(args.base), merge_policy_from(ctx.config));
    auto edges = load_edges(ctx.note_input(args.edges));
    std::set<std::string> targets;
    for (auto& lang : split_commas(args.targets)) targets.insert(lang);
    ProjectionOptions options;
    options.case_fold = ctx.config.get_bool("case_fold");
    auto result = project_scores(base, edges, targets, options);
    if (ctx.dry_run) return;
    ctx.open_run_dir();
    auto out = ctx.out_path(args.out, "projected.tsv");
    auto report_path = ctx.out_path(args.report, "projection_report.json");
    fs::path merged_path;
    if (!args.merged.empty()) merged_path = ctx.out_path(args.merged, "merged.tsv");
    ctx.write_manifest();

    save_lexicon(result.projected, out);
    print_wrote(out);
    {
        std::ofstream report_out(report_path, std::ios::binary);
        report_out << result.report.to_json() << "\n";
    }
    print_wrote(report_path);
    if (!merged_path.empty()) {
        save_lexicon(merge_lexicons(base, result.projected, merge_policy_from(ctx.config)), merged_path);
        print_wrote(merged_path);
    }
    std::cout << "added " << result.report.total_added() << " skipped " << result.report.skipped_no_source
              << " merged " << result.report.duplicates_merged << "\n";
}

struct FilterArgs {
    std::string base, candidates, out, trace;
};

void run_filter_cmd(CommandContext& ctx, const FilterArgs& args) {
    auto base = load_lexicon(ctx.note_input(args.base));
    auto candidates = load_lexicon(ctx.note_input(args.candidates));
    FilterConfig config;
    config.alpha = ctx.config.get_double("alpha");
    config.beta = static_cast<std::size_t>(ctx.config.get_int("beta"));
    config.split_ratio = ctx.config.get_double("split_ratio");
    config.max_iterations = ctx.config.get_int("max_iterations");
    config.cold_start = ctx.config.get_bool("cold_start");
    config.trainer = train_config_from(ctx.config, /*sentence_level=*/false);
    config.validate();
    if (ctx.dry_run) return;
    ctx.open_run_dir();
    auto out = ctx.out_path(args.out, "filtered.tsv");
    auto trace_path = ctx.out_path(args.trace, "filter_trace.jsonl");
    ctx.write_manifest();

    auto encoder = make_encoder(ctx.config);
    auto result = run_filter(base, candidates, config, *encoder);
    save_lexicon(result.lexicon, out);
    {
        std::ofstream trace_out(trace_path, std::ios::binary);
        trace_out << result.trace.to_jsonl();
    }
    print_wrote(out);
    print_wrote(trace_path);
    std::cout << "iterations " << result.trace.iterations.size() << " termination "
              << to_string(result.trace.termination) << " kept " << result.lexicon.size() << " of "
              << base.size() + candidates.size() << "\n";
}

struct PretrainArgs {
    std::string lexicon, out;
};

void run_pretrain(CommandContext& ctx, const PretrainArgs& args) {
    PretrainJob job;
    job.lexicon = load_lexicon(ctx.note_input(args.lexicon), merge_policy_from(ctx.config));
    job.objective = pretrain_objective_from_string(ctx.config.get("objective"));
    job.config = train_config_from(ctx.config, /*sentence_level=*/false);
    if (ctx.dry_run) return;
    ctx.open_run_dir();
    auto out = ctx.out_path(args.out, "checkpoint.json");
    ctx.write_manifest();

    auto encoder = make_encoder(ctx.config);
    auto outcome = pretrain(job, *encoder);
    outcome.checkpoint.save(out);
    print_wrote(out);
    std::cout << "epochs " << outcome.curve.epochs.size() << " best_val_loss "
              << format_scalar(outcome.curve.best_val_loss) << "\n";
}

struct FinetuneArgs {
    std::string data, base_checkpoint, out;
};

void run_finetune(CommandContext& ctx, const FinetuneArgs& args) {
    ctx.note_input_dir(args.data);
    FinetuneJob job;
    job.dataset = LabeledSentenceSet::from_dir(ctx.resolve(args.data));
    job.config = train_config_from(ctx.config, /*sentence_level=*/true);
    if (!args.base_checkpoint.empty()) {
        job.base = Checkpoint::load(ctx.note_input(args.base_checkpoint));
    }
    if (ctx.dry_run) return;
    ctx.open_run_dir();
    auto out = ctx.out_path(args.out, "checkpoint.json");
    ctx.write_manifest();

    auto encoder = make_encoder(ctx.config);
    auto outcome = finetune(job, *encoder);
    outcome.checkpoint.save(out);
    print_wrote(out);
    std::cout << "epochs " << outcome.curve.epochs.size() << " best_val_loss "
              << format_scalar(outcome.curve.best_val_loss) << "\n";
}

struct FewshotArgs {
    std::string data, out;
};

void run_fewshot(CommandContext& ctx, const FewshotArgs& args) {
    ctx.note_input_dir(args.data);
    auto dataset = LabeledSentenceSet::from_dir(ctx.resolve(args.data));
    auto sampled = fewshot_sample(dataset, static_cast<std::size_t>(ctx.config.get_int("n_train")),
                                  static_cast<std::size_t>(ctx.config.get_int("n_dev")),
                                  ctx.config.get_u64("seed"));
    if (ctx.dry_run) return;
    ctx.open_run_dir();
    fs::path out_dir = args.out.empty() ? ctx.run_dir / "fewshot" : ctx.resolve(args.out);
    ctx.outputs.push_back(out_dir.string());
    ctx.write_manifest();
    sampled.save_dir(out_dir);
    print_wrote(out_dir);
    std::cout << "train " << sampled.train.size() << " dev " << sampled.dev.size() << " test "
              << sampled.test.size() << "\n";
}

struct PredictArgs {
    std::string checkpoint, in, texts, out;
};

void run_predict(CommandContext& ctx, const PredictArgs& args) {
    if (args.in.empty() == args.texts.empty()) {
        throw ConfigError("predict needs exactly one of --in (labeled TSV) or --texts (plain lines)");
    }
    auto checkpoint = Checkpoint::load(ctx.note_input(args.checkpoint));
    auto task_name = ctx.config.get("task");
    if (task_name != "three_way" && task_name != "binary") {
        throw ConfigError("unknown task '" + task_name + "'");
    }
    ClassMode task = task_name == "three_way" ? ClassMode::three_way : ClassMode::binary;

    std::vector<std::string> texts;
    std::vector<std::string> golds;
    if (!args.in.empty()) {
        for (auto& record : load_sentences(ctx.note_input(args.in))) {
            texts.push_back(std::move(record.text));
            golds.push_back(std::move(record.label));
        }
    } else {
        std::ifstream in(ctx.note_input(args.texts), std::ios::binary);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) texts.push_back(line);
        }
    }
    PredictOptions options;
    options.max_tokens = ctx.config.get_int("finetune_max_tokens");
    if (ctx.dry_run) return;
    ctx.open_run_dir();
    auto out = ctx.out_path(args.out, "predictions.jsonl");
    ctx.write_manifest();

    auto records = golds.empty() ? predict_zero_shot(checkpoint, texts, task, options)
                                 : predict_zero_shot(checkpoint, texts, golds, task, options);
    save_predictions(records, out);
    print_wrote(out);
    std::cout << "predictions " << records.size() << "\n";
}

struct EvaluateArgs {
    std::string pred, lang, out;
};

void run_evaluate(CommandContext& ctx, const EvaluateArgs& args) {
    auto records = load_predictions(ctx.note_input(args.pred));
    if (records.empty()) throw ValidationError("no predictions in '" + args.pred + "'");
    std::vector<std::string> gold;
    std::vector<std::string> pred;
    for (const auto& r : records) {
        if (!r.gold) throw ValidationError("prediction record without gold label: '" + r.text + "'");
        gold.push_back(*r.gold);
        pred.push_back(r.pred);
    }
    Scalar f1 = weighted_macro_f1(gold, pred);
    if (ctx.dry_run) return;
    ctx.open_run_dir();
    auto out = ctx.out_path(args.out, "score.json");
    ctx.write_manifest();

    nlohmann::json j;
    j["schema_version"] = 1;
    j["weighted_macro_f1"] = f1;
    j["count"] = records.size();
    if (!args.lang.empty()) j["lang"] = args.lang;
    std::ofstream out_stream(out, std::ios::binary);
    out_stream << j.dump(2) << "\n";
    print_wrote(out);
    std::cout << "weighted_macro_f1 " << format_scalar(f1) << "\n";
}

struct PromptEvalArgs {
    std::string data, split = "test", labels, templates, scorer = "mock", scores, out;
};

void run_prompt_eval(CommandContext& ctx, const PromptEvalArgs& args) {
    ctx.note_input_dir(args.data);
    auto dataset = LabeledSentenceSet::from_dir(ctx.resolve(args.data));
    const std::vector<LabeledSentence>* split = &dataset.test;
    if (args.split == "train") {
        split = &dataset.train;
    } else if (args.split == "dev") {
        split = &dataset.dev;
    } else if (args.split != "test") {
        throw ConfigError("unknown split '" + args.split + "'");
    }

    std::vector<std::string> labels =
        args.labels.empty() ? dataset.labels : split_commas(args.labels);

    auto templates = args.templates.empty() ? PromptTemplate::builtin_six()
                                            : PromptTemplate::load_dir(ctx.resolve(args.templates));

    PromptEvalConfig eval_config;
    eval_config.parallelism = ctx.config.get_int("parallelism");
    eval_config.max_retries = static_cast<std::size_t>(ctx.config.get_int("max_retries"));
    eval_config.retry_backoff_seconds = ctx.config.get_double("retry_backoff");

    std::unique_ptr<CompletionScorer> scorer;
    if (args.scorer == "mock") {
        if (args.scores.empty()) throw ConfigError("mock scorer needs --scores TABLE.json");
        scorer = std::make_unique<MockScorer>(MockScorer::from_json_file(ctx.note_input(args.scores)));
    } else if (args.scorer == "http") {
        std::string endpoint = ctx.config.get("scorer_endpoint");
        if (endpoint.empty()) {
            const char* env = std::getenv("VALEX_SCORER_ENDPOINT");
            if (env) endpoint = env;
        }
        if (endpoint.empty()) {
            throw ConfigError("http scorer needs scorer_endpoint or VALEX_SCORER_ENDPOINT");
        }
        scorer = std::make_unique<HttpCompletionScorer>(endpoint, eval_config.max_retries,
                                                        eval_config.retry_backoff_seconds);
    } else {
        throw ConfigError("unknown scorer '" + args.scorer + "' (mock or http)");
    }

    if (ctx.dry_run) return;
    ctx.open_run_dir();
    auto out = ctx.out_path(args.out, "prompt_report.json");
    ctx.write_manifest();

    auto report = evaluate_prompts(*scorer, templates, *split, labels, eval_config);
    std::ofstream out_stream(out, std::ios::binary);
    out_stream << report.to_json().dump(2) << "\n";
    print_wrote(out);
    if (report.complete()) {
        std::cout << "average_f1 " << format_scalar(*report.average_f1) << "\n";
    } else {
        std::cout << "incomplete: at least one template failed\n";
    }
}

struct ReportArgs {
    std::vector<std::string> runs;
    std::string groups, out;
};

void run_report(CommandContext& ctx, const ReportArgs& args) {
    if (args.runs.empty()) throw ConfigError("report needs at least one --runs directory");
    std::map<std::string, Scalar> per_language;
    for (const auto& run : args.runs) {
        fs::path score_file = ctx.resolve(run);
        if (fs::is_directory(score_file)) score_file /= "score.json";
        ctx.note_input(score_file);
        std::ifstream in(score_file, std::ios::binary);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw IoError("malformed score file '" + score_file.string() + "': " + e.what());
        }
        if (!j.contains("lang")) {
            throw ValidationError("score file '" + score_file.string() + "' has no lang field");
        }
        auto lang = j.at("lang").get<std::string>();
        if (per_language.count(lang)) {
            throw ValidationError("duplicate language '" + lang + "' across runs");
        }
        per_language[lang] = j.at("weighted_macro_f1").get<Scalar>();
    }
    GroupSpec groups;
    if (!args.groups.empty()) {
        groups = GroupSpec::load(ctx.note_input(args.groups));
    } else {
        std::set<std::string> langs;
        for (const auto& [lang, f1] : per_language) langs.insert(lang);
        groups = GroupSpec::single_group("ALL", langs);
    }
    auto report = aggregate_report(per_language, groups);
    if (ctx.dry_run) return;
    ctx.open_run_dir();
    auto out = ctx.out_path(args.out, "report.json");
    ctx.write_manifest();
    report.save(out);
    print_wrote(out);
    for (const auto& [lang, f1] : report.per_language) {
        std::cout << "lang " << lang << " " << format_scalar(f1) << "\n";
    }
    for (const auto& [group, mean] : report.group_means) {
        std::cout << "group " << group << " " << format_scalar(mean) << "\n";
    }
    std::cout << "AVERAGE " << format_scalar(report.average) << "\n";
}

void add_train_flags(CLI::App* cmd, CommandContext& ctx, bool sentence_level) {
    config_flag(cmd, ctx, "--learning-rate", "learning_rate", "gradient step size");
    config_flag(cmd, ctx, "--max-epochs", sentence_level ? "finetune_max_epochs" : "pretrain_max_epochs",
                "epoch cap");
    config_flag(cmd, ctx, "--max-tokens", sentence_level ? "finetune_max_tokens" : "pretrain_max_tokens",
                "token window");
    config_flag(cmd, ctx, "--patience", "patience", "early-stop patience");
    config_flag(cmd, ctx, "--dropout", "dropout", "dropout rate");
    config_flag(cmd, ctx, "--batch-size", "batch_size", "batch size");
    config_flag(cmd, ctx, "--seed", "seed", "run seed");
    config_flag(cmd, ctx, "--encoder-dim", "encoder_dim", "reference encoder width");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multilingual valence-lexicon sentiment pipeline"};
    app.require_subcommand(1);

    CommandContext ctx;
    app.add_option("--workdir", ctx.workdir, "base directory for inputs, outputs, and runs/");
    app.add_option("--config", ctx.config_file, "key=value config file");
    app.add_flag("--dry-run", ctx.dry_run, "validate config and inputs, write nothing");

    NormalizeArgs normalize_args;
    auto* normalize = app.add_subcommand(
        "lexicon-normalize", "load a lexicon (raw or normalized scale) and write it normalized");
    normalize->add_option("--in", normalize_args.in, "input lexicon TSV")->required();
    normalize->add_option("--out", normalize_args.out, "output TSV path");
    config_flag(normalize, ctx, "--merge-policy", "merge_policy", "duplicate-key policy");

    ExtendArgs extend_args;
    auto* extend = app.add_subcommand("lexicon-extend", "project English scores along translation edges");
    extend->add_option("--base", extend_args.base, "base lexicon TSV")->required();
    extend->add_option("--edges", extend_args.edges, "translation edges TSV")->required();
    extend->add_option("--targets", extend_args.targets, "comma-separated target language codes")
        ->required();
    extend->add_option("--out", extend_args.out, "projected-entries TSV path");
    extend->add_option("--report", extend_args.report, "projection report JSON path");
    extend->add_option("--merged", extend_args.merged, "also write base+projected merged TSV here");
    config_flag(extend, ctx, "--merge-policy", "merge_policy", "duplicate-key policy");
    config_flag(extend, ctx, "--case-fold", "case_fold", "case-insensitive source matching (true/false)");

    FilterArgs filter_args;
    auto* filter = app.add_subcommand("lexicon-filter", "iterative self-training filter over candidates");
    filter->add_option("--base", filter_args.base, "English base lexicon TSV")->required();
    filter->add_option("--candidates", filter_args.candidates, "candidate lexicon TSV")->required();
    filter->add_option("--out", filter_args.out, "filtered lexicon TSV path");
    filter->add_option("--trace", filter_args.trace, "filter trace JSONL path");
    config_flag(filter, ctx, "--alpha", "alpha", "acceptance threshold (strict), inf allowed");
    config_flag(filter, ctx, "--beta", "beta", "minimum per-iteration acceptance count");
    config_flag(filter, ctx, "--split-ratio", "split_ratio", "train fraction");
    config_flag(filter, ctx, "--max-iterations", "max_iterations", "iteration cap");
    config_flag(filter, ctx, "--cold-start", "cold_start", "reset weights each iteration (true/false)");
    add_train_flags(filter, ctx, /*sentence_level=*/false);

    PretrainArgs pretrain_args;
    auto* pretrain_cmd = app.add_subcommand("pretrain", "word-level pretraining over a lexicon");
    pretrain_cmd->add_option("--lexicon", pretrain_args.lexicon, "lexicon TSV")->required();
    pretrain_cmd->add_option("--out", pretrain_args.out, "checkpoint path");
    config_flag(pretrain_cmd, ctx, "--objective", "objective",
                "regression | classification_binary | classification_3way");
    config_flag(pretrain_cmd, ctx, "--merge-policy", "merge_policy", "duplicate-key policy");
    add_train_flags(pretrain_cmd, ctx, /*sentence_level=*/false);

    FinetuneArgs finetune_args;
    auto* finetune_cmd = app.add_subcommand("finetune", "sentence-level fine-tuning");
    finetune_cmd->add_option("--data", finetune_args.data, "dataset dir with {train,dev,test}.tsv")
        ->required();
    finetune_cmd->add_option("--base-checkpoint", finetune_args.base_checkpoint, "warm-start checkpoint");
    finetune_cmd->add_option("--out", finetune_args.out, "checkpoint path");
    add_train_flags(finetune_cmd, ctx, /*sentence_level=*/true);

    FewshotArgs fewshot_args;
    auto* fewshot_cmd = app.add_subcommand("fewshot", "sample a few-shot dataset");
    fewshot_cmd->add_option("--data", fewshot_args.data, "dataset dir")->required();
    fewshot_cmd->add_option("--out", fewshot_args.out, "output dataset dir");
    config_flag(fewshot_cmd, ctx, "--n-train", "n_train", "training rows to sample");
    config_flag(fewshot_cmd, ctx, "--n-dev", "n_dev", "dev rows to sample");
    config_flag(fewshot_cmd, ctx, "--seed", "seed", "sampling seed");

    PredictArgs predict_args;
    auto* predict_cmd = app.add_subcommand("predict", "zero-shot sentence prediction");
    predict_cmd->add_option("--checkpoint", predict_args.checkpoint, "trained checkpoint")->required();
    predict_cmd->add_option("--in", predict_args.in, "labeled sentences TSV (gold kept)");
    predict_cmd->add_option("--texts", predict_args.texts, "plain text file, one sentence per line");
    predict_cmd->add_option("--out", predict_args.out, "predictions JSONL path");
    config_flag(predict_cmd, ctx, "--task", "task", "binary | three_way");
    config_flag(predict_cmd, ctx, "--max-tokens", "finetune_max_tokens", "inference token window");

    EvaluateArgs evaluate_args;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "weighted macro-F1 of a predictions file");
    evaluate_cmd->add_option("--pred", evaluate_args.pred, "predictions JSONL")->required();
    evaluate_cmd->add_option("--lang", evaluate_args.lang, "language code recorded in the score");
    evaluate_cmd->add_option("--out", evaluate_args.out, "score JSON path");

    PromptEvalArgs prompt_args;
    auto* prompt_cmd = app.add_subcommand("prompt-eval", "six-template prompting baseline");
    prompt_cmd->add_option("--data", prompt_args.data, "dataset dir")->required();
    prompt_cmd->add_option("--split", prompt_args.split, "train | dev | test (default test)");
    prompt_cmd->add_option("--labels", prompt_args.labels, "comma-separated label verbalizers");
    prompt_cmd->add_option("--templates", prompt_args.templates, "template_[1-6].txt directory");
    prompt_cmd->add_option("--scorer", prompt_args.scorer, "mock | http");
    prompt_cmd->add_option("--scores", prompt_args.scores, "mock scorer table JSON");
    prompt_cmd->add_option("--out", prompt_args.out, "report JSON path");
    config_flag(prompt_cmd, ctx, "--endpoint", "scorer_endpoint", "http scorer endpoint");
    config_flag(prompt_cmd, ctx, "--parallelism", "parallelism", "request parallelism bound");
    config_flag(prompt_cmd, ctx, "--max-retries", "max_retries", "scorer retry count");
    config_flag(prompt_cmd, ctx, "--retry-backoff", "retry_backoff", "initial backoff seconds");

    ReportArgs report_args;
    auto* report_cmd = app.add_subcommand("report", "merge per-language scores into a grouped report");
    report_cmd->add_option("--runs", report_args.runs, "run dirs or score.json files")->required();
    report_cmd->add_option("--groups", report_args.groups, "group spec JSON");
    report_cmd->add_option("--out", report_args.out, "report JSON path");

    CLI11_PARSE(app, argc, argv);

    auto* active = app.get_subcommands().front();
    ctx.command = active->get_name();
    try {
        ctx.resolve_config();
        if (active == normalize) run_normalize(ctx, normalize_args);
        else if (active == extend) run_extend(ctx, extend_args);
        else if (active == filter) run_filter_cmd(ctx, filter_args);
        else if (active == pretrain_cmd) run_pretrain(ctx, pretrain_args);
        else if (active == finetune_cmd) run_finetune(ctx, finetune_args);
        else if (active == fewshot_cmd) run_fewshot(ctx, fewshot_args);
        else if (active == predict_cmd) run_predict(ctx, predict_args);
        else if (active == evaluate_cmd) run_evaluate(ctx, evaluate_args);
        else if (active == prompt_cmd) run_prompt_eval(ctx, prompt_args);
        else if (active == report_cmd) run_report(ctx, report_args);
        if (ctx.dry_run) std::cout << "dry run ok\n";
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["error"] = {{"command", ctx.command}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
