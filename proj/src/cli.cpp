#include "nff/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "nff/corpus.hpp"
#include "nff/eval.hpp"
#include "nff/sweep.hpp"
#include "nff/trainer.hpp"

namespace nff::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

BioOptions g_bio;

std::vector<AnnotatedSentence> load(const std::string& path, const std::string& format) {
    return load_sentences(path, parse_format(format), g_bio);
}

template <typename... Args>
void log(fmt::format_string<Args...> format, Args&&... args) {
    fmt::print(stderr, "nff: {}\n", fmt::format(format, std::forward<Args>(args)...));
}

// Train flags shared by `train` and `sweep`. A cap of 0 means uncapped.
struct TrainFlags {
    TrainConfig config;
    std::size_t max_span_len = 0;
    std::string config_file;

    TrainConfig resolve() const {
        TrainConfig c = config;
        c.max_span_len = max_span_len == 0 ? std::nullopt : std::optional<std::size_t>(max_span_len);
        c.validate();
        return c;
    }
};

void add_train_flags(CLI::App* app, TrainFlags& flags) {
    auto& c = flags.config;
    app->add_option("--gamma", c.gamma, "Sampling rate for within-entity negatives (1: full negative, 0: ignore)")
        ->capture_default_str();
    app->add_option("--epochs", c.epochs, "Training epochs")->capture_default_str();
    app->add_option("--batch-size", c.batch_size, "Spans per gradient step")->capture_default_str();
    app->add_option("--lr", c.learning_rate, "Learning rate")->capture_default_str();
    app->add_option("--l2", c.l2, "L2 penalty on weights")->capture_default_str();
    app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    app->add_option("--max-span-len", flags.max_span_len, "Longest span considered (0 = no cap)")
        ->capture_default_str();
    app->add_option("--feature-dim", c.feature_dim, "Hashed feature space size")->capture_default_str();
    app->add_option("--config", flags.config_file, "key = value file; command-line flags take precedence")
        ->check(CLI::ExistingFile);
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Lines are `key = value`; '#' starts a comment, [sections] are ignored,
// underscores in keys match dashes in flag names. Options already given on
// the command line are left alone.
void apply_config_file(CLI::App* app, const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty() || line.front() == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(fmt::format("{}: line {}: expected 'key = value'", path, line_no));
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
            value = value.substr(1, value.size() - 2);
        }
        std::replace(key.begin(), key.end(), '_', '-');
        CLI::Option* opt = key == "config" ? nullptr : app->get_option_no_throw("--" + key);
        if (opt == nullptr) throw Error(fmt::format("{}: line {}: unknown setting '{}'", path, line_no, key));
        if (opt->count() > 0) continue;
        try {
            opt->add_result(value);
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw Error(fmt::format("{}: line {}: {}: {}", path, line_no, key, e.what()));
        }
    }
}

ojson config_json(const TrainConfig& c) {
    ojson j;
    j["gamma"] = c.gamma;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["learning_rate"] = c.learning_rate;
    j["l2"] = c.l2;
    j["seed"] = c.seed;
    j["max_span_len"] = c.max_span_len ? ojson(*c.max_span_len) : ojson(nullptr);
    j["feature_dim"] = c.feature_dim;
    j["gold_supervision"] = c.gold_supervision;
    return j;
}

void write_meta(const std::string& output, const ojson& meta) {
    write_text_file(output + ".meta.json", meta.dump(2) + "\n");
}

void require_parent_dir(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) {
        throw Error(fmt::format("output directory '{}' does not exist", parent.string()));
    }
}

// ---- subcommands ------------------------------------------------------------

struct FlattenArgs {
    std::string input, output, format = "jsonl";
};

int cmd_flatten(const FlattenArgs& a) {
    require_parent_dir(a.output);
    const auto sentences = load(a.input, a.format);
    const auto flat = flatten_dataset(sentences);
    std::size_t removed = 0;
    for (std::size_t i = 0; i < sentences.size(); ++i) removed += sentences[i].entities.size() - flat[i].entities.size();
    write_text_file(a.output, write_json_spans(flat));
    write_meta(a.output, ojson{{"command", "flatten"}, {"input", a.input}, {"format", a.format}, {"removed", removed}});
    fmt::print("removed {} nested entities from {} sentences\n", removed, sentences.size());
    return 0;
}

struct StatsArgs {
    std::string input, format = "jsonl";
};

int cmd_stats(const StatsArgs& a) {
    const auto stats = compute_stats(load(a.input, a.format));
    fmt::print("{:<22}{:>10}\n", "sentences", stats.sentences);
    fmt::print("{:<22}{:>10.1f}\n", "  nested (%)", stats.nested_sentence_pct);
    fmt::print("{:<22}{:>10}\n", "entities", stats.entities);
    fmt::print("{:<22}{:>10.1f}\n", "  nested (%)", stats.nested_entity_pct);
    fmt::print("{:<22}{:>10.1f}\n", "  average length", stats.average_length);
    fmt::print("{:<22}{:>10}\n", "  maximum length", stats.max_length);
    ojson j;
    j["sentences"] = stats.sentences;
    j["nested_sentences"] = stats.nested_sentences;
    j["nested_sentence_pct"] = stats.nested_sentence_pct;
    j["entities"] = stats.entities;
    j["nested_entities"] = stats.nested_entities;
    j["nested_entity_pct"] = stats.nested_entity_pct;
    j["average_length"] = stats.average_length;
    j["max_length"] = stats.max_length;
    fmt::print("{}\n", j.dump());
    return 0;
}

struct SynthArgs {
    SynthConfig config;
    std::string out_dir;
};

int cmd_synth(const SynthArgs& a) {
    const SynthCorpus synth = generate_synth(a.config);
    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    for (const auto& [name, sentences] : synth.corpus.splits) {
        write_text_file((dir / (name + ".jsonl")).string(), write_json_spans(sentences));
    }
    const auto& c = a.config;
    ojson config{{"seed", c.seed},
                 {"train_sentences", c.train_sentences},
                 {"dev_sentences", c.dev_sentences},
                 {"test_sentences", c.test_sentences},
                 {"nesting_probability", c.nesting_probability},
                 {"first_names", c.first_names},
                 {"last_names", c.last_names},
                 {"cities", c.cities},
                 {"org_suffixes", c.org_suffixes},
                 {"filler_words", c.filler_words}};
    write_text_file((dir / "config.json").string(), config.dump(2) + "\n");
    ojson planted;
    for (const auto& [name, p] : synth.planted) {
        planted[name] = {{"sentences", p.sentences},
                         {"nested_sentences", p.nested_sentences},
                         {"entities", p.entities},
                         {"nested_entities", p.nested_entities}};
    }
    write_text_file((dir / "planted.json").string(), planted.dump(2) + "\n");
    log("seed {}: wrote {} splits to {}", c.seed, synth.corpus.splits.size(), a.out_dir);
    return 0;
}

struct TrainArgs {
    std::string train, dev, model, format = "jsonl";
    bool gold_supervision = false;
    TrainFlags flags;
};

int cmd_train(const TrainArgs& a) {
    TrainConfig config = a.flags.resolve();
    config.gold_supervision = a.gold_supervision;
    require_parent_dir(a.model);
    const auto train_split = load(a.train, a.format);
    const auto dev_split = load(a.dev, a.format);
    log("seed {}, gamma {}, {} training sentences", config.seed, config.gamma, train_split.size());

    TrainResult result;
    try {
        result = train(train_split, dev_split, config);
    } catch (const NotFlatError& err) {
        throw Error(fmt::format("{}: {}", a.train, err.what()));
    }
    for (const auto& e : result.history) {
        log("epoch {:>3}  samples {:>8}  loss {:.6f}  dev F1 {:.4f}", e.epoch, e.samples, e.train_loss, e.dev_f1);
    }
    log("keeping epoch {}", result.best_epoch);
    save_checkpoint(a.model, result.model, config);
    return 0;
}

struct PredictArgs {
    std::string model, input, output, format = "jsonl";
    bool post = false;
};

int cmd_predict(const PredictArgs& a) {
    require_parent_dir(a.output);
    const Checkpoint ckpt = load_checkpoint(a.model);
    const auto sentences = load(a.input, a.format);
    auto predicted = predict(ckpt.model, sentences, ckpt.config.max_span_len);
    if (a.post) {
        for (auto& s : predicted) s.entities = post_process(s.entities);
    }
    write_text_file(a.output, write_json_spans(predicted));
    write_meta(a.output, ojson{{"command", "predict"},
                               {"model", a.model},
                               {"input", a.input},
                               {"post_process", a.post},
                               {"config", config_json(ckpt.config)}});
    log("predicted {} sentences", predicted.size());
    return 0;
}

struct EvalArgs {
    std::string gold, pred, scope = "outermost", json_out, reference, format = "jsonl";
};

std::map<std::string, double> read_reference(const std::string& path) {
    std::map<std::string, double> values;
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw Error(fmt::format("{}: line {}: expected 'label,value'", path, line_no));
        const std::string label = line.substr(0, comma);
        const std::string value = line.substr(comma + 1);
        try {
            std::size_t used = 0;
            const double v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
            values[label] = v;
        } catch (const std::exception&) {
            if (line_no == 1) continue;  // header
            throw Error(fmt::format("{}: line {}: '{}' is not a number", path, line_no, value));
        }
    }
    return values;
}

int cmd_eval(const EvalArgs& a) {
    const auto gold = load(a.gold, a.format);
    const auto pred = load(a.pred, "jsonl");
    const ScopeDefinition scope = a.scope == "full" ? ScopeDefinition::FullGold : ScopeDefinition::Outermost;
    EvalReport report = partitioned_eval(gold, pred, scope);

    if (!a.reference.empty()) {
        const auto reference = read_reference(a.reference);
        std::vector<double> ours, theirs;
        for (const auto& [label, prf] : report.per_category) {
            if (auto it = reference.find(label); it != reference.end()) {
                ours.push_back(prf.f1());
                theirs.push_back(it->second);
            }
        }
        if (ours.size() < 2) {
            throw Error(fmt::format("{}: shares {} label(s) with the within-entity categories; correlation needs two",
                                    a.reference, ours.size()));
        }
        report.pearson = pearson(ours, theirs);
    }

    PRF sum = report.within;
    sum += report.out;
    const bool decomposition_ok = sum == report.overall;
    if (!decomposition_ok) throw Error("within + out counts do not add up to overall counts");

    ojson j = to_json(report);
    j["scope"] = a.scope;
    j["decomposition_ok"] = decomposition_ok;
    const std::string text = j.dump(2) + "\n";
    fmt::print("{}", text);
    if (!a.json_out.empty()) {
        require_parent_dir(a.json_out);
        write_text_file(a.json_out, text);
        write_meta(a.json_out, ojson{{"command", "eval"}, {"gold", a.gold}, {"pred", a.pred}, {"scope", a.scope}});
    }
    log("within F1 {:.4f}  out F1 {:.4f}  overall F1 {:.4f}", report.within.f1(), report.out.f1(),
        report.overall.f1());
    return 0;
}

struct SweepArgs {
    std::string corpus, out;
    std::vector<double> gammas{0.0, kDefaultGamma, 1.0};
    std::size_t seeds = 1;
    std::size_t jobs = 1;
    bool include_gold = false;
    TrainFlags flags;
};

int cmd_sweep(const SweepArgs& a) {
    const TrainConfig base = a.flags.resolve();
    require_parent_dir(a.out);
    for (double g : a.gammas) {
        if (!(g >= 0.0 && g <= 1.0)) throw Error(fmt::format("gamma {} is outside [0, 1]", g));
    }
    const SweepData data = load_sweep_data(a.corpus);
    SweepOptions options;
    options.gammas = a.gammas;
    options.seeds = a.seeds;
    options.include_gold = a.include_gold;
    options.jobs = a.jobs;
    log("sweep over {} gammas x {} seeds (base seed {}), {} jobs", a.gammas.size(), a.seeds, base.seed, a.jobs);
    const auto rows = gamma_sweep(data, options, base);
    write_text_file(a.out, sweep_csv(rows));
    write_meta(a.out, ojson{{"command", "sweep"},
                            {"corpus", a.corpus},
                            {"gammas", a.gammas},
                            {"seeds", a.seeds},
                            {"include_gold", a.include_gold},
                            {"config", config_json(base)}});
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Nested-from-flat span NER: flatten, train, predict, evaluate"};
    app.require_subcommand(1);
    bool lenient = false;
    app.add_flag("--lenient", lenient, "BIO input: start a new entity on an I- tag that continues nothing");

    FlattenArgs flatten_args;
    auto* flatten = app.add_subcommand("flatten", "Keep only the outermost entities of a corpus");
    flatten->add_option("input", flatten_args.input, "Input corpus")->required()->check(CLI::ExistingFile);
    flatten->add_option("output", flatten_args.output, "Output JSON-lines file")->required();
    flatten->add_option("--format", flatten_args.format, "Input format: jsonl or bio")->capture_default_str();

    StatsArgs stats_args;
    auto* stats = app.add_subcommand("stats", "Descriptive statistics of a corpus");
    stats->add_option("input", stats_args.input, "Input corpus")->required()->check(CLI::ExistingFile);
    stats->add_option("--format", stats_args.format, "Input format: jsonl or bio")->capture_default_str();

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate the synthetic nested corpus");
    {
        auto& c = synth_args.config;
        synth->add_option("--out-dir", synth_args.out_dir, "Output directory")->required();
        synth->add_option("--seed", c.seed, "Random seed")->capture_default_str();
        synth->add_option("--train", c.train_sentences, "Train sentences")->capture_default_str();
        synth->add_option("--dev", c.dev_sentences, "Dev sentences")->capture_default_str();
        synth->add_option("--test", c.test_sentences, "Test sentences")->capture_default_str();
        synth->add_option("--nesting", c.nesting_probability, "Probability a sentence holds a nested entity")
            ->capture_default_str();
        synth->add_option("--first-names", c.first_names)->capture_default_str();
        synth->add_option("--last-names", c.last_names)->capture_default_str();
        synth->add_option("--cities", c.cities)->capture_default_str();
        synth->add_option("--org-suffixes", c.org_suffixes)->capture_default_str();
        synth->add_option("--filler-words", c.filler_words)->capture_default_str();
    }

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train a span classifier");
    train_cmd->add_option("--train", train_args.train, "Flat training split")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--dev", train_args.dev, "Dev split")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--model", train_args.model, "Checkpoint to write")->required();
    train_cmd->add_option("--format", train_args.format, "Input format: jsonl or bio")->capture_default_str();
    train_cmd->add_flag("--gold-supervision", train_args.gold_supervision,
                        "Train on nested gold annotations (upper-bound condition)");
    add_train_flags(train_cmd, train_args.flags);

    PredictArgs predict_args;
    auto* predict_cmd = app.add_subcommand("predict", "Decode entities with a trained model");
    predict_cmd->add_option("--model", predict_args.model, "Checkpoint")->required()->check(CLI::ExistingFile);
    predict_cmd->add_option("--input", predict_args.input, "Sentences to tag")->required()->check(CLI::ExistingFile);
    predict_cmd->add_option("--output", predict_args.output, "JSON-lines predictions")->required();
    predict_cmd->add_option("--format", predict_args.format, "Input format: jsonl or bio")->capture_default_str();
    predict_cmd->add_flag("--post-process", predict_args.post, "Drop PER inside PER, relabel nested ORG as LOC");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Within / out-of-entity / overall evaluation");
    eval_cmd->add_option("--gold", eval_args.gold, "Gold corpus (nested)")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--pred", eval_args.pred, "Predictions (JSON-lines)")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--scope", eval_args.scope, "Within-entity region from 'outermost' or 'full' gold")
        ->check(CLI::IsMember({"outermost", "full"}))
        ->capture_default_str();
    eval_cmd->add_option("--json", eval_args.json_out, "Also write the report here");
    eval_cmd->add_option("--reference", eval_args.reference,
                         "CSV of label,F1 to correlate with per-category within F1")
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--format", eval_args.format, "Gold format: jsonl or bio")->capture_default_str();

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "Train and evaluate over sampling rates and seeds");
    sweep->add_option("--corpus", sweep_args.corpus, "Directory written by `nff synth`")
        ->required()
        ->check(CLI::ExistingDirectory);
    sweep->add_option("--gammas", sweep_args.gammas, "Comma-separated sampling rates")
        ->delimiter(',')
        ->capture_default_str();
    sweep->add_option("--seeds", sweep_args.seeds, "Runs per gamma")->capture_default_str();
    sweep->add_option("--jobs", sweep_args.jobs, "Parallel training runs")->capture_default_str();
    sweep->add_option("--out", sweep_args.out, "CSV to write")->required();
    sweep->add_flag("--include-gold", sweep_args.include_gold, "Add a gold-supervision row");
    add_train_flags(sweep, sweep_args.flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    g_bio.strict = !lenient;
    try {
        if (*train_cmd && !train_args.flags.config_file.empty()) apply_config_file(train_cmd, train_args.flags.config_file);
        if (*sweep && !sweep_args.flags.config_file.empty()) apply_config_file(sweep, sweep_args.flags.config_file);
        if (*flatten) return cmd_flatten(flatten_args);
        if (*stats) return cmd_stats(stats_args);
        if (*synth) return cmd_synth(synth_args);
        if (*train_cmd) return cmd_train(train_args);
        if (*predict_cmd) return cmd_predict(predict_args);
        if (*eval_cmd) return cmd_eval(eval_args);
        if (*sweep) return cmd_sweep(sweep_args);
    } catch (const std::exception& e) {
        fmt::print(stderr, "nff: error: {}\n", e.what());
        return 1;
    }
    return 1;
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"nff"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace nff::cli
