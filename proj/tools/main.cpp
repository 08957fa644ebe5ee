// tabgen: tab-token corpus conditioning, generation, and evaluation pipeline.
//
// Subcommands: preprocess, train, generate, experiment, baselines, stats,
// report. All take a JSON config (--config); individual flags override
// config fields. Exit codes: 0 success, 1 usage error, 2 data error,
// 3 internal error.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "tabgen/pipeline.hpp"
#include "tabgen/prompting.hpp"

namespace {

using tabgen::pipeline::ExperimentKind;
using tabgen::pipeline::PipelineConfig;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct CommonFlags {
    std::string config_path;
    std::optional<std::string> corpus_dir;
    std::optional<std::string> manifest;
    std::optional<std::string> output_dir;
    std::optional<uint64_t> rng_seed;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON pipeline configuration file");
        cmd->add_option("--corpus", corpus_dir, "corpus directory (token files)");
        cmd->add_option("--manifest", manifest, "CSV manifest: filename,genre");
        cmd->add_option("--out", output_dir, "output directory");
        cmd->add_option("--rng-seed", rng_seed, "master random seed");
    }

    PipelineConfig resolve() const {
        PipelineConfig config;
        if (!config_path.empty()) config = PipelineConfig::from_json_file(config_path);
        if (corpus_dir) config.corpus_dir = *corpus_dir;
        if (manifest) config.manifest = *manifest;
        if (output_dir) config.output_dir = *output_dir;
        if (rng_seed) config.rng_seed = *rng_seed;
        if (config.output_dir.empty()) config.output_dir = ".";
        return config;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tab-token conditioning and evaluation pipeline"};
    app.require_subcommand(1);

    // preprocess
    auto* preprocess = app.add_subcommand(
        "preprocess", "inject control tokens into a corpus and report corpus statistics");
    CommonFlags pre_flags;
    pre_flags.attach(preprocess);
    std::optional<long> min_genre_count;
    preprocess->add_option("--min-genre-count", min_genre_count,
                           "admit genres with strictly more songs than this (default 200)");
    std::optional<std::string> inject;
    preprocess->add_option("--inject", inject, "control tokens to inject (default both)")
        ->check(CLI::IsMember({"both", "instruments", "genre"}));

    // train
    auto* train = app.add_subcommand("train", "train the sequence model or the classifier");
    CommonFlags train_flags;
    train_flags.attach(train);
    std::string train_kind = "ngram";
    std::optional<int> order;
    std::optional<double> smoothing;
    std::optional<std::string> model_out;
    train->add_option("--kind", train_kind, "ngram | classifier")
        ->check(CLI::IsMember({"ngram", "classifier"}));
    train->add_option("--order", order, "n-gram context length");
    train->add_option("--smoothing", smoothing, "add-lambda smoothing constant");
    train->add_option("--model-file", model_out, "output file name for the trained model");

    // generate
    auto* generate = app.add_subcommand("generate", "sample continuations of a prompt file");
    CommonFlags gen_flags;
    gen_flags.attach(generate);
    std::string prompt_file;
    std::optional<std::string> gen_out_dir;
    int gen_count = 1;
    std::optional<std::string> model_file;
    std::optional<int> max_tokens, top_k;
    std::optional<double> temperature;
    std::string prompt_mode, prompt_combo, prompt_genre, snippet_file;
    generate->add_option("--prompt", prompt_file,
                         "prompt token file (alternative to --mode and a target)");
    generate->add_option("--mode", prompt_mode,
                         "build the prompt: full | partial | empty | unconditional")
        ->check(CLI::IsMember({"full", "partial", "empty", "unconditional"}));
    generate->add_option("--combo", prompt_combo,
                         "instrument combination id for a built prompt (e.g. dg-b-d)");
    generate->add_option("--genre", prompt_genre, "genre name for a built prompt");
    generate->add_option("--snippet-file", snippet_file,
                         "two-measure token snippet for genre prompts");
    generate->add_option("--model", model_file, "trained model file");
    generate->add_option("--count", gen_count, "number of songs to generate");
    generate->add_option("--gen-out", gen_out_dir,
                         "directory for generated songs (default <out>/generated)");
    generate->add_option("--max-tokens", max_tokens, "generation cap (default 1024)");
    generate->add_option("--temperature", temperature, "sampling temperature");
    generate->add_option("--top-k", top_k, "top-k truncation");

    // experiment
    auto* experiment = app.add_subcommand(
        "experiment", "run the full conditioning experiment grid and its analyses");
    CommonFlags exp_flags;
    exp_flags.attach(experiment);
    std::string exp_kind;
    std::optional<int> per_cell;
    bool paper_scale = false;
    std::optional<std::string> exp_model_file, classifier_file;
    experiment->add_option("--kind", exp_kind, "instrument | genre")
        ->required()
        ->check(CLI::IsMember({"instrument", "genre"}));
    experiment->add_option("--per-cell", per_cell, "songs per (target, prompt mode) cell");
    experiment->add_option("--model", exp_model_file, "trained model file");
    experiment->add_option("--classifier", classifier_file,
                           "trained classifier file (genre experiment)");
    experiment->add_flag("--paper-scale", paper_scale,
                         "use the full-size cell counts (150 instrument / 20 genre)");
    std::optional<int> exp_max_tokens, exp_top_k;
    std::optional<double> exp_temperature;
    experiment->add_option("--max-tokens", exp_max_tokens, "generation cap (default 1024)");
    experiment->add_option("--temperature", exp_temperature, "sampling temperature");
    experiment->add_option("--top-k", exp_top_k, "top-k truncation");

    // baselines
    auto* baselines = app.add_subcommand(
        "baselines", "build randomized baseline corpora and the comparative analyses");
    CommonFlags base_flags;
    base_flags.attach(baselines);
    std::optional<std::string> experiment_csv;
    baselines->add_option("--experiment-csv", experiment_csv,
                          "metrics CSV of a prior experiment to include as prompt groups");
    std::string baseline_kind = "both";
    baselines->add_option("--kind", baseline_kind, "pitch | rhythm | both")
        ->check(CLI::IsMember({"pitch", "rhythm", "both"}));

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "nonparametric analysis of a metrics CSV");
    CommonFlags stats_flags;
    stats_flags.attach(stats_cmd);
    std::string stats_csv, stats_metric = "pce", stats_prefix = "stats";
    std::optional<double> alpha;
    stats_cmd->add_option("--metrics-csv", stats_csv, "input metrics CSV")->required();
    stats_cmd->add_option("--metric", stats_metric, "column to analyze (pce|gc|pip|uip)");
    stats_cmd->add_option("--alpha", alpha, "significance level (default .05)");
    stats_cmd->add_option("--out-prefix", stats_prefix, "output file prefix");

    // report
    auto* report = app.add_subcommand("report", "render a plain-text summary of a report dir");
    std::string report_dir = ".";
    report->add_option("dir", report_dir, "directory holding pipeline artifacts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (preprocess->parsed()) {
            PipelineConfig config = pre_flags.resolve();
            if (min_genre_count) config.preprocess.min_genre_count = *min_genre_count;
            if (inject) config.preprocess.inject = *inject;
            const auto result = tabgen::pipeline::run_preprocess(config);
            std::cout << "conditioned " << result.n_songs << " songs ("
                      << result.n_failed << " failed) -> "
                      << result.conditioned_dir.string() << "\n";
            for (const auto& [file, reason] : result.failures) {
                std::cerr << "  failed: " << file << ": " << reason << "\n";
            }
            return 0;
        }
        if (train->parsed()) {
            PipelineConfig config = train_flags.resolve();
            if (order) config.model.order = *order;
            if (smoothing) config.model.smoothing = *smoothing;
            if (train_kind == "ngram") {
                if (model_out) config.model.path = *model_out;
                std::cout << "model -> " << tabgen::pipeline::run_train(config).string()
                          << "\n";
            } else {
                if (model_out) config.classifier.path = *model_out;
                std::cout << "classifier -> "
                          << tabgen::pipeline::run_train_classifier(config).string() << "\n";
            }
            return 0;
        }
        if (generate->parsed()) {
            PipelineConfig config = gen_flags.resolve();
            if (model_file) config.model.path = *model_file;
            if (max_tokens) config.generation.max_tokens = *max_tokens;
            if (temperature) config.generation.temperature = *temperature;
            if (top_k) config.generation.top_k = *top_k;
            const std::filesystem::path gen_dir =
                gen_out_dir ? std::filesystem::path(*gen_out_dir)
                            : std::filesystem::path(config.output_dir) / "generated";
            std::vector<std::filesystem::path> files;
            if (!prompt_file.empty()) {
                files = tabgen::pipeline::run_generate(config, prompt_file, gen_count,
                                                       gen_dir);
            } else if (!prompt_mode.empty()) {
                tabgen::PromptSpec spec;
                spec.mode = *tabgen::prompt_mode_from_name(prompt_mode);
                std::vector<tabgen::Token> prompt;
                if (!prompt_combo.empty()) {
                    const auto combo = tabgen::InstrumentCombo::from_id(prompt_combo);
                    if (!combo) {
                        std::cerr << "unknown combo id: " << prompt_combo << "\n";
                        return kExitUsage;
                    }
                    spec.combo = *combo;
                    spec.seed_notes = tabgen::default_seed_notes(*combo);
                    prompt = tabgen::build_instrument_prompt(spec);
                } else if (!prompt_genre.empty()) {
                    const auto genre = tabgen::GenreId::parse(prompt_genre);
                    if (!genre) {
                        std::cerr << "bad genre label: " << prompt_genre << "\n";
                        return kExitUsage;
                    }
                    std::vector<tabgen::Token> snippet;
                    if (!snippet_file.empty()) {
                        std::istringstream in(
                            tabgen::pipeline::read_text_file(snippet_file));
                        std::string word;
                        while (in >> word) snippet.push_back(tabgen::parse_token(word));
                    }
                    spec.genre_target = tabgen::GenrePromptTarget{*genre, snippet};
                    prompt = tabgen::build_genre_prompt(spec);
                } else {
                    std::cerr << "--mode needs --combo or --genre\n";
                    return kExitUsage;
                }
                files = tabgen::pipeline::run_generate(config, prompt, gen_count, gen_dir);
            } else {
                std::cerr << "generate needs --prompt or --mode with a target\n";
                return kExitUsage;
            }
            std::cout << files.size() << " songs -> " << gen_dir.string() << "\n";
            return 0;
        }
        if (experiment->parsed()) {
            PipelineConfig config = exp_flags.resolve();
            if (exp_model_file) config.model.path = *exp_model_file;
            if (classifier_file) config.classifier.path = *classifier_file;
            if (paper_scale) {
                config.experiment.instrument_per_cell = 150;
                config.experiment.genre_per_cell = 20;
            }
            if (per_cell) {
                config.experiment.instrument_per_cell = *per_cell;
                config.experiment.genre_per_cell = *per_cell;
            }
            if (exp_max_tokens) config.generation.max_tokens = *exp_max_tokens;
            if (exp_temperature) config.generation.temperature = *exp_temperature;
            if (exp_top_k) config.generation.top_k = *exp_top_k;
            const auto kind = exp_kind == "instrument" ? ExperimentKind::instrument
                                                       : ExperimentKind::genre;
            const auto result = tabgen::pipeline::run_experiment(config, kind);
            std::cout << result.songs_generated << " songs generated\n"
                      << "metrics: " << result.metrics_csv.string() << "\n"
                      << "stats:   " << result.stats_json.string() << "\n"
                      << "report:  " << result.report_csv.string() << "\n";
            return 0;
        }
        if (baselines->parsed()) {
            PipelineConfig config = base_flags.resolve();
            std::optional<std::filesystem::path> csv;
            if (experiment_csv) csv = *experiment_csv;
            const auto kind = baseline_kind == "pitch"
                                  ? tabgen::pipeline::BaselineKind::pitch
                                  : baseline_kind == "rhythm"
                                        ? tabgen::pipeline::BaselineKind::rhythm
                                        : tabgen::pipeline::BaselineKind::both;
            const auto result = tabgen::pipeline::run_baselines(config, csv, kind);
            if (baseline_kind != "rhythm") {
                std::cout << "pce analysis: " << result.pce_json.string()
                          << " (random median above groundtruth: "
                          << (result.pce_ordering_ok ? "yes" : "no") << ")\n";
            }
            if (baseline_kind != "pitch") {
                std::cout << "gc analysis:  " << result.gc_json.string()
                          << " (random median below groundtruth: "
                          << (result.gc_ordering_ok ? "yes" : "no") << ")\n";
            }
            return 0;
        }
        if (stats_cmd->parsed()) {
            PipelineConfig config = stats_flags.resolve();
            if (alpha) config.stats.alpha = *alpha;
            const auto out = tabgen::pipeline::run_stats(
                config, stats_csv, stats_metric,
                std::filesystem::path(config.output_dir) / stats_prefix);
            std::cout << "analysis -> " << out.string() << "\n";
            return 0;
        }
        if (report->parsed()) {
            std::cout << tabgen::pipeline::render_report(report_dir);
            return 0;
        }
    } catch (const tabgen::pipeline::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const tabgen::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}
