// Experiment orchestration: preprocess -> train -> generate -> evaluate ->
// analyze, configured from one JSON document and reproducible as a pure
// function of (corpus bytes, config, rng seed). Every artifact embeds the
// config hash and seed; cell counts in reports always match the configured
// design, with failures carried as explicit rows rather than dropped.

#ifndef TABGEN_PIPELINE_HPP
#define TABGEN_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tabgen/conditioning.hpp"
#include "tabgen/song.hpp"

namespace tabgen {
namespace pipeline {

/// Bad input data (unreadable corpus, malformed manifest, ...); the CLI
/// maps this to exit code 2.
struct DataError : Error {
    using Error::Error;
};

struct PipelineConfig {
    std::string corpus_dir;
    std::string manifest;  // CSV: filename,genre
    std::string output_dir;
    uint64_t rng_seed = 42;

    struct Model {
        int order = 4;
        double smoothing = 0.01;
        double interpolation_base = 4.0;
        std::string path = "model.json";
    } model;

    struct Classifier {
        double lambda = 1.0;
        uint64_t split_seed = 7;
        std::string path = "classifier.json";
    } classifier;

    struct Generation {
        int max_tokens = 1024;
        double temperature = 1.0;
        int top_k = 5;
    } generation;

    struct Experiment {
        int instrument_per_cell = 10;
        int genre_per_cell = 10;
        int snippets_per_genre = 5;
        std::vector<std::string> genres = {"metal", "rock", "punk", "folk", "classical"};
    } experiment;

    struct Metrics {
        int gc_resolution = 16;
        bool include_prompt = false;
        int measure_ticks = 3840;
    } metrics;

    struct Stats {
        double alpha = 0.05;
    } stats;

    struct Preprocess {
        long min_genre_count = 200;
        double fail_threshold = 0.1;  // abort when more than this fraction fails to parse
        std::string inject = "both";  // both | instruments | genre
    } preprocess;

    static PipelineConfig from_json_text(const std::string& text);
    static PipelineConfig from_json_file(const std::filesystem::path& path);
    std::string to_json_text() const;
    /// FNV-1a hash of the canonical JSON dump, embedded in every artifact.
    std::string hash() const;
};

struct PreprocessResult {
    long n_songs = 0;
    long n_failed = 0;
    std::vector<std::pair<std::string, std::string>> failures;  // file, reason
    CorpusStats stats;
    std::set<GenreId> admitted;
    std::filesystem::path conditioned_dir;
};

/// Re-emits every corpus song with injected control tokens: an instrument
/// block, a genre token when the manifest label is admitted
/// (> min_genre_count songs), or both, per preprocess.inject. Writes
/// <output_dir>/conditioned/ and <output_dir>/corpus_stats.json. Throws
/// DataError when the failure ratio exceeds the threshold.
PreprocessResult run_preprocess(const PipelineConfig& config);

/// Trains the n-gram model on <corpus_dir> and writes <output_dir>/<model.path>.
std::filesystem::path run_train(const PipelineConfig& config);

/// Trains the genre classifier; labels come from genre tokens when present,
/// else from the manifest. Writes the classifier file and a training report.
std::filesystem::path run_train_classifier(const PipelineConfig& config);

/// Generates `count` continuations of one prompt into out_dir. The prompt
/// file variant reads and prefix-parses the file first.
std::vector<std::filesystem::path> run_generate(const PipelineConfig& config,
                                                const std::filesystem::path& prompt_file,
                                                int count,
                                                const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> run_generate(const PipelineConfig& config,
                                                std::span<const Token> prompt, int count,
                                                const std::filesystem::path& out_dir);

enum class ExperimentKind { instrument, genre };

struct ExperimentResult {
    std::filesystem::path metrics_csv;
    std::filesystem::path stats_json;
    std::filesystem::path report_csv;  // presence means / score matrix
    std::filesystem::path cells_json;
    long songs_generated = 0;
};

/// Runs the full grid (8 combos x 4 modes, or configured genres x 4 modes),
/// generates per-cell songs, computes all applicable metrics, and writes the
/// metric CSV, the nonparametric analysis JSON, and the summary report.
ExperimentResult run_experiment(const PipelineConfig& config, ExperimentKind kind);

struct BaselinesResult {
    std::filesystem::path pce_json;
    std::filesystem::path gc_json;
    std::filesystem::path boxplots_csv;
    bool pce_ordering_ok = false;  // median PCE random > groundtruth
    bool gc_ordering_ok = false;   // median GC random < groundtruth
};

enum class BaselineKind { pitch, rhythm, both };

/// Builds pitch- and/or rhythm-randomized corpora and the six-group
/// (modes + groundtruth + random) PCE and GC analyses. `experiment_csv`
/// optionally supplies the per-mode generated-song metrics.
BaselinesResult run_baselines(const PipelineConfig& config,
                              const std::optional<std::filesystem::path>& experiment_csv,
                              BaselineKind kind = BaselineKind::both);

/// Kruskal-Wallis + pairwise Wilcoxon + boxplot summaries of one metric
/// column of a metrics CSV, grouped by the `group` column. Writes
/// <out_prefix>.json and <out_prefix>_boxplots.csv.
std::filesystem::path run_stats(const PipelineConfig& config,
                                const std::filesystem::path& metrics_csv,
                                const std::string& metric,
                                const std::filesystem::path& out_prefix);

/// Plain-text rendering of the known artifacts in a directory.
std::string render_report(const std::filesystem::path& dir);

// Shared corpus helpers.
std::vector<std::filesystem::path> list_token_files(const std::filesystem::path& dir);
std::map<std::string, GenreId> read_manifest(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string format_double(double value);

}  // namespace pipeline
}  // namespace tabgen

#endif  // TABGEN_PIPELINE_HPP
