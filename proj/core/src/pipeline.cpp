#include "tabgen/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>

#include "tabgen/genre_classifier.hpp"
#include "tabgen/metrics.hpp"
#include "tabgen/ngram.hpp"
#include "tabgen/prompting.hpp"
#include "tabgen/rng.hpp"
#include "tabgen/stats.hpp"

namespace tabgen {
namespace pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

uint64_t fnv1a64(std::string_view text) {
    uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string hex64(uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string meta_line(const PipelineConfig& config) {
    return "# tabgen config=" + config.hash() + " seed=" + std::to_string(config.rng_seed);
}

json meta_json(const PipelineConfig& config) {
    return json{{"config_hash", config.hash()}, {"rng_seed", config.rng_seed}};
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

metrics::MetricOptions metric_options(const PipelineConfig& config) {
    metrics::MetricOptions options;
    options.segment.measure_ticks = config.metrics.measure_ticks;
    options.groove_resolution = config.metrics.gc_resolution;
    options.include_prompt = config.metrics.include_prompt;
    return options;
}

struct LoadedCorpus {
    std::vector<std::string> names;
    std::vector<Song> songs;
};

LoadedCorpus load_corpus(const fs::path& dir) {
    LoadedCorpus corpus;
    for (const auto& path : list_token_files(dir)) {
        corpus.names.push_back(path.filename().string());
        try {
            corpus.songs.push_back(parse_song(read_text_file(path)));
        } catch (const Error& e) {
            throw DataError("cannot parse " + path.string() + ": " + e.what());
        }
    }
    if (corpus.songs.empty()) throw DataError("no token files in " + dir.string());
    return corpus;
}

std::vector<std::vector<std::string>> corpus_token_texts(const LoadedCorpus& corpus) {
    std::vector<std::vector<std::string>> sequences;
    sequences.reserve(corpus.songs.size());
    for (const Song& song : corpus.songs) {
        std::vector<std::string> texts;
        texts.reserve(song.tokens.size());
        for (const Token& token : song.tokens) texts.push_back(serialize_token(token));
        sequences.push_back(std::move(texts));
    }
    return sequences;
}

std::string csv_field(const std::optional<double>& value) {
    return value ? format_double(*value) : std::string{};
}

struct SongRecord {
    std::string song_id;
    std::string group;
    std::string mode;
    std::string target;
    std::optional<double> pce, gc, pip, uip;
    std::string error;
    std::string file;
    size_t prompt_tokens = 0;
    size_t generated_tokens = 0;
    std::optional<Song> parsed;
};

struct Cell {
    std::string target;  // combo id or genre name
    PromptMode mode = PromptMode::full;
    std::vector<std::vector<Token>> prompts;    // one per song
    std::set<InstrumentId> prompted;            // instrument experiment only
    std::optional<GenreId> intended;            // genre experiment only
    uint64_t seed = 0;

    std::string id() const {
        return target + "-" + std::string(prompt_mode_name(mode));
    }
};

struct CellOutcome {
    std::string cell_id;
    std::vector<SongRecord> songs;
    long failures = 0;
    bool aborted = false;
};

CellOutcome run_cell(const Cell& cell, const lm::SequenceModel& model,
                     const PipelineConfig& config, ExperimentKind kind,
                     const fs::path& generation_dir) {
    const int per_cell = kind == ExperimentKind::instrument
                             ? config.experiment.instrument_per_cell
                             : config.experiment.genre_per_cell;
    const metrics::MetricOptions options = metric_options(config);
    const fs::path cell_dir = generation_dir / cell.id();
    fs::create_directories(cell_dir);

    CellOutcome outcome;
    outcome.cell_id = cell.id();
    for (int j = 0; j < per_cell; ++j) {
        const auto& prompt = cell.prompts[static_cast<size_t>(j) % cell.prompts.size()];
        std::vector<std::string> prompt_texts;
        prompt_texts.reserve(prompt.size());
        for (const Token& token : prompt) prompt_texts.push_back(serialize_token(token));

        lm::GenerationConfig gen;
        gen.max_tokens = config.generation.max_tokens;
        gen.temperature = config.generation.temperature;
        gen.top_k = config.generation.top_k;
        gen.rng_seed = mix_seed(cell.seed, static_cast<uint64_t>(j));

        SongRecord record;
        char suffix[16];
        std::snprintf(suffix, sizeof suffix, "%04d", j);
        record.song_id = cell.id() + "-" + suffix;
        record.group = std::string(prompt_mode_name(cell.mode));
        record.mode = record.group;
        record.target = cell.target;
        record.prompt_tokens = prompt.size();

        const std::vector<std::string> output = lm::sample(model, prompt_texts, gen);
        record.generated_tokens = output.size() - prompt.size();

        std::string text;
        for (const auto& token : output) {
            text += token;
            text += '\n';
        }
        const fs::path file = cell_dir / (record.song_id + ".txt");
        write_text_file(file, text);
        record.file = file.string();

        try {
            Song song = parse_song(text);
            const size_t prompt_body =
                prompt.size() - 1 -
                static_cast<size_t>(std::find_if(prompt.begin(), prompt.end(),
                                                 [](const Token& t) {
                                                     return is<StartToken>(t);
                                                 }) -
                                    prompt.begin());
            try {
                record.pce = metrics::pitch_class_entropy(song, options);
            } catch (const metrics::NoPitchedNotesError&) {
            }
            try {
                record.gc = metrics::groove_consistency(song, options);
            } catch (const metrics::TooFewMeasuresError&) {
            }
            if (kind == ExperimentKind::instrument) {
                try {
                    const auto presence =
                        metrics::presence_from_song(song, cell.prompted, options, prompt_body);
                    record.pip = metrics::pip_score(presence);
                    record.uip = metrics::uip_score(presence);
                } catch (const metrics::ZeroDenominatorError&) {
                }
            }
            record.parsed = std::move(song);
        } catch (const Error& e) {
            record.error = e.what();
            ++outcome.failures;
        }
        outcome.songs.push_back(std::move(record));
    }
    if (outcome.failures * 2 > per_cell) outcome.aborted = true;
    return outcome;
}

void write_metrics_csv(const fs::path& path, const PipelineConfig& config,
                       std::span<const CellOutcome> outcomes) {
    std::string csv = meta_line(config) + "\n";
    csv += "song_id,group,prompt_mode,combo_or_genre,pce,gc,pip,uip\n";
    for (const auto& outcome : outcomes) {
        for (const auto& record : outcome.songs) {
            csv += record.song_id + "," + record.group + "," + record.mode + "," +
                   record.target + "," + csv_field(record.pce) + "," + csv_field(record.gc) +
                   "," + csv_field(record.pip) + "," + csv_field(record.uip) + "\n";
        }
    }
    write_text_file(path, csv);
}

json analyze_metric(const std::map<std::string, std::vector<double>>& by_group, double alpha) {
    stats::MetricGroups groups;
    for (const auto& [label, values] : by_group) {
        if (!values.empty()) groups.groups.emplace_back(label, values);
    }
    json out;
    if (groups.groups.size() < 2) {
        out["error"] = "fewer than two non-empty groups";
        return out;
    }
    const auto kw = stats::kruskal_wallis(groups);
    out["test"] = "kruskal_wallis";
    out["statistic"] = kw.h;
    out["df"] = kw.df;
    out["p"] = kw.p;
    out["degenerate"] = kw.degenerate;

    const auto pairwise = stats::pairwise_comparison_report(groups, alpha);
    out["alpha"] = pairwise.alpha;
    out["adjusted_alpha"] = pairwise.adjusted_alpha;
    auto& comparisons = out["pairwise"] = json::array();
    auto& significant = out["significant_pairs"] = json::array();
    for (const auto& comparison : pairwise.comparisons) {
        comparisons.push_back({{"a", comparison.group_a},
                               {"b", comparison.group_b},
                               {"U", comparison.u},
                               {"p", comparison.p},
                               {"significant", comparison.significant}});
        if (comparison.significant) {
            significant.push_back(json::array({comparison.group_a, comparison.group_b}));
        }
    }

    auto& boxes = out["boxplots"] = json::object();
    for (const auto& [label, values] : groups.groups) {
        const auto box = stats::boxplot_summary(values);
        boxes[label] = {{"n", values.size()},
                        {"median", box.median},
                        {"q1", box.q1},
                        {"q3", box.q3},
                        {"iqr", box.iqr},
                        {"notch_low", box.notch_low},
                        {"notch_high", box.notch_high},
                        {"whisker_low", box.whisker_low},
                        {"whisker_high", box.whisker_high},
                        {"outliers", box.outliers.size()}};
    }
    return out;
}

std::map<std::string, std::vector<double>> collect_metric(std::span<const CellOutcome> outcomes,
                                                          const char* metric) {
    std::map<std::string, std::vector<double>> by_group;
    for (const auto& outcome : outcomes) {
        for (const auto& record : outcome.songs) {
            std::optional<double> value;
            if (std::string_view(metric) == "pce") value = record.pce;
            if (std::string_view(metric) == "gc") value = record.gc;
            if (std::string_view(metric) == "pip") value = record.pip;
            if (std::string_view(metric) == "uip") value = record.uip;
            if (value) by_group[record.group].push_back(*value);
        }
    }
    return by_group;
}

}  // namespace

std::string format_double(double value) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

std::vector<fs::path> list_token_files(const fs::path& dir) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
}

std::map<std::string, GenreId> read_manifest(const fs::path& path) {
    std::map<std::string, GenreId> manifest;
    std::istringstream in(read_text_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 2) throw DataError("bad manifest line: " + line);
        if (fields[0] == "file" || fields[0] == "path") continue;  // header row
        auto genre = GenreId::parse(fields[1]);
        if (!genre) throw DataError("bad genre label in manifest: " + fields[1]);
        manifest[fields[0]] = *genre;
    }
    return manifest;
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
    json j = json::parse(text);
    PipelineConfig config;
    config.corpus_dir = j.value("corpus_dir", config.corpus_dir);
    config.manifest = j.value("manifest", config.manifest);
    config.output_dir = j.value("output_dir", config.output_dir);
    config.rng_seed = j.value("rng_seed", config.rng_seed);
    if (j.contains("model")) {
        const auto& m = j["model"];
        config.model.order = m.value("order", config.model.order);
        config.model.smoothing = m.value("smoothing", config.model.smoothing);
        config.model.interpolation_base =
            m.value("interpolation_base", config.model.interpolation_base);
        config.model.path = m.value("path", config.model.path);
    }
    if (j.contains("classifier")) {
        const auto& c = j["classifier"];
        config.classifier.lambda = c.value("lambda", config.classifier.lambda);
        config.classifier.split_seed = c.value("split_seed", config.classifier.split_seed);
        config.classifier.path = c.value("path", config.classifier.path);
    }
    if (j.contains("generation")) {
        const auto& g = j["generation"];
        config.generation.max_tokens = g.value("max_tokens", config.generation.max_tokens);
        config.generation.temperature = g.value("temperature", config.generation.temperature);
        config.generation.top_k = g.value("top_k", config.generation.top_k);
    }
    if (j.contains("experiment")) {
        const auto& e = j["experiment"];
        config.experiment.instrument_per_cell =
            e.value("instrument_per_cell", config.experiment.instrument_per_cell);
        config.experiment.genre_per_cell =
            e.value("genre_per_cell", config.experiment.genre_per_cell);
        config.experiment.snippets_per_genre =
            e.value("snippets_per_genre", config.experiment.snippets_per_genre);
        if (e.contains("genres")) {
            config.experiment.genres = e["genres"].get<std::vector<std::string>>();
        }
    }
    if (j.contains("metrics")) {
        const auto& m = j["metrics"];
        config.metrics.gc_resolution = m.value("gc_resolution", config.metrics.gc_resolution);
        config.metrics.include_prompt =
            m.value("include_prompt", config.metrics.include_prompt);
        config.metrics.measure_ticks = m.value("measure_ticks", config.metrics.measure_ticks);
    }
    if (j.contains("stats")) {
        config.stats.alpha = j["stats"].value("alpha", config.stats.alpha);
    }
    if (j.contains("preprocess")) {
        const auto& p = j["preprocess"];
        config.preprocess.min_genre_count =
            p.value("min_genre_count", config.preprocess.min_genre_count);
        config.preprocess.fail_threshold =
            p.value("fail_threshold", config.preprocess.fail_threshold);
        config.preprocess.inject = p.value("inject", config.preprocess.inject);
    }
    return config;
}

PipelineConfig PipelineConfig::from_json_file(const fs::path& path) {
    return from_json_text(read_text_file(path));
}

std::string PipelineConfig::to_json_text() const {
    json j;
    j["corpus_dir"] = corpus_dir;
    j["manifest"] = manifest;
    j["output_dir"] = output_dir;
    j["rng_seed"] = rng_seed;
    j["model"] = {{"order", model.order},
                  {"smoothing", model.smoothing},
                  {"interpolation_base", model.interpolation_base},
                  {"path", model.path}};
    j["classifier"] = {{"lambda", classifier.lambda},
                       {"split_seed", classifier.split_seed},
                       {"path", classifier.path}};
    j["generation"] = {{"max_tokens", generation.max_tokens},
                       {"temperature", generation.temperature},
                       {"top_k", generation.top_k}};
    j["experiment"] = {{"instrument_per_cell", experiment.instrument_per_cell},
                       {"genre_per_cell", experiment.genre_per_cell},
                       {"snippets_per_genre", experiment.snippets_per_genre},
                       {"genres", experiment.genres}};
    j["metrics"] = {{"gc_resolution", metrics.gc_resolution},
                    {"include_prompt", metrics.include_prompt},
                    {"measure_ticks", metrics.measure_ticks}};
    j["stats"] = {{"alpha", stats.alpha}};
    j["preprocess"] = {{"min_genre_count", preprocess.min_genre_count},
                       {"fail_threshold", preprocess.fail_threshold},
                       {"inject", preprocess.inject}};
    return j.dump(2);
}

std::string PipelineConfig::hash() const {
    // Storage locations do not identify an experiment; two runs of the same
    // design into different directories must hash alike.
    PipelineConfig canonical = *this;
    canonical.corpus_dir.clear();
    canonical.manifest.clear();
    canonical.output_dir.clear();
    canonical.model.path.clear();
    canonical.classifier.path.clear();
    return hex64(fnv1a64(canonical.to_json_text()));
}

PreprocessResult run_preprocess(const PipelineConfig& config) {
    const fs::path corpus_dir = config.corpus_dir;
    const fs::path out_dir = fs::path(config.output_dir);
    const auto files = list_token_files(corpus_dir);
    if (files.empty()) throw DataError("no token files in " + corpus_dir.string());

    std::map<std::string, GenreId> manifest;
    if (!config.manifest.empty()) manifest = read_manifest(config.manifest);

    const std::string& inject = config.preprocess.inject;
    if (inject != "both" && inject != "instruments" && inject != "genre") {
        throw DataError("preprocess.inject must be both|instruments|genre, got " + inject);
    }
    PreprocessResult result;
    result.conditioned_dir = out_dir / "conditioned";
    fs::create_directories(result.conditioned_dir);

    // First pass: parse + label, for the corpus-level statistics that gate
    // genre admission.
    std::vector<std::pair<fs::path, Song>> parsed;
    for (const auto& path : files) {
        try {
            Song song = parse_song(read_text_file(path));
            auto label = manifest.find(path.filename().string());
            if (label != manifest.end()) ++result.stats.genre_counts[label->second];
            const auto combo = instruments_with_notes(song);
            if (!combo.empty()) ++result.stats.instrument_combo_counts[combo];
            parsed.emplace_back(path, std::move(song));
        } catch (const Error& e) {
            ++result.n_failed;
            result.failures.emplace_back(path.filename().string(), e.what());
        }
    }
    result.admitted = admit_genres(result.stats, config.preprocess.min_genre_count);

    for (auto& [path, song] : parsed) {
        try {
            Song conditioned = song;
            if (inject != "genre") conditioned = inject_instrument_tokens(conditioned);
            auto label = manifest.find(path.filename().string());
            if (inject != "instruments" && label != manifest.end() &&
                result.admitted.contains(label->second)) {
                conditioned = inject_genre_token(conditioned, label->second, result.admitted);
            }
            write_text_file(result.conditioned_dir / path.filename(),
                            serialize_song(conditioned));
            ++result.n_songs;
        } catch (const Error& e) {
            ++result.n_failed;
            result.failures.emplace_back(path.filename().string(), e.what());
        }
    }

    json report = meta_json(config);
    report["n_songs"] = result.n_songs;
    report["n_failed"] = result.n_failed;
    auto& genre_counts = report["genre_counts"] = json::object();
    for (const auto& [genre, count] : result.stats.genre_counts) genre_counts[genre.name] = count;
    auto& combos = report["instrument_combo_counts"] = json::array();
    for (const auto& [combo, count] : result.stats.instrument_combo_counts) {
        json names = json::array();
        for (const auto& id : combo) names.push_back(id.text());
        combos.push_back({{"instruments", names}, {"count", count}});
    }
    auto& admitted = report["admitted_genres"] = json::array();
    for (const auto& genre : result.admitted) admitted.push_back(genre.name);
    auto& failures = report["failures"] = json::array();
    for (const auto& [file, reason] : result.failures) {
        failures.push_back({{"file", file}, {"reason", reason}});
    }
    write_text_file(out_dir / "corpus_stats.json", report.dump(2) + "\n");

    const double total = static_cast<double>(files.size());
    if (total > 0 &&
        static_cast<double>(result.n_failed) / total > config.preprocess.fail_threshold) {
        throw DataError(std::to_string(result.n_failed) + " of " +
                        std::to_string(files.size()) + " corpus files unusable");
    }
    return result;
}

std::filesystem::path run_train(const PipelineConfig& config) {
    const LoadedCorpus corpus = load_corpus(config.corpus_dir);
    const auto sequences = corpus_token_texts(corpus);
    const lm::NgramModel model = lm::NgramModel::train(
        sequences, config.model.order, config.model.smoothing,
        config.model.interpolation_base);

    json j = json::parse(model.to_json());
    j["meta"] = meta_json(config);
    const fs::path path = fs::path(config.output_dir) / config.model.path;
    write_text_file(path, j.dump());
    return path;
}

std::filesystem::path run_train_classifier(const PipelineConfig& config) {
    const LoadedCorpus corpus = load_corpus(config.corpus_dir);
    std::map<std::string, GenreId> manifest;
    if (!config.manifest.empty()) manifest = read_manifest(config.manifest);

    std::vector<std::pair<Song, GenreId>> labeled;
    for (size_t i = 0; i < corpus.songs.size(); ++i) {
        if (corpus.songs[i].control.genre) {
            labeled.emplace_back(corpus.songs[i], *corpus.songs[i].control.genre);
        } else if (auto it = manifest.find(corpus.names[i]); it != manifest.end()) {
            labeled.emplace_back(corpus.songs[i], it->second);
        }
    }
    if (labeled.empty()) throw DataError("no labeled songs for classifier training");

    genre::ClassifierOptions options;
    options.lambda = config.classifier.lambda;
    options.split_seed = config.classifier.split_seed;
    options.segment.measure_ticks = config.metrics.measure_ticks;
    const genre::TrainResult result = genre::train_classifier(labeled, options);

    json j = json::parse(result.classifier.to_json());
    j["meta"] = meta_json(config);
    const fs::path path = fs::path(config.output_dir) / config.classifier.path;
    write_text_file(path, j.dump());

    json report = meta_json(config);
    report["validation_accuracy"] = result.report.validation_accuracy;
    report["test_accuracy"] = result.report.test_accuracy;
    report["split_seed"] = result.report.split_seed;
    report["n_train"] = result.report.n_train;
    report["n_validation"] = result.report.n_validation;
    report["n_test"] = result.report.n_test;
    auto& counts = report["class_counts"] = json::object();
    for (const auto& [genre, count] : result.report.class_counts) counts[genre.name] = count;
    write_text_file(fs::path(config.output_dir) / "classifier_report.json",
                    report.dump(2) + "\n");
    return path;
}

namespace {

lm::NgramModel load_model(const PipelineConfig& config) {
    const fs::path path = fs::path(config.output_dir) / config.model.path;
    const fs::path direct = config.model.path;
    const fs::path chosen = fs::exists(path) ? path : direct;
    if (!fs::exists(chosen)) throw DataError("model file not found: " + path.string());
    return lm::NgramModel::from_json(read_text_file(chosen));
}

genre::GenreClassifier load_classifier(const PipelineConfig& config) {
    const fs::path path = fs::path(config.output_dir) / config.classifier.path;
    const fs::path direct = config.classifier.path;
    const fs::path chosen = fs::exists(path) ? path : direct;
    if (!fs::exists(chosen)) throw DataError("classifier file not found: " + path.string());
    return genre::GenreClassifier::from_json(read_text_file(chosen));
}

}  // namespace

std::vector<fs::path> run_generate(const PipelineConfig& config, const fs::path& prompt_file,
                                   int count, const fs::path& out_dir) {
    const Song prompt = parse_song_prefix(read_text_file(prompt_file));
    return run_generate(config, prompt.tokens, count, out_dir);
}

std::vector<fs::path> run_generate(const PipelineConfig& config, std::span<const Token> prompt,
                                   int count, const fs::path& out_dir) {
    const lm::NgramModel model = load_model(config);
    std::vector<std::string> prompt_texts;
    for (const Token& token : prompt) prompt_texts.push_back(serialize_token(token));

    fs::create_directories(out_dir);
    std::vector<fs::path> files;
    for (int i = 0; i < count; ++i) {
        lm::GenerationConfig gen;
        gen.max_tokens = config.generation.max_tokens;
        gen.temperature = config.generation.temperature;
        gen.top_k = config.generation.top_k;
        gen.rng_seed = mix_seed(config.rng_seed, static_cast<uint64_t>(i));
        const auto output = lm::sample(model, prompt_texts, gen);

        std::string text;
        for (const auto& token : output) {
            text += token;
            text += '\n';
        }
        char name[32];
        std::snprintf(name, sizeof name, "gen-%04d.txt", i);
        const fs::path file = out_dir / name;
        write_text_file(file, text);
        files.push_back(file);
    }
    // Song files stay pure token streams; provenance goes in a sidecar.
    json meta = meta_json(config);
    meta["count"] = count;
    auto& prompt_tokens = meta["prompt"] = json::array();
    for (const Token& token : prompt) prompt_tokens.push_back(serialize_token(token));
    write_text_file(out_dir / "generation_meta.json", meta.dump(2) + "\n");
    return files;
}

ExperimentResult run_experiment(const PipelineConfig& config, ExperimentKind kind) {
    const int per_cell = kind == ExperimentKind::instrument
                             ? config.experiment.instrument_per_cell
                             : config.experiment.genre_per_cell;
    if (per_cell < 1) throw DataError("per-cell count must be >= 1");
    if (kind == ExperimentKind::genre && config.experiment.snippets_per_genre < 1) {
        throw DataError("snippets_per_genre must be >= 1");
    }
    const lm::NgramModel model = load_model(config);
    const fs::path out_dir = config.output_dir;
    const std::string kind_name = kind == ExperimentKind::instrument ? "instrument" : "genre";
    const fs::path generation_dir = out_dir / "generations" / kind_name;
    const SegmentOptions segment = metric_options(config).segment;

    std::vector<Cell> cells;
    if (kind == ExperimentKind::instrument) {
        size_t cell_index = 0;
        for (const auto& combo : InstrumentCombo::all()) {
            for (PromptMode mode : kAllPromptModes) {
                PromptSpec spec;
                spec.mode = mode;
                spec.combo = combo;
                spec.seed_notes = default_seed_notes(combo);
                Cell cell;
                cell.target = combo.id;
                cell.mode = mode;
                cell.prompts = {build_instrument_prompt(spec)};
                cell.prompted.insert(combo.instruments.begin(), combo.instruments.end());
                cell.seed = mix_seed(config.rng_seed, cell_index++);
                cells.push_back(std::move(cell));
            }
        }
    } else {
        const LoadedCorpus corpus = load_corpus(config.corpus_dir);
        std::map<GenreId, std::vector<Song>> by_genre;
        for (const Song& song : corpus.songs) {
            if (song.control.genre) by_genre[*song.control.genre].push_back(song);
        }
        size_t cell_index = 0;
        size_t genre_index = 0;
        for (const auto& name : config.experiment.genres) {
            const auto genre = GenreId::parse(name);
            if (!genre) throw DataError("bad genre name in config: " + name);
            auto it = by_genre.find(*genre);
            if (it == by_genre.end()) {
                throw DataError("no corpus songs labeled with genre " + name);
            }
            const auto snippets = sample_seed_snippets(
                it->second, static_cast<size_t>(config.experiment.snippets_per_genre),
                mix_seed(config.rng_seed, 0xabcd0000ULL + genre_index), segment);
            ++genre_index;

            for (PromptMode mode : kAllPromptModes) {
                Cell cell;
                cell.target = name;
                cell.mode = mode;
                cell.intended = *genre;
                for (const auto& snippet : snippets) {
                    PromptSpec spec;
                    spec.mode = mode;
                    spec.genre_target = GenrePromptTarget{*genre, snippet};
                    cell.prompts.push_back(build_genre_prompt(spec, segment));
                }
                cell.seed = mix_seed(config.rng_seed, cell_index++);
                cells.push_back(std::move(cell));
            }
        }
    }

    std::vector<std::future<CellOutcome>> futures;
    futures.reserve(cells.size());
    for (const auto& cell : cells) {
        futures.push_back(std::async(std::launch::async, [&cell, &model, &config, kind,
                                                          &generation_dir] {
            return run_cell(cell, model, config, kind, generation_dir);
        }));
    }
    std::vector<CellOutcome> outcomes;
    outcomes.reserve(cells.size());
    for (auto& future : futures) outcomes.push_back(future.get());

    ExperimentResult result;
    result.metrics_csv = out_dir / (kind_name + "_metrics.csv");
    write_metrics_csv(result.metrics_csv, config, outcomes);
    for (const auto& outcome : outcomes) {
        result.songs_generated += static_cast<long>(outcome.songs.size());
    }

    // Nonparametric analysis across prompt modes, per applicable metric.
    json stats_report = meta_json(config);
    const std::vector<const char*> metric_names =
        kind == ExperimentKind::instrument ? std::vector<const char*>{"pce", "gc", "pip", "uip"}
                                           : std::vector<const char*>{"pce", "gc"};
    for (const char* metric : metric_names) {
        stats_report[metric] = analyze_metric(collect_metric(outcomes, metric),
                                              config.stats.alpha);
    }
    result.stats_json = out_dir / (kind_name + "_stats.json");
    write_text_file(result.stats_json, stats_report.dump(2) + "\n");

    // Summary report: presence means (instrument) or score matrix (genre).
    if (kind == ExperimentKind::instrument) {
        std::string csv = meta_line(config) + "\n";
        csv += "prompt_mode,mean_pip_pct,mean_uip_pct,n,wilcoxon_p_vs_unconditional,"
               "significant\n";
        const auto pip_groups = collect_metric(outcomes, "pip");
        const auto uip_groups = collect_metric(outcomes, "uip");
        const auto unconditional = pip_groups.find("unconditional");
        const double threshold = stats::bonferroni(config.stats.alpha, 3);
        for (PromptMode mode : kAllPromptModes) {
            const std::string name{prompt_mode_name(mode)};
            const auto pip_it = pip_groups.find(name);
            const auto uip_it = uip_groups.find(name);
            // Scores are fractions everywhere; only this report formats
            // them as percentages.
            auto mean_pct = [](const std::vector<double>& v) {
                double sum = 0;
                for (double x : v) sum += x;
                return v.empty() ? 0.0 : 100.0 * sum / static_cast<double>(v.size());
            };
            csv += name + ",";
            csv += (pip_it != pip_groups.end() ? format_double(mean_pct(pip_it->second))
                                               : "") +
                   std::string(",");
            csv += (uip_it != uip_groups.end() ? format_double(mean_pct(uip_it->second))
                                               : "") +
                   std::string(",");
            csv += (pip_it != pip_groups.end() ? std::to_string(pip_it->second.size()) : "0");
            if (mode != PromptMode::unconditional && unconditional != pip_groups.end() &&
                pip_it != pip_groups.end() && !pip_it->second.empty() &&
                !unconditional->second.empty()) {
                const auto test =
                    stats::wilcoxon_rank_sum(pip_it->second, unconditional->second);
                csv += "," + format_double(test.p_two_sided) + "," +
                       (test.p_two_sided < threshold ? "yes" : "no");
            } else {
                csv += ",,";
            }
            csv += "\n";
        }
        result.report_csv = out_dir / "instrument_presence_report.csv";
        write_text_file(result.report_csv, csv);
    } else {
        const genre::GenreClassifier classifier = load_classifier(config);
        std::vector<std::tuple<GenreId, std::string, Song>> batch;
        long skipped = 0;
        for (const auto& outcome : outcomes) {
            for (const auto& record : outcome.songs) {
                if (!record.parsed || !record.error.empty()) {
                    ++skipped;
                    continue;
                }
                try {
                    classifier.classify(*record.parsed);  // probe: classifiable?
                    batch.emplace_back(GenreId{record.target}, record.mode, *record.parsed);
                } catch (const genre::EmptyBodyError&) {
                    ++skipped;
                }
            }
        }
        std::string csv = meta_line(config) + "\n";
        csv += "intended_genre,prompt_mode,n";
        for (const auto& cls : classifier.classes()) csv += "," + cls.name;
        csv += "\n";
        if (!batch.empty()) {
            for (const auto& group : genre::score_generation_batch(classifier, batch)) {
                csv += group.intended.name + "," + group.prompt_mode + "," +
                       std::to_string(group.count);
                for (double score : group.mean_scores) csv += "," + format_double(score);
                csv += "\n";
            }
        }
        if (skipped > 0) csv += "# skipped_unscoreable=" + std::to_string(skipped) + "\n";
        result.report_csv = out_dir / "genre_scores.csv";
        write_text_file(result.report_csv, csv);
    }

    // Cell manifest for reproducibility checks.
    json cells_json = meta_json(config);
    cells_json["kind"] = kind_name;
    auto& cell_list = cells_json["cells"] = json::array();
    for (size_t i = 0; i < outcomes.size(); ++i) {
        json cell = {{"cell", outcomes[i].cell_id},
                     {"target", cells[i].target},
                     {"mode", std::string(prompt_mode_name(cells[i].mode))},
                     {"seed", cells[i].seed},
                     {"failures", outcomes[i].failures},
                     {"aborted", outcomes[i].aborted}};
        auto& songs = cell["songs"] = json::array();
        for (const auto& record : outcomes[i].songs) {
            songs.push_back({{"id", record.song_id},
                             {"file", record.file},
                             {"prompt_tokens", record.prompt_tokens},
                             {"generated_tokens", record.generated_tokens},
                             {"error", record.error}});
        }
        cell_list.push_back(std::move(cell));
    }
    result.cells_json = out_dir / (kind_name + "_cells.json");
    write_text_file(result.cells_json, cells_json.dump(2) + "\n");
    return result;
}

BaselinesResult run_baselines(const PipelineConfig& config,
                              const std::optional<fs::path>& experiment_csv,
                              BaselineKind kind) {
    const LoadedCorpus corpus = load_corpus(config.corpus_dir);
    const metrics::MetricOptions options = metric_options(config);
    const fs::path out_dir = config.output_dir;
    const bool do_pitch = kind != BaselineKind::rhythm;
    const bool do_rhythm = kind != BaselineKind::pitch;
    const fs::path pitch_dir = out_dir / "baselines" / "pitch_random";
    const fs::path rhythm_dir = out_dir / "baselines" / "rhythm_random";
    if (do_pitch) fs::create_directories(pitch_dir);
    if (do_rhythm) fs::create_directories(rhythm_dir);

    std::map<std::string, std::vector<double>> pce_groups;
    std::map<std::string, std::vector<double>> gc_groups;

    for (size_t i = 0; i < corpus.songs.size(); ++i) {
        const Song& song = corpus.songs[i];
        if (do_pitch) {
            const Song pitch_random =
                metrics::randomize_pitch(song, mix_seed(config.rng_seed, i), options);
            write_text_file(pitch_dir / corpus.names[i], serialize_song(pitch_random));
            try {
                pce_groups["groundtruth"].push_back(
                    metrics::pitch_class_entropy(song, options));
                pce_groups["random"].push_back(
                    metrics::pitch_class_entropy(pitch_random, options));
            } catch (const metrics::NoPitchedNotesError&) {
            }
        }
        if (do_rhythm) {
            const Song rhythm_random = metrics::randomize_rhythm(
                song, mix_seed(config.rng_seed, 0x52480000ULL + i), options);
            write_text_file(rhythm_dir / corpus.names[i], serialize_song(rhythm_random));
            try {
                gc_groups["groundtruth"].push_back(
                    metrics::groove_consistency(song, options));
                gc_groups["random"].push_back(
                    metrics::groove_consistency(rhythm_random, options));
            } catch (const metrics::TooFewMeasuresError&) {
            }
        }
    }

    if (experiment_csv) {
        std::istringstream in(read_text_file(*experiment_csv));
        std::string line;
        int group_col = -1, pce_col = -1, gc_col = -1;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            const auto fields = split_csv_line(line);
            if (group_col < 0) {
                for (size_t c = 0; c < fields.size(); ++c) {
                    if (fields[c] == "group") group_col = static_cast<int>(c);
                    if (fields[c] == "pce") pce_col = static_cast<int>(c);
                    if (fields[c] == "gc") gc_col = static_cast<int>(c);
                }
                if (group_col < 0 || pce_col < 0 || gc_col < 0) {
                    throw DataError("metrics csv missing group/pce/gc columns");
                }
                continue;
            }
            const std::string& group = fields[static_cast<size_t>(group_col)];
            if (static_cast<size_t>(pce_col) < fields.size() &&
                !fields[static_cast<size_t>(pce_col)].empty()) {
                pce_groups[group].push_back(std::stod(fields[static_cast<size_t>(pce_col)]));
            }
            if (static_cast<size_t>(gc_col) < fields.size() &&
                !fields[static_cast<size_t>(gc_col)].empty()) {
                gc_groups[group].push_back(std::stod(fields[static_cast<size_t>(gc_col)]));
            }
        }
    }

    auto median_of = [](std::vector<double> values) {
        return stats::boxplot_summary(values).median;
    };

    BaselinesResult result;
    if (!pce_groups["groundtruth"].empty() && !pce_groups["random"].empty()) {
        result.pce_ordering_ok =
            median_of(pce_groups["random"]) > median_of(pce_groups["groundtruth"]);
    }
    if (!gc_groups["groundtruth"].empty() && !gc_groups["random"].empty()) {
        result.gc_ordering_ok =
            median_of(gc_groups["random"]) < median_of(gc_groups["groundtruth"]);
    }

    if (do_pitch) {
        json pce_report = meta_json(config);
        pce_report["metric"] = "pce";
        pce_report["analysis"] = analyze_metric(pce_groups, config.stats.alpha);
        pce_report["random_median_above_groundtruth"] = result.pce_ordering_ok;
        result.pce_json = out_dir / "baselines_pce.json";
        write_text_file(result.pce_json, pce_report.dump(2) + "\n");
    }
    if (do_rhythm) {
        json gc_report = meta_json(config);
        gc_report["metric"] = "gc";
        gc_report["analysis"] = analyze_metric(gc_groups, config.stats.alpha);
        gc_report["random_median_below_groundtruth"] = result.gc_ordering_ok;
        result.gc_json = out_dir / "baselines_gc.json";
        write_text_file(result.gc_json, gc_report.dump(2) + "\n");
    }

    std::string csv = meta_line(config) + "\n";
    csv += "metric,group,n,median,q1,q3,notch_low,notch_high,whisker_low,whisker_high\n";
    auto box_rows = [&](const char* metric,
                        const std::map<std::string, std::vector<double>>& groups) {
        for (const auto& [label, values] : groups) {
            if (values.empty()) continue;
            const auto box = stats::boxplot_summary(values);
            csv += std::string(metric) + "," + label + "," + std::to_string(values.size()) +
                   "," + format_double(box.median) + "," + format_double(box.q1) + "," +
                   format_double(box.q3) + "," + format_double(box.notch_low) + "," +
                   format_double(box.notch_high) + "," + format_double(box.whisker_low) + "," +
                   format_double(box.whisker_high) + "\n";
        }
    };
    box_rows("pce", pce_groups);
    box_rows("gc", gc_groups);
    result.boxplots_csv = out_dir / "baselines_boxplots.csv";
    write_text_file(result.boxplots_csv, csv);
    return result;
}

std::filesystem::path run_stats(const PipelineConfig& config, const fs::path& metrics_csv,
                                const std::string& metric, const fs::path& out_prefix) {
    std::istringstream in(read_text_file(metrics_csv));
    std::string line;
    int group_col = -1, metric_col = -1;
    std::map<std::string, std::vector<double>> by_group;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_csv_line(line);
        if (group_col < 0) {
            for (size_t c = 0; c < fields.size(); ++c) {
                if (fields[c] == "group") group_col = static_cast<int>(c);
                if (fields[c] == metric) metric_col = static_cast<int>(c);
            }
            if (group_col < 0 || metric_col < 0) {
                throw DataError("metrics csv lacks group or " + metric + " column");
            }
            continue;
        }
        if (static_cast<size_t>(metric_col) < fields.size() &&
            !fields[static_cast<size_t>(metric_col)].empty()) {
            by_group[fields[static_cast<size_t>(group_col)]].push_back(
                std::stod(fields[static_cast<size_t>(metric_col)]));
        }
    }

    json report = meta_json(config);
    report["metric"] = metric;
    report["analysis"] = analyze_metric(by_group, config.stats.alpha);
    const fs::path json_path = out_prefix.string() + ".json";
    write_text_file(json_path, report.dump(2) + "\n");

    std::string csv = meta_line(config) + "\n";
    csv += "group,n,median,q1,q3,notch_low,notch_high,whisker_low,whisker_high,outliers\n";
    for (const auto& [label, values] : by_group) {
        if (values.empty()) continue;
        const auto box = stats::boxplot_summary(values);
        csv += label + "," + std::to_string(values.size()) + "," + format_double(box.median) +
               "," + format_double(box.q1) + "," + format_double(box.q3) + "," +
               format_double(box.notch_low) + "," + format_double(box.notch_high) + "," +
               format_double(box.whisker_low) + "," + format_double(box.whisker_high) + "," +
               std::to_string(box.outliers.size()) + "\n";
    }
    write_text_file(fs::path(out_prefix.string() + "_boxplots.csv"), csv);
    return json_path;
}

std::string render_report(const fs::path& dir) {
    std::ostringstream out;
    auto render_stats_json = [&](const fs::path& path) {
        const json j = json::parse(read_text_file(path));
        out << "== " << path.filename().string() << " ==\n";
        auto render_analysis = [&](const std::string& name, const json& analysis) {
            if (analysis.contains("error")) {
                out << "  " << name << ": " << analysis["error"].get<std::string>() << "\n";
                return;
            }
            out << "  " << name << ": H(" << analysis["df"].get<int>()
                << ") = " << format_double(analysis["statistic"].get<double>())
                << ", p = " << format_double(analysis["p"].get<double>()) << "\n";
            if (analysis.contains("significant_pairs")) {
                for (const auto& pair : analysis["significant_pairs"]) {
                    out << "    significant: " << pair[0].get<std::string>() << " vs "
                        << pair[1].get<std::string>() << "\n";
                }
            }
        };
        if (j.contains("analysis")) {
            render_analysis(j.value("metric", "metric"), j["analysis"]);
        } else {
            for (const char* metric : {"pce", "gc", "pip", "uip"}) {
                if (j.contains(metric)) render_analysis(metric, j[metric]);
            }
        }
    };
    auto render_csv = [&](const fs::path& path) {
        out << "== " << path.filename().string() << " ==\n";
        std::istringstream in(read_text_file(path));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            out << "  ";
            for (char c : line) out << (c == ',' ? '\t' : c);
            out << "\n";
        }
    };

    bool any = false;
    std::vector<fs::path> entries;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) entries.push_back(entry.path());
    }
    std::sort(entries.begin(), entries.end());
    for (const auto& path : entries) {
        const std::string name = path.filename().string();
        if (name.ends_with("_stats.json") || name.starts_with("baselines_") ||
            name == "corpus_stats.json") {
            if (path.extension() == ".json") {
                render_stats_json(path);
                any = true;
            }
        }
        if (name.ends_with("_report.csv") || name == "genre_scores.csv" ||
            name.ends_with("_boxplots.csv")) {
            render_csv(path);
            any = true;
        }
    }
    if (!any) out << "no report artifacts under " << dir.string() << "\n";
    return out.str();
}

}  // namespace pipeline
}  // namespace tabgen
