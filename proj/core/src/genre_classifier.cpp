#include "tabgen/genre_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "tabgen/rng.hpp"

namespace tabgen {
namespace genre {
namespace {

std::vector<std::string> extract_features(const Song& song, const SegmentOptions& segment) {
    std::vector<std::string> features;
    int previous_pc = -1;
    for (const Token& token : song.body()) {
        if (is_control(token) || is<ArtistToken>(token) || is<DowntuneToken>(token) ||
            is<TempoToken>(token) || is<StartToken>(token)) {
            continue;
        }
        features.push_back(serialize_token(token));
        if (const auto* note = std::get_if<NoteToken>(&token)) {
            const int open = segment.tuning.open_pitch(note->instrument, note->string);
            const int pc = pitch_class(open + note->fret + song.downtune);
            if (previous_pc >= 0) {
                features.push_back("pc:" + std::to_string(previous_pc) + ":" +
                                   std::to_string(pc));
            }
            previous_pc = pc;
        }
    }
    return features;
}

double accuracy(const GenreClassifier& clf, std::span<const size_t> indices,
                std::span<const std::pair<Song, GenreId>> corpus) {
    if (indices.empty()) return 0;
    long hits = 0;
    for (size_t idx : indices) {
        const auto scores = clf.classify(corpus[idx].first);
        const size_t argmax = static_cast<size_t>(
            std::max_element(scores.begin(), scores.end()) - scores.begin());
        if (clf.classes()[argmax] == corpus[idx].second) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(indices.size());
}

}  // namespace

struct Trainer {
    static GenreClassifier fit(std::span<const std::pair<Song, GenreId>> corpus,
                               std::span<const size_t> train_indices,
                               std::vector<GenreId> classes, const ClassifierOptions& options) {
        GenreClassifier clf;
        clf.classes_ = std::move(classes);
        clf.lambda_ = options.lambda;
        clf.segment_ = options.segment;
        clf.class_counts_.resize(clf.classes_.size());
        clf.class_totals_.assign(clf.classes_.size(), 0);

        std::vector<long> docs(clf.classes_.size(), 0);
        std::set<std::string> feature_vocab;
        for (size_t idx : train_indices) {
            const auto& [song, label] = corpus[idx];
            const size_t c = static_cast<size_t>(
                std::find(clf.classes_.begin(), clf.classes_.end(), label) -
                clf.classes_.begin());
            ++docs[c];
            for (auto& feature : clf.features_of(song)) {
                feature_vocab.insert(feature);
                ++clf.class_counts_[c][feature];
                ++clf.class_totals_[c];
            }
        }
        // One synthetic slot so unseen features keep smoothing mass.
        clf.feature_vocab_size_ = static_cast<long>(feature_vocab.size()) + 1;

        const long total_docs = std::accumulate(docs.begin(), docs.end(), 0L);
        clf.log_priors_.resize(clf.classes_.size());
        for (size_t c = 0; c < clf.classes_.size(); ++c) {
            clf.log_priors_[c] = std::log(static_cast<double>(docs[c]) /
                                          static_cast<double>(total_docs));
        }
        return clf;
    }
};

std::vector<std::string> GenreClassifier::features_of(const Song& song) const {
    return extract_features(song, segment_);
}

std::vector<double> GenreClassifier::classify(const Song& song) const {
    const auto features = features_of(song);
    if (features.empty()) throw EmptyBodyError("song has no scoreable content");

    std::vector<double> log_scores(classes_.size());
    for (size_t c = 0; c < classes_.size(); ++c) {
        double score = log_priors_[c];
        const double denom = static_cast<double>(class_totals_[c]) +
                             lambda_ * static_cast<double>(feature_vocab_size_);
        for (const auto& feature : features) {
            auto it = class_counts_[c].find(feature);
            const double count = it == class_counts_[c].end()
                                     ? 0.0
                                     : static_cast<double>(it->second);
            score += std::log((count + lambda_) / denom);
        }
        log_scores[c] = score;
    }

    const double max_log = *std::max_element(log_scores.begin(), log_scores.end());
    double total = 0;
    for (double& s : log_scores) {
        s = std::exp(s - max_log);
        total += s;
    }
    for (double& s : log_scores) s /= total;
    return log_scores;
}

TrainResult train_classifier(std::span<const std::pair<Song, GenreId>> corpus,
                             const ClassifierOptions& options) {
    std::map<GenreId, long> class_counts;
    for (const auto& [song, label] : corpus) ++class_counts[label];
    if (class_counts.size() < 2) {
        throw InsufficientClassDataError("need >= 2 classes, got " +
                                         std::to_string(class_counts.size()));
    }
    for (const auto& [label, count] : class_counts) {
        if (count < 10) {
            throw InsufficientClassDataError("class " + label.name + " has only " +
                                             std::to_string(count) + " songs (need >= 10)");
        }
    }
    std::vector<GenreId> classes;
    for (const auto& [label, count] : class_counts) classes.push_back(label);

    // Stratified split: shuffle within each class, then cut 80/10/10.
    std::vector<size_t> train_set, val_set, test_set;
    std::mt19937_64 rng(options.split_seed);
    for (const auto& cls : classes) {
        std::vector<size_t> members;
        for (size_t i = 0; i < corpus.size(); ++i) {
            if (corpus[i].second == cls) members.push_back(i);
        }
        deterministic_shuffle(members, rng);
        const size_t n_train = static_cast<size_t>(
            std::floor(options.train_fraction * static_cast<double>(members.size())));
        const size_t n_val = (members.size() - n_train) / 2;
        for (size_t i = 0; i < members.size(); ++i) {
            if (i < n_train) {
                train_set.push_back(members[i]);
            } else if (i < n_train + n_val) {
                val_set.push_back(members[i]);
            } else {
                test_set.push_back(members[i]);
            }
        }
    }

    TrainResult result{Trainer::fit(corpus, train_set, classes, options), {}};
    result.report.split_seed = options.split_seed;
    result.report.n_train = static_cast<long>(train_set.size());
    result.report.n_validation = static_cast<long>(val_set.size());
    result.report.n_test = static_cast<long>(test_set.size());
    result.report.class_counts = class_counts;
    result.report.validation_accuracy = accuracy(result.classifier, val_set, corpus);
    result.report.test_accuracy = accuracy(result.classifier, test_set, corpus);
    return result;
}

std::vector<ScoredGroup> score_generation_batch(
    const GenreClassifier& classifier,
    std::span<const std::tuple<GenreId, std::string, Song>> batch) {
    if (batch.empty()) throw EmptyBatchError("no songs to score");

    // Group scores, then sum in sorted order so the means are independent of
    // batch order down to the last bit.
    std::map<std::pair<GenreId, std::string>, std::vector<std::vector<double>>> groups;
    for (size_t i = 0; i < batch.size(); ++i) {
        const auto& [intended, mode, song] = batch[i];
        try {
            groups[{intended, mode}].push_back(classifier.classify(song));
        } catch (const Error& e) {
            throw Error("song " + std::to_string(i) + " (" + intended.name + "/" + mode +
                        "): " + e.what());
        }
    }

    std::vector<ScoredGroup> out;
    for (auto& [key, scores] : groups) {
        std::sort(scores.begin(), scores.end());
        ScoredGroup group;
        group.intended = key.first;
        group.prompt_mode = key.second;
        group.count = static_cast<long>(scores.size());
        group.mean_scores.assign(classifier.classes().size(), 0.0);
        for (const auto& score : scores) {
            for (size_t c = 0; c < score.size(); ++c) group.mean_scores[c] += score[c];
        }
        for (double& s : group.mean_scores) s /= static_cast<double>(scores.size());
        out.push_back(std::move(group));
    }
    return out;
}

std::string GenreClassifier::to_json() const {
    nlohmann::json j;
    j["format"] = "tabgen-genre-clf";
    j["version"] = 1;
    j["lambda"] = lambda_;
    j["feature_vocab_size"] = feature_vocab_size_;
    j["measure_ticks"] = segment_.measure_ticks;
    auto& classes = j["classes"] = nlohmann::json::array();
    for (const auto& cls : classes_) classes.push_back(cls.name);
    j["log_priors"] = log_priors_;
    j["class_totals"] = class_totals_;
    auto& counts = j["class_counts"] = nlohmann::json::array();
    for (const auto& table : class_counts_) {
        std::vector<std::pair<std::string, long>> sorted(table.begin(), table.end());
        std::sort(sorted.begin(), sorted.end());
        nlohmann::json jt = nlohmann::json::array();
        for (const auto& [feature, count] : sorted) jt.push_back({feature, count});
        counts.push_back(std::move(jt));
    }
    return j.dump();
}

GenreClassifier GenreClassifier::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("format", "") != "tabgen-genre-clf" || j.value("version", 0) != 1) {
        throw Error("unrecognized classifier file format");
    }
    GenreClassifier clf;
    clf.lambda_ = j.at("lambda").get<double>();
    clf.feature_vocab_size_ = j.at("feature_vocab_size").get<long>();
    clf.segment_.measure_ticks = j.at("measure_ticks").get<int>();
    for (const auto& name : j.at("classes")) {
        clf.classes_.push_back(GenreId{name.get<std::string>()});
    }
    clf.log_priors_ = j.at("log_priors").get<std::vector<double>>();
    clf.class_totals_ = j.at("class_totals").get<std::vector<long>>();
    for (const auto& table : j.at("class_counts")) {
        std::unordered_map<std::string, long> counts;
        for (const auto& pair : table) {
            counts[pair[0].get<std::string>()] = pair[1].get<long>();
        }
        clf.class_counts_.push_back(std::move(counts));
    }
    return clf;
}

}  // namespace genre
}  // namespace tabgen
