// Desk-scale genre classifier with the same scoring surface as a heavy
// masked-LM classifier: softmax score vectors over a fixed genre list, and
// batch score matrices averaged per (intended genre, prompt mode) cell.
//
// The model is a smoothed multinomial bag-of-tokens classifier. Features are
// body token texts plus pitch-class bigrams of consecutive pitched notes;
// header and control tokens (genre labels, instrument blocks) are stripped
// before featurization so a label in the input can never leak into a score.

#ifndef TABGEN_GENRE_CLASSIFIER_HPP
#define TABGEN_GENRE_CLASSIFIER_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tabgen/score.hpp"
#include "tabgen/song.hpp"

namespace tabgen {
namespace genre {

struct InsufficientClassDataError : Error {
    using Error::Error;
};
struct EmptyBodyError : Error {
    using Error::Error;
};
struct EmptyBatchError : Error {
    using Error::Error;
};

struct ClassifierOptions {
    double lambda = 1.0;         // add-lambda smoothing
    uint64_t split_seed = 7;     // recorded in the report
    double train_fraction = 0.8; // remainder split evenly into val/test
    SegmentOptions segment;      // tuning for pitch-class bigram features
};

class GenreClassifier {
  public:
    std::span<const GenreId> classes() const { return classes_; }

    /// Softmax score vector over classes(), entries summing to 1 within
    /// 1e-9, argmax = predicted genre. Throws EmptyBodyError if the song has
    /// no features after header/control stripping.
    std::vector<double> classify(const Song& song) const;

    std::vector<std::string> features_of(const Song& song) const;

    std::string to_json() const;
    static GenreClassifier from_json(const std::string& text);

    friend struct Trainer;

  private:
    std::vector<GenreId> classes_;
    double lambda_ = 1.0;
    SegmentOptions segment_;
    long feature_vocab_size_ = 0;
    std::vector<double> log_priors_;
    std::vector<std::unordered_map<std::string, long>> class_counts_;
    std::vector<long> class_totals_;
};

struct TrainReport {
    double validation_accuracy = 0;
    double test_accuracy = 0;
    uint64_t split_seed = 0;
    long n_train = 0;
    long n_validation = 0;
    long n_test = 0;
    std::map<GenreId, long> class_counts;
};

struct TrainResult {
    GenreClassifier classifier;
    TrainReport report;
};

/// Fits the classifier on a stratified 80/10/10 split (seeded, recorded).
/// Requires >= 2 classes with >= 10 songs each, else
/// InsufficientClassDataError.
TrainResult train_classifier(std::span<const std::pair<Song, GenreId>> corpus,
                             const ClassifierOptions& options = {});

struct ScoredGroup {
    GenreId intended;
    std::string prompt_mode;
    std::vector<double> mean_scores;  // over classes(), in class order
    long count = 0;
};

/// Mean softmax score per (intended genre, prompt mode) cell, shaped like a
/// genre-scoring results table. Throws EmptyBatchError on an empty batch and
/// propagates classify errors tagged with the song id.
std::vector<ScoredGroup> score_generation_batch(
    const GenreClassifier& classifier,
    std::span<const std::tuple<GenreId, std::string, Song>> batch);

}  // namespace genre
}  // namespace tabgen

#endif  // TABGEN_GENRE_CLASSIFIER_HPP
