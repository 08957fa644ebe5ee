// Reference conditional sequence model: an interpolated add-lambda n-gram
// with longest-match backoff. Control tokens are nothing special to the
// model; conditioning works purely by prefix, which is the mechanism under
// test. The model interface is pluggable so a heavier backend can slot into
// the same generation pipeline.

#ifndef TABGEN_NGRAM_HPP
#define TABGEN_NGRAM_HPP

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tabgen/token.hpp"
#include "tabgen/vocabulary.hpp"

namespace tabgen {
namespace lm {

struct EmptyCorpusError : Error {
    using Error::Error;
};

/// Prompt handed to sample() is not a valid song prefix.
struct InvalidPromptError : Error {
    using Error::Error;
};

/// Anything that can score the next token given a context can drive the
/// generation pipeline.
class SequenceModel {
  public:
    virtual ~SequenceModel() = default;
    virtual const Vocabulary& vocabulary() const = 0;
    /// Probability vector over the vocabulary; entries non-negative and
    /// summing to 1 within 1e-9.
    virtual std::vector<double> next_distribution(std::span<const int> context) const = 0;
};

class NgramModel final : public SequenceModel {
  public:
    /// Counts n-grams of every length 0..order over the corpus sequences.
    /// order >= 1; lambda > 0 is the add-lambda smoothing constant. Each
    /// context length k carries interpolation weight base^k (renormalized
    /// over the lengths that matched), so longer matches dominate without
    /// zeroing out the backoff mass.
    static NgramModel train(std::span<const std::vector<std::string>> corpus, int order,
                            double lambda = 0.01, double interpolation_base = 4.0);

    const Vocabulary& vocabulary() const override { return vocab_; }
    int order() const { return order_; }
    double lambda() const { return lambda_; }

    std::vector<double> next_distribution(std::span<const int> context) const override;

    /// Raw count of `token` after `context` (exact context length), for
    /// oracle cross-checks.
    long context_count(std::span<const int> context, int token) const;

    std::string to_json() const;
    static NgramModel from_json(const std::string& text);

  private:
    struct Row {
        std::unordered_map<int, long> counts;
        long total = 0;
    };

    NgramModel() = default;

    static std::string context_key(std::span<const int> context);

    int order_ = 1;
    double lambda_ = 0.01;
    double interpolation_base_ = 4.0;
    Vocabulary vocab_;
    std::vector<std::unordered_map<std::string, Row>> tables_;  // index = context length
};

struct GenerationConfig {
    int max_tokens = 1024;
    double temperature = 1.0;
    int top_k = 5;
    uint64_t rng_seed = 0;
};

/// Truncates to the top_k most probable tokens (ties at the cutoff broken
/// toward smaller ids), rescales by temperature (p^(1/T)), renormalizes.
std::vector<std::pair<int, double>> top_k_temperature(std::span<const double> distribution,
                                                      int top_k, double temperature);

/// Autoregressive continuation. The output begins with the prompt verbatim;
/// generation stops after max_tokens appended tokens or at an "end" token.
/// Deterministic under cfg.rng_seed. Throws InvalidPromptError if the prompt
/// does not parse as a song prefix.
std::vector<std::string> sample(const SequenceModel& model,
                                std::span<const std::string> prompt,
                                const GenerationConfig& cfg);

}  // namespace lm
}  // namespace tabgen

#endif  // TABGEN_NGRAM_HPP
