// Objective evaluation metrics.
//
// Pitch class entropy (PCE): Shannon entropy, in bits, of the 12-bin pitch
// class histogram pooled over all non-drum instruments of a song. Low PCE
// means the song stays within a tonality.
//
// Groove consistency (GC): 1 - mean Hamming distance between the onset
// grids of consecutive measures, onsets of all instruments pooled onto an
// R-position grid per measure. 1.0 means the rhythm pattern never changes.
//
// Prompted/unprompted instrument presence (PIP/UIP): measure-counting
// scores of how well generated output honors an instrumentation prompt.
//   PIP = sum_{i in P} (M_i - E_i) / sum_{i in A} M_i
//   UIP = sum_{i in A\P} (M_i - E_i) / sum_{i in A} (M_i - E_i)
// with A all instruments of the song, P the prompted subset, M_i total and
// E_i empty measures of instrument i. Both are fractions in [0,1];
// formatting as percentages is the report layer's job.

#ifndef TABGEN_METRICS_HPP
#define TABGEN_METRICS_HPP

#include <cstdint>
#include <set>
#include <vector>

#include "tabgen/score.hpp"
#include "tabgen/song.hpp"

namespace tabgen {
namespace metrics {

struct NoPitchedNotesError : Error {
    using Error::Error;
};
struct TooFewMeasuresError : Error {
    using Error::Error;
};
struct ZeroDenominatorError : Error {
    using Error::Error;
};

struct MetricOptions {
    SegmentOptions segment;
    int groove_resolution = 16;  // grid positions per measure
    bool include_prompt = false; // count prompt-region notes in PIP/UIP
};

double pitch_class_entropy(const ScoreView& score);
double pitch_class_entropy(const Song& song, const MetricOptions& options = {});

/// Per-instrument entropies for diagnostics, canonical order, drums skipped.
std::vector<std::pair<InstrumentId, double>> per_instrument_entropy(const ScoreView& score);

double groove_consistency(const ScoreView& score, int resolution);
double groove_consistency(const Song& song, const MetricOptions& options = {});

struct PresenceInput {
    struct Entry {
        InstrumentId id;
        long measures = 0;        // M_i, includes empty measures
        long empty_measures = 0;  // E_i
    };
    std::vector<Entry> all;             // the set A with its counts
    std::set<InstrumentId> prompted;    // P, must be a subset of A
};

double pip_score(const PresenceInput& input);
double uip_score(const PresenceInput& input);

/// Builds PresenceInput from a generated song. Instruments that were
/// prompted but never play are included with all-empty measures (the
/// decoder's rest padding). Unless options.include_prompt is set, note
/// events among the first `prompt_body_tokens` body tokens are ignored.
PresenceInput presence_from_song(const Song& song, const std::set<InstrumentId>& prompted,
                                 const MetricOptions& options = {},
                                 size_t prompt_body_tokens = 0);

/// Replaces every pitched note with a uniformly random valid pitch for its
/// instrument range; every other token (waits, drums, opaque) is untouched.
Song randomize_pitch(const Song& song, uint64_t rng_seed, const MetricOptions& options = {});

/// Resamples every onset's offset uniformly on the measure grid, keeping
/// pitches and the per-song note multiset intact. The body is rebuilt as a
/// note/wait skeleton; opaque tokens do not survive.
Song randomize_rhythm(const Song& song, uint64_t rng_seed, const MetricOptions& options = {});

}  // namespace metrics
}  // namespace tabgen

#endif  // TABGEN_METRICS_HPP
