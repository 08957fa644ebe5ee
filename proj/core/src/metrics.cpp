#include "tabgen/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "tabgen/rng.hpp"

namespace tabgen {
namespace metrics {
namespace {

std::array<long, 12> pitch_class_histogram(const ScoreView& score) {
    std::array<long, 12> histogram{};
    for (const auto& track : score.instruments) {
        if (track.id.is_drums()) continue;
        for (const auto& measure : track.measures) {
            for (const auto& onset : measure.onsets) {
                for (const auto& note : onset.notes) {
                    ++histogram[static_cast<size_t>(pitch_class(note.pitch))];
                }
            }
        }
    }
    return histogram;
}

double entropy_bits(const std::array<long, 12>& histogram) {
    long total = 0;
    for (long count : histogram) total += count;
    double h = 0;
    for (long count : histogram) {
        if (count == 0) continue;
        const double p = static_cast<double>(count) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h < 0 ? 0.0 : h;
}

std::vector<std::vector<bool>> pooled_grids(const ScoreView& score, int resolution) {
    std::vector<std::vector<bool>> grids(score.measure_count,
                                         std::vector<bool>(static_cast<size_t>(resolution)));
    const double slot_ticks =
        static_cast<double>(score.measure_ticks) / static_cast<double>(resolution);
    for (const auto& track : score.instruments) {
        for (size_t m = 0; m < track.measures.size(); ++m) {
            for (const auto& onset : track.measures[m].onsets) {
                int slot = static_cast<int>(std::floor(onset.offset_ticks / slot_ticks));
                slot = std::clamp(slot, 0, resolution - 1);
                grids[m][static_cast<size_t>(slot)] = true;
            }
        }
    }
    return grids;
}

}  // namespace

double pitch_class_entropy(const ScoreView& score) {
    const auto histogram = pitch_class_histogram(score);
    long total = 0;
    for (long count : histogram) total += count;
    if (total == 0) throw NoPitchedNotesError("song has no pitched notes");
    return entropy_bits(histogram);
}

double pitch_class_entropy(const Song& song, const MetricOptions& options) {
    return pitch_class_entropy(segment_measures(song, options.segment));
}

std::vector<std::pair<InstrumentId, double>> per_instrument_entropy(const ScoreView& score) {
    std::vector<std::pair<InstrumentId, double>> out;
    for (const auto& track : score.instruments) {
        if (track.id.is_drums()) continue;
        std::array<long, 12> histogram{};
        long total = 0;
        for (const auto& measure : track.measures) {
            for (const auto& onset : measure.onsets) {
                for (const auto& note : onset.notes) {
                    ++histogram[static_cast<size_t>(pitch_class(note.pitch))];
                    ++total;
                }
            }
        }
        if (total > 0) out.emplace_back(track.id, entropy_bits(histogram));
    }
    return out;
}

double groove_consistency(const ScoreView& score, int resolution) {
    if (resolution < 1) throw Error("groove resolution must be >= 1");
    const size_t measures = score.measure_count;
    if (measures < 2) {
        throw TooFewMeasuresError("groove consistency needs >= 2 measures, got " +
                                  std::to_string(measures));
    }
    const auto grids = pooled_grids(score, resolution);
    double distance_sum = 0;
    for (size_t m = 0; m + 1 < measures; ++m) {
        long hamming = 0;
        for (int r = 0; r < resolution; ++r) {
            hamming += grids[m][static_cast<size_t>(r)] != grids[m + 1][static_cast<size_t>(r)];
        }
        distance_sum += static_cast<double>(hamming) / static_cast<double>(resolution);
    }
    return 1.0 - distance_sum / static_cast<double>(measures - 1);
}

double groove_consistency(const Song& song, const MetricOptions& options) {
    return groove_consistency(segment_measures(song, options.segment),
                              options.groove_resolution);
}

namespace {

void validate_presence(const PresenceInput& input) {
    std::set<InstrumentId> all_ids;
    for (const auto& entry : input.all) {
        if (entry.measures < 0 || entry.empty_measures < 0 ||
            entry.empty_measures > entry.measures) {
            throw std::invalid_argument("presence counts out of range for " + entry.id.text());
        }
        all_ids.insert(entry.id);
    }
    for (const auto& id : input.prompted) {
        if (!all_ids.contains(id)) {
            throw std::invalid_argument("prompted instrument " + id.text() +
                                        " is not in the instrument set");
        }
    }
}

}  // namespace

double pip_score(const PresenceInput& input) {
    validate_presence(input);
    long numerator = 0;
    long denominator = 0;
    for (const auto& entry : input.all) {
        denominator += entry.measures;
        if (input.prompted.contains(entry.id)) {
            numerator += entry.measures - entry.empty_measures;
        }
    }
    if (denominator == 0) {
        throw ZeroDenominatorError("no measures in any instrument");
    }
    return static_cast<double>(numerator) / static_cast<double>(denominator);
}

double uip_score(const PresenceInput& input) {
    validate_presence(input);
    long numerator = 0;
    long denominator = 0;
    for (const auto& entry : input.all) {
        denominator += entry.measures - entry.empty_measures;
        if (!input.prompted.contains(entry.id)) {
            numerator += entry.measures - entry.empty_measures;
        }
    }
    if (denominator == 0) {
        throw ZeroDenominatorError("all measures are empty");
    }
    return static_cast<double>(numerator) / static_cast<double>(denominator);
}

PresenceInput presence_from_song(const Song& song, const std::set<InstrumentId>& prompted,
                                 const MetricOptions& options, size_t prompt_body_tokens) {
    const size_t skip = options.include_prompt ? 0 : prompt_body_tokens;
    const ScoreView score = segment_measures(song, options.segment, skip);
    const long total = static_cast<long>(score.measure_count);

    PresenceInput input;
    input.prompted = prompted;
    std::set<InstrumentId> covered;
    for (const auto& track : score.instruments) {
        input.all.push_back({track.id, total, track.empty_measures()});
        covered.insert(track.id);
    }
    for (const auto& id : prompted) {
        if (!covered.contains(id)) {
            // Prompted but silent: rest-padded to all-empty measures.
            input.all.push_back({id, total, total});
        }
    }
    std::sort(input.all.begin(), input.all.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    return input;
}

namespace {

struct PitchRange {
    int low = 0;
    int high = 0;  // inclusive
};

// Playable range: lowest open string to highest open string + max fret, on
// the standard string count (6 guitar-like, 4 bass).
PitchRange instrument_range(const InstrumentId& id, const TuningTable& tuning) {
    const auto& opens = tuning.opens_for(id);
    const size_t strings = id.family == InstrumentFamily::bass ? 4 : 6;
    const size_t last = std::min(strings, opens.size()) - 1;
    return {opens[last], opens[0] + kMaxFret};
}

// Maps a pitch to (string, fret) with the smallest playable fret.
std::pair<int, int> string_fret_for(int pitch, const InstrumentId& id,
                                    const TuningTable& tuning) {
    const auto& opens = tuning.opens_for(id);
    const size_t strings = id.family == InstrumentFamily::bass ? 4 : 6;
    const size_t count = std::min(strings, opens.size());
    for (size_t s = 0; s < count; ++s) {  // string 1 (highest open) first
        if (pitch >= opens[s]) {
            const int fret = pitch - opens[s];
            if (fret <= kMaxFret) return {static_cast<int>(s) + 1, fret};
        }
    }
    return {static_cast<int>(count), std::max(0, pitch - opens[count - 1])};
}

}  // namespace

Song randomize_pitch(const Song& song, uint64_t rng_seed, const MetricOptions& options) {
    std::mt19937_64 rng(rng_seed);
    std::vector<Token> tokens = song.tokens;
    for (size_t i = song.start_index + 1; i < tokens.size(); ++i) {
        auto* note = std::get_if<NoteToken>(&tokens[i]);
        if (!note) continue;
        const PitchRange range = instrument_range(note->instrument, options.segment.tuning);
        const uint64_t span = static_cast<uint64_t>(range.high - range.low + 1);
        const int pitch = range.low + static_cast<int>(uniform_below(rng, span));
        const auto [string_no, fret] = string_fret_for(pitch, note->instrument,
                                                       options.segment.tuning);
        note->string = string_no;
        note->fret = std::clamp(fret, kMinFret, kMaxFret);
    }
    return song_from_tokens(std::move(tokens));
}

Song randomize_rhythm(const Song& song, uint64_t rng_seed, const MetricOptions& options) {
    if (options.groove_resolution < 1) throw Error("groove resolution must be >= 1");
    std::mt19937_64 rng(rng_seed);
    const ScoreView score = segment_measures(song, options.segment);
    const int resolution = options.groove_resolution;
    const int slot_ticks = score.measure_ticks / resolution;

    // measure -> absolute tick -> tokens, rebuilt with resampled offsets
    std::map<long, std::vector<Token>> events;
    for (const auto& track : score.instruments) {
        for (size_t m = 0; m < track.measures.size(); ++m) {
            for (const auto& onset : track.measures[m].onsets) {
                const int slot = static_cast<int>(
                    uniform_below(rng, static_cast<uint64_t>(resolution)));
                const long tick = static_cast<long>(m) * score.measure_ticks +
                                  static_cast<long>(slot) * slot_ticks;
                for (const auto& note : onset.notes) {
                    events[tick].push_back(note.token);
                }
            }
        }
    }

    std::vector<Token> tokens(song.tokens.begin(),
                              song.tokens.begin() + static_cast<long>(song.start_index) + 1);
    long cursor = 0;
    for (auto& [tick, notes] : events) {
        if (tick > cursor) {
            tokens.push_back(WaitToken{static_cast<int>(tick - cursor)});
            cursor = tick;
        }
        // Stable order within an onset: serialized text.
        std::sort(notes.begin(), notes.end(), [](const Token& a, const Token& b) {
            return serialize_token(a) < serialize_token(b);
        });
        tokens.insert(tokens.end(), notes.begin(), notes.end());
    }
    const long song_end = static_cast<long>(score.measure_count) * score.measure_ticks;
    if (song_end > cursor) tokens.push_back(WaitToken{static_cast<int>(song_end - cursor)});
    const auto body = song.body();
    if (std::any_of(body.begin(), body.end(),
                    [](const Token& t) { return is<EndToken>(t); })) {
        tokens.push_back(EndToken{});
    }
    return song_from_tokens(std::move(tokens));
}

}  // namespace metrics
}  // namespace tabgen
