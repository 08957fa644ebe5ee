// Measure-segmented view of a song. Timing comes from wait tokens at 960
// ticks per quarter; measure boundaries come from explicit new_measure
// tokens when the corpus has them, otherwise from tick accumulation against
// a configurable measure length (4/4 at 960 tpq = 3840 ticks by default).
// Every instrument gets the same number of measures: instruments that stop
// playing are padded with empty (all-rest) measures, matching the decoder
// behavior the presence metrics assume.

#ifndef TABGEN_SCORE_HPP
#define TABGEN_SCORE_HPP

#include <optional>
#include <vector>

#include "tabgen/song.hpp"
#include "tabgen/token.hpp"

namespace tabgen {

/// Time-signature configuration yields a non-positive measure length.
struct NonPositiveMeasureLengthError : Error {
    using Error::Error;
};

/// Open-string MIDI pitches per family, string 1 first (highest). A note's
/// pitch is open[string-1] + fret + the song's downtune.
struct TuningTable {
    std::vector<int> guitar_like;  // distorted, clean, piano, leads, pads, other
    std::vector<int> bass;

    static TuningTable standard();

    const std::vector<int>& opens_for(const InstrumentId& id) const {
        return id.family == InstrumentFamily::bass ? bass : guitar_like;
    }
    int open_pitch(const InstrumentId& id, int string) const;
};

struct SegmentOptions {
    int measure_ticks = 4 * kTicksPerQuarter;  // 4/4
    TuningTable tuning = TuningTable::standard();
};

struct NoteEvent {
    int pitch = 0;  // MIDI; for drums, the percussion number
    Token token;    // the originating NoteToken or DrumsToken
};

struct Onset {
    int offset_ticks = 0;  // within the measure, < measure_ticks
    std::vector<NoteEvent> notes;
};

struct Measure {
    std::vector<Onset> onsets;  // sorted by offset
    bool is_empty() const { return onsets.empty(); }
    long note_count() const {
        long n = 0;
        for (const auto& onset : onsets) n += static_cast<long>(onset.notes.size());
        return n;
    }
};

struct InstrumentTrack {
    InstrumentId id;
    std::vector<Measure> measures;

    long empty_measures() const {
        long n = 0;
        for (const auto& m : measures) n += m.is_empty() ? 1 : 0;
        return n;
    }
};

struct ScoreView {
    int ticks_per_quarter = kTicksPerQuarter;
    int measure_ticks = 4 * kTicksPerQuarter;
    std::vector<InstrumentTrack> instruments;  // canonical order
    size_t measure_count = 0;                  // identical across instruments

    const InstrumentTrack* find(const InstrumentId& id) const;
};

/// Builds the per-instrument measure view of a parsed song. Note events
/// among the first `skip_body_tokens` body tokens are excluded from the
/// view (their wait tokens still advance time); the presence metrics use
/// this to leave the prompt region out of the counts.
ScoreView segment_measures(const Song& song, const SegmentOptions& options = {},
                           size_t skip_body_tokens = 0);

/// Number of measures a body-token fragment spans, by the same boundary
/// rules as segment_measures (explicit new_measure tokens win; otherwise
/// accumulated ticks rounded up to a whole measure).
size_t count_measures(std::span<const Token> body, const SegmentOptions& options = {});

/// Total wait ticks in a token fragment.
long total_wait_ticks(std::span<const Token> tokens);

int pitch_class(int midi_pitch);

}  // namespace tabgen

#endif  // TABGEN_SCORE_HPP
