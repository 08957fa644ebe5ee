#include "tabgen/score.hpp"

#include <algorithm>
#include <map>

namespace tabgen {

TuningTable TuningTable::standard() {
    // Standard guitar E4..E2 extended downward in fourths for 7..10 string
    // instruments; standard 4-string bass G2..E1 extended the same way.
    TuningTable t;
    t.guitar_like = {64, 59, 55, 50, 45, 40, 35, 30, 25, 20};
    t.bass = {43, 38, 33, 28, 23, 18, 13, 8, 3, 0};
    return t;
}

int TuningTable::open_pitch(const InstrumentId& id, int string) const {
    const auto& opens = opens_for(id);
    const size_t idx = static_cast<size_t>(string - 1);
    if (idx >= opens.size()) return opens.back();
    return opens[idx];
}

int pitch_class(int midi_pitch) {
    return ((midi_pitch % 12) + 12) % 12;
}

long total_wait_ticks(std::span<const Token> tokens) {
    long ticks = 0;
    for (const Token& token : tokens) {
        if (const auto* wait = std::get_if<WaitToken>(&token)) ticks += wait->ticks;
    }
    return ticks;
}

namespace {

struct TimedEvent {
    size_t measure = 0;
    int offset = 0;
    InstrumentId instrument;
    NoteEvent note;
};

// Walks a body fragment, assigning each note event a (measure, offset). Two
// boundary modes: if the fragment contains new_measure tokens they define
// the boundaries (a leading new_measure opens measure 0 rather than closing
// an empty one); otherwise boundaries fall every measure_ticks.
struct BodyWalk {
    std::vector<TimedEvent> events;
    size_t measure_count = 0;
};

BodyWalk walk_body(std::span<const Token> body, const Song& song, const SegmentOptions& options,
                   size_t skip_note_tokens) {
    if (options.measure_ticks <= 0) {
        throw NonPositiveMeasureLengthError("measure length must be positive, got " +
                                            std::to_string(options.measure_ticks));
    }
    const bool explicit_measures =
        std::any_of(body.begin(), body.end(), [](const Token& t) { return is<NewMeasureToken>(t); });

    bool leading_boundary_seen = false;
    bool any_timed_token = false;
    size_t measure = 0;
    long tick = 0;          // absolute, tick mode
    long measure_start = 0; // absolute tick at which the current measure began
    long new_measures = 0;

    BodyWalk out;
    size_t max_measure = 0;
    bool any_event = false;

    for (size_t i = 0; i < body.size(); ++i) {
        const Token& token = body[i];
        if (const auto* wait = std::get_if<WaitToken>(&token)) {
            tick += wait->ticks;
            any_timed_token = true;
            continue;
        }
        if (is<NewMeasureToken>(token)) {
            ++new_measures;
            if (!any_timed_token && !leading_boundary_seen && new_measures == 1) {
                // Opening marker of measure 0.
                leading_boundary_seen = true;
            } else {
                ++measure;
            }
            measure_start = tick;
            any_timed_token = true;
            continue;
        }
        if (!is_note_event(token)) continue;
        any_timed_token = true;
        if (i < skip_note_tokens) continue;  // prompt-region notes excluded on request

        TimedEvent event;
        if (explicit_measures) {
            event.measure = measure;
            long offset = tick - measure_start;
            if (offset >= options.measure_ticks) offset = options.measure_ticks - 1;
            event.offset = static_cast<int>(offset);
        } else {
            event.measure = static_cast<size_t>(tick / options.measure_ticks);
            event.offset = static_cast<int>(tick % options.measure_ticks);
        }
        if (const auto* note = std::get_if<NoteToken>(&token)) {
            event.instrument = note->instrument;
            const int open = options.tuning.open_pitch(note->instrument, note->string);
            event.note = NoteEvent{open + note->fret + song.downtune, token};
        } else {
            const auto& drums = std::get<DrumsToken>(token);
            event.instrument = InstrumentId::drums();
            event.note = NoteEvent{drums.pitch, token};
        }
        max_measure = std::max(max_measure, event.measure);
        any_event = true;
        out.events.push_back(std::move(event));
    }

    if (explicit_measures) {
        out.measure_count = measure + 1;
    } else {
        const long ticks_measures =
            (tick + options.measure_ticks - 1) / options.measure_ticks;  // round up
        out.measure_count = static_cast<size_t>(ticks_measures);
    }
    if (any_event) out.measure_count = std::max(out.measure_count, max_measure + 1);
    if (!any_timed_token && out.events.empty()) out.measure_count = 0;
    return out;
}

}  // namespace

size_t count_measures(std::span<const Token> body, const SegmentOptions& options) {
    Song dummy;
    return walk_body(body, dummy, options, 0).measure_count;
}

const InstrumentTrack* ScoreView::find(const InstrumentId& id) const {
    for (const auto& track : instruments) {
        if (track.id == id) return &track;
    }
    return nullptr;
}

ScoreView segment_measures(const Song& song, const SegmentOptions& options,
                           size_t skip_body_tokens) {
    BodyWalk walk = walk_body(song.body(), song, options, skip_body_tokens);

    ScoreView view;
    view.measure_ticks = options.measure_ticks;
    view.measure_count = walk.measure_count;

    // instrument -> measure -> offset -> events, ordered maps for canonical output
    std::map<InstrumentId, std::map<size_t, std::map<int, std::vector<NoteEvent>>>> grouped;
    for (auto& event : walk.events) {
        grouped[event.instrument][event.measure][event.offset].push_back(std::move(event.note));
    }

    for (auto& [id, measures] : grouped) {
        InstrumentTrack track;
        track.id = id;
        track.measures.resize(view.measure_count);
        for (auto& [measure_idx, onsets] : measures) {
            Measure& m = track.measures[measure_idx];
            for (auto& [offset, notes] : onsets) {
                m.onsets.push_back(Onset{offset, std::move(notes)});
            }
        }
        view.instruments.push_back(std::move(track));
    }
    return view;
}

}  // namespace tabgen
