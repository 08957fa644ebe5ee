#include <doctest.h>

#include <cmath>
#include <random>

#include "synthetic.hpp"
#include "tabgen/metrics.hpp"
#include "tabgen/rng.hpp"

using namespace tabgen;
using namespace tabgen::metrics;

namespace {

Song make_song(const std::string& body) {
    return parse_song("artist:x downtune:0 tempo:120 start " + body);
}

// Brute-force presence oracle: integer measure counting straight off the
// formulas, kept separate from the implementation path.
struct RationalPresence {
    long pip_num = 0, pip_den = 0, uip_num = 0, uip_den = 0;
};

RationalPresence presence_oracle(const PresenceInput& input) {
    RationalPresence r;
    for (const auto& entry : input.all) {
        r.pip_den += entry.measures;
        r.uip_den += entry.measures - entry.empty_measures;
        const bool prompted = input.prompted.contains(entry.id);
        if (prompted) r.pip_num += entry.measures - entry.empty_measures;
        if (!prompted) r.uip_num += entry.measures - entry.empty_measures;
    }
    return r;
}

}  // namespace

TEST_CASE("pitch class entropy anchors") {
    // All notes in one pitch class.
    const Song single = make_song(
        "distorted0:note:s6:f0 wait:960 distorted0:note:s5:f7 wait:960 "
        "distorted0:note:s4:f2 wait:960");
    CHECK(pitch_class_entropy(single) == 0.0);

    // Uniform over all 12 classes: frets 0..11 on one string.
    std::string body;
    for (int f = 0; f < 12; ++f) {
        body += "distorted0:note:s6:f" + std::to_string(f) + " wait:960 ";
    }
    CHECK(pitch_class_entropy(make_song(body)) ==
          doctest::Approx(std::log2(12.0)).epsilon(1e-12));

    // {C:3, G:1}: -(0.75 log2 0.75 + 0.25 log2 0.25), hand-checked 0.8113.
    const Song skewed = make_song(
        "clean0:note:s1:f8 wait:960 clean0:note:s1:f8 wait:960 "
        "clean0:note:s1:f8 wait:960 clean0:note:s2:f8 wait:960");
    const double direct = -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25));
    CHECK(pitch_class_entropy(skewed) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(pitch_class_entropy(skewed) == doctest::Approx(0.811278).epsilon(1e-6));
}

TEST_CASE("drums are excluded from the pitch histogram") {
    const Song song = make_song(
        "distorted0:note:s6:f0 drums:note:36 drums:note:38 drums:note:42 wait:960");
    CHECK(pitch_class_entropy(song) == 0.0);
    CHECK_THROWS_AS(pitch_class_entropy(make_song("drums:note:36 wait:960")),
                    NoPitchedNotesError);
}

TEST_CASE("groove consistency anchors") {
    // Identical quarter-note grooves across four measures.
    std::string body;
    for (int m = 0; m < 4; ++m) {
        for (int beat = 0; beat < 4; ++beat) {
            body += "drums:note:36 wait:960 ";
        }
    }
    CHECK(groove_consistency(make_song(body)) == 1.0);

    // Two measures, R=4: patterns 1010 vs 1001 differ in 2 of 4 slots.
    const Song two = make_song(
        "drums:note:36 wait:1920 drums:note:38 wait:1920 "
        "drums:note:36 wait:2880 drums:note:38 wait:960");
    MetricOptions options;
    options.groove_resolution = 4;
    CHECK(groove_consistency(two, options) == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(groove_consistency(make_song("drums:note:36 wait:960")),
                    TooFewMeasuresError);
}

TEST_CASE("presence scores reproduce the hand-derived counts") {
    PresenceInput input;
    input.all = {{InstrumentId::distorted(0), 10, 1},
                 {InstrumentId::bass(), 10, 0},
                 {InstrumentId::drums(), 10, 2}};
    input.prompted = {InstrumentId::distorted(0), InstrumentId::bass()};

    CHECK(pip_score(input) == doctest::Approx(19.0 / 30.0).epsilon(1e-12));
    CHECK(uip_score(input) == doctest::Approx(8.0 / 27.0).epsilon(1e-12));

    // All prompted, nothing empty.
    PresenceInput full;
    full.all = {{InstrumentId::bass(), 8, 0}, {InstrumentId::drums(), 8, 0}};
    full.prompted = {InstrumentId::bass(), InstrumentId::drums()};
    CHECK(pip_score(full) == 1.0);
    CHECK(uip_score(full) == 0.0);

    // Prompted instruments entirely empty.
    PresenceInput hollow;
    hollow.all = {{InstrumentId::bass(), 5, 5}, {InstrumentId::drums(), 5, 0}};
    hollow.prompted = {InstrumentId::bass()};
    CHECK(pip_score(hollow) == 0.0);
    CHECK(uip_score(hollow) == 1.0);  // only unprompted notes
}

TEST_CASE("per-instrument entropies expose the diagnostic view") {
    const Song song = make_song(
        "distorted0:note:s6:f0 bass:note:s4:f0 bass:note:s4:f2 drums:note:36 wait:960");
    const auto per = per_instrument_entropy(segment_measures(song));
    REQUIRE(per.size() == 2);  // drums excluded
    CHECK(per[0].first == InstrumentId::distorted(0));
    CHECK(per[0].second == 0.0);  // one note, one class
    CHECK(per[1].first == InstrumentId::bass());
    CHECK(per[1].second == doctest::Approx(1.0));  // two classes, 50/50
}

TEST_CASE("presence identities") {
    // With no empty measures, PIP is the prompted share of measure counts.
    PresenceInput input;
    input.all = {{InstrumentId::distorted(0), 7, 0},
                 {InstrumentId::bass(), 5, 0},
                 {InstrumentId::drums(), 4, 0}};
    input.prompted = {InstrumentId::distorted(0), InstrumentId::drums()};
    CHECK(pip_score(input) == doctest::Approx((7.0 + 4.0) / 16.0).epsilon(1e-15));

    // UIP is zero iff no unprompted instrument has a non-empty measure.
    PresenceInput muted;
    muted.all = {{InstrumentId::distorted(0), 6, 1}, {InstrumentId::bass(), 6, 6}};
    muted.prompted = {InstrumentId::distorted(0)};
    CHECK(uip_score(muted) == 0.0);
    muted.all[1].empty_measures = 5;  // one live unprompted measure
    CHECK(uip_score(muted) > 0.0);
}

TEST_CASE("presence error paths") {
    PresenceInput zero;
    zero.all = {{InstrumentId::bass(), 0, 0}};
    zero.prompted = {InstrumentId::bass()};
    CHECK_THROWS_AS(pip_score(zero), ZeroDenominatorError);

    PresenceInput all_empty;
    all_empty.all = {{InstrumentId::bass(), 4, 4}};
    all_empty.prompted = {InstrumentId::bass()};
    CHECK_THROWS_AS(uip_score(all_empty), ZeroDenominatorError);

    PresenceInput not_subset;
    not_subset.all = {{InstrumentId::bass(), 4, 0}};
    not_subset.prompted = {InstrumentId::drums()};
    CHECK_THROWS_AS(pip_score(not_subset), std::invalid_argument);

    PresenceInput overfull;
    overfull.all = {{InstrumentId::bass(), 4, 5}};
    CHECK_THROWS_AS(pip_score(overfull), std::invalid_argument);
}

TEST_CASE("presence matches the rational oracle on randomized inputs") {
    std::mt19937_64 rng(31337);
    const std::vector<InstrumentId> pool = {
        InstrumentId::distorted(0), InstrumentId::distorted(1), InstrumentId::clean(0),
        InstrumentId::bass(),       InstrumentId::piano(0),     InstrumentId::drums()};
    for (int i = 0; i < 1000; ++i) {
        PresenceInput input;
        const size_t n = 1 + uniform_below(rng, pool.size());
        for (size_t k = 0; k < n; ++k) {
            const long measures = static_cast<long>(uniform_below(rng, 40));
            const long empty = static_cast<long>(uniform_below(rng, measures + 1));
            input.all.push_back({pool[k], measures, empty});
            if (uniform_below(rng, 2) == 0) input.prompted.insert(pool[k]);
        }
        const RationalPresence oracle = presence_oracle(input);

        if (oracle.pip_den == 0) {
            CHECK_THROWS_AS(pip_score(input), ZeroDenominatorError);
        } else {
            const double expected = static_cast<double>(oracle.pip_num) /
                                    static_cast<double>(oracle.pip_den);
            CHECK(pip_score(input) == expected);  // same division, bit-exact
            CHECK(pip_score(input) >= 0.0);
            CHECK(pip_score(input) <= 1.0);
        }
        if (oracle.uip_den == 0) {
            CHECK_THROWS_AS(uip_score(input), ZeroDenominatorError);
        } else {
            const double expected = static_cast<double>(oracle.uip_num) /
                                    static_cast<double>(oracle.uip_den);
            CHECK(uip_score(input) == expected);
            CHECK(uip_score(input) >= 0.0);
            CHECK(uip_score(input) <= 1.0);
        }
    }
}

TEST_CASE("presence_from_song pads prompted-but-silent instruments") {
    const Song song = make_song("distorted0:note:s6:f0 wait:3840 distorted0:note:s6:f1");
    const std::set<InstrumentId> prompted = {InstrumentId::distorted(0),
                                             InstrumentId::bass()};
    const PresenceInput input = presence_from_song(song, prompted);
    REQUIRE(input.all.size() == 2);
    const auto& bass = input.all[1];
    CHECK(bass.id == InstrumentId::bass());
    CHECK(bass.measures == 2);
    CHECK(bass.empty_measures == 2);
    CHECK(pip_score(input) == doctest::Approx(0.5));
}

TEST_CASE("prompt-region notes are excluded from presence by default") {
    // Body: one bass seed note (prompt region), then guitar-only content.
    const Song song = make_song(
        "bass:note:s4:f0 wait:960 distorted0:note:s6:f0 wait:960 "
        "distorted0:note:s6:f1 wait:1920");
    const std::set<InstrumentId> prompted = {InstrumentId::bass()};
    const PresenceInput skip = presence_from_song(song, prompted, {}, 1);
    CHECK(pip_score(skip) == 0.0);  // the seed is not the model's doing

    MetricOptions include;
    include.include_prompt = true;
    const PresenceInput kept = presence_from_song(song, prompted, include, 1);
    CHECK(pip_score(kept) > 0.0);
}

TEST_CASE("pitch randomization keeps rhythm tokens bit-identical") {
    const auto corpus = testkit::make_natural_corpus(10, 99);
    for (size_t i = 0; i < corpus.size(); ++i) {
        const Song& song = corpus[i];
        const Song randomized = randomize_pitch(song, 1000 + i);
        CHECK(randomize_pitch(song, 1000 + i) == randomized);  // deterministic
        REQUIRE(randomized.tokens.size() == song.tokens.size());
        for (size_t t = 0; t < song.tokens.size(); ++t) {
            if (!is<NoteToken>(song.tokens[t])) {
                CHECK(song.tokens[t] == randomized.tokens[t]);
            } else {
                CHECK(is<NoteToken>(randomized.tokens[t]));
            }
        }
    }
}

TEST_CASE("rhythm randomization keeps the pitch multiset") {
    const auto corpus = testkit::make_natural_corpus(10, 98);
    auto pitch_multiset = [](const Song& song) {
        std::multiset<std::string> pitches;
        for (const Token& token : song.body()) {
            if (is_note_event(token)) pitches.insert(serialize_token(token));
        }
        return pitches;
    };
    for (size_t i = 0; i < corpus.size(); ++i) {
        const Song randomized = randomize_rhythm(corpus[i], 2000 + i);
        CHECK(randomize_rhythm(corpus[i], 2000 + i) == randomized);
        CHECK(pitch_multiset(corpus[i]) == pitch_multiset(randomized));
        // Measure count is preserved.
        CHECK(segment_measures(randomized).measure_count ==
              segment_measures(corpus[i]).measure_count);
    }
}

TEST_CASE("randomization degrades tonality and groove in the median") {
    const auto corpus = testkit::make_natural_corpus(120, 4242);
    std::vector<double> pce_source, pce_random, gc_source, gc_random;
    for (size_t i = 0; i < corpus.size(); ++i) {
        pce_source.push_back(pitch_class_entropy(corpus[i]));
        pce_random.push_back(pitch_class_entropy(randomize_pitch(corpus[i], 7000 + i)));
        gc_source.push_back(groove_consistency(corpus[i]));
        gc_random.push_back(groove_consistency(randomize_rhythm(corpus[i], 8000 + i)));
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    CHECK(median(pce_random) > median(pce_source));
    CHECK(median(gc_random) < median(gc_source));
}

TEST_CASE("metric bounds and opaque invariance on fuzzed songs") {
    std::mt19937_64 rng(2718);
    for (int i = 0; i < 300; ++i) {
        const Song song = testkit::make_fuzz_song(rng);

        Song with_noise = song;
        // Splice opaque tokens into the body at arbitrary places.
        std::vector<Token> tokens = song.tokens;
        const size_t insertions = uniform_below(rng, 4);
        for (size_t k = 0; k < insertions; ++k) {
            const size_t at = song.start_index + 1 +
                              uniform_below(rng, tokens.size() - song.start_index);
            tokens.insert(tokens.begin() + static_cast<long>(at),
                          OpaqueToken{"nfx:noise" + std::to_string(k)});
        }
        with_noise = song_from_tokens(std::move(tokens));

        try {
            const double pce = pitch_class_entropy(song);
            CHECK(pce >= 0.0);
            CHECK(pce <= std::log2(12.0) + 1e-12);
            CHECK(pitch_class_entropy(with_noise) == pce);
        } catch (const NoPitchedNotesError&) {
        }
        try {
            const double gc = groove_consistency(song);
            CHECK(gc >= 0.0);
            CHECK(gc <= 1.0);
            CHECK(groove_consistency(with_noise) == gc);
        } catch (const TooFewMeasuresError&) {
        }
    }
}
