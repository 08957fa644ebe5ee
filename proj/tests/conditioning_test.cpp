#include <doctest.h>

#include "synthetic.hpp"
#include "tabgen/conditioning.hpp"

using namespace tabgen;

namespace {

const std::set<GenreId> kFiveGenres = {GenreId{"metal"}, GenreId{"rock"}, GenreId{"punk"},
                                       GenreId{"folk"}, GenreId{"classical"}};

Song three_part_song() {
    return parse_song(
        "artist:x downtune:0 tempo:120 start "
        "distorted0:note:s6:f0 bass:note:s4:f0 drums:note:36 wait:3840");
}

std::string serialized_header(const Song& song) {
    std::string out;
    for (const Token& token : song.header_region()) {
        out += serialize_token(token);
        out += ' ';
    }
    return out;
}

}  // namespace

TEST_CASE("instrument injection lists the playing instruments between markers") {
    const Song injected = inject_instrument_tokens(three_part_song());
    CHECK(serialized_header(injected) ==
          "artist:x downtune:0 tempo:120 inst_start distorted0 bass drums inst_end ");
    REQUIRE(injected.control.instruments.size() == 3);
}

TEST_CASE("a single part yields exactly one declaration") {
    const Song song =
        parse_song("artist:x downtune:0 tempo:120 start bass:note:s4:f3 wait:960");
    const Song injected = inject_instrument_tokens(song);
    CHECK(injected.control.instruments == std::vector<InstrumentId>{InstrumentId::bass()});
}

TEST_CASE("injections are idempotent and replace the previous block") {
    const Song once = inject_instrument_tokens(three_part_song());
    const Song twice = inject_instrument_tokens(once);
    CHECK(once == twice);
}

TEST_CASE("injection on a song without notes is an error") {
    const Song empty = parse_song("artist:x downtune:0 tempo:120 start wait:960");
    CHECK_THROWS_AS(inject_instrument_tokens(empty), NoInstrumentsError);
}

TEST_CASE("genre injection places one token and replaces on re-injection") {
    Song song = inject_genre_token(three_part_song(), GenreId{"metal"}, kFiveGenres);
    REQUIRE(song.control.genre.has_value());
    CHECK(song.control.genre->name == "metal");

    song = inject_genre_token(song, GenreId{"rock"}, kFiveGenres);
    CHECK(song.control.genre->name == "rock");
    int genre_tokens = 0;
    for (const Token& token : song.tokens) genre_tokens += is<GenreDeclToken>(token) ? 1 : 0;
    CHECK(genre_tokens == 1);
}

TEST_CASE("unknown genre labels are rejected against the vocabulary") {
    CHECK_THROWS_AS(inject_genre_token(three_part_song(), GenreId{"polka"}, kFiveGenres),
                    UnknownGenreError);
}

TEST_CASE("injections leave the body bit-identical and commute") {
    const Song base = three_part_song();
    const auto body_of = [](const Song& song) {
        std::string out;
        for (const Token& token : song.body()) out += serialize_token(token) + " ";
        return out;
    };
    const std::string original_body = body_of(base);

    const Song genre_then_inst = inject_instrument_tokens(
        inject_genre_token(base, GenreId{"metal"}, kFiveGenres));
    const Song inst_then_genre = inject_genre_token(
        inject_instrument_tokens(base), GenreId{"metal"}, kFiveGenres);
    CHECK(genre_then_inst == inst_then_genre);
    CHECK(body_of(genre_then_inst) == original_body);
    CHECK(serialized_header(genre_then_inst) ==
          "artist:x downtune:0 tempo:120 genre:metal inst_start distorted0 bass drums "
          "inst_end ");
}

TEST_CASE("corpus statistics count genres and canonicalized combos") {
    std::vector<Song> corpus;
    corpus.push_back(inject_genre_token(three_part_song(), GenreId{"metal"}, kFiveGenres));
    corpus.push_back(inject_genre_token(three_part_song(), GenreId{"metal"}, kFiveGenres));
    // Same instruments in a different textual order collapse to one combo.
    corpus.push_back(inject_genre_token(
        parse_song("artist:x downtune:0 tempo:120 start "
                   "drums:note:36 bass:note:s4:f0 distorted0:note:s6:f0 wait:960"),
        GenreId{"rock"}, kFiveGenres));

    const CorpusStats stats = corpus_statistics(corpus);
    CHECK(stats.genre_counts.at(GenreId{"metal"}) == 2);
    CHECK(stats.genre_counts.at(GenreId{"rock"}) == 1);
    REQUIRE(stats.instrument_combo_counts.size() == 1);
    CHECK(stats.instrument_combo_counts.begin()->second == 3);

    const CorpusStats empty = corpus_statistics({});
    CHECK(empty.genre_counts.empty());
    CHECK(empty.instrument_combo_counts.empty());
}

TEST_CASE("admit_genres keeps labels strictly above the threshold") {
    CorpusStats stats;
    stats.genre_counts[GenreId{"metal"}] = 5000;
    stats.genre_counts[GenreId{"zydeco"}] = 12;
    CHECK(admit_genres(stats, 200) == std::set<GenreId>{GenreId{"metal"}});
    CHECK(admit_genres(stats, 0).size() == 2);
    CHECK(admit_genres(CorpusStats{}, 200).empty());
    // Exactly at the threshold is not admitted ("more than" semantics).
    stats.genre_counts[GenreId{"surf"}] = 200;
    CHECK_FALSE(admit_genres(stats, 200).contains(GenreId{"surf"}));
}

TEST_CASE("admit_genres is monotone in the threshold") {
    CorpusStats stats;
    stats.genre_counts[GenreId{"metal"}] = 321;
    stats.genre_counts[GenreId{"rock"}] = 123;
    stats.genre_counts[GenreId{"folk"}] = 45;
    auto previous = admit_genres(stats, 0);
    for (long threshold : {10L, 44L, 45L, 122L, 123L, 200L, 320L, 321L, 1000L}) {
        const auto admitted = admit_genres(stats, threshold);
        for (const auto& genre : admitted) CHECK(previous.contains(genre));
        previous = admitted;
    }
}
