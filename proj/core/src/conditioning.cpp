#include "tabgen/conditioning.hpp"

#include <algorithm>

namespace tabgen {
namespace {

// Canonical header rebuild shared by both injections. Keeps unrecognized
// header tokens (order preserved) after the control tokens.
Song rebuild_header(const Song& song, const std::optional<std::vector<InstrumentId>>& instruments,
                    const std::optional<GenreId>& genre) {
    std::vector<Token> header;
    header.push_back(ArtistToken{song.artist});
    header.push_back(DowntuneToken{song.downtune});
    header.push_back(TempoToken{song.tempo});
    if (genre) header.push_back(GenreDeclToken{*genre});
    if (instruments) {
        header.push_back(InstStartToken{});
        for (const auto& id : *instruments) header.push_back(InstDeclToken{id});
        header.push_back(InstEndToken{});
    }

    bool skipped_artist = false, skipped_downtune = false, skipped_tempo = false;
    bool in_block = false;
    for (const Token& token : song.header_region()) {
        if (is<ArtistToken>(token) && !skipped_artist) {
            skipped_artist = true;
        } else if (is<DowntuneToken>(token) && !skipped_downtune) {
            skipped_downtune = true;
        } else if (is<TempoToken>(token) && !skipped_tempo) {
            skipped_tempo = true;
        } else if (is<InstStartToken>(token)) {
            in_block = true;
        } else if (is<InstEndToken>(token)) {
            in_block = false;
        } else if (in_block || is<GenreDeclToken>(token) || is<InstDeclToken>(token)) {
            // dropped: replaced by the canonical control tokens above
        } else {
            header.push_back(token);
        }
    }

    std::vector<Token> tokens = std::move(header);
    tokens.insert(tokens.end(), song.tokens.begin() + static_cast<long>(song.start_index),
                  song.tokens.end());
    return song_from_tokens(std::move(tokens));
}

}  // namespace

std::vector<InstrumentId> instruments_with_notes(const Song& song) {
    std::set<InstrumentId> seen;
    for (const Token& token : song.body()) {
        if (const auto* note = std::get_if<NoteToken>(&token)) {
            seen.insert(note->instrument);
        } else if (is<DrumsToken>(token)) {
            seen.insert(InstrumentId::drums());
        }
    }
    return {seen.begin(), seen.end()};
}

Song inject_instrument_tokens(const Song& song) {
    std::vector<InstrumentId> playing = instruments_with_notes(song);
    if (playing.empty()) throw NoInstrumentsError("song has no note events");
    return rebuild_header(song, playing, song.control.genre);
}

Song inject_genre_token(const Song& song, const GenreId& genre,
                        const std::set<GenreId>& vocabulary) {
    if (!vocabulary.contains(genre)) {
        throw UnknownGenreError("genre not in vocabulary: " + genre.name);
    }
    std::optional<std::vector<InstrumentId>> block;
    if (song.control.has_instrument_block) block = song.control.instruments;
    return rebuild_header(song, block, genre);
}

CorpusStats corpus_statistics(std::span<const Song> corpus) {
    CorpusStats stats;
    for (const Song& song : corpus) {
        if (song.control.genre) ++stats.genre_counts[*song.control.genre];
        std::vector<InstrumentId> combo = instruments_with_notes(song);
        if (!combo.empty()) ++stats.instrument_combo_counts[combo];
    }
    return stats;
}

void merge_stats(CorpusStats& into, const CorpusStats& from) {
    for (const auto& [genre, count] : from.genre_counts) into.genre_counts[genre] += count;
    for (const auto& [combo, count] : from.instrument_combo_counts) {
        into.instrument_combo_counts[combo] += count;
    }
}

std::set<GenreId> admit_genres(const CorpusStats& stats, long min_count) {
    std::set<GenreId> admitted;
    for (const auto& [genre, count] : stats.genre_counts) {
        if (count > min_count) admitted.insert(genre);
    }
    return admitted;
}

}  // namespace tabgen
