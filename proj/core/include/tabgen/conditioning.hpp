// Control-token conditioning: instrument and genre tokens are injected into
// the header region so a sequence model can be steered at inference time by
// prefixing the same tokens. Injections only ever rewrite the header; the
// body after the start token is untouched. Both are idempotent (a second
// call replaces the previous block/token) and commute, because the rewritten
// header always follows one canonical order:
//   artist, downtune, tempo, genre token, inst block, other header tokens.

#ifndef TABGEN_CONDITIONING_HPP
#define TABGEN_CONDITIONING_HPP

#include <map>
#include <set>
#include <span>
#include <vector>

#include "tabgen/song.hpp"

namespace tabgen {

/// inject_instrument_tokens() on a song with no note events.
struct NoInstrumentsError : Error {
    using Error::Error;
};

/// Genre label outside the configured vocabulary.
struct UnknownGenreError : Error {
    using Error::Error;
};

struct CorpusStats {
    std::map<GenreId, long> genre_counts;
    std::map<std::vector<InstrumentId>, long> instrument_combo_counts;  // keys sorted canonically
};

/// Instruments with at least one note event in the body, canonical order.
std::vector<InstrumentId> instruments_with_notes(const Song& song);

/// Rewrites the header so it carries inst_start <id...> inst_end listing the
/// instruments that actually play. Throws NoInstrumentsError on a song with
/// zero note events.
Song inject_instrument_tokens(const Song& song);

/// Rewrites the header so it carries exactly one genre:<name> token. The
/// label must be in `vocabulary`, else UnknownGenreError.
Song inject_genre_token(const Song& song, const GenreId& genre,
                        const std::set<GenreId>& vocabulary);

/// Genre and instrument-combination counts over a corpus. Deterministic
/// regardless of iteration order (ordered maps, associative merge).
CorpusStats corpus_statistics(std::span<const Song> corpus);

void merge_stats(CorpusStats& into, const CorpusStats& from);

/// Genres with strictly more than `min_count` songs.
std::set<GenreId> admit_genres(const CorpusStats& stats, long min_count);

}  // namespace tabgen

#endif  // TABGEN_CONDITIONING_HPP
