// Document layer: a song is its token sequence. Header fields and the
// optional control header (instrument block, genre token) are views derived
// at parse time; operations that rewrite the header keep them in sync by
// re-deriving from the token list.

#ifndef TABGEN_SONG_HPP
#define TABGEN_SONG_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabgen/token.hpp"

namespace tabgen {

enum class HeaderKind { artist, downtune, tempo, start };

std::string_view header_kind_name(HeaderKind kind);

/// A mandatory header token (artist/downtune/tempo/start) is absent.
struct MissingHeaderError : Error {
    HeaderKind kind;
    explicit MissingHeaderError(HeaderKind k)
        : Error("missing header token: " + std::string(header_kind_name(k))), kind(k) {}
};

/// inst_start without a matching inst_end in the header region.
struct MalformedControlBlockError : Error {
    using Error::Error;
};

struct ControlHeader {
    std::vector<InstrumentId> instruments;  // declaration order, deduplicated
    std::optional<GenreId> genre;
    bool has_instrument_block = false;
};

struct Song {
    std::vector<Token> tokens;
    size_t start_index = 0;  // position of the Start token

    // Derived at parse time from the header region [0, start_index).
    std::string artist;
    int downtune = 0;
    int tempo = 120;
    ControlHeader control;

    std::span<const Token> header_region() const {
        return std::span(tokens).first(start_index);
    }
    std::span<const Token> body() const {
        return std::span(tokens).subspan(start_index + 1);
    }

    bool operator==(const Song& other) const { return tokens == other.tokens; }
};

/// Splits a document into words and parses each one. The first Start token
/// ends the header region; artist/downtune/tempo must appear before it.
/// Throws MissingHeaderError / MalformedControlBlockError / EmptyTokenError.
Song parse_song(std::string_view text);

/// Prompts are valid song prefixes: same requirements as parse_song (header
/// plus Start), with any body, including an empty one.
Song parse_song_prefix(std::string_view text);

/// Re-derives header fields and control header from a token list. Used by
/// header-rewriting operations; throws like parse_song.
Song song_from_tokens(std::vector<Token> tokens);

/// One token per line, byte-exact per token: parse_song(serialize_song(s))
/// equals s for every valid s.
std::string serialize_song(const Song& song);

/// Debugging dump mirroring Song: header fields, control header, and the
/// token texts, as a JSON object (serialized text).
std::string song_to_json(const Song& song);

}  // namespace tabgen

#endif  // TABGEN_SONG_HPP
