// Lexical layer of the tab token language.
//
// A document is a whitespace-separated stream of tokens. Every token is a
// single non-whitespace word; parse_token() is total on such words, with
// Opaque as the catch-all for token classes we do not model (effects,
// note-offs, tempo changes, ...). Parsing never canonicalizes: a word either
// maps to a structured variant that prints back to the exact same bytes, or
// it is kept verbatim as Opaque. That is what makes parse -> serialize a
// fixed point on arbitrary corpora.

#ifndef TABGEN_TOKEN_HPP
#define TABGEN_TOKEN_HPP

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace tabgen {

inline constexpr int kTicksPerQuarter = 960;
inline constexpr int kMinString = 1;
inline constexpr int kMaxString = 10;
inline constexpr int kMinFret = 0;
inline constexpr int kMaxFret = 30;
inline constexpr int kMaxDrumPitch = 127;

/// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// parse_token() was handed an empty or all-whitespace word.
struct EmptyTokenError : Error {
    using Error::Error;
};

enum class InstrumentFamily {
    distorted,
    clean,
    bass,
    piano,
    leads,
    pads,
    drums,
    other,
};

std::string_view family_name(InstrumentFamily family);

/// Identity of one instrument part, e.g. distorted0, clean1, bass, drums.
///
/// Indexed families (distorted, clean, piano, leads, pads) always print
/// their index; bass and drums are single parts and print bare. Unknown
/// instrument names found in note tokens are kept verbatim under `other`.
struct InstrumentId {
    InstrumentFamily family = InstrumentFamily::other;
    int index = 0;
    std::string other_name;  // verbatim text, only for family == other

    /// Parses an id of a known family ("distorted0", "bass", ...).
    static std::optional<InstrumentId> parse(std::string_view text);
    /// Like parse(), but unknown names become family `other` verbatim.
    static InstrumentId parse_or_other(std::string_view text);

    static InstrumentId distorted(int index) { return {InstrumentFamily::distorted, index, {}}; }
    static InstrumentId clean(int index) { return {InstrumentFamily::clean, index, {}}; }
    static InstrumentId piano(int index) { return {InstrumentFamily::piano, index, {}}; }
    static InstrumentId leads(int index) { return {InstrumentFamily::leads, index, {}}; }
    static InstrumentId pads(int index) { return {InstrumentFamily::pads, index, {}}; }
    static InstrumentId bass() { return {InstrumentFamily::bass, 0, {}}; }
    static InstrumentId drums() { return {InstrumentFamily::drums, 0, {}}; }

    std::string text() const;
    bool is_drums() const { return family == InstrumentFamily::drums; }

    // Canonical part order: family declaration order, then index, then name.
    auto operator<=>(const InstrumentId&) const = default;
};

/// Genre label as it appears in a "genre:<name>" token. Lowercase, no
/// whitespace, stable printing.
struct GenreId {
    std::string name;

    /// Accepts [a-z0-9_+-]+; anything else is not a genre label.
    static std::optional<GenreId> parse(std::string_view name);

    std::string token_text() const { return "genre:" + name; }
    auto operator<=>(const GenreId&) const = default;
};

struct ArtistToken {
    std::string name;  // may contain ':' but never whitespace
    auto operator<=>(const ArtistToken&) const = default;
};
struct DowntuneToken {
    int semitones = 0;
    auto operator<=>(const DowntuneToken&) const = default;
};
struct TempoToken {
    int bpm = 120;  // >= 1
    auto operator<=>(const TempoToken&) const = default;
};
struct StartToken {
    auto operator<=>(const StartToken&) const = default;
};
struct EndToken {
    auto operator<=>(const EndToken&) const = default;
};
struct NewMeasureToken {
    auto operator<=>(const NewMeasureToken&) const = default;
};
struct WaitToken {
    int ticks = kTicksPerQuarter;  // >= 1
    auto operator<=>(const WaitToken&) const = default;
};
struct NoteToken {
    InstrumentId instrument;
    int string = kMinString;  // 1..=10
    int fret = 0;             // 0..=30
    auto operator<=>(const NoteToken&) const = default;
};
struct DrumsToken {
    int pitch = 36;  // 0..=127, General-MIDI-style percussion number
    auto operator<=>(const DrumsToken&) const = default;
};
struct InstStartToken {
    auto operator<=>(const InstStartToken&) const = default;
};
struct InstEndToken {
    auto operator<=>(const InstEndToken&) const = default;
};
struct InstDeclToken {
    InstrumentId instrument;
    auto operator<=>(const InstDeclToken&) const = default;
};
struct GenreDeclToken {
    GenreId genre;
    auto operator<=>(const GenreDeclToken&) const = default;
};
struct OpaqueToken {
    std::string text;  // verbatim, never contains whitespace
    auto operator<=>(const OpaqueToken&) const = default;
};

using Token = std::variant<ArtistToken, DowntuneToken, TempoToken, StartToken, EndToken,
                           NewMeasureToken, WaitToken, NoteToken, DrumsToken, InstStartToken,
                           InstEndToken, InstDeclToken, GenreDeclToken, OpaqueToken>;

/// Parses one whitespace-free word into a token. Total: unrecognized or
/// non-canonical words become Opaque. Throws EmptyTokenError on empty or
/// whitespace input.
Token parse_token(std::string_view text);

/// Inverse of parse_token, byte-exact.
std::string serialize_token(const Token& token);

template <typename T>
bool is(const Token& token) {
    return std::holds_alternative<T>(token);
}

inline bool is_note_event(const Token& token) {
    return is<NoteToken>(token) || is<DrumsToken>(token);
}

inline bool is_control(const Token& token) {
    return is<InstStartToken>(token) || is<InstEndToken>(token) || is<InstDeclToken>(token) ||
           is<GenreDeclToken>(token);
}

}  // namespace tabgen

#endif  // TABGEN_TOKEN_HPP
