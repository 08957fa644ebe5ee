// Inference prompt construction for both conditioning experiments.
//
// Instrument experiment (per combo):
//   full          header + inst block + start + one seed note per instrument
//   partial       header + inst block + start + seed note for the first instrument
//   empty         header + inst block + start
//   unconditional header + start + one seed note per instrument (no block)
//
// Genre experiment (per genre, snippet = first two measures of a corpus song):
//   full          header + genre token + start + snippet
//   partial       header + genre token + start + first note of the snippet
//   empty         header + genre token + start
//   unconditional header + start + snippet (no genre token)

#ifndef TABGEN_PROMPTING_HPP
#define TABGEN_PROMPTING_HPP

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabgen/score.hpp"
#include "tabgen/song.hpp"

namespace tabgen {

/// full/unconditional instrument prompt lacks a seed note for an instrument.
struct MissingSeedNoteError : Error {
    using Error::Error;
};

/// Genre-prompt snippet does not span exactly two measures.
struct SnippetNotTwoMeasuresError : Error {
    using Error::Error;
};

/// Fewer corpus songs than requested snippets.
struct InsufficientCorpusError : Error {
    using Error::Error;
};

enum class PromptMode { full, partial, empty, unconditional };

std::string_view prompt_mode_name(PromptMode mode);
std::optional<PromptMode> prompt_mode_from_name(std::string_view name);
inline constexpr std::array<PromptMode, 4> kAllPromptModes = {
    PromptMode::full, PromptMode::partial, PromptMode::empty, PromptMode::unconditional};

/// One of the eight instrument combinations, e.g. dg-p-b-d = distorted
/// guitar, piano, bass and drums. Instruments are kept in canonical order.
struct InstrumentCombo {
    std::string id;
    std::vector<InstrumentId> instruments;

    static std::span<const InstrumentCombo> all();
    static std::optional<InstrumentCombo> from_id(std::string_view id);
};

struct PromptHeader {
    std::string artist = "unknown";
    int downtune = 0;
    int tempo = 120;
};

struct GenrePromptTarget {
    GenreId genre;
    std::vector<Token> seed_measures;  // two-measure body snippet
};

struct PromptSpec {
    PromptMode mode = PromptMode::full;
    PromptHeader header;
    // Instrument experiment target:
    std::optional<InstrumentCombo> combo;
    std::map<InstrumentId, Token> seed_notes;  // NoteToken or DrumsToken per instrument
    // Genre experiment target:
    std::optional<GenrePromptTarget> genre_target;
};

/// Default seed: the open lowest string (distorted0:note:s6:f0 style); kick
/// drum for the drumkit.
Token default_seed_note(const InstrumentId& id);
std::map<InstrumentId, Token> default_seed_notes(const InstrumentCombo& combo);

std::vector<Token> build_instrument_prompt(const PromptSpec& spec);

std::vector<Token> build_genre_prompt(const PromptSpec& spec,
                                      const SegmentOptions& options = {});

/// The body prefix of `song` covering its first two measures, padded with a
/// trailing wait so tick-derived snippets span exactly two measures.
std::vector<Token> first_two_measures(const Song& song, const SegmentOptions& options = {});

/// Draws `n` two-measure snippets from distinct corpus songs, deterministic
/// under rng_seed. Throws InsufficientCorpusError when the corpus has fewer
/// than n songs.
std::vector<std::vector<Token>> sample_seed_snippets(std::span<const Song> corpus, size_t n,
                                                     uint64_t rng_seed,
                                                     const SegmentOptions& options = {});

std::string prompt_to_text(std::span<const Token> prompt);

}  // namespace tabgen

#endif  // TABGEN_PROMPTING_HPP
