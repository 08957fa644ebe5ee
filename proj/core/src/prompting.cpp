#include "tabgen/prompting.hpp"

#include <algorithm>
#include <numeric>

#include "tabgen/rng.hpp"

namespace tabgen {
namespace {

std::vector<InstrumentCombo> make_combos() {
    const auto dg0 = InstrumentId::distorted(0);
    const auto dg1 = InstrumentId::distorted(1);
    const auto cg0 = InstrumentId::clean(0);
    const auto p0 = InstrumentId::piano(0);
    const auto bass = InstrumentId::bass();
    const auto drums = InstrumentId::drums();

    std::vector<InstrumentCombo> combos = {
        {"b-d", {bass, drums}},
        {"dg-d", {dg0, drums}},
        {"dg-b-d", {dg0, bass, drums}},
        {"cg-b-d", {cg0, bass, drums}},
        {"dg-p-d", {dg0, p0, drums}},
        {"dg-dg-b-d", {dg0, dg1, bass, drums}},
        {"cg-dg-b-d", {dg0, cg0, bass, drums}},
        {"dg-p-b-d", {dg0, bass, p0, drums}},
    };
    for (auto& combo : combos) std::sort(combo.instruments.begin(), combo.instruments.end());
    return combos;
}

const std::vector<InstrumentCombo>& combo_table() {
    static const std::vector<InstrumentCombo> table = make_combos();
    return table;
}

std::vector<Token> header_tokens(const PromptHeader& header) {
    return {ArtistToken{header.artist}, DowntuneToken{header.downtune},
            TempoToken{header.tempo}};
}

void append_inst_block(std::vector<Token>& out, const InstrumentCombo& combo) {
    out.push_back(InstStartToken{});
    for (const auto& id : combo.instruments) out.push_back(InstDeclToken{id});
    out.push_back(InstEndToken{});
}

Token seed_for(const PromptSpec& spec, const InstrumentId& id) {
    auto it = spec.seed_notes.find(id);
    if (it == spec.seed_notes.end()) {
        throw MissingSeedNoteError("no seed note for instrument " + id.text());
    }
    return it->second;
}

const Token* first_note_event(std::span<const Token> tokens) {
    for (const Token& token : tokens) {
        if (is<NoteToken>(token)) return &token;
    }
    for (const Token& token : tokens) {
        if (is<DrumsToken>(token)) return &token;
    }
    return nullptr;
}

}  // namespace

std::string_view prompt_mode_name(PromptMode mode) {
    switch (mode) {
        case PromptMode::full: return "full";
        case PromptMode::partial: return "partial";
        case PromptMode::empty: return "empty";
        case PromptMode::unconditional: return "unconditional";
    }
    return "?";
}

std::optional<PromptMode> prompt_mode_from_name(std::string_view name) {
    for (PromptMode mode : kAllPromptModes) {
        if (prompt_mode_name(mode) == name) return mode;
    }
    return std::nullopt;
}

std::span<const InstrumentCombo> InstrumentCombo::all() {
    return combo_table();
}

std::optional<InstrumentCombo> InstrumentCombo::from_id(std::string_view id) {
    for (const auto& combo : combo_table()) {
        if (combo.id == id) return combo;
    }
    return std::nullopt;
}

Token default_seed_note(const InstrumentId& id) {
    if (id.is_drums()) return DrumsToken{36};  // kick
    if (id.family == InstrumentFamily::bass) return NoteToken{id, 4, 0};
    return NoteToken{id, 6, 0};
}

std::map<InstrumentId, Token> default_seed_notes(const InstrumentCombo& combo) {
    std::map<InstrumentId, Token> seeds;
    for (const auto& id : combo.instruments) seeds.emplace(id, default_seed_note(id));
    return seeds;
}

std::vector<Token> build_instrument_prompt(const PromptSpec& spec) {
    if (!spec.combo) throw Error("instrument prompt needs a combo target");
    const InstrumentCombo& combo = *spec.combo;
    std::vector<Token> out = header_tokens(spec.header);

    if (spec.mode != PromptMode::unconditional) append_inst_block(out, combo);
    out.push_back(StartToken{});

    switch (spec.mode) {
        case PromptMode::full:
        case PromptMode::unconditional:
            for (const auto& id : combo.instruments) out.push_back(seed_for(spec, id));
            break;
        case PromptMode::partial:
            out.push_back(seed_for(spec, combo.instruments.front()));
            break;
        case PromptMode::empty:
            break;
    }
    return out;
}

std::vector<Token> build_genre_prompt(const PromptSpec& spec, const SegmentOptions& options) {
    if (!spec.genre_target) throw Error("genre prompt needs a genre target");
    const GenrePromptTarget& target = *spec.genre_target;
    std::vector<Token> out = header_tokens(spec.header);

    if (spec.mode != PromptMode::unconditional) out.push_back(GenreDeclToken{target.genre});
    out.push_back(StartToken{});

    const bool needs_snippet =
        spec.mode == PromptMode::full || spec.mode == PromptMode::unconditional;
    if (needs_snippet) {
        const size_t spanned = count_measures(target.seed_measures, options);
        if (spanned != 2) {
            throw SnippetNotTwoMeasuresError("snippet spans " + std::to_string(spanned) +
                                             " measures, expected 2");
        }
        out.insert(out.end(), target.seed_measures.begin(), target.seed_measures.end());
    } else if (spec.mode == PromptMode::partial) {
        const Token* note = first_note_event(target.seed_measures);
        if (!note) throw MissingSeedNoteError("snippet contains no note to seed with");
        out.push_back(*note);
    }
    return out;
}

std::vector<Token> first_two_measures(const Song& song, const SegmentOptions& options) {
    const long span_ticks = 2L * options.measure_ticks;
    std::vector<Token> snippet;
    const auto body = song.body();

    const bool explicit_measures = std::any_of(
        body.begin(), body.end(), [](const Token& t) { return is<NewMeasureToken>(t); });

    if (explicit_measures) {
        long boundaries = 0;
        bool any_timed = false;  // wait/note/new_measure seen, as in segmentation
        for (const Token& token : body) {
            if (is<NewMeasureToken>(token)) {
                if (!any_timed) {
                    // opening marker of measure 0, not a separator
                } else if (++boundaries >= 2) {
                    break;  // start of the third measure
                }
                any_timed = true;
            } else if (is<WaitToken>(token) || is_note_event(token)) {
                any_timed = true;
            }
            if (is<EndToken>(token)) break;
            snippet.push_back(token);
        }
        return snippet;
    }

    long tick = 0;
    for (const Token& token : body) {
        if (is<EndToken>(token)) break;
        if (const auto* wait = std::get_if<WaitToken>(&token)) {
            if (tick + wait->ticks >= span_ticks) {
                const long remaining = span_ticks - tick;
                if (remaining > 0) snippet.push_back(WaitToken{static_cast<int>(remaining)});
                tick = span_ticks;
                break;
            }
            tick += wait->ticks;
            snippet.push_back(token);
            continue;
        }
        snippet.push_back(token);
    }
    if (tick < span_ticks) {
        snippet.push_back(WaitToken{static_cast<int>(span_ticks - tick)});
    }
    return snippet;
}

std::vector<std::vector<Token>> sample_seed_snippets(std::span<const Song> corpus, size_t n,
                                                     uint64_t rng_seed,
                                                     const SegmentOptions& options) {
    if (corpus.size() < n) {
        throw InsufficientCorpusError("need " + std::to_string(n) + " songs, corpus has " +
                                      std::to_string(corpus.size()));
    }
    std::vector<size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::mt19937_64 rng(rng_seed);
    deterministic_shuffle(order, rng);

    std::vector<std::vector<Token>> snippets;
    snippets.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        snippets.push_back(first_two_measures(corpus[order[i]], options));
    }
    return snippets;
}

std::string prompt_to_text(std::span<const Token> prompt) {
    std::string out;
    for (const Token& token : prompt) {
        out += serialize_token(token);
        out += '\n';
    }
    return out;
}

}  // namespace tabgen
