#include "tabgen/token.hpp"

#include <array>
#include <cctype>
#include <charconv>

namespace tabgen {
namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool has_whitespace(std::string_view text) {
    for (char c : text) {
        if (is_space(c)) return true;
    }
    return false;
}

// Canonical decimal: "0" or [1-9][0-9]*, optional leading '-'. Anything else
// (leading zeros, '+', empty) would not print back to the same bytes.
bool is_canonical_int(std::string_view text, bool allow_negative) {
    if (text.empty()) return false;
    if (text.front() == '-') {
        if (!allow_negative) return false;
        text.remove_prefix(1);
        if (text.empty() || text == "0") return false;  // "-" and "-0" are not canonical
    }
    if (text.size() > 1 && text.front() == '0') return false;
    for (char c : text) {
        if (c < '0' || c > '9') return false;
    }
    return true;
}

std::optional<int> parse_canonical_int(std::string_view text, bool allow_negative = false) {
    if (!is_canonical_int(text, allow_negative)) return std::nullopt;
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

struct FamilySpec {
    std::string_view name;
    InstrumentFamily family;
    bool indexed;
};

constexpr std::array<FamilySpec, 7> kFamilies = {{
    {"distorted", InstrumentFamily::distorted, true},
    {"clean", InstrumentFamily::clean, true},
    {"bass", InstrumentFamily::bass, false},
    {"piano", InstrumentFamily::piano, true},
    {"leads", InstrumentFamily::leads, true},
    {"pads", InstrumentFamily::pads, true},
    {"drums", InstrumentFamily::drums, false},
}};

// Splits on ':' into at most `max_parts` pieces; the last piece keeps any
// remaining colons (artist names may contain them).
template <size_t N>
size_t split_colon(std::string_view text, std::array<std::string_view, N>& out) {
    size_t count = 0;
    while (count + 1 < N) {
        size_t pos = text.find(':');
        if (pos == std::string_view::npos) break;
        out[count++] = text.substr(0, pos);
        text.remove_prefix(pos + 1);
    }
    out[count++] = text;
    return count;
}

}  // namespace

std::string_view family_name(InstrumentFamily family) {
    switch (family) {
        case InstrumentFamily::distorted: return "distorted";
        case InstrumentFamily::clean: return "clean";
        case InstrumentFamily::bass: return "bass";
        case InstrumentFamily::piano: return "piano";
        case InstrumentFamily::leads: return "leads";
        case InstrumentFamily::pads: return "pads";
        case InstrumentFamily::drums: return "drums";
        case InstrumentFamily::other: return "other";
    }
    return "other";
}

std::optional<InstrumentId> InstrumentId::parse(std::string_view text) {
    for (const auto& spec : kFamilies) {
        if (!text.starts_with(spec.name)) continue;
        std::string_view rest = text.substr(spec.name.size());
        if (spec.indexed) {
            if (auto index = parse_canonical_int(rest)) {
                return InstrumentId{spec.family, *index, {}};
            }
        } else if (rest.empty()) {
            return InstrumentId{spec.family, 0, {}};
        }
    }
    return std::nullopt;
}

InstrumentId InstrumentId::parse_or_other(std::string_view text) {
    if (auto known = parse(text)) return *known;
    return InstrumentId{InstrumentFamily::other, 0, std::string(text)};
}

std::string InstrumentId::text() const {
    if (family == InstrumentFamily::other) return other_name;
    std::string out{family_name(family)};
    const bool indexed = family != InstrumentFamily::bass && family != InstrumentFamily::drums;
    if (indexed) out += std::to_string(index);
    return out;
}

std::optional<GenreId> GenreId::parse(std::string_view name) {
    if (name.empty()) return std::nullopt;
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
                        c == '-' || c == '+';
        if (!ok) return std::nullopt;
    }
    return GenreId{std::string(name)};
}

Token parse_token(std::string_view text) {
    if (text.empty()) throw EmptyTokenError("empty token");
    if (has_whitespace(text)) {
        bool all = true;
        for (char c : text) all = all && is_space(c);
        if (all) throw EmptyTokenError("whitespace token");
        throw EmptyTokenError("token contains embedded whitespace");
    }

    if (text == "start") return StartToken{};
    if (text == "end") return EndToken{};
    if (text == "new_measure") return NewMeasureToken{};
    if (text == "inst_start") return InstStartToken{};
    if (text == "inst_end") return InstEndToken{};

    auto opaque = [&] { return Token{OpaqueToken{std::string(text)}}; };

    if (text.starts_with("artist:")) {
        return ArtistToken{std::string(text.substr(7))};
    }
    if (text.starts_with("downtune:")) {
        if (auto v = parse_canonical_int(text.substr(9), /*allow_negative=*/true)) {
            return DowntuneToken{*v};
        }
        return opaque();
    }
    if (text.starts_with("tempo:")) {
        if (auto v = parse_canonical_int(text.substr(6)); v && *v >= 1) return TempoToken{*v};
        return opaque();
    }
    if (text.starts_with("wait:")) {
        if (auto v = parse_canonical_int(text.substr(5)); v && *v >= 1) return WaitToken{*v};
        return opaque();
    }
    if (text.starts_with("genre:")) {
        if (auto g = GenreId::parse(text.substr(6))) return GenreDeclToken{*g};
        return opaque();
    }

    std::array<std::string_view, 4> parts{};
    const size_t n = split_colon(text, parts);
    if (n == 3 && parts[0] == "drums" && parts[1] == "note") {
        if (auto p = parse_canonical_int(parts[2]); p && *p >= 0 && *p <= kMaxDrumPitch) {
            return DrumsToken{*p};
        }
        return opaque();
    }
    if (n == 4 && parts[1] == "note" && parts[0] != "drums") {
        std::string_view s = parts[2];
        std::string_view f = parts[3];
        if (s.size() >= 2 && s.front() == 's' && f.size() >= 2 && f.front() == 'f') {
            auto string_no = parse_canonical_int(s.substr(1));
            auto fret_no = parse_canonical_int(f.substr(1));
            if (string_no && fret_no && *string_no >= kMinString && *string_no <= kMaxString &&
                *fret_no >= kMinFret && *fret_no <= kMaxFret && !parts[0].empty()) {
                InstrumentId inst = InstrumentId::parse_or_other(parts[0]);
                if (!inst.is_drums()) return NoteToken{inst, *string_no, *fret_no};
            }
        }
        return opaque();
    }

    if (auto inst = InstrumentId::parse(text)) return InstDeclToken{*inst};
    return opaque();
}

std::string serialize_token(const Token& token) {
    struct Printer {
        std::string operator()(const ArtistToken& t) const { return "artist:" + t.name; }
        std::string operator()(const DowntuneToken& t) const {
            return "downtune:" + std::to_string(t.semitones);
        }
        std::string operator()(const TempoToken& t) const {
            return "tempo:" + std::to_string(t.bpm);
        }
        std::string operator()(const StartToken&) const { return "start"; }
        std::string operator()(const EndToken&) const { return "end"; }
        std::string operator()(const NewMeasureToken&) const { return "new_measure"; }
        std::string operator()(const WaitToken& t) const {
            return "wait:" + std::to_string(t.ticks);
        }
        std::string operator()(const NoteToken& t) const {
            return t.instrument.text() + ":note:s" + std::to_string(t.string) + ":f" +
                   std::to_string(t.fret);
        }
        std::string operator()(const DrumsToken& t) const {
            return "drums:note:" + std::to_string(t.pitch);
        }
        std::string operator()(const InstStartToken&) const { return "inst_start"; }
        std::string operator()(const InstEndToken&) const { return "inst_end"; }
        std::string operator()(const InstDeclToken& t) const { return t.instrument.text(); }
        std::string operator()(const GenreDeclToken& t) const { return t.genre.token_text(); }
        std::string operator()(const OpaqueToken& t) const { return t.text; }
    };
    return std::visit(Printer{}, token);
}

}  // namespace tabgen
