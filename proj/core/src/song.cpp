#include "tabgen/song.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

namespace tabgen {
namespace {

std::vector<std::string_view> split_words(std::string_view text) {
    std::vector<std::string_view> words;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t begin = i;
        while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > begin) words.push_back(text.substr(begin, i - begin));
    }
    return words;
}

void add_instrument(std::vector<InstrumentId>& list, const InstrumentId& id) {
    if (std::find(list.begin(), list.end(), id) == list.end()) list.push_back(id);
}

}  // namespace

std::string_view header_kind_name(HeaderKind kind) {
    switch (kind) {
        case HeaderKind::artist: return "artist";
        case HeaderKind::downtune: return "downtune";
        case HeaderKind::tempo: return "tempo";
        case HeaderKind::start: return "start";
    }
    return "?";
}

Song song_from_tokens(std::vector<Token> tokens) {
    Song song;
    song.tokens = std::move(tokens);

    auto start_it = std::find_if(song.tokens.begin(), song.tokens.end(),
                                 [](const Token& t) { return is<StartToken>(t); });
    if (start_it == song.tokens.end()) throw MissingHeaderError(HeaderKind::start);
    song.start_index = static_cast<size_t>(start_it - song.tokens.begin());

    bool have_artist = false, have_downtune = false, have_tempo = false;
    bool in_block = false;
    for (size_t i = 0; i < song.start_index; ++i) {
        Token& token = song.tokens[i];
        if (auto* artist = std::get_if<ArtistToken>(&token); artist && !have_artist) {
            song.artist = artist->name;
            have_artist = true;
        } else if (auto* dt = std::get_if<DowntuneToken>(&token); dt && !have_downtune) {
            song.downtune = dt->semitones;
            have_downtune = true;
        } else if (auto* tp = std::get_if<TempoToken>(&token); tp && !have_tempo) {
            song.tempo = tp->bpm;
            have_tempo = true;
        } else if (is<InstStartToken>(token)) {
            if (in_block) throw MalformedControlBlockError("nested inst_start");
            in_block = true;
            song.control.has_instrument_block = true;
        } else if (is<InstEndToken>(token)) {
            if (!in_block) throw MalformedControlBlockError("inst_end without inst_start");
            in_block = false;
        } else if (in_block) {
            if (auto* decl = std::get_if<InstDeclToken>(&token)) {
                add_instrument(song.control.instruments, decl->instrument);
            } else if (auto* opaque = std::get_if<OpaqueToken>(&token)) {
                // Inside the block, any bare name is an instrument declaration.
                InstDeclToken decl{InstrumentId::parse_or_other(opaque->text)};
                add_instrument(song.control.instruments, decl.instrument);
                token = decl;
            }
        } else if (auto* genre = std::get_if<GenreDeclToken>(&token)) {
            song.control.genre = genre->genre;
        }
    }
    if (in_block) throw MalformedControlBlockError("inst_start without inst_end");
    if (!have_artist) throw MissingHeaderError(HeaderKind::artist);
    if (!have_downtune) throw MissingHeaderError(HeaderKind::downtune);
    if (!have_tempo) throw MissingHeaderError(HeaderKind::tempo);
    return song;
}

Song parse_song(std::string_view text) {
    std::vector<Token> tokens;
    for (std::string_view word : split_words(text)) tokens.push_back(parse_token(word));
    return song_from_tokens(std::move(tokens));
}

Song parse_song_prefix(std::string_view text) {
    return parse_song(text);
}

std::string serialize_song(const Song& song) {
    std::string out;
    for (const Token& token : song.tokens) {
        out += serialize_token(token);
        out += '\n';
    }
    return out;
}

std::string song_to_json(const Song& song) {
    nlohmann::json j;
    j["artist"] = song.artist;
    j["downtune"] = song.downtune;
    j["tempo"] = song.tempo;
    if (song.control.genre) j["genre"] = song.control.genre->name;
    if (song.control.has_instrument_block) {
        auto& insts = j["instruments"] = nlohmann::json::array();
        for (const auto& id : song.control.instruments) insts.push_back(id.text());
    }
    auto& tokens = j["tokens"] = nlohmann::json::array();
    for (const Token& token : song.tokens) tokens.push_back(serialize_token(token));
    return j.dump(2);
}

}  // namespace tabgen
