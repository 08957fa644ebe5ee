#include "tabgen/vocabulary.hpp"

namespace tabgen {

Vocabulary::Vocabulary() {
    texts_.emplace_back(kUnknownText);
    ids_.emplace(std::string(kUnknownText), kUnknownId);
}

int Vocabulary::add(std::string_view text) {
    if (auto it = ids_.find(std::string(text)); it != ids_.end()) return it->second;
    const int id = static_cast<int>(texts_.size());
    texts_.emplace_back(text);
    ids_.emplace(std::string(text), id);
    return id;
}

int Vocabulary::id_of(std::string_view text) const {
    auto it = ids_.find(std::string(text));
    return it == ids_.end() ? kUnknownId : it->second;
}

std::vector<int> Vocabulary::encode(std::span<const std::string> texts) const {
    std::vector<int> ids;
    ids.reserve(texts.size());
    for (const auto& text : texts) ids.push_back(id_of(text));
    return ids;
}

}  // namespace tabgen
