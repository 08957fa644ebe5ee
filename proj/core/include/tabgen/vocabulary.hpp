#ifndef TABGEN_VOCABULARY_HPP
#define TABGEN_VOCABULARY_HPP

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace tabgen {

/// Bijection between token texts and dense integer ids; id 0 is reserved
/// for the unknown-token symbol.
class Vocabulary {
  public:
    static constexpr int kUnknownId = 0;
    static constexpr std::string_view kUnknownText = "<unk>";

    Vocabulary();

    /// Returns the id, inserting the text on first sight.
    int add(std::string_view text);
    /// Returns the id, or kUnknownId for unseen text.
    int id_of(std::string_view text) const;
    const std::string& text_of(int id) const { return texts_.at(static_cast<size_t>(id)); }
    int size() const { return static_cast<int>(texts_.size()); }

    std::vector<int> encode(std::span<const std::string> texts) const;
    std::span<const std::string> texts() const { return texts_; }

  private:
    std::vector<std::string> texts_;
    std::unordered_map<std::string, int> ids_;
};

}  // namespace tabgen

#endif  // TABGEN_VOCABULARY_HPP
