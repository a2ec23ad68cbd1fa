#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "medgrad/errors.hpp"

namespace medgrad {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

constexpr TokenId kPadId = 0;
constexpr TokenId kBosId = 1;
constexpr TokenId kEosId = 2;

// Word-level vocabulary. Ids 0..2 are reserved (PAD/BOS/EOS); words get ids
// in order of first appearance in the corpus, which makes the mapping stable
// for a given template table.
class Vocabulary {
public:
    // lowercase; commas, hyphens and whitespace all split
    static std::vector<std::string> split_words(const std::string& text);

    // normalization oracle: lowercase words joined by single spaces
    static std::string normalize(const std::string& text);

    void add_text(const std::string& text);
    bool contains(const std::string& word) const { return ids_.count(word) > 0; }

    TokenId id_of(const std::string& word) const;
    const std::string& word_of(TokenId id) const;

    std::size_t size() const { return words_.size() + 3; }  // including reserved ids

    // BOS ... EOS, padded/truncated to context_length (EOS always kept)
    TokenSeq encode(const std::string& text, std::size_t context_length) const;
    std::string decode(const TokenSeq& tokens) const;

    // one word per line; id = line number - 1 + 3
    std::string to_file_text() const;
    static Vocabulary from_file_text(const std::string& text);

    const std::vector<std::string>& words() const { return words_; }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, TokenId> ids_;
};

}  // namespace medgrad
