#include "medgrad/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace medgrad {

std::vector<std::string> Vocabulary::split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : text) {
        const unsigned char u = static_cast<unsigned char>(ch);
        if (std::isspace(u) || ch == ',' || ch == '-') {
            if (!cur.empty()) {
                words.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(static_cast<char>(std::tolower(u)));
        }
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
}

std::string Vocabulary::normalize(const std::string& text) {
    const auto words = split_words(text);
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out.push_back(' ');
        out += words[i];
    }
    return out;
}

void Vocabulary::add_text(const std::string& text) {
    for (const auto& w : split_words(text)) {
        if (ids_.count(w)) continue;
        ids_[w] = static_cast<TokenId>(words_.size() + 3);
        words_.push_back(w);
    }
}

TokenId Vocabulary::id_of(const std::string& word) const {
    auto it = ids_.find(word);
    if (it == ids_.end()) throw VocabularyError("token not in vocabulary: '" + word + "'");
    return it->second;
}

const std::string& Vocabulary::word_of(TokenId id) const {
    if (id < 3 || static_cast<std::size_t>(id - 3) >= words_.size())
        throw VocabularyError("token id out of range: " + std::to_string(id));
    return words_[static_cast<std::size_t>(id - 3)];
}

TokenSeq Vocabulary::encode(const std::string& text, std::size_t context_length) const {
    if (context_length < 2) throw ContractError("context_length must be >= 2");
    TokenSeq seq;
    seq.reserve(context_length);
    seq.push_back(kBosId);
    for (const auto& w : split_words(text)) {
        if (seq.size() == context_length - 1) break;  // leave room for EOS
        seq.push_back(id_of(w));
    }
    seq.push_back(kEosId);
    seq.resize(context_length, kPadId);
    return seq;
}

std::string Vocabulary::decode(const TokenSeq& tokens) const {
    std::string out;
    for (TokenId id : tokens) {
        if (id == kBosId || id == kPadId) continue;
        if (id == kEosId) break;
        if (!out.empty()) out.push_back(' ');
        out += word_of(id);
    }
    return out;
}

std::string Vocabulary::to_file_text() const {
    std::string out;
    for (const auto& w : words_) {
        out += w;
        out.push_back('\n');
    }
    return out;
}

Vocabulary Vocabulary::from_file_text(const std::string& text) {
    Vocabulary v;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        if (v.ids_.count(line))
            throw FormatError("vocabulary file has duplicate token: '" + line + "'");
        v.ids_[line] = static_cast<TokenId>(v.words_.size() + 3);
        v.words_.push_back(line);
    }
    return v;
}

}  // namespace medgrad
