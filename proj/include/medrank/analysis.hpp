#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "medrank/porter.hpp"

namespace medrank {

enum class StemmerKind { porter, none };

/// The 33-term English stop set used by Lucene's StandardAnalyzer.
inline const std::set<std::string>& default_stopwords()
{
    static const std::set<std::string> words{
        "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "if",
        "in", "into", "is", "it", "no", "not", "of", "on", "or", "such", "that",
        "the", "their", "then", "there", "these", "they", "this", "to", "was", "will", "with",
    };
    return words;
}

struct TokenizationConfig {
    bool lowercase = true;
    StemmerKind stemmer = StemmerKind::porter;
    std::set<std::string> stopwords = default_stopwords();

    friend bool operator==(const TokenizationConfig&, const TokenizationConfig&) = default;

    /// Plain surface tokens: lowercase, no stopwords, no stemming.
    static TokenizationConfig surface() { return {true, StemmerKind::none, {}}; }
};

/// Token characters are ASCII letters and digits plus any byte of a
/// multi-byte UTF-8 sequence; everything else separates tokens.
inline bool is_token_char(char c)
{
    auto u = static_cast<unsigned char>(c);
    return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || (u >= '0' && u <= '9') || u >= 0x80;
}

/// Split on non-token characters, lowercase, drop stopwords, stem.
inline std::vector<std::string> tokenize(std::string_view text, const TokenizationConfig& cfg)
{
    static const PorterStemmer stemmer;
    std::vector<std::string> terms;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_token_char(text[i])) ++i;
        auto start = i;
        while (i < text.size() && is_token_char(text[i])) ++i;
        if (i == start) continue;
        std::string tok(text.substr(start, i - start));
        if (cfg.lowercase)
            for (auto& c : tok)
                if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (cfg.stopwords.count(tok)) continue;
        if (cfg.stemmer == StemmerKind::porter) tok = stemmer.stem(tok);
        terms.push_back(std::move(tok));
    }
    return terms;
}

}  // namespace medrank
