#pragma once

#include <algorithm>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "medrank/analysis.hpp"
#include "medrank/error.hpp"
#include "medrank/util.hpp"

namespace medrank {

/// Lexicon terms that mostly fire on non-medical queries (gas as in
/// gasoline, card, bing, map, ...). Also shipped as data/medsyn_exclusions.txt.
inline const std::set<std::string>& default_exclusions()
{
    static const std::set<std::string> terms{"gas", "card", "bing", "died", "map", "fall", "falls"};
    return terms;
}

using Phrase = std::vector<std::string>;

inline Phrase to_phrase(std::string_view text) { return tokenize(text, TokenizationConfig::surface()); }

struct Lexicon {
    std::set<Phrase> phrases;
    std::set<std::string> exclusions;

    /// Phrases minus single-token phrases that are excluded. Tokens inside
    /// multi-token phrases are never removed.
    std::set<Phrase> effective() const
    {
        std::set<Phrase> out;
        for (const auto& p : phrases)
            if (!(p.size() == 1 && exclusions.count(p.front()))) out.insert(p);
        return out;
    }
};

namespace detail {

inline std::set<std::string> read_term_lines(std::istream& in)
{
    std::set<std::string> terms;
    for_each_line(in, [&](std::size_t, std::string_view line) {
        auto t = trim(line);
        if (!t.empty()) terms.insert(ascii_lower(t));
    });
    return terms;
}

}  // namespace detail

inline Lexicon load_lexicon(std::istream& phrases, const std::set<std::string>& exclusions = default_exclusions())
{
    Lexicon lex;
    lex.exclusions = exclusions;
    for_each_line(phrases, [&](std::size_t, std::string_view line) {
        auto p = to_phrase(line);
        if (!p.empty()) lex.phrases.insert(std::move(p));
    });
    if (lex.phrases.empty()) warn("lexicon is empty; no query will match");
    return lex;
}

inline Lexicon load_lexicon(const std::filesystem::path& file, const std::optional<std::filesystem::path>& exclusions_file = {})
{
    auto in = open_input(file);
    if (!exclusions_file) return load_lexicon(in);
    auto ex = open_input(*exclusions_file);
    return load_lexicon(in, detail::read_term_lines(ex));
}

/// Effective phrases grouped by first token, for contiguous-sequence lookup.
class LexiconMatcher {
public:
    explicit LexiconMatcher(const Lexicon& lex)
    {
        for (auto& p : lex.effective()) by_first_[p.front()].push_back(p);
    }

    bool matches_tokens(const std::vector<std::string>& tokens) const
    {
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            auto it = by_first_.find(tokens[i]);
            if (it == by_first_.end()) continue;
            for (const auto& p : it->second) {
                if (p.size() > tokens.size() - i) continue;
                if (std::equal(p.begin(), p.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) return true;
            }
        }
        return false;
    }

    bool matches(std::string_view text) const { return matches_tokens(to_phrase(text)); }

private:
    std::unordered_map<std::string, std::vector<Phrase>> by_first_;
};

struct QueryRecord {
    std::string query_id;
    std::string text;

    friend bool operator==(const QueryRecord&, const QueryRecord&) = default;
};

/// True iff some effective phrase occurs as a contiguous run of the query's
/// surface tokens (lowercased, split on non-alphanumerics, no stemming, no
/// stopword removal).
inline bool matches(const QueryRecord& query, const Lexicon& lex) { return LexiconMatcher(lex).matches(query.text); }

struct QueryFilterStats {
    std::size_t input = 0;
    std::size_t kept = 0;
    double retention() const { return input == 0 ? 0.0 : static_cast<double>(kept) / static_cast<double>(input); }
};

struct QueryFilterResult {
    std::vector<QueryRecord> kept;
    QueryFilterStats stats;
};

inline QueryFilterResult filter_queries(const std::vector<QueryRecord>& queries, const Lexicon& lex, unsigned threads = default_threads())
{
    LexiconMatcher matcher(lex);
    std::vector<char> keep(queries.size(), 0);
    parallel_for(queries.size(), threads, [&](std::size_t i) { keep[i] = matcher.matches(queries[i].text) ? 1 : 0; });
    QueryFilterResult result;
    result.stats.input = queries.size();
    for (std::size_t i = 0; i < queries.size(); ++i)
        if (keep[i]) result.kept.push_back(queries[i]);
    result.stats.kept = result.kept.size();
    return result;
}

/// `query_id<TAB>text` lines, as distributed with MS-MARCO.
inline std::vector<QueryRecord> read_queries_tsv(std::istream& in)
{
    std::vector<QueryRecord> out;
    std::unordered_set<std::string> seen;
    for_each_line(in, [&](std::size_t n, std::string_view line) {
        if (trim(line).empty()) return;
        auto tab = line.find('\t');
        if (tab == std::string_view::npos) throw ParseError("expected `query_id<TAB>text`", n);
        QueryRecord q{std::string(trim(line.substr(0, tab))), std::string(trim(line.substr(tab + 1)))};
        if (q.query_id.empty()) throw ParseError("empty query id", n);
        if (!seen.insert(q.query_id).second) throw ParseError("duplicate query id " + q.query_id, n);
        out.push_back(std::move(q));
    });
    return out;
}

inline std::vector<QueryRecord> read_queries_tsv(const std::filesystem::path& file)
{
    auto in = open_input(file);
    return read_queries_tsv(in);
}

inline void write_queries_tsv(const std::vector<QueryRecord>& queries, std::ostream& out)
{
    for (const auto& q : queries) out << q.query_id << '\t' << sanitize_field(q.text) << '\n';
}

/// One id per line, ascending (numeric ids in numeric order).
inline void emit_query_id_list(const std::vector<QueryRecord>& kept, std::ostream& out)
{
    std::vector<std::string_view> ids;
    ids.reserve(kept.size());
    for (const auto& q : kept) ids.push_back(q.query_id);
    std::sort(ids.begin(), ids.end(), IdLess{});
    for (auto id : ids) out << id << '\n';
}

inline std::set<std::string> read_id_list(std::istream& in)
{
    std::set<std::string> ids;
    for_each_line(in, [&](std::size_t, std::string_view line) {
        auto t = trim(line);
        if (!t.empty()) ids.insert(std::string(t));
    });
    return ids;
}

}  // namespace medrank
