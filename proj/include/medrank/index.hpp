#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "medrank/analysis.hpp"
#include "medrank/corpus.hpp"
#include "medrank/error.hpp"
#include "medrank/trecio.hpp"
#include "medrank/util.hpp"

namespace medrank {

enum class IndexField : std::uint8_t { full_text = 0, abstract = 1, paragraph = 2 };

inline std::string_view to_string(IndexField f)
{
    switch (f) {
    case IndexField::full_text: return "full_text";
    case IndexField::abstract: return "abstract";
    case IndexField::paragraph: return "paragraph";
    }
    return "?";
}

inline IndexField parse_index_field(std::string_view s)
{
    if (s == "full_text" || s == "fulltext") return IndexField::full_text;
    if (s == "abstract") return IndexField::abstract;
    if (s == "paragraph" || s == "paragraphs") return IndexField::paragraph;
    throw ContractError("unknown index field: " + std::string(s));
}

/// A retrievable unit: a whole document, or one paragraph of it.
struct DocRef {
    std::string doc_id;
    std::int32_t paragraph = -1;

    friend auto operator<=>(const DocRef&, const DocRef&) = default;
};

struct Posting {
    std::uint32_t doc;  // position in InvertedIndex::docs
    std::uint32_t tf;

    friend bool operator==(const Posting&, const Posting&) = default;
};

struct InvertedIndex {
    IndexField field = IndexField::full_text;
    TokenizationConfig tokenization;
    std::vector<DocRef> docs;
    std::vector<std::uint32_t> doc_lens;
    double avg_doc_len = 0.0;
    /// Postings per term, ordered by document position.
    std::unordered_map<std::string, std::vector<Posting>> postings;

    std::size_t doc_count() const { return docs.size(); }

    std::size_t df(const std::string& term) const
    {
        auto it = postings.find(term);
        return it == postings.end() ? 0 : it->second.size();
    }

    friend bool operator==(const InvertedIndex&, const InvertedIndex&) = default;
};

struct BM25Params {
    double k1 = 0.9;
    double b = 0.4;

    void validate() const
    {
        if (!(k1 >= 0.0) || !std::isfinite(k1)) throw ContractError("BM25 k1 must be >= 0");
        if (!(b >= 0.0 && b <= 1.0)) throw ContractError("BM25 b must lie in [0, 1]");
    }
};

/// Text indexed for a document under the given field. For the paragraph field
/// each paragraph is its own unit; the other fields yield exactly one.
inline std::vector<std::pair<DocRef, std::string>> index_units(const Document& doc, IndexField field)
{
    std::vector<std::pair<DocRef, std::string>> units;
    switch (field) {
    case IndexField::full_text: {
        std::string text = doc.title + "\n" + doc.abstract;
        for (const auto& p : doc.paragraphs) text += "\n" + p;
        units.push_back({{doc.doc_id, -1}, std::move(text)});
        break;
    }
    case IndexField::abstract:
        units.push_back({{doc.doc_id, -1}, doc.title + "\n" + doc.abstract});
        break;
    case IndexField::paragraph:
        for (std::size_t i = 0; i < doc.paragraphs.size(); ++i)
            units.push_back({{doc.doc_id, static_cast<std::int32_t>(i)}, doc.paragraphs[i]});
        break;
    }
    return units;
}

/// Tokenization runs on up to `threads` workers; postings are merged in
/// document order, so the result does not depend on the thread count.
inline InvertedIndex build_index(const std::vector<Document>& documents, IndexField field, const TokenizationConfig& cfg,
    unsigned threads = default_threads())
{
    InvertedIndex index;
    index.field = field;
    index.tokenization = cfg;

    std::vector<std::pair<DocRef, std::string>> units;
    for (const auto& d : documents)
        for (auto& u : index_units(d, field)) units.push_back(std::move(u));

    std::vector<std::vector<std::pair<std::string, std::uint32_t>>> counts(units.size());
    std::vector<std::uint32_t> lens(units.size());
    parallel_for(units.size(), threads, [&](std::size_t i) {
        auto terms = tokenize(units[i].second, cfg);
        lens[i] = static_cast<std::uint32_t>(terms.size());
        std::map<std::string, std::uint32_t> tf;
        for (auto& t : terms) ++tf[std::move(t)];
        counts[i].assign(std::make_move_iterator(tf.begin()), std::make_move_iterator(tf.end()));
    });

    index.docs.reserve(units.size());
    index.doc_lens = std::move(lens);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < units.size(); ++i) {
        index.docs.push_back(std::move(units[i].first));
        total += index.doc_lens[i];
        for (auto& [term, tf] : counts[i]) index.postings[term].push_back({static_cast<std::uint32_t>(i), tf});
    }
    index.avg_doc_len = units.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(units.size());
    return index;
}

struct SearchHit {
    DocRef ref;
    double score = 0.0;
};

/// Descending score, then descending DocRef.
inline bool hit_before(const SearchHit& a, const SearchHit& b)
{
    if (a.score != b.score) return a.score > b.score;
    return a.ref > b.ref;
}

/// Okapi BM25 with the non-negative Lucene idf, ln(1 + (N - df + 0.5)/(df + 0.5)).
/// Repeated query terms contribute once per occurrence. Documents scoring
/// zero are not returned.
inline std::vector<SearchHit> bm25_search(const InvertedIndex& index, const std::vector<std::string>& query_terms, int k,
    const BM25Params& params = {})
{
    if (k <= 0) throw ContractError("bm25_search: k must be positive");
    params.validate();

    const double n = static_cast<double>(index.doc_count());
    std::vector<double> acc(index.doc_count(), 0.0);
    std::vector<std::uint32_t> touched;
    for (const auto& term : query_terms) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        const double df = static_cast<double>(it->second.size());
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (const auto& p : it->second) {
            const double tf = p.tf;
            const double len = index.doc_lens[p.doc];
            const double norm = params.k1 * (1.0 - params.b + params.b * len / index.avg_doc_len);
            if (acc[p.doc] == 0.0) touched.push_back(p.doc);
            acc[p.doc] += idf * (tf * (params.k1 + 1.0)) / (tf + norm);
        }
    }

    std::vector<SearchHit> hits;
    hits.reserve(touched.size());
    for (auto d : touched)
        if (acc[d] > 0.0) hits.push_back({index.docs[d], acc[d]});
    auto keep = std::min<std::size_t>(static_cast<std::size_t>(k), hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), hit_before);
    hits.resize(keep);
    return hits;
}

inline std::vector<SearchHit> bm25_search_text(const InvertedIndex& index, std::string_view query, int k, const BM25Params& params = {})
{
    return bm25_search(index, tokenize(query, index.tokenization), k, params);
}

/// Collapses paragraph hits to one score per document (the best paragraph).
inline std::vector<RunEntry> paragraph_to_doc(const std::vector<SearchHit>& hits)
{
    std::map<std::string, double> best;
    for (const auto& h : hits) {
        auto [it, inserted] = best.emplace(h.ref.doc_id, h.score);
        if (!inserted) it->second = std::max(it->second, h.score);
    }
    std::vector<RunEntry> out;
    out.reserve(best.size());
    for (auto& [doc, score] : best) out.push_back({doc, score});
    std::sort(out.begin(), out.end(), [](const RunEntry& a, const RunEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id > b.doc_id;
    });
    return out;
}

/// Hits as a run ranking. Paragraph indexes are aggregated per document.
inline std::vector<RunEntry> hits_to_ranking(const std::vector<SearchHit>& hits, IndexField field)
{
    if (field == IndexField::paragraph) return paragraph_to_doc(hits);
    std::vector<RunEntry> out;
    out.reserve(hits.size());
    for (const auto& h : hits) out.push_back({h.ref.doc_id, h.score});
    return out;
}

// ---------------------------------------------------------------------------
// Persistence: little-endian binary, "MRIDX" magic followed by a version byte.

inline constexpr std::uint8_t index_format_version = 1;

namespace detail {

class BinWriter {
public:
    explicit BinWriter(std::ostream& out)
        : out_(out)
    {}
    void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void str(std::string_view s)
    {
        u32(static_cast<std::uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

private:
    std::ostream& out_;
};

class BinReader {
public:
    explicit BinReader(std::istream& in)
        : in_(in)
    {}
    std::uint8_t u8()
    {
        int c = in_.get();
        if (c == std::char_traits<char>::eof()) throw ParseError("index file is truncated");
        return static_cast<std::uint8_t>(c);
    }
    std::uint32_t u32()
    {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return v;
    }
    std::uint64_t u64()
    {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
        return v;
    }
    std::string str()
    {
        std::string s(u32(), '\0');
        if (!in_.read(s.data(), static_cast<std::streamsize>(s.size()))) throw ParseError("index file is truncated");
        return s;
    }

private:
    std::istream& in_;
};

}  // namespace detail

inline void save_index(const InvertedIndex& index, std::ostream& out)
{
    detail::BinWriter w(out);
    out.write("MRIDX", 5);
    w.u8(index_format_version);
    w.u8(static_cast<std::uint8_t>(index.field));
    w.u8(index.tokenization.lowercase ? 1 : 0);
    w.u8(index.tokenization.stemmer == StemmerKind::porter ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(index.tokenization.stopwords.size()));
    for (const auto& s : index.tokenization.stopwords) w.str(s);
    w.u64(index.docs.size());
    for (std::size_t i = 0; i < index.docs.size(); ++i) {
        w.str(index.docs[i].doc_id);
        w.u32(static_cast<std::uint32_t>(index.docs[i].paragraph));
        w.u32(index.doc_lens[i]);
    }
    std::vector<const std::string*> terms;
    terms.reserve(index.postings.size());
    for (const auto& [t, _] : index.postings) terms.push_back(&t);
    std::sort(terms.begin(), terms.end(), [](auto a, auto b) { return *a < *b; });
    w.u64(terms.size());
    for (const auto* t : terms) {
        const auto& list = index.postings.at(*t);
        w.str(*t);
        w.u32(static_cast<std::uint32_t>(list.size()));
        for (const auto& p : list) {
            w.u32(p.doc);
            w.u32(p.tf);
        }
    }
}

inline InvertedIndex load_index(std::istream& in)
{
    char magic[5];
    if (!in.read(magic, 5) || std::string_view(magic, 5) != "MRIDX") throw ParseError("not an index file (bad magic)");
    detail::BinReader r(in);
    auto version = r.u8();
    if (version != index_format_version)
        throw FormatVersionError("index format version " + std::to_string(version) + " is not supported (expected " +
            std::to_string(index_format_version) + ")");
    InvertedIndex index;
    auto field = r.u8();
    if (field > 2) throw ParseError("index file has an unknown field id");
    index.field = static_cast<IndexField>(field);
    index.tokenization.lowercase = r.u8() != 0;
    index.tokenization.stemmer = r.u8() != 0 ? StemmerKind::porter : StemmerKind::none;
    index.tokenization.stopwords.clear();
    for (auto n = r.u32(); n > 0; --n) index.tokenization.stopwords.insert(r.str());
    auto ndocs = r.u64();
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < ndocs; ++i) {
        DocRef ref;
        ref.doc_id = r.str();
        ref.paragraph = static_cast<std::int32_t>(r.u32());
        index.docs.push_back(std::move(ref));
        index.doc_lens.push_back(r.u32());
        total += index.doc_lens.back();
    }
    index.avg_doc_len = ndocs ? static_cast<double>(total) / static_cast<double>(ndocs) : 0.0;
    for (auto nterms = r.u64(); nterms > 0; --nterms) {
        auto term = r.str();
        auto& list = index.postings[term];
        for (auto n = r.u32(); n > 0; --n) {
            Posting p{r.u32(), r.u32()};
            if (p.doc >= ndocs) throw ParseError("posting refers to a document outside the index");
            list.push_back(p);
        }
    }
    return index;
}

inline void save_index(const InvertedIndex& index, const std::filesystem::path& file)
{
    auto out = open_output(file);
    save_index(index, out);
}

inline InvertedIndex load_index(const std::filesystem::path& file)
{
    auto in = open_input(file);
    return load_index(in);
}

}  // namespace medrank
