#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "medrank/corpus.hpp"
#include "medrank/error.hpp"
#include "medrank/index.hpp"
#include "medrank/scorer.hpp"
#include "medrank/trecio.hpp"
#include "medrank/util.hpp"

namespace medrank {

// ---------------------------------------------------------------------------
// Query construction

enum class QueryField { question, query, query_and_question };

inline QueryField parse_query_field(std::string_view s)
{
    if (s == "question") return QueryField::question;
    if (s == "query" || s == "keywords") return QueryField::query;
    if (s == "query+question" || s == "keywords+question") return QueryField::query_and_question;
    throw ContractError("unknown query field: " + std::string(s));
}

inline std::string query_text(const Topic& t, QueryField field)
{
    switch (field) {
    case QueryField::question: return t.question;
    case QueryField::query: return t.query;
    case QueryField::query_and_question: return t.query + " " + t.question;
    }
    return t.question;
}

/// BM25 ranking for every topic, as a run. Paragraph hits are collapsed to
/// their best-scoring paragraph per document.
inline Run first_stage_run(const InvertedIndex& index, const std::vector<Topic>& topics, int k, const BM25Params& params,
    std::string tag, QueryField field = QueryField::question)
{
    Run run;
    run.tag = std::move(tag);
    for (const auto& t : topics) {
        // paragraph hits collapse per document, so take them all before cutting
        int depth = index.field == IndexField::paragraph ? static_cast<int>(std::max<std::size_t>(index.doc_count(), 1)) : k;
        auto hits = bm25_search_text(index, query_text(t, field), depth, params);
        auto ranking = hits_to_ranking(hits, index.field);
        if (ranking.size() > static_cast<std::size_t>(k)) ranking.resize(static_cast<std::size_t>(k));
        run.entries[t.topic_id] = std::move(ranking);
    }
    return run;
}

// ---------------------------------------------------------------------------
// Re-ranking

struct RerankConfig {
    int depth = 100;
    int max_query_tokens = 60;
    int max_doc_tokens = 2000;
    std::string output_tag;  // empty: keep the input run's tag

    void validate() const
    {
        if (depth < 1) throw ContractError("rerank depth must be >= 1");
        if (max_query_tokens < 1 || max_doc_tokens < 1) throw ContractError("truncation limits must be positive");
    }
};

/// First `max_tokens` whitespace-separated tokens, joined by single spaces.
inline std::string truncate_words(std::string_view text, int max_tokens)
{
    auto words = split_ws(text);
    if (words.size() > static_cast<std::size_t>(max_tokens)) words.resize(static_cast<std::size_t>(max_tokens));
    std::string out;
    for (auto w : words) {
        if (!out.empty()) out += ' ';
        out.append(w);
    }
    return out;
}

inline std::string scorer_query_text(const Topic& topic, const RerankConfig& cfg) { return truncate_words(topic.question, cfg.max_query_tokens); }

/// `title. abstract`; full text is never sent to the scorer. Untitled
/// documents (e.g. passages) send the abstract alone.
inline std::string scorer_doc_text(const Document& doc, const RerankConfig& cfg)
{
    if (doc.title.empty()) return truncate_words(doc.abstract, cfg.max_doc_tokens);
    return truncate_words(doc.title + ". " + doc.abstract, cfg.max_doc_tokens);
}

using DocLookup = std::function<const Document*(std::string_view doc_id)>;

inline DocLookup lookup_in(const std::unordered_map<std::string, Document>& docs)
{
    return [&docs](std::string_view id) -> const Document* {
        auto it = docs.find(std::string(id));
        return it == docs.end() ? nullptr : &it->second;
    };
}

inline std::unordered_map<std::string, Document> by_id(std::vector<Document> docs)
{
    std::unordered_map<std::string, Document> out;
    out.reserve(docs.size());
    for (auto& d : docs) {
        auto id = d.doc_id;
        out.emplace(std::move(id), std::move(d));
    }
    return out;
}

/// Re-scores the top `depth` entries of each topic with the scorer and sorts
/// them by the new score. Entries below the depth keep their relative order
/// and follow the re-ranked block, shifted to score strictly below it. All
/// topics go to the scorer as one batch.
inline Run rerank(const Run& run, const std::vector<Topic>& topics, const DocLookup& doc_lookup, ScorerTransport& scorer,
    const RerankConfig& cfg = {})
{
    cfg.validate();
    std::map<std::string, const Topic*, IdLess> topic_by_id;
    for (const auto& t : topics) topic_by_id[t.topic_id] = &t;

    struct Block {
        std::vector<RunEntry> head, tail;
    };
    std::map<std::string, Block, IdLess> blocks;
    std::vector<PairRequest> pairs;
    std::vector<std::string> unresolved;
    for (const auto& [topic_id, entries] : run.entries) {
        auto tp = topic_by_id.find(topic_id);
        if (tp == topic_by_id.end() || tp->second->question.empty())
            throw ContractError("rerank: topic " + topic_id + " has no question");
        auto ranking = entries;
        sort_ranking(ranking);
        auto cut = std::min<std::size_t>(static_cast<std::size_t>(cfg.depth), ranking.size());
        auto& block = blocks[topic_id];
        block.head.assign(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(cut));
        block.tail.assign(ranking.begin() + static_cast<std::ptrdiff_t>(cut), ranking.end());

        const auto query = scorer_query_text(*tp->second, cfg);
        for (std::size_t i = 0; i < block.head.size(); ++i) {
            const Document* doc = doc_lookup(block.head[i].doc_id);
            if (!doc) {
                unresolved.push_back(block.head[i].doc_id);
                continue;
            }
            pairs.push_back({topic_id + "/" + std::to_string(i + 1), query, scorer_doc_text(*doc, cfg)});
        }
    }
    if (!unresolved.empty()) {
        std::string list;
        for (const auto& id : unresolved) list += " " + id;
        throw ContractError("rerank: documents not found in the corpus:" + list);
    }

    auto scores = score_pairs(scorer, pairs);
    std::size_t next = 0;

    Run out;
    out.tag = cfg.output_tag.empty() ? run.tag : cfg.output_tag;
    for (auto& [topic_id, block] : blocks) {
        for (auto& e : block.head) e.score = scores.at(next++).score;
        sort_ranking(block.head);
        auto& ranking = out.entries[topic_id];
        ranking = std::move(block.head);
        if (!block.tail.empty()) {
            double floor = ranking.empty() ? 0.0 : file_score(ranking.back().score);
            double top = block.tail.front().score;
            for (auto& e : block.tail) {
                e.score = e.score - top + floor - 1.0;
                ranking.push_back(std::move(e));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reciprocal rank fusion

struct FusionConfig {
    double rrf_k = 60.0;
};

/// score(d) = sum over input runs containing d of 1 / (rrf_k + rank(d)).
/// Only topics present in every run are fused.
inline Run rrf_fuse(const std::vector<Run>& runs, const FusionConfig& cfg, int out_depth, std::string tag = "rrf")
{
    if (runs.size() < 2) throw ContractError("rrf_fuse needs at least two runs");
    if (!(cfg.rrf_k > 0.0)) throw ContractError("rrf_k must be positive");
    if (out_depth < 1) throw ContractError("fusion output depth must be >= 1");

    std::set<std::string, IdLess> shared, all;
    for (const auto& [t, _] : runs.front().entries) shared.insert(t);
    for (const auto& r : runs) {
        std::set<std::string, IdLess> mine;
        for (const auto& [t, _] : r.entries) {
            mine.insert(t);
            all.insert(t);
        }
        std::set<std::string, IdLess> both;
        std::set_intersection(shared.begin(), shared.end(), mine.begin(), mine.end(), std::inserter(both, both.end()), IdLess{});
        shared = std::move(both);
    }
    if (shared.size() != all.size()) {
        std::string diff;
        for (const auto& t : all)
            if (!shared.count(t)) diff += " " + t;
        warn("rrf_fuse: topics missing from some runs are not fused:" + diff);
    }

    Run out;
    out.tag = std::move(tag);
    for (const auto& topic : shared) {
        // ranks per doc, summed smallest-first so the input order of runs cannot
        // change the floating-point result
        std::map<std::string, std::vector<std::size_t>> ranks;
        for (const auto& r : runs) {
            auto ranking = r.entries.at(topic);
            sort_ranking(ranking);
            for (std::size_t i = 0; i < ranking.size(); ++i) ranks[ranking[i].doc_id].push_back(i + 1);
        }
        std::vector<RunEntry> fused;
        fused.reserve(ranks.size());
        for (auto& [doc, rs] : ranks) {
            std::sort(rs.begin(), rs.end());
            double s = 0.0;
            for (auto r : rs) s += 1.0 / (cfg.rrf_k + static_cast<double>(r));
            fused.push_back({doc, s});
        }
        sort_ranking(fused);
        if (fused.size() > static_cast<std::size_t>(out_depth)) fused.resize(static_cast<std::size_t>(out_depth));
        out.entries[topic] = std::move(fused);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Composition: date filter -> full-text BM25 -> abstract re-rank

struct ZeroShotConfig {
    bool date_filter = true;
    DateFilterPolicy date_policy;
    TokenizationConfig tokenization;
    BM25Params bm25;
    int first_stage_depth = 1000;
    QueryField query_field = QueryField::question;
    RerankConfig rerank;
    std::string tag = "zeroshot";
    unsigned threads = default_threads();
};

struct PipelineResult {
    Run first_stage;
    Run final_run;
    FilterStats filter_stats;
};

/// Without a scorer the result is the first-stage BM25 run.
inline PipelineResult run_zero_shot_pipeline(std::vector<Document> docs, const std::vector<Topic>& topics, ScorerTransport* scorer,
    const ZeroShotConfig& cfg = {})
{
    PipelineResult result;
    if (cfg.date_filter) {
        auto filtered = filter_by_date(std::move(docs), cfg.date_policy);
        docs = std::move(filtered.kept);
        result.filter_stats = filtered.stats;
    } else {
        result.filter_stats.kept = docs.size();
    }
    auto index = build_index(docs, IndexField::full_text, cfg.tokenization, cfg.threads);
    result.first_stage = first_stage_run(index, topics, cfg.first_stage_depth, cfg.bm25, cfg.tag, cfg.query_field);
    if (!scorer) {
        result.final_run = result.first_stage;
        return result;
    }
    auto lookup = by_id(std::move(docs));
    auto rr = cfg.rerank;
    if (rr.output_tag.empty()) rr.output_tag = cfg.tag;
    result.final_run = rerank(result.first_stage, topics, lookup_in(lookup), *scorer, rr);
    return result;
}

}  // namespace medrank
