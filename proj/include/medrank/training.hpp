#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "medrank/error.hpp"
#include "medrank/eval.hpp"
#include "medrank/index.hpp"
#include "medrank/lexfilter.hpp"
#include "medrank/pipeline.hpp"
#include "medrank/trecio.hpp"
#include "medrank/util.hpp"

namespace medrank {

// ---------------------------------------------------------------------------
// Training triples

struct TrainTriple {
    std::string query_id;
    std::string query_text;
    std::string pos_text;
    std::string neg_text;

    friend bool operator==(const TrainTriple&, const TrainTriple&) = default;
};

using TextTable = std::unordered_map<std::string, std::string>;

/// `id<TAB>text` file (MS-MARCO collection.tsv / queries.train.tsv layout).
inline TextTable read_text_table(std::istream& in)
{
    TextTable table;
    for_each_line(in, [&](std::size_t n, std::string_view line) {
        if (trim(line).empty()) return;
        auto tab = line.find('\t');
        if (tab == std::string_view::npos) throw ParseError("expected `id<TAB>text`", n);
        table[std::string(trim(line.substr(0, tab)))] = std::string(line.substr(tab + 1));
    });
    return table;
}

inline TextTable read_text_table(const std::filesystem::path& file)
{
    auto in = open_input(file);
    return read_text_table(in);
}

struct SampleStats {
    std::size_t rows = 0;
    std::size_t emitted = 0;
    std::size_t skipped = 0;     // query not in the allowed id set
    std::size_t degenerate = 0;  // positive and negative text identical
};

/// Streams `query_id<TAB>pos_id<TAB>neg_id` rows in file order and calls
/// emit(triple) for rows whose query is in `med_ids`.
template <typename Emit>
SampleStats sample_pairs(std::istream& pair_list, const std::set<std::string>& med_ids, const TextTable& passages,
    const TextTable& queries, Emit&& emit)
{
    SampleStats stats;
    for_each_line(pair_list, [&](std::size_t n, std::string_view line) {
        auto cols = split_ws(line);
        if (cols.empty()) return;
        if (cols.size() < 3) throw ParseError("expected `query_id<TAB>pos_id<TAB>neg_id`", n);
        ++stats.rows;
        std::string qid(cols[0]);
        if (!med_ids.count(qid)) {
            ++stats.skipped;
            return;
        }
        auto lookup = [&](const TextTable& t, std::string_view id, const char* what) -> const std::string& {
            auto it = t.find(std::string(id));
            if (it == t.end()) throw ContractError(std::string("unknown ") + what + " id " + std::string(id) + " (line " + std::to_string(n) + ")");
            return it->second;
        };
        TrainTriple t{qid, lookup(queries, qid, "query"), lookup(passages, cols[1], "passage"), lookup(passages, cols[2], "passage")};
        if (t.pos_text == t.neg_text) {
            ++stats.degenerate;
            return;
        }
        ++stats.emitted;
        emit(std::move(t));
    });
    return stats;
}

inline std::pair<std::vector<TrainTriple>, SampleStats> sample_pairs(std::istream& pair_list, const std::set<std::string>& med_ids,
    const TextTable& passages, const TextTable& queries)
{
    std::vector<TrainTriple> out;
    auto stats = sample_pairs(pair_list, med_ids, passages, queries, [&](TrainTriple t) { out.push_back(std::move(t)); });
    return {std::move(out), stats};
}

/// Scorer training file: `query<TAB>pos_text<TAB>neg_text`.
inline void write_training_line(const TrainTriple& t, std::ostream& out)
{
    out << sanitize_field(t.query_text) << '\t' << sanitize_field(t.pos_text) << '\t' << sanitize_field(t.neg_text) << '\n';
}

// ---------------------------------------------------------------------------
// Pairwise softmax cross-entropy

namespace detail {

inline void require_finite(double a, double b)
{
    if (!std::isfinite(a) || !std::isfinite(b)) throw ContractError("loss inputs must be finite");
}

inline double logistic(double x)
{
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace detail

/// -log softmax(s_pos | s_pos, s_neg) = log(1 + exp(s_neg - s_pos)).
inline double pairwise_loss(double s_pos, double s_neg)
{
    detail::require_finite(s_pos, s_neg);
    double x = s_neg - s_pos;
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

struct LossGradient {
    double d_pos;
    double d_neg;
};

inline LossGradient loss_gradient(double s_pos, double s_neg)
{
    detail::require_finite(s_pos, s_neg);
    double sig = detail::logistic(s_neg - s_pos);
    return {-sig, sig};
}

// ---------------------------------------------------------------------------
// Early stopping over validation events

class EarlyStopper {
public:
    explicit EarlyStopper(int patience = 20)
        : patience_(patience)
    {
        if (patience < 1) throw ContractError("patience must be >= 1");
    }

    /// Records one validation score; returns true once `patience` consecutive
    /// scores have failed to beat the best so far.
    bool update(double score)
    {
        if (!best_ || score > best_score_) {
            best_ = seen_;
            best_score_ = score;
            since_best_ = 0;
        } else {
            ++since_best_;
        }
        ++seen_;
        if (since_best_ >= patience_) stopped_ = true;
        return stopped_;
    }

    bool stopped() const { return stopped_; }
    std::optional<std::size_t> best_index() const { return best_; }
    double best_score() const { return best_score_; }

private:
    int patience_;
    std::size_t seen_ = 0;
    int since_best_ = 0;
    std::optional<std::size_t> best_;
    double best_score_ = -std::numeric_limits<double>::infinity();
    bool stopped_ = false;
};

struct EarlyStopTrace {
    std::optional<std::size_t> best_index;
    std::vector<bool> stop;
};

inline EarlyStopTrace early_stopper(const std::vector<double>& validation_scores, int patience = 20)
{
    EarlyStopper s(patience);
    EarlyStopTrace trace;
    for (double v : validation_scores) trace.stop.push_back(s.update(v));
    trace.best_index = s.best_index();
    return trace;
}

// ---------------------------------------------------------------------------
// Validation bundle

struct ValidationConfig {
    int held_out_queries = 200;
    int rerank_depth = 20;
    int samples_per_validation = 512;
    int patience = 20;
    int mrr_cutoff = 10;

    void validate() const
    {
        if (held_out_queries < 1 || rerank_depth < 1 || samples_per_validation < 1 || patience < 1 || mrr_cutoff < 1)
            throw ContractError("validation settings must all be positive");
    }
};

struct ValidationBundle {
    std::vector<QueryRecord> queries;
    Run candidates;  // BM25 top-`rerank_depth` per query
    QrelSet qrels;   // judgments restricted to the held-out queries
};

inline ValidationBundle make_validation_set(const std::vector<QueryRecord>& queries, const InvertedIndex& index, const QrelSet& qrels,
    const ValidationConfig& cfg = {}, const BM25Params& bm25 = {})
{
    cfg.validate();
    if (queries.size() != static_cast<std::size_t>(cfg.held_out_queries))
        warn("validation set has " + std::to_string(queries.size()) + " queries, configured for " + std::to_string(cfg.held_out_queries));
    ValidationBundle bundle;
    bundle.queries = queries;
    bundle.candidates.tag = "bm25-validation";
    for (const auto& q : queries) {
        auto hits = bm25_search_text(index, q.text, cfg.rerank_depth, bm25);
        bundle.candidates.entries[q.query_id] = hits_to_ranking(hits, index.field);
        if (auto it = qrels.judgments.find(q.query_id); it != qrels.judgments.end())
            bundle.qrels.judgments[q.query_id] = it->second;
    }
    return bundle;
}

/// Re-ranks the candidates with the scorer and returns mean MRR@cutoff.
inline double validation_mrr(const ValidationBundle& bundle, const DocLookup& passages, ScorerTransport& scorer, const ValidationConfig& cfg = {})
{
    std::vector<Topic> topics;
    for (const auto& q : bundle.queries) topics.push_back({q.query_id, "", q.text, ""});
    RerankConfig rr;
    rr.depth = cfg.rerank_depth;
    auto reranked = rerank(bundle.candidates, topics, passages, scorer, rr);
    return mrr_at(reranked, bundle.qrels, cfg.mrr_cutoff).mean;
}

/// Writes candidates.run, qrels.txt and pairs.tsv (`qid<TAB>doc_id<TAB>query<TAB>doc`)
/// into `dir`, which must exist.
inline void write_validation_bundle(const ValidationBundle& bundle, const DocLookup& passages, const std::filesystem::path& dir)
{
    write_run(bundle.candidates, dir / "candidates.run");
    {
        auto out = open_output(dir / "qrels.txt");
        write_qrels(bundle.qrels, out);
    }
    auto out = open_output(dir / "pairs.tsv");
    std::unordered_map<std::string, const QueryRecord*> by_qid;
    for (const auto& q : bundle.queries) by_qid[q.query_id] = &q;
    for (const auto& [qid, ranking] : bundle.candidates.entries) {
        for (const auto& e : ranking) {
            const Document* d = passages(e.doc_id);
            if (!d) throw ContractError("validation passage not found: " + e.doc_id);
            out << qid << '\t' << e.doc_id << '\t' << sanitize_field(by_qid.at(qid)->text) << '\t'
                << sanitize_field(d->title.empty() ? d->abstract : d->title + ". " + d->abstract) << '\n';
        }
    }
}

}  // namespace medrank
