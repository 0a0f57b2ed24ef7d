#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "medrank/error.hpp"
#include "medrank/trecio.hpp"
#include "medrank/util.hpp"

namespace medrank {

using TopicValues = std::map<std::string, double, IdLess>;

struct MetricReport {
    std::string metric_name;
    TopicValues per_topic;
    double mean = 0.0;
};

using Judgments = std::map<std::string, int>;

// ---------------------------------------------------------------------------
// Per-topic definitions. `ranking` must already be in rank order.

namespace metric {

inline int gain(const Judgments& j, const std::string& doc)
{
    auto it = j.find(doc);
    return it == j.end() ? 0 : std::max(it->second, 0);
}

inline double ndcg(const std::vector<RunEntry>& ranking, const Judgments& judgments, int k)
{
    double dcg = 0.0;
    auto depth = std::min<std::size_t>(static_cast<std::size_t>(k), ranking.size());
    for (std::size_t i = 0; i < depth; ++i) dcg += gain(judgments, ranking[i].doc_id) / std::log2(static_cast<double>(i) + 2.0);

    std::vector<int> ideal;
    for (const auto& [_, g] : judgments) ideal.push_back(std::max(g, 0));
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min<std::size_t>(static_cast<std::size_t>(k), ideal.size()); ++i)
        idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

inline double precision(const std::vector<RunEntry>& ranking, const Judgments& judgments, int k, int min_grade)
{
    std::size_t hits = 0;
    auto depth = std::min<std::size_t>(static_cast<std::size_t>(k), ranking.size());
    for (std::size_t i = 0; i < depth; ++i) {
        auto it = judgments.find(ranking[i].doc_id);
        if (it != judgments.end() && it->second >= min_grade) ++hits;
    }
    return static_cast<double>(hits) / k;
}

inline double judged(const std::vector<RunEntry>& ranking, const Judgments& judgments, int k)
{
    std::size_t n = 0;
    auto depth = std::min<std::size_t>(static_cast<std::size_t>(k), ranking.size());
    for (std::size_t i = 0; i < depth; ++i)
        if (judgments.count(ranking[i].doc_id)) ++n;
    return static_cast<double>(n) / k;
}

inline double reciprocal_rank(const std::vector<RunEntry>& ranking, const Judgments& judgments, int k)
{
    auto depth = std::min<std::size_t>(static_cast<std::size_t>(k), ranking.size());
    for (std::size_t i = 0; i < depth; ++i) {
        auto it = judgments.find(ranking[i].doc_id);
        if (it != judgments.end() && it->second >= 1) return 1.0 / static_cast<double>(i + 1);
    }
    return 0.0;
}

}  // namespace metric

// ---------------------------------------------------------------------------
// Metric specs: ndcg@K, p@K, p@Kf (fully relevant only), j@K, mrr@K

enum class MetricKind { ndcg, precision, judged, mrr };

struct MetricSpec {
    MetricKind kind = MetricKind::ndcg;
    int k = 10;
    int min_grade = 1;  // precision only

    std::string name() const
    {
        auto kk = std::to_string(k);
        switch (kind) {
        case MetricKind::ndcg: return "ndcg@" + kk;
        case MetricKind::precision: return min_grade >= 2 ? "p@" + kk + "f" : "p@" + kk;
        case MetricKind::judged: return "j@" + kk;
        case MetricKind::mrr: return "mrr@" + kk;
        }
        return {};
    }

    /// Table-style column title, e.g. "nDCG@10", "P@5 (F)".
    std::string label() const
    {
        auto kk = std::to_string(k);
        switch (kind) {
        case MetricKind::ndcg: return "nDCG@" + kk;
        case MetricKind::precision: return min_grade >= 2 ? "P@" + kk + " (F)" : "P@" + kk;
        case MetricKind::judged: return "J@" + kk;
        case MetricKind::mrr: return "MRR@" + kk;
        }
        return {};
    }
};

inline MetricSpec parse_metric(std::string_view text)
{
    auto s = ascii_lower(trim(text));
    auto at = s.find('@');
    if (at == std::string::npos) throw ContractError("metric needs a cutoff, e.g. ndcg@10: " + s);
    auto head = s.substr(0, at);
    auto tail = s.substr(at + 1);
    MetricSpec spec;
    if (head == "p" && !tail.empty() && tail.back() == 'f') {
        spec.min_grade = 2;
        tail.pop_back();
    }
    auto k = parse_int<int>(tail);
    if (!k || *k <= 0) throw ContractError("metric cutoff must be a positive integer: " + s);
    spec.k = *k;
    if (head == "ndcg") spec.kind = MetricKind::ndcg;
    else if (head == "p") spec.kind = MetricKind::precision;
    else if (head == "j") spec.kind = MetricKind::judged;
    else if (head == "mrr") spec.kind = MetricKind::mrr;
    else throw ContractError("unknown metric: " + s);
    return spec;
}

inline std::vector<MetricSpec> parse_metric_list(std::string_view text)
{
    std::vector<MetricSpec> out;
    for (auto part : split(text, ','))
        if (!trim(part).empty()) out.push_back(parse_metric(part));
    if (out.empty()) throw ContractError("empty metric list");
    return out;
}

/// Evaluates every run topic that has judgments; topics without judgments are
/// skipped with a warning. Each ranking is put in evaluator order (score
/// descending, doc_id descending) first, as the reference tool does.
inline MetricReport evaluate(const Run& run, const QrelSet& qrels, const MetricSpec& spec)
{
    if (spec.k <= 0) throw ContractError("metric cutoff must be positive");
    MetricReport report;
    report.metric_name = spec.name();
    for (const auto& [topic, entries] : run.entries) {
        auto jt = qrels.judgments.find(topic);
        if (jt == qrels.judgments.end()) {
            warn("topic " + topic + " has no judgments; skipped for " + report.metric_name);
            continue;
        }
        auto ranking = entries;
        sort_ranking(ranking);
        double v = 0.0;
        switch (spec.kind) {
        case MetricKind::ndcg: v = metric::ndcg(ranking, jt->second, spec.k); break;
        case MetricKind::precision: v = metric::precision(ranking, jt->second, spec.k, spec.min_grade); break;
        case MetricKind::judged: v = metric::judged(ranking, jt->second, spec.k); break;
        case MetricKind::mrr: v = metric::reciprocal_rank(ranking, jt->second, spec.k); break;
        }
        report.per_topic[topic] = v;
    }
    if (report.per_topic.empty()) throw ContractError("no run topic has relevance judgments");
    double sum = 0.0;
    for (const auto& [_, v] : report.per_topic) sum += v;
    report.mean = sum / static_cast<double>(report.per_topic.size());
    return report;
}

inline MetricReport ndcg_at(const Run& run, const QrelSet& qrels, int k = 10) { return evaluate(run, qrels, {MetricKind::ndcg, k, 1}); }

inline MetricReport precision_at(const Run& run, const QrelSet& qrels, int k = 5, int min_grade = 1)
{
    if (min_grade < 1 || min_grade > max_grade) throw ContractError("precision min_grade must be 1 or 2");
    return evaluate(run, qrels, {MetricKind::precision, k, min_grade});
}

inline MetricReport judged_at(const Run& run, const QrelSet& qrels, int k = 10) { return evaluate(run, qrels, {MetricKind::judged, k, 1}); }

inline MetricReport mrr_at(const Run& run, const QrelSet& qrels, int k = 10) { return evaluate(run, qrels, {MetricKind::mrr, k, 1}); }

/// Drops unjudged documents from every ranking ("judged only" evaluation).
/// Ranks close up; scores are kept.
inline Run condense(const Run& run, const QrelSet& qrels)
{
    Run out;
    out.tag = run.tag;
    for (const auto& [topic, entries] : run.entries) {
        auto& kept = out.entries[topic];
        auto jt = qrels.judgments.find(topic);
        if (jt != qrels.judgments.end())
            for (const auto& e : entries)
                if (jt->second.count(e.doc_id)) kept.push_back(e);
        if (kept.empty() && !entries.empty()) warn("topic " + topic + " has no judged documents after condensing");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report output

inline std::string format_value(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

/// `metric<TAB>topic<TAB>value` rows, per topic then an `all` row with the mean.
inline void write_report_tsv(const MetricReport& report, std::ostream& out, std::string_view suffix = {})
{
    for (const auto& [topic, v] : report.per_topic)
        out << report.metric_name << suffix << '\t' << topic << '\t' << format_value(v) << '\n';
    out << report.metric_name << suffix << "\tall\t" << format_value(report.mean) << '\n';
}

/// Fixed-width text table; the first row is the header.
inline void write_aligned_table(const std::vector<std::vector<std::string>>& rows, std::ostream& out)
{
    std::vector<std::size_t> width;
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (width.size() <= c) width.push_back(0);
            width[c] = std::max(width[c], r[c].size());
        }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        std::string line;
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c) line += "  ";
            if (c == 0) line += r[c] + std::string(width[c] - r[c].size(), ' ');
            else line += std::string(width[c] - r[c].size(), ' ') + r[c];
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out << line << '\n';
        if (i == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w + 2;
            out << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
        }
    }
}

}  // namespace medrank
