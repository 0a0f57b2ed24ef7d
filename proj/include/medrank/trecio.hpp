#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "medrank/error.hpp"
#include "medrank/util.hpp"

namespace medrank {

// ---------------------------------------------------------------------------
// Topics

struct Topic {
    std::string topic_id;
    std::string query;
    std::string question;
    std::string narrative;

    friend bool operator==(const Topic&, const Topic&) = default;
};

enum class TopicFormat { tsv, trec_xml };

/// `topic_id<TAB>query<TAB>question[<TAB>narrative]`, one topic per line.
inline std::vector<Topic> parse_topics_tsv(std::istream& in)
{
    std::vector<Topic> topics;
    for_each_line(in, [&](std::size_t n, std::string_view line) {
        if (trim(line).empty()) return;
        auto cells = split(line, '\t');
        if (cells.size() < 3 || cells.size() > 4)
            throw ParseError("expected 3 or 4 tab-separated fields, found " + std::to_string(cells.size()), n);
        Topic t{std::string(trim(cells[0])), std::string(trim(cells[1])), std::string(trim(cells[2])),
            cells.size() == 4 ? std::string(trim(cells[3])) : std::string()};
        if (t.topic_id.empty()) throw ParseError("empty topic id", n);
        if (t.question.empty()) throw ParseError("topic " + t.topic_id + " has an empty question", n);
        topics.push_back(std::move(t));
    });
    return topics;
}

namespace detail {

inline std::string xml_unescape(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out += s[i];
            continue;
        }
        auto end = s.find(';', i);
        if (end == std::string_view::npos) {
            out += s[i];
            continue;
        }
        auto ent = s.substr(i + 1, end - i - 1);
        if (ent == "amp") out += '&';
        else if (ent == "lt") out += '<';
        else if (ent == "gt") out += '>';
        else if (ent == "quot") out += '"';
        else if (ent == "apos") out += '\'';
        else if (ent.size() > 1 && ent[0] == '#') {
            auto code = ent[1] == 'x' ? std::strtol(std::string(ent.substr(2)).c_str(), nullptr, 16)
                                      : std::strtol(std::string(ent.substr(1)).c_str(), nullptr, 10);
            if (code > 0 && code < 0x80) out += static_cast<char>(code);
            else out += ' ';
        } else {
            out.append(s.substr(i, end - i + 1));
        }
        i = end;
    }
    return out;
}

}  // namespace detail

/// TREC-COVID layout: `<topic number="N">` elements holding `<query>`,
/// `<question>` and `<narrative>` children.
inline std::vector<Topic> parse_topics_xml(std::istream& in)
{
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto line_of = [&](std::size_t pos) {
        return static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n')) + 1;
    };
    auto child = [&](std::string_view body, std::size_t body_pos, std::string_view tag) -> std::string {
        auto open = std::string("<") + std::string(tag);
        auto start = body.find(open);
        while (start != std::string_view::npos) {
            char next = start + open.size() < body.size() ? body[start + open.size()] : '\0';
            if (next == '>' || next == ' ' || next == '/') break;
            start = body.find(open, start + 1);
        }
        if (start == std::string_view::npos) return {};
        auto gt = body.find('>', start);
        if (gt == std::string_view::npos) throw ParseError("unterminated <" + std::string(tag) + "> tag", line_of(body_pos + start));
        if (body[gt - 1] == '/') return {};
        auto close = body.find("</" + std::string(tag) + ">", gt);
        if (close == std::string_view::npos) throw ParseError("missing </" + std::string(tag) + ">", line_of(body_pos + start));
        return std::string(trim(detail::xml_unescape(body.substr(gt + 1, close - gt - 1))));
    };

    std::vector<Topic> topics;
    std::size_t pos = 0;
    while ((pos = text.find("<topic", pos)) != std::string::npos) {
        char next = pos + 6 < text.size() ? text[pos + 6] : '\0';
        if (next != ' ' && next != '>' && next != '\t' && next != '\n') {
            pos += 6;
            continue;
        }
        auto gt = text.find('>', pos);
        if (gt == std::string::npos) throw ParseError("unterminated <topic> tag", line_of(pos));
        std::string_view open_tag(text.data() + pos, gt - pos);
        auto num = open_tag.find("number=");
        if (num == std::string_view::npos) throw ParseError("<topic> without a number attribute", line_of(pos));
        char quote = open_tag[num + 7];
        if (quote != '"' && quote != '\'') throw ParseError("malformed number attribute", line_of(pos));
        auto num_end = open_tag.find(quote, num + 8);
        if (num_end == std::string_view::npos) throw ParseError("malformed number attribute", line_of(pos));
        auto close = text.find("</topic>", gt);
        if (close == std::string::npos) throw ParseError("missing </topic>", line_of(pos));

        std::string_view body(text.data() + gt + 1, close - gt - 1);
        Topic t;
        t.topic_id = std::string(trim(open_tag.substr(num + 8, num_end - num - 8)));
        t.query = child(body, gt + 1, "query");
        t.question = child(body, gt + 1, "question");
        t.narrative = child(body, gt + 1, "narrative");
        if (t.topic_id.empty()) throw ParseError("empty topic number", line_of(pos));
        if (t.question.empty()) throw ParseError("topic " + t.topic_id + " has no question", line_of(pos));
        topics.push_back(std::move(t));
        pos = close + 8;
    }
    return topics;
}

inline std::vector<Topic> parse_topics(const std::filesystem::path& file, TopicFormat format)
{
    auto in = open_input(file);
    return format == TopicFormat::tsv ? parse_topics_tsv(in) : parse_topics_xml(in);
}

// ---------------------------------------------------------------------------
// Relevance judgments

/// Graded judgments: 0 non-relevant, 1 partially relevant, 2 fully relevant.
struct QrelSet {
    std::map<std::string, std::map<std::string, int>, IdLess> judgments;

    /// Grade of a document, or -1 when it is unjudged for the topic.
    int grade(std::string_view topic_id, std::string_view doc_id) const
    {
        auto t = judgments.find(topic_id);
        if (t == judgments.end()) return -1;
        auto d = t->second.find(std::string(doc_id));
        return d == t->second.end() ? -1 : d->second;
    }

    bool contains_topic(std::string_view topic_id) const { return judgments.find(topic_id) != judgments.end(); }

    friend bool operator==(const QrelSet&, const QrelSet&) = default;
};

inline constexpr int max_grade = 2;

inline QrelSet parse_qrels(std::istream& in)
{
    QrelSet qrels;
    for_each_line(in, [&](std::size_t n, std::string_view line) {
        auto cols = split_ws(line);
        if (cols.empty()) return;
        if (cols.size() != 4) throw ParseError("expected 4 columns `qid iter docid grade`, found " + std::to_string(cols.size()), n);
        auto grade = parse_int<int>(cols[3]);
        if (!grade) throw ParseError("grade is not an integer: " + std::string(cols[3]), n);
        if (*grade < 0 || *grade > max_grade) throw ParseError("grade outside {0,1,2}: " + std::string(cols[3]), n);
        qrels.judgments[std::string(cols[0])][std::string(cols[2])] = *grade;
    });
    return qrels;
}

inline QrelSet parse_qrels(const std::filesystem::path& file)
{
    auto in = open_input(file);
    return parse_qrels(in);
}

inline void write_qrels(const QrelSet& qrels, std::ostream& out)
{
    for (const auto& [topic, docs] : qrels.judgments) {
        for (const auto& [doc, grade] : docs) out << topic << " 0 " << doc << ' ' << grade << '\n';
    }
}

// ---------------------------------------------------------------------------
// Runs

struct RunEntry {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const RunEntry&, const RunEntry&) = default;
};

struct Run {
    std::string tag;
    std::map<std::string, std::vector<RunEntry>, IdLess> entries;

    friend bool operator==(const Run&, const Run&) = default;
};

/// Score exactly as it appears in a run file.
inline std::string format_score(double score)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", score);
    return buf;
}

/// The value a score takes after a round trip through the run file.
inline double file_score(double score) { return *parse_double(format_score(score)); }

/// Rank order used by the reference evaluator: score descending, then doc_id
/// descending. Scores compare at run-file precision so ordering survives a
/// write/read cycle.
inline bool ranks_before(const RunEntry& a, const RunEntry& b)
{
    double sa = file_score(a.score), sb = file_score(b.score);
    if (sa != sb) return sa > sb;
    return a.doc_id > b.doc_id;
}

inline void sort_ranking(std::vector<RunEntry>& ranking)
{
    std::vector<std::pair<double, RunEntry*>> keyed;
    keyed.reserve(ranking.size());
    for (auto& e : ranking) keyed.emplace_back(file_score(e.score), &e);
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second->doc_id > b.second->doc_id;
    });
    std::vector<RunEntry> sorted;
    sorted.reserve(ranking.size());
    for (auto& [_, e] : keyed) sorted.push_back(std::move(*e));
    ranking = std::move(sorted);
}

/// Checks per-topic Run invariants (finite scores, unique doc_ids, no blanks
/// inside identifiers) and throws ContractError naming the first violation.
inline void validate_run(const Run& run)
{
    auto bad_token = [](std::string_view s) {
        return s.empty() || std::any_of(s.begin(), s.end(), [](char c) { return is_space(c); });
    };
    if (bad_token(run.tag)) throw ContractError("run tag must be a non-empty token without whitespace");
    for (const auto& [topic, ranking] : run.entries) {
        if (bad_token(topic)) throw ContractError("invalid topic id '" + topic + "'");
        std::set<std::string_view> seen;
        for (const auto& e : ranking) {
            if (!std::isfinite(e.score)) throw ContractError("non-finite score for " + e.doc_id + " in topic " + topic);
            if (bad_token(e.doc_id)) throw ContractError("invalid doc id '" + e.doc_id + "' in topic " + topic);
            if (!seen.insert(e.doc_id).second) throw ContractError("duplicate doc id " + e.doc_id + " in topic " + topic);
        }
    }
}

/// Writes `topic Q0 doc rank score tag` lines. Each topic's entries are put in
/// evaluator rank order first, so equal inputs give byte-identical files.
inline void write_run(const Run& run, std::ostream& out)
{
    validate_run(run);
    for (const auto& [topic, ranking] : run.entries) {
        auto sorted = ranking;
        sort_ranking(sorted);
        std::size_t rank = 0;
        for (const auto& e : sorted)
            out << topic << " Q0 " << e.doc_id << ' ' << ++rank << ' ' << format_score(e.score) << ' ' << run.tag << '\n';
    }
}

inline void write_run(const Run& run, const std::filesystem::path& file)
{
    std::ostringstream buf;
    write_run(run, buf);
    auto out = open_output(file);
    out << buf.str();
}

inline Run read_run(std::istream& in)
{
    Run run;
    bool have_tag = false, warned = false;
    std::map<std::string, std::set<std::string>, IdLess> seen;
    for_each_line(in, [&](std::size_t n, std::string_view line) {
        auto cols = split_ws(line);
        if (cols.empty()) return;
        if (cols.size() != 6) throw ParseError("expected 6 columns `topic Q0 doc rank score tag`, found " + std::to_string(cols.size()), n);
        auto score = parse_double(cols[4]);
        if (!score || !std::isfinite(*score)) throw ParseError("invalid score: " + std::string(cols[4]), n);
        if (!parse_int<long long>(cols[3])) throw ParseError("invalid rank: " + std::string(cols[3]), n);
        if (!have_tag) {
            run.tag = std::string(cols[5]);
            have_tag = true;
        } else if (cols[5] != run.tag && !warned) {
            warned = true;
            warn("run file mixes tags '" + run.tag + "' and '" + std::string(cols[5]) + "' (line " + std::to_string(n) + ")");
        }
        std::string topic(cols[0]);
        if (!seen[topic].insert(std::string(cols[2])).second)
            throw ParseError("duplicate doc id " + std::string(cols[2]) + " in topic " + topic, n);
        run.entries[topic].push_back({std::string(cols[2]), *score});
    });
    for (auto& [_, ranking] : run.entries) sort_ranking(ranking);
    return run;
}

inline Run read_run(const std::filesystem::path& file)
{
    auto in = open_input(file);
    return read_run(in);
}

}  // namespace medrank
