#pragma once

// Shared test fixtures: the planted 30-document collection, random
// generators for property tests, and temp-directory helpers.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "medrank/medrank.hpp"

namespace fixture {

namespace fs = std::filesystem;

inline constexpr unsigned seed = 20200101u;

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& stem = "medrank")
    {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = fs::temp_directory_path() / (stem + "-" + std::to_string(rng()));
        fs::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& p, const std::string& content)
{
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// Planted collection
//
// Five topics, each tied to one keyword that no other document uses. Every
// topic has five post-2020 documents containing its keyword: two graded 2, one
// graded 1, two graded 0. Topic 1 also has a 2019 distractor that repeats the
// keyword and outscores everything under BM25, while its weaker grade-2
// document mentions the keyword once in a long text and ranks last. Four
// keyword-free fillers (dated, year-only 2019, undated) complete the 30 docs.

struct Planted {
    std::vector<medrank::Document> docs;
    std::vector<medrank::Topic> topics;
    medrank::QrelSet qrels;
    std::string distractor = "p1x";
    std::string weak_relevant = "p1b";
};

inline Planted planted()
{
    using medrank::Document;
    using medrank::PublishDate;
    static const std::vector<std::string> keywords{"remdesivir", "hydroxychloroquine", "ventilator", "incubation", "seroprevalence"};
    Planted p;
    std::vector<std::string> filler_words{"cohort", "hospital", "patient", "sample", "clinic", "outcome", "review", "analysis"};
    auto filler = [&](std::size_t n, std::size_t offset) {
        std::string s;
        for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + filler_words[(i + offset) % filler_words.size()];
        return s;
    };

    for (std::size_t t = 0; t < keywords.size(); ++t) {
        const auto& kw = keywords[t];
        const std::string tid = std::to_string(t + 1);
        p.topics.push_back({tid, kw, "what is known about " + kw, "documents discussing " + kw});
        auto add = [&](const std::string& suffix, const std::string& title, const std::string& abstract, const char* date, int grade) {
            Document d;
            d.doc_id = "p" + tid + suffix;
            d.title = title;
            d.abstract = abstract;
            d.publish_date = PublishDate::parse(date);
            p.docs.push_back(d);
            p.qrels.judgments[tid][d.doc_id] = grade;
        };
        add("a", kw + " trial", kw + " " + kw + " " + filler(4, t), "2020-03-15", 2);
        add("b", "report", kw + " " + filler(60, t + 1), "2020-04-01", 2);
        add("c", kw + " notes", kw + " " + filler(5, t + 2), "2020-05-01", 1);
        add("d", kw + " letter", kw + " " + filler(5, t + 3), "2020-06-01", 0);
        add("e", kw + " comment", kw + " " + filler(5, t + 4), "2021", 0);
        if (t == 0) add("x", kw + " " + kw, kw + " " + kw + " " + kw + " " + filler(3, 0), "2019-06-01", 0);
    }
    auto add_filler = [&](const std::string& id, const char* date, std::size_t offset) {
        Document d;
        d.doc_id = id;
        d.title = "unrelated " + filler(2, offset);
        d.abstract = filler(8, offset);
        d.publish_date = PublishDate::parse(date);
        p.docs.push_back(d);
    };
    add_filler("f1", "2020-02-02", 0);
    add_filler("f2", "2022-11-30", 1);
    add_filler("f3", "2019", 2);
    add_filler("f4", "", 3);
    return p;
}

/// Scorer that answers with the judged grade of the (topic, document) pair
/// behind each request, recovering both from the exact texts rerank sends.
inline medrank::PairFunction grade_scorer(const Planted& p, const medrank::RerankConfig& cfg = {})
{
    std::map<std::string, std::string> topic_of, doc_of;
    for (const auto& t : p.topics) topic_of[medrank::scorer_query_text(t, cfg)] = t.topic_id;
    for (const auto& d : p.docs) doc_of[medrank::scorer_doc_text(d, cfg)] = d.doc_id;
    auto qrels = p.qrels;
    return [=](const medrank::PairRequest& r) {
        auto t = topic_of.find(r.query);
        auto d = doc_of.find(r.doc);
        if (t == topic_of.end() || d == doc_of.end()) return -1.0;
        return static_cast<double>(std::max(0, qrels.grade(t->second, d->second)));
    };
}

/// Writes the collection as metadata CSV, documents JSONL, topics TSV and qrels.
inline void write_planted(const Planted& p, const fs::path& dir)
{
    {
        std::ofstream csv(dir / "metadata.csv");
        csv << "cord_uid,title,abstract,publish_time\n";
        for (const auto& d : p.docs)
            csv << d.doc_id << ",\"" << d.title << "\",\"" << d.abstract << "\"," << d.publish_date.to_string() << "\n";
    }
    medrank::write_jsonl(p.docs, dir / "docs.jsonl");
    {
        std::ofstream t(dir / "topics.tsv");
        for (const auto& topic : p.topics) t << topic.topic_id << '\t' << topic.query << '\t' << topic.question << '\t' << topic.narrative << '\n';
    }
    std::ofstream q(dir / "qrels.txt");
    medrank::write_qrels(p.qrels, q);
}

// ---------------------------------------------------------------------------
// Random generators

/// Small vocabulary without stopwords.
inline const std::vector<std::string>& plain_vocab()
{
    static const std::vector<std::string> v{"alpha", "beta", "gamma", "delta", "sigma", "omega", "zeta", "theta", "kappa", "lambda",
        "virus", "lung", "fever", "cough", "dose", "trial", "mask", "cell", "gene", "viral"};
    return v;
}

inline std::string random_text(std::mt19937& rng, std::size_t min_len, std::size_t max_len, std::size_t vocab = 20)
{
    std::uniform_int_distribution<std::size_t> len(min_len, max_len), word(0, std::min(vocab, plain_vocab().size()) - 1);
    std::string s;
    auto n = len(rng);
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + plain_vocab()[word(rng)];
    return s;
}

inline std::vector<medrank::Document> random_corpus(std::mt19937& rng, std::size_t n_docs)
{
    std::vector<medrank::Document> docs;
    for (std::size_t i = 0; i < n_docs; ++i) {
        medrank::Document d;
        d.doc_id = "d" + std::to_string(i);
        d.title = random_text(rng, 0, 3);
        d.abstract = random_text(rng, 0, 30);
        docs.push_back(std::move(d));
    }
    return docs;
}

/// Random run plus graded qrels over a shared document pool. Scores sit on a
/// coarse grid so ties are common.
inline std::pair<medrank::Run, medrank::QrelSet> random_run_and_qrels(std::mt19937& rng, int topics, int pool = 40)
{
    medrank::Run run;
    run.tag = "rand";
    medrank::QrelSet qrels;
    std::uniform_int_distribution<int> depth(1, 30), score(0, 20), grade(-1, 2);
    for (int t = 1; t <= topics; ++t) {
        auto tid = std::to_string(t);
        std::vector<int> ids(static_cast<std::size_t>(pool));
        for (int i = 0; i < pool; ++i) ids[static_cast<std::size_t>(i)] = i;
        std::shuffle(ids.begin(), ids.end(), rng);
        int n = depth(rng);
        auto& ranking = run.entries[tid];
        for (int i = 0; i < n; ++i) ranking.push_back({"doc" + std::to_string(ids[static_cast<std::size_t>(i)]), score(rng) / 4.0});
        for (int i = 0; i < pool; ++i)
            if (int g = grade(rng); g >= 0) qrels.judgments[tid]["doc" + std::to_string(i)] = g;
        if (!qrels.contains_topic(tid)) qrels.judgments[tid]["doc0"] = 0;
    }
    return {run, qrels};
}

}  // namespace fixture
