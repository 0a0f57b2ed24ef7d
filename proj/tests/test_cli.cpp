#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <string>
#include <sys/wait.h>

#include "fixtures.hpp"
#include "medrank/medrank.hpp"

using namespace medrank;

namespace {

const std::string cli = MEDRANK_CLI;
const std::string scorer_bin = MEDRANK_PLANTED_SCORER;

struct Result {
    int code;
    std::string out;
};

/// Runs the CLI through the shell; stdout is captured, stderr discarded.
Result run_cli(const std::string& args)
{
    std::string cmd = "'" + cli + "' " + args + " 2>/dev/null";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed");
    std::string out;
    std::array<char, 4096> buf{};
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
    int status = ::pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        planted = fixture::planted();
        fixture::write_planted(planted, dir.path());
    }

    std::string path(const std::string& name) const { return "'" + (dir / name).string() + "'"; }

    std::string grade_scorer_cmd() const
    {
        // inner quotes survive the sh -c the transport wraps the command in
        return "\"'" + scorer_bin + "' grade " + path("docs.jsonl") + " " + path("topics.tsv") + " " + path("qrels.txt") + "\"";
    }

    fixture::Planted planted;
    fixture::TempDir dir{"medrank-cli"};
};

std::vector<std::string> lines_of(const std::string& s)
{
    std::vector<std::string> out;
    for (auto part : split(s, '\n'))
        if (!part.empty()) out.emplace_back(part);
    return out;
}

}  // namespace

TEST_F(CliTest, HelpExitsZeroAndShowsDefaults)
{
    auto r = run_cli("pipeline --help");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("--first-stage-depth"), std::string::npos);
    EXPECT_NE(r.out.find("2020-01-01"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitTwo)
{
    EXPECT_EQ(run_cli("").code, 2);
    EXPECT_EQ(run_cli("no-such-command").code, 2);
    EXPECT_EQ(run_cli("evaluate --run x").code, 2);
    EXPECT_EQ(run_cli("search --index i --topics t --out o --k notanumber").code, 2);
    EXPECT_EQ(run_cli("evaluate --run /nonexistent.run --qrels " + path("qrels.txt")).code, 2);
}

TEST_F(CliTest, MalformedInputExitsOne)
{
    fixture::write_file(dir / "bad.run", "1 Q0 a 1 notascore t\n");
    EXPECT_EQ(run_cli("evaluate --run " + path("bad.run") + " --qrels " + path("qrels.txt")).code, 1);
}

TEST_F(CliTest, IngestThenFilterCorpus)
{
    ASSERT_EQ(run_cli("ingest --metadata " + path("metadata.csv") + " --out " + path("ingested.jsonl")).code, 0);
    auto docs = read_jsonl(dir / "ingested.jsonl");
    ASSERT_EQ(docs.size(), planted.docs.size());
    EXPECT_EQ(docs.front().doc_id, planted.docs.front().doc_id);  // input row order kept

    ASSERT_EQ(run_cli("filter-corpus --corpus " + path("ingested.jsonl") + " --out " + path("kept.jsonl")).code, 0);
    auto kept = read_jsonl(dir / "kept.jsonl");
    // dropped: p1x (2019-06-01), f3 (2019), f4 (undated)
    EXPECT_EQ(kept.size(), planted.docs.size() - 3);
    for (const auto& d : kept) EXPECT_FALSE(d.publish_date.is_absent());

    ASSERT_EQ(run_cli("filter-corpus --keep-undated --corpus " + path("ingested.jsonl") + " --out " + path("kept2.jsonl")).code, 0);
    EXPECT_EQ(read_jsonl(dir / "kept2.jsonl").size(), planted.docs.size() - 2);
}

TEST_F(CliTest, PipelineWithGradeScorerIsIdeal)
{
    auto r = run_cli("pipeline --corpus " + path("docs.jsonl") + " --topics " + path("topics.tsv") + " --scorer-cmd " + grade_scorer_cmd() +
        " --qrels " + path("qrels.txt") + " --out " + path("final.run"));
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("1.0000"), std::string::npos) << r.out;
    auto run = read_run(dir / "final.run");
    EXPECT_EQ(ndcg_at(run, planted.qrels, 10).mean, 1.0);
    EXPECT_EQ(run.entries.size(), 5u);
}

TEST_F(CliTest, EvaluateBothVariantsPrintsEightColumns)
{
    ASSERT_EQ(run_cli("pipeline --corpus " + path("docs.jsonl") + " --topics " + path("topics.tsv") + " --out " + path("bm25.run")).code, 0);
    auto r = run_cli("evaluate --run " + path("bm25.run") + " --qrels " + path("qrels.txt") + " --condensed both --out " + path("report.tsv"));
    ASSERT_EQ(r.code, 0);
    auto rows = lines_of(r.out);
    ASSERT_EQ(rows.size(), 3u) << r.out;
    auto cells = split_ws(rows[2]);
    ASSERT_EQ(cells.size(), 9u) << r.out;  // run name plus eight values
    for (std::size_t i = 1; i < cells.size(); ++i) EXPECT_TRUE(parse_double(cells[i]).has_value()) << cells[i];
    EXPECT_NE(rows[0].find("nDCG@10 judged"), std::string::npos);
    auto report = fixture::read_file(dir / "report.tsv");
    EXPECT_NE(report.find("ndcg@10_judged\tall\t"), std::string::npos) << report;
}

TEST_F(CliTest, ConfigFileSuppliesDefaultsAndFlagsWin)
{
    fixture::write_file(dir / "cfg.ini", "# pipeline settings\nfirst-stage-depth = 2\ntag = fromconfig\nmetrics = ndcg@10\n");
    auto base = "--config " + path("cfg.ini") + " pipeline --corpus " + path("docs.jsonl") + " --topics " + path("topics.tsv");
    ASSERT_EQ(run_cli(base + " --out " + path("a.run")).code, 0);
    auto a = read_run(dir / "a.run");
    EXPECT_EQ(a.tag, "fromconfig");
    for (const auto& [t, ranking] : a.entries) EXPECT_LE(ranking.size(), 2u);

    ASSERT_EQ(run_cli(base + " --tag cli --out " + path("b.run")).code, 0);
    EXPECT_EQ(read_run(dir / "b.run").tag, "cli");

    fixture::write_file(dir / "bad.ini", "no-such-key = 1\n");
    EXPECT_EQ(run_cli("--config " + path("bad.ini") + " evaluate --run " + path("a.run") + " --qrels " + path("qrels.txt")).code, 2);
}

TEST_F(CliTest, PipelineMatchesManualChaining)
{
    auto scorer = grade_scorer_cmd();
    ASSERT_EQ(run_cli("pipeline --corpus " + path("docs.jsonl") + " --topics " + path("topics.tsv") + " --scorer-cmd " + scorer +
                  " --tag chain --out " + path("pipeline.run") + " --first-stage-out " + path("pipeline_bm25.run"))
                  .code,
        0);

    ASSERT_EQ(run_cli("filter-corpus --corpus " + path("docs.jsonl") + " --out " + path("filtered.jsonl")).code, 0);
    ASSERT_EQ(run_cli("index --corpus " + path("filtered.jsonl") + " --out " + path("index.bin")).code, 0);
    ASSERT_EQ(run_cli("search --index " + path("index.bin") + " --topics " + path("topics.tsv") + " --tag chain --out " + path("bm25.run")).code, 0);
    ASSERT_EQ(run_cli("rerank --run " + path("bm25.run") + " --topics " + path("topics.tsv") + " --corpus " + path("filtered.jsonl") +
                  " --scorer-cmd " + scorer + " --out " + path("manual.run"))
                  .code,
        0);

    EXPECT_EQ(fixture::read_file(dir / "bm25.run"), fixture::read_file(dir / "pipeline_bm25.run"));
    EXPECT_EQ(fixture::read_file(dir / "manual.run"), fixture::read_file(dir / "pipeline.run"));
}

TEST_F(CliTest, FuseAndCompare)
{
    ASSERT_EQ(run_cli("pipeline --corpus " + path("docs.jsonl") + " --topics " + path("topics.tsv") + " --tag bm25 --out " + path("bm25.run")).code, 0);
    ASSERT_EQ(run_cli("pipeline --corpus " + path("docs.jsonl") + " --topics " + path("topics.tsv") + " --scorer-cmd " + grade_scorer_cmd() +
                  " --tag ideal --out " + path("ideal.run"))
                  .code,
        0);
    ASSERT_EQ(run_cli("fuse --run " + path("bm25.run") + " --run " + path("ideal.run") + " --out " + path("rrf.run")).code, 0);
    auto fused = read_run(dir / "rrf.run");
    EXPECT_EQ(fused.tag, "rrf");
    EXPECT_EQ(fused.entries.size(), 5u);

    EXPECT_EQ(run_cli("fuse --run " + path("bm25.run") + " --out " + path("x.run")).code, 2);

    auto r = run_cli("compare --reference " + path("ideal.run") + " --run " + path("bm25.run") + " --run " + path("rrf.run") + " --qrels " +
        path("qrels.txt") + " --metrics ndcg@10");
    ASSERT_EQ(r.code, 0);
    auto rows = lines_of(r.out);
    ASSERT_GE(rows.size(), 5u) << r.out;
    EXPECT_NE(rows[0].find("nDCG@10 judged"), std::string::npos);
}

TEST_F(CliTest, FilterQueriesWritesIdList)
{
    const std::string data = MEDRANK_TEST_DATA;
    ASSERT_EQ(run_cli("filter-queries --queries '" + data + "/medical_queries.tsv' --lexicon '" + data + "/medical_lexicon.txt' --id-list " +
                  path("ids.txt"))
                  .code,
        0);
    auto in = open_input(dir / "ids.txt");
    EXPECT_EQ(read_id_list(in).size(), 10u);
    EXPECT_EQ(run_cli("filter-queries --queries '" + data + "/medical_queries.tsv' --lexicon '" + data + "/medical_lexicon.txt'").code, 2);
}

TEST_F(CliTest, ConfigFlagsAndGlobalOptions)
{
    fixture::write_file(dir / "cfg.ini", "threads = 2\nno-date-filter = true\n");
    ASSERT_EQ(run_cli("--config " + path("cfg.ini") + " pipeline --corpus " + path("docs.jsonl") + " --topics " + path("topics.tsv") +
                  " --out " + path("unfiltered.run"))
                  .code,
        0);
    // without the filter the pre-2020 distractor leads topic 1
    EXPECT_EQ(read_run(dir / "unfiltered.run").entries.at("1").front().doc_id, planted.distractor);
}

TEST_F(CliTest, MakeTrainingWritesTriplesAndValidationBundle)
{
    fixture::write_file(dir / "queries.tsv", "1\tasthma inhaler dose\n2\tstock prices\n3\tfever in children\n");
    fixture::write_file(dir / "passages.tsv", "10\tinhaler dose for asthma\n11\tunrelated text\n12\tchildren with fever\n13\tmarket report\n");
    fixture::write_file(dir / "pairs.tsv", "1\t10\t11\n2\t13\t11\n3\t12\t11\n3\t12\t12\n");
    fixture::write_file(dir / "ids.txt", "1\n3\n");
    fixture::write_file(dir / "val_queries.tsv", "3\tfever in children\n");
    fixture::write_file(dir / "val_qrels.txt", "3 0 12 1\n");
    auto r = run_cli("make-training --pairs " + path("pairs.tsv") + " --med-ids " + path("ids.txt") + " --passages " + path("passages.tsv") +
        " --queries " + path("queries.tsv") + " --out " + path("train.tsv") + " --validation-queries " + path("val_queries.tsv") +
        " --validation-qrels " + path("val_qrels.txt") + " --validation-dir " + path("val") + " --validation-count 1");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(fixture::read_file(dir / "train.tsv"),
        "asthma inhaler dose\tinhaler dose for asthma\tunrelated text\nfever in children\tchildren with fever\tunrelated text\n");
    auto candidates = read_run(dir / "val" / "candidates.run");
    ASSERT_EQ(candidates.entries.count("3"), 1u);
    EXPECT_EQ(candidates.entries.at("3").front().doc_id, "12");
    EXPECT_EQ(fixture::read_file(dir / "val" / "qrels.txt"), "3 0 12 1\n");
    EXPECT_NE(fixture::read_file(dir / "val" / "pairs.tsv").find("3\t12\tfever in children\tchildren with fever\n"), std::string::npos);
}
