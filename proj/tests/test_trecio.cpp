#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "medrank/trecio.hpp"

using namespace medrank;

TEST(Topics, TsvThreeAndFourFields)
{
    std::istringstream in("1\tcoronavirus origin\twhat is the origin of COVID-19?\tnarr\n"
                          "\n"
                          "2\tmasks\tdo masks work?\n");
    auto t = parse_topics_tsv(in);
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t[0].question, "what is the origin of COVID-19?");
    EXPECT_EQ(t[0].narrative, "narr");
    EXPECT_EQ(t[1].narrative, "");
}

TEST(Topics, TsvBadFieldCountReportsLine)
{
    std::istringstream in("1\ta\tb\n2\tonly two\n");
    try {
        parse_topics_tsv(in);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::istringstream five("1\ta\tb\tc\td\n");
    EXPECT_THROW(parse_topics_tsv(five), ParseError);
}

TEST(Topics, TsvEmptyQuestionRejected)
{
    std::istringstream in("1\tquery\t \n");
    EXPECT_THROW(parse_topics_tsv(in), ParseError);
}

TEST(Topics, TrecXml)
{
    std::istringstream in(R"(<topics>
  <topic number="1">
    <query>coronavirus origin</query>
    <question>what is the origin of COVID-19 &amp; SARS?</question>
    <narrative>seeking range of information</narrative>
  </topic>
  <topic number='2'>
    <query>masks</query>
    <question>do masks prevent spread</question>
  </topic>
</topics>
)");
    auto t = parse_topics_xml(in);
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t[0].topic_id, "1");
    EXPECT_EQ(t[0].question, "what is the origin of COVID-19 & SARS?");
    EXPECT_EQ(t[1].topic_id, "2");
    EXPECT_EQ(t[1].narrative, "");
}

TEST(Topics, TrecXmlErrorsCarryLine)
{
    std::istringstream in("<topics>\n<topic number=\"1\">\n<query>q</query>\n</topic>\n</topics>\n");
    try {
        parse_topics_xml(in);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::istringstream unclosed("<topics>\n<topic number=\"1\">\n<question>q</question>\n");
    EXPECT_THROW(parse_topics_xml(unclosed), ParseError);
}

TEST(Qrels, ParseGradesAndUnjudged)
{
    std::istringstream in("1 0 docA 2\n1 0 docB 0\n2 0.5 docC 1\n");
    auto q = parse_qrels(in);
    EXPECT_EQ(q.grade("1", "docA"), 2);
    EXPECT_EQ(q.grade("1", "docB"), 0);
    EXPECT_EQ(q.grade("1", "docC"), -1);
    EXPECT_EQ(q.grade("3", "docA"), -1);
    EXPECT_TRUE(q.contains_topic("2"));
}

TEST(Qrels, RejectsBadLines)
{
    for (const char* bad : {"1 0 d\n", "1 0 d x\n", "1 0 d 3\n", "1 0 d -1\n", "1 0 d 1 extra\n"}) {
        std::istringstream in(bad);
        EXPECT_THROW(parse_qrels(in), ParseError) << bad;
    }
}

TEST(Qrels, WriteReadRoundTrip)
{
    std::istringstream in("10 0 b 1\n2 0 a 2\n2 0 c 0\n");
    auto q = parse_qrels(in);
    std::stringstream out;
    write_qrels(q, out);
    EXPECT_EQ(out.str(), "2 0 a 2\n2 0 c 0\n10 0 b 1\n");
    EXPECT_EQ(parse_qrels(out), q);
}

TEST(Runs, WriteOrdersByScoreThenDocIdDescending)
{
    medrank::Run run;
    run.tag = "bm25";
    run.entries["1"] = {{"dA", 1.0}, {"dB", 1.0}, {"dC", 2.5}};
    std::ostringstream out;
    write_run(run, out);
    EXPECT_EQ(out.str(), "1 Q0 dC 1 2.500000 bm25\n"
                         "1 Q0 dB 2 1.000000 bm25\n"
                         "1 Q0 dA 3 1.000000 bm25\n");
}

TEST(Runs, ScoresEqualAtFilePrecisionTie)
{
    // distinct doubles that print identically must rank by doc id
    std::vector<RunEntry> r{{"a", 1.0000001}, {"b", 1.0000002}};
    sort_ranking(r);
    EXPECT_EQ(r[0].doc_id, "b");
    r = {{"b", 1.0000001}, {"a", 1.0000002}};
    sort_ranking(r);
    EXPECT_EQ(r[0].doc_id, "b");
}

TEST(Runs, ValidateRejectsBadRuns)
{
    medrank::Run dup;
    dup.tag = "t";
    dup.entries["1"] = {{"a", 1}, {"a", 2}};
    EXPECT_THROW(validate_run(dup), ContractError);
    medrank::Run nan;
    nan.tag = "t";
    nan.entries["1"] = {{"a", std::nan("")}};
    EXPECT_THROW(validate_run(nan), ContractError);
    medrank::Run space;
    space.tag = "t";
    space.entries["1"] = {{"a b", 1}};
    EXPECT_THROW(validate_run(space), ContractError);
    medrank::Run tag;
    tag.tag = "bad tag";
    tag.entries["1"] = {{"a", 1}};
    EXPECT_THROW(validate_run(tag), ContractError);
}

TEST(Runs, ReadRejectsMalformedLines)
{
    for (const char* bad : {"1 Q0 d 1 0.5\n", "1 Q0 d x 0.5 t\n", "1 Q0 d 1 nan t\n", "1 Q0 d 1 0.5 t\n1 Q0 d 2 0.4 t\n"}) {
        std::istringstream in(bad);
        EXPECT_THROW(read_run(in), ParseError) << bad;
    }
}

TEST(Runs, ReadWarnsOnceOnMixedTags)
{
    std::istringstream in("1 Q0 a 1 3 x\n1 Q0 b 2 2 y\n1 Q0 c 3 1 z\n");
    int warnings = 0;
    ScopedWarningHandler h([&](std::string_view) { ++warnings; });
    auto run = read_run(in);
    EXPECT_EQ(run.tag, "x");
    EXPECT_EQ(warnings, 1);
}

TEST(Runs, ReadIgnoresFileRankColumn)
{
    std::istringstream in("1 Q0 a 1 0.1 t\n1 Q0 b 2 0.9 t\n");
    auto run = read_run(in);
    EXPECT_EQ(run.entries.at("1")[0].doc_id, "b");
}

TEST(Runs, RoundTripIsByteStable)
{
    std::mt19937 rng(fixture::seed);
    std::uniform_real_distribution<double> score(-50.0, 50.0);
    std::uniform_int_distribution<int> len(1, 40), grid(0, 3);
    for (int iter = 0; iter < 300; ++iter) {
        medrank::Run run;
        run.tag = "r" + std::to_string(iter);
        for (int t = 1; t <= 4; ++t) {
            auto& ranking = run.entries[std::to_string(t * 7)];
            int n = len(rng);
            for (int i = 0; i < n; ++i) {
                double s = grid(rng) == 0 ? std::round(score(rng)) : score(rng);
                ranking.push_back({"doc" + std::to_string(i), s});
            }
        }
        std::ostringstream first;
        write_run(run, first);
        std::istringstream in(first.str());
        auto back = read_run(in);
        std::ostringstream second;
        write_run(back, second);
        ASSERT_EQ(first.str(), second.str());
        for (const auto& [topic, ranking] : run.entries) {
            const auto& got = back.entries.at(topic);
            ASSERT_EQ(got.size(), ranking.size());
            for (const auto& e : got) {
                auto it = std::find_if(ranking.begin(), ranking.end(), [&](const RunEntry& o) { return o.doc_id == e.doc_id; });
                ASSERT_NE(it, ranking.end());
                EXPECT_NEAR(it->score, e.score, 5e-7);
            }
        }
    }
}

TEST(Runs, TieBreakMatchesReferenceConvention)
{
    // property: for any run the written order is score desc, doc_id desc
    std::mt19937 rng(fixture::seed + 1);
    std::uniform_int_distribution<int> len(1, 30), sc(0, 5), id(0, 99);
    for (int iter = 0; iter < 1000; ++iter) {
        std::vector<RunEntry> r;
        std::set<std::string> used;
        int n = len(rng);
        while (static_cast<int>(r.size()) < n) {
            auto d = "d" + std::to_string(id(rng));
            if (used.insert(d).second) r.push_back({d, sc(rng) * 0.5});
        }
        sort_ranking(r);
        for (std::size_t i = 1; i < r.size(); ++i) {
            ASSERT_GE(r[i - 1].score, r[i].score);
            if (r[i - 1].score == r[i].score) ASSERT_GT(r[i - 1].doc_id, r[i].doc_id);
        }
    }
}
