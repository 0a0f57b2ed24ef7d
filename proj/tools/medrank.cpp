// medrank: command-line front end for the retrieval pipeline.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error or stage-contract
// violation (bad flag, missing input file, inconsistent inputs).

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "medrank/medrank.hpp"

namespace fs = std::filesystem;
using namespace medrank;

namespace {

void log_line(const std::string& msg) { std::cerr << "medrank: " << msg << '\n'; }

std::chrono::year_month_day parse_cutoff(const std::string& text)
{
    auto d = PublishDate::parse(text);
    if (!d.is_full()) throw ContractError("cutoff must be a YYYY-MM-DD date: " + text);
    return d.date();
}

TopicFormat topic_format(const std::string& flag, const fs::path& file)
{
    if (flag == "tsv") return TopicFormat::tsv;
    if (flag == "xml") return TopicFormat::trec_xml;
    if (flag != "auto") throw ContractError("topic format must be auto, tsv or xml");
    return file.extension() == ".xml" ? TopicFormat::trec_xml : TopicFormat::tsv;
}

TokenizationConfig tokenization(const std::string& stemmer, bool keep_stopwords)
{
    TokenizationConfig cfg;
    if (stemmer == "none") cfg.stemmer = StemmerKind::none;
    else if (stemmer != "porter") throw ContractError("stemmer must be porter or none");
    if (keep_stopwords) cfg.stopwords.clear();
    return cfg;
}

std::unique_ptr<ScorerTransport> scorer_from(const std::string& cmd, const std::string& endpoint)
{
    if (!cmd.empty() && !endpoint.empty()) throw ContractError("give either --scorer-cmd or --scorer-endpoint, not both");
    if (!cmd.empty()) return make_transport(ScorerHandle::command(cmd));
    if (!endpoint.empty()) return make_transport(ScorerHandle::endpoint(endpoint));
    return nullptr;
}

// ---------------------------------------------------------------------------
// Config file: `key = value` lines naming long flags without the dashes.
// Flags given on the command line win.

std::map<std::string, std::string> read_config(const fs::path& file)
{
    std::map<std::string, std::string> out;
    auto in = open_input(file);
    for_each_line(in, [&](std::size_t n, std::string_view line) {
        auto t = trim(line);
        if (t.empty() || t.front() == '#') return;
        auto eq = t.find('=');
        if (eq == std::string_view::npos) throw ContractError("config line " + std::to_string(n) + ": expected key=value");
        auto key = std::string(trim(t.substr(0, eq)));
        while (!key.empty() && key.front() == '-') key.erase(0, 1);
        out[key] = std::string(trim(t.substr(eq + 1)));
    });
    return out;
}

/// Appends `--key=value` for config keys the chosen subcommand understands
/// and the command line does not already set. Multi-valued keys take a
/// comma-separated list.
std::vector<std::string> merge_config(const CLI::App& app, std::vector<std::string> args)
{
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;

    const CLI::App* sub = nullptr;
    for (const auto& a : args)
        if (auto* s = app.get_subcommand_no_throw(a)) {
            sub = s;
            break;
        }
    auto given = [&](const std::string& key) {
        return std::any_of(args.begin(), args.end(), [&](const std::string& a) { return a == "--" + key || a.rfind("--" + key + "=", 0) == 0; });
    };
    // subcommand options go after the subcommand name, global ones before it
    std::vector<std::string> global, local;
    for (const auto& [key, value] : read_config(config_path)) {
        if (key == "config" || given(key)) continue;
        const CLI::Option* opt = sub ? sub->get_option_no_throw("--" + key) : nullptr;
        auto* target = &local;
        if (!opt) {
            opt = app.get_option_no_throw("--" + key);
            target = &global;
        }
        if (!opt) {
            bool known = false;
            for (const auto* s : app.get_subcommands({}))
                if (s->get_option_no_throw("--" + key)) known = true;
            if (!known) throw ContractError("config key is not a known flag: " + key);
            continue;
        }
        if (opt->get_expected_max() > 1) {
            for (auto part : split(value, ','))
                if (!trim(part).empty()) target->push_back("--" + key + "=" + std::string(trim(part)));
        } else {
            target->push_back("--" + key + "=" + value);
        }
    }
    args.insert(args.begin(), global.begin(), global.end());
    args.insert(args.end(), local.begin(), local.end());
    return args;
}

// ---------------------------------------------------------------------------
// Evaluation helpers shared by evaluate and compare

struct EvalColumn {
    MetricSpec spec;
    bool condensed;
    std::string label() const { return spec.label() + (condensed ? " judged" : ""); }
    std::string suffix() const { return condensed ? "_judged" : ""; }
};

std::vector<EvalColumn> eval_columns(const std::string& metrics, const std::string& condensed)
{
    auto specs = parse_metric_list(metrics);
    std::vector<bool> modes;
    if (condensed == "no") modes = {false};
    else if (condensed == "yes") modes = {true};
    else if (condensed == "both") modes = {false, true};
    else throw ContractError("--condensed must be no, yes or both");
    std::vector<EvalColumn> cols;
    for (bool m : modes)
        for (const auto& s : specs) cols.push_back({s, m});
    return cols;
}

std::vector<MetricReport> evaluate_columns(const Run& run, const QrelSet& qrels, const std::vector<EvalColumn>& cols)
{
    std::optional<Run> condensed;
    std::vector<MetricReport> out;
    for (const auto& c : cols) {
        if (c.condensed && !condensed) condensed = condense(run, qrels);
        out.push_back(evaluate(c.condensed ? *condensed : run, qrels, c.spec));
    }
    return out;
}

std::string run_name(const fs::path& p, const Run& r) { return r.tag.empty() ? p.filename().string() : r.tag; }

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"medrank: date-filtered BM25 retrieval, re-ranking, fusion and evaluation"};
    app.name("medrank");
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.get_formatter()->column_width(38);

    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    std::string config_file;
    app.add_option("--threads", threads, "Worker threads for parallel stages")->check(CLI::PositiveNumber);
    app.add_option("--config", config_file, "File of key=value lines naming long flags; command-line flags win");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Read CSV metadata (+ optional full-text JSON) into a JSONL corpus");
    fs::path ing_meta, ing_fulltext, ing_out;
    ingest->add_option("--metadata", ing_meta, "Metadata CSV (doc_id/cord_uid, title, abstract, publish_date/publish_time)")->required();
    ingest->add_option("--fulltext-dir", ing_fulltext, "Directory of <doc_id>.json full-text files");
    ingest->add_option("--out", ing_out, "Output corpus JSONL")->required();

    // filter-corpus
    auto* fcorpus = app.add_subcommand("filter-corpus", "Keep documents published on or after the cutoff");
    fs::path fc_in, fc_out;
    std::string fc_cutoff = "2020-01-01";
    bool fc_keep_undated = false;
    fcorpus->add_option("--corpus", fc_in, "Input corpus JSONL")->required();
    fcorpus->add_option("--out", fc_out, "Output corpus JSONL")->required();
    fcorpus->add_option("--cutoff", fc_cutoff, "First admitted date (YYYY-MM-DD); year-only dates compare by year");
    fcorpus->add_flag("--keep-undated", fc_keep_undated, "Keep documents without a publication date");

    // index
    auto* index_cmd = app.add_subcommand("index", "Build a BM25 inverted index");
    fs::path ix_corpus, ix_out;
    std::string ix_field = "full_text", ix_stemmer = "porter";
    bool ix_keep_stop = false;
    index_cmd->add_option("--corpus", ix_corpus, "Corpus JSONL")->required();
    index_cmd->add_option("--field", ix_field, "full_text, abstract or paragraph");
    index_cmd->add_option("--stemmer", ix_stemmer, "porter or none");
    index_cmd->add_flag("--keep-stopwords", ix_keep_stop, "Do not remove stopwords");
    index_cmd->add_option("--out", ix_out, "Index file")->required();

    // search
    auto* search = app.add_subcommand("search", "BM25 first-stage retrieval for a topic set");
    fs::path se_index, se_topics, se_out;
    std::string se_format = "auto", se_field = "question", se_tag = "bm25";
    int se_k = 1000;
    double se_k1 = 0.9, se_b = 0.4;
    search->add_option("--index", se_index, "Index file")->required();
    search->add_option("--topics", se_topics, "Topics (TSV or TREC XML)")->required();
    search->add_option("--topic-format", se_format, "auto, tsv or xml");
    search->add_option("--query-field", se_field, "question, query or query+question");
    search->add_option("--k", se_k, "Results per topic");
    search->add_option("--k1", se_k1, "BM25 k1");
    search->add_option("--b", se_b, "BM25 b");
    search->add_option("--tag", se_tag, "Run tag");
    search->add_option("--out", se_out, "Output run file")->required();

    // filter-queries
    auto* fq = app.add_subcommand("filter-queries", "Keep queries containing a medical lexicon phrase");
    fs::path fq_queries, fq_lexicon, fq_exclusions, fq_out, fq_ids;
    fq->add_option("--queries", fq_queries, "Queries TSV (id<TAB>text)")->required();
    fq->add_option("--lexicon", fq_lexicon, "Lexicon, one phrase per line")->required();
    fq->add_option("--exclusions", fq_exclusions, "Exclusion terms, one per line (default: built-in seven terms)");
    fq->add_option("--out", fq_out, "Kept queries TSV");
    fq->add_option("--id-list", fq_ids, "Kept query ids, one per line, ascending");

    // make-training
    auto* mt = app.add_subcommand("make-training", "Emit query/positive/negative training text and a validation bundle");
    fs::path mt_pairs, mt_ids, mt_passages, mt_queries, mt_out, mt_val_queries, mt_val_qrels, mt_val_dir;
    int mt_val_depth = 20, mt_val_count = 200;
    mt->add_option("--pairs", mt_pairs, "Training pair list (qid<TAB>pos_id<TAB>neg_id)")->required();
    mt->add_option("--med-ids", mt_ids, "Allowed query ids, one per line")->required();
    mt->add_option("--passages", mt_passages, "Passage collection TSV (id<TAB>text)")->required();
    mt->add_option("--queries", mt_queries, "Training queries TSV (id<TAB>text)")->required();
    mt->add_option("--out", mt_out, "Training TSV (query<TAB>pos<TAB>neg)")->required();
    mt->add_option("--validation-queries", mt_val_queries, "Held-out queries TSV");
    mt->add_option("--validation-qrels", mt_val_qrels, "Qrels for the held-out queries");
    mt->add_option("--validation-dir", mt_val_dir, "Directory for candidates.run, qrels.txt, pairs.tsv");
    mt->add_option("--validation-depth", mt_val_depth, "BM25 candidates per held-out query");
    mt->add_option("--validation-count", mt_val_count, "Expected number of held-out queries");

    // rerank
    auto* rr = app.add_subcommand("rerank", "Re-score the top of a run with an external scorer");
    fs::path rr_run, rr_topics, rr_corpus, rr_out;
    std::string rr_format = "auto", rr_cmd, rr_endpoint, rr_tag;
    RerankConfig rr_cfg;
    rr->add_option("--run", rr_run, "Input run")->required();
    rr->add_option("--topics", rr_topics, "Topics (TSV or TREC XML)")->required();
    rr->add_option("--topic-format", rr_format, "auto, tsv or xml");
    rr->add_option("--corpus", rr_corpus, "Corpus JSONL")->required();
    rr->add_option("--scorer-cmd", rr_cmd, "Scorer command (pipe protocol, one process per batch)");
    rr->add_option("--scorer-endpoint", rr_endpoint, "Scorer host:port (TCP protocol)");
    rr->add_option("--depth", rr_cfg.depth, "Entries re-scored per topic");
    rr->add_option("--max-query-tokens", rr_cfg.max_query_tokens, "Query truncation (whitespace tokens)");
    rr->add_option("--max-doc-tokens", rr_cfg.max_doc_tokens, "Document truncation (whitespace tokens)");
    rr->add_option("--tag", rr_tag, "Output run tag (default: input tag)");
    rr->add_option("--out", rr_out, "Output run file")->required();

    // fuse
    auto* fuse = app.add_subcommand("fuse", "Reciprocal rank fusion of two or more runs");
    std::vector<fs::path> fu_runs;
    fs::path fu_out;
    double fu_k = 60.0;
    int fu_depth = 1000;
    std::string fu_tag = "rrf";
    fuse->add_option("--run", fu_runs, "Input runs (repeat)")->required()->expected(1, -1);
    fuse->add_option("--rrf-k", fu_k, "RRF constant");
    fuse->add_option("--depth", fu_depth, "Results per topic");
    fuse->add_option("--tag", fu_tag, "Run tag");
    fuse->add_option("--out", fu_out, "Output run file")->required();

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Per-topic and mean metrics for a run");
    fs::path ev_run, ev_qrels, ev_out;
    std::string ev_metrics = "ndcg@10,p@5,p@5f,j@10", ev_condensed = "no";
    ev->add_option("--run", ev_run, "Run file")->required();
    ev->add_option("--qrels", ev_qrels, "Qrels file")->required();
    ev->add_option("--metrics", ev_metrics, "Comma-separated: ndcg@K, p@K, p@Kf (grade 2 only), j@K, mrr@K");
    ev->add_option("--condensed", ev_condensed, "Judged-only evaluation: no, yes or both");
    ev->add_option("--out", ev_out, "Per-topic TSV (metric<TAB>topic<TAB>value)");

    // compare
    auto* cmp = app.add_subcommand("compare", "Metric table with paired t-tests against a reference run");
    fs::path cmp_ref, cmp_qrels;
    std::vector<fs::path> cmp_runs;
    std::string cmp_metrics = "ndcg@10,p@5,p@5f,j@10", cmp_condensed = "both";
    double cmp_alpha = 0.05;
    cmp->add_option("--reference", cmp_ref, "Reference run (the system under test)")->required();
    cmp->add_option("--run", cmp_runs, "Runs to compare against (repeat)")->required()->expected(1, -1);
    cmp->add_option("--qrels", cmp_qrels, "Qrels file")->required();
    cmp->add_option("--metrics", cmp_metrics, "Metrics, as for evaluate");
    cmp->add_option("--condensed", cmp_condensed, "no, yes or both");
    cmp->add_option("--alpha", cmp_alpha, "Significance level after Bonferroni correction");

    // pipeline
    auto* pl = app.add_subcommand("pipeline", "Date filter, full-text BM25, abstract re-rank, run file");
    fs::path pl_corpus, pl_topics, pl_qrels, pl_out, pl_first_out;
    std::string pl_format = "auto", pl_cutoff = "2020-01-01", pl_cmd, pl_endpoint, pl_field = "question", pl_tag = "zeroshot";
    bool pl_no_filter = false, pl_keep_undated = false, pl_no_rerank = false;
    ZeroShotConfig pl_cfg;
    pl->add_option("--corpus", pl_corpus, "Corpus JSONL")->required();
    pl->add_option("--topics", pl_topics, "Topics (TSV or TREC XML)")->required();
    pl->add_option("--topic-format", pl_format, "auto, tsv or xml");
    pl->add_option("--qrels", pl_qrels, "Qrels; when given, metrics are printed");
    pl->add_flag("--no-date-filter", pl_no_filter, "Skip the publication-date filter");
    pl->add_option("--cutoff", pl_cutoff, "First admitted publication date");
    pl->add_flag("--keep-undated", pl_keep_undated, "Keep documents without a publication date");
    pl->add_option("--first-stage-depth", pl_cfg.first_stage_depth, "BM25 results per topic");
    pl->add_option("--k1", pl_cfg.bm25.k1, "BM25 k1");
    pl->add_option("--b", pl_cfg.bm25.b, "BM25 b");
    pl->add_option("--query-field", pl_field, "question, query or query+question");
    pl->add_option("--scorer-cmd", pl_cmd, "Scorer command (pipe protocol)");
    pl->add_option("--scorer-endpoint", pl_endpoint, "Scorer host:port (TCP protocol)");
    pl->add_flag("--no-rerank", pl_no_rerank, "Stop after BM25 even if a scorer is given");
    pl->add_option("--depth", pl_cfg.rerank.depth, "Entries re-scored per topic");
    pl->add_option("--max-query-tokens", pl_cfg.rerank.max_query_tokens, "Query truncation (whitespace tokens)");
    pl->add_option("--max-doc-tokens", pl_cfg.rerank.max_doc_tokens, "Document truncation (whitespace tokens)");
    pl->add_option("--tag", pl_tag, "Run tag");
    pl->add_option("--out", pl_out, "Output run file")->required();
    pl->add_option("--first-stage-out", pl_first_out, "Also write the BM25 run here");

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = merge_config(app, std::move(args));
        std::reverse(args.begin(), args.end());  // CLI11 consumes the vector from the back
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ContractError& e) {
        log_line(e.what());
        return 2;
    }

    default_threads() = threads;
    warning_handler() = [](std::string_view msg) { std::cerr << "medrank: warning: " << msg << '\n'; };

    try {
        if (*ingest) {
            std::optional<fs::path> ft;
            if (!ing_fulltext.empty()) ft = ing_fulltext;
            auto result = parse_corpus(ing_meta, ft, threads);
            write_jsonl(result.documents, ing_out);
            log_line("ingested " + std::to_string(result.documents.size()) + " of " + std::to_string(result.stats.rows) +
                " rows (" + std::to_string(result.stats.skipped) + " skipped, " + std::to_string(result.stats.with_fulltext) +
                " with full text)");
        } else if (*fcorpus) {
            DateFilterPolicy policy{parse_cutoff(fc_cutoff), fc_keep_undated};
            auto result = filter_by_date(read_jsonl(fc_in), policy);
            write_jsonl(result.kept, fc_out);
            log_line("kept " + std::to_string(result.stats.kept) + ", dropped " + std::to_string(result.stats.dropped) + " (" +
                std::to_string(result.stats.undated) + " undated)");
        } else if (*index_cmd) {
            auto index = build_index(read_jsonl(ix_corpus), parse_index_field(ix_field), tokenization(ix_stemmer, ix_keep_stop), threads);
            save_index(index, ix_out);
            log_line("indexed " + std::to_string(index.doc_count()) + " units, " + std::to_string(index.postings.size()) + " terms");
        } else if (*search) {
            auto index = load_index(se_index);
            auto topics = parse_topics(se_topics, topic_format(se_format, se_topics));
            auto run = first_stage_run(index, topics, se_k, {se_k1, se_b}, se_tag, parse_query_field(se_field));
            write_run(run, se_out);
        } else if (*fq) {
            std::optional<fs::path> ex;
            if (!fq_exclusions.empty()) ex = fq_exclusions;
            auto lex = load_lexicon(fq_lexicon, ex);
            auto result = filter_queries(read_queries_tsv(fq_queries), lex, threads);
            if (fq_out.empty() && fq_ids.empty()) throw ContractError("filter-queries needs --out and/or --id-list");
            if (!fq_out.empty()) {
                auto out = open_output(fq_out);
                write_queries_tsv(result.kept, out);
            }
            if (!fq_ids.empty()) {
                auto out = open_output(fq_ids);
                emit_query_id_list(result.kept, out);
            }
            char pct[32];
            std::snprintf(pct, sizeof pct, "%.2f%%", 100.0 * result.stats.retention());
            log_line("kept " + std::to_string(result.stats.kept) + " of " + std::to_string(result.stats.input) + " queries (" + pct + ")");
        } else if (*mt) {
            auto id_in = open_input(mt_ids);
            auto med_ids = read_id_list(id_in);
            auto passages = read_text_table(mt_passages);
            auto queries = read_text_table(mt_queries);
            auto pairs_in = open_input(mt_pairs);
            auto out = open_output(mt_out);
            auto stats = sample_pairs(pairs_in, med_ids, passages, queries, [&](const TrainTriple& t) { write_training_line(t, out); });
            log_line("wrote " + std::to_string(stats.emitted) + " triples from " + std::to_string(stats.rows) + " rows (" +
                std::to_string(stats.skipped) + " outside the id set, " + std::to_string(stats.degenerate) + " identical pos/neg)");
            bool any_val = !mt_val_queries.empty() || !mt_val_qrels.empty() || !mt_val_dir.empty();
            if (any_val) {
                if (mt_val_queries.empty() || mt_val_qrels.empty() || mt_val_dir.empty())
                    throw ContractError("validation needs --validation-queries, --validation-qrels and --validation-dir");
                std::vector<Document> docs;
                docs.reserve(passages.size());
                for (const auto& [id, text] : passages) {
                    Document d;
                    d.doc_id = id;
                    d.abstract = text;
                    docs.push_back(std::move(d));
                }
                std::sort(docs.begin(), docs.end(), [](const Document& a, const Document& b) { return IdLess{}(a.doc_id, b.doc_id); });
                auto index = build_index(docs, IndexField::abstract, TokenizationConfig{}, threads);
                ValidationConfig vcfg;
                vcfg.rerank_depth = mt_val_depth;
                vcfg.held_out_queries = mt_val_count;
                auto bundle = make_validation_set(read_queries_tsv(mt_val_queries), index, parse_qrels(mt_val_qrels), vcfg);
                fs::create_directories(mt_val_dir);
                auto lookup = by_id(std::move(docs));
                write_validation_bundle(bundle, lookup_in(lookup), mt_val_dir);
            }
        } else if (*rr) {
            auto scorer = scorer_from(rr_cmd, rr_endpoint);
            if (!scorer) throw ContractError("rerank needs --scorer-cmd or --scorer-endpoint");
            auto run = read_run(rr_run);
            auto topics = parse_topics(rr_topics, topic_format(rr_format, rr_topics));
            auto docs = by_id(read_jsonl(rr_corpus));
            rr_cfg.output_tag = rr_tag;
            write_run(rerank(run, topics, lookup_in(docs), *scorer, rr_cfg), rr_out);
        } else if (*fuse) {
            if (fu_runs.size() < 2) throw ContractError("fuse needs at least two --run files");
            std::vector<Run> runs;
            for (const auto& p : fu_runs) runs.push_back(read_run(p));
            write_run(rrf_fuse(runs, {fu_k}, fu_depth, fu_tag), fu_out);
        } else if (*ev) {
            auto run = read_run(ev_run);
            auto qrels = parse_qrels(ev_qrels);
            auto cols = eval_columns(ev_metrics, ev_condensed);
            auto reports = evaluate_columns(run, qrels, cols);
            std::vector<std::vector<std::string>> rows(2);
            rows[0].push_back("run");
            rows[1].push_back(run_name(ev_run, run));
            for (std::size_t i = 0; i < cols.size(); ++i) {
                rows[0].push_back(cols[i].label());
                rows[1].push_back(format_value(reports[i].mean));
            }
            write_aligned_table(rows, std::cout);
            if (!ev_out.empty()) {
                auto out = open_output(ev_out);
                for (std::size_t i = 0; i < cols.size(); ++i) write_report_tsv(reports[i], out, cols[i].suffix());
            }
        } else if (*cmp) {
            auto qrels = parse_qrels(cmp_qrels);
            auto cols = eval_columns(cmp_metrics, cmp_condensed);
            auto ref = read_run(cmp_ref);
            auto ref_reports = evaluate_columns(ref, qrels, cols);
            const int m = static_cast<int>(cmp_runs.size());
            std::vector<std::vector<std::string>> rows(1);
            rows[0].push_back("run");
            for (const auto& c : cols) rows[0].push_back(c.label());
            for (const auto& path : cmp_runs) {
                auto run = read_run(path);
                auto reports = evaluate_columns(run, qrels, cols);
                std::vector<std::string> row{run_name(path, run)};
                for (std::size_t i = 0; i < cols.size(); ++i) {
                    auto t = paired_t_test(ref_reports[i].per_topic, reports[i].per_topic);
                    bool better = t.t > 0 && bonferroni(t.p_value, m) < cmp_alpha;
                    row.push_back(format_value(reports[i].mean) + (better ? "*" : " "));
                }
                rows.push_back(std::move(row));
            }
            std::vector<std::string> last{run_name(cmp_ref, ref)};
            for (const auto& r : ref_reports) last.push_back(format_value(r.mean) + " ");
            rows.push_back(std::move(last));
            write_aligned_table(rows, std::cout);
            std::cout << "* reference significantly better (paired t-test, Bonferroni m=" << m << ", p < " << cmp_alpha << ")\n";
        } else if (*pl) {
            pl_cfg.date_filter = !pl_no_filter;
            pl_cfg.date_policy = {parse_cutoff(pl_cutoff), pl_keep_undated};
            pl_cfg.query_field = parse_query_field(pl_field);
            pl_cfg.tag = pl_tag;
            pl_cfg.threads = threads;
            auto topics = parse_topics(pl_topics, topic_format(pl_format, pl_topics));
            std::unique_ptr<ScorerTransport> scorer;
            if (!pl_no_rerank) scorer = scorer_from(pl_cmd, pl_endpoint);
            if (!scorer) log_line("no scorer given; writing the BM25 run");
            auto result = run_zero_shot_pipeline(read_jsonl(pl_corpus), topics, scorer.get(), pl_cfg);
            write_run(result.final_run, pl_out);
            if (!pl_first_out.empty()) write_run(result.first_stage, pl_first_out);
            if (pl_cfg.date_filter)
                log_line("date filter kept " + std::to_string(result.filter_stats.kept) + ", dropped " +
                    std::to_string(result.filter_stats.dropped));
            if (!pl_qrels.empty()) {
                auto qrels = parse_qrels(pl_qrels);
                auto cols = eval_columns("ndcg@10,p@5,p@5f,j@10", "no");
                auto reports = evaluate_columns(result.final_run, qrels, cols);
                std::vector<std::vector<std::string>> rows{{"run"}, {pl_tag}};
                for (std::size_t i = 0; i < cols.size(); ++i) {
                    rows[0].push_back(cols[i].label());
                    rows[1].push_back(format_value(reports[i].mean));
                }
                write_aligned_table(rows, std::cout);
            }
        }
    } catch (const ContractError& e) {
        log_line(e.what());
        return 2;
    } catch (const std::exception& e) {
        log_line(e.what());
        return 1;
    }
    return 0;
}
