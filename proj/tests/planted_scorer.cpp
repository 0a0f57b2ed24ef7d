// Test scorer speaking the pipe protocol on stdin/stdout.
//
//   planted_scorer length                       score = token count of the doc
//   planted_scorer constant                     score = 0
//   planted_scorer grade DOCS TOPICS QRELS      score = judged grade of the pair
//   planted_scorer fault KIND                   misbehaves: unknown-id, duplicate,
//                                               nan, drop-last, exit1, garbage

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "medrank/medrank.hpp"

using namespace medrank;

namespace {

int fault(const std::string& kind)
{
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(std::cin, line)) ids.push_back(line.substr(0, line.find('\t')));
    if (kind == "exit1") return 1;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (kind == "drop-last" && i + 1 == ids.size()) break;
        if (kind == "unknown-id" && i == 0) {
            std::cout << "no-such-pair\t1\n";
            continue;
        }
        if (kind == "nan" && i == 0) {
            std::cout << ids[i] << "\tnan\n";
            continue;
        }
        if (kind == "garbage" && i == 0) {
            std::cout << "garbage line\n";
            continue;
        }
        std::cout << ids[i] << "\t1\n";
        if (kind == "duplicate" && i == 0) std::cout << ids[i] << "\t2\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    std::ios::sync_with_stdio(false);
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty()) {
        std::cerr << "usage: planted_scorer length|constant|grade DOCS TOPICS QRELS|fault KIND\n";
        return 2;
    }
    try {
        const auto& mode = args[0];
        if (mode == "length") {
            serve_stream(std::cin, std::cout, [](const PairRequest& r) { return static_cast<double>(split_ws(r.doc).size()); });
        } else if (mode == "constant") {
            serve_stream(std::cin, std::cout, [](const PairRequest&) { return 0.0; });
        } else if (mode == "grade" && args.size() == 4) {
            auto docs = read_jsonl(std::filesystem::path(args[1]));
            auto topics = parse_topics(args[2], TopicFormat::tsv);
            auto qrels = parse_qrels(std::filesystem::path(args[3]));
            RerankConfig cfg;
            std::map<std::string, std::string> topic_of, doc_of;
            for (const auto& t : topics) topic_of[scorer_query_text(t, cfg)] = t.topic_id;
            for (const auto& d : docs) doc_of[scorer_doc_text(d, cfg)] = d.doc_id;
            serve_stream(std::cin, std::cout, [&](const PairRequest& r) {
                auto t = topic_of.find(r.query);
                auto d = doc_of.find(r.doc);
                if (t == topic_of.end() || d == doc_of.end()) return -1.0;
                return static_cast<double>(std::max(0, qrels.grade(t->second, d->second)));
            });
        } else if (mode == "fault" && args.size() == 2) {
            return fault(args[1]);
        } else {
            std::cerr << "planted_scorer: bad arguments\n";
            return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "planted_scorer: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
