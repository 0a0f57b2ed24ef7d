#pragma once

#include <chrono>
#include <cstdio>
#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include "json.hpp"

#include "medrank/csv.hpp"
#include "medrank/error.hpp"
#include "medrank/util.hpp"

namespace medrank {

// ---------------------------------------------------------------------------
// Publication dates

/// A publication date as found in article metadata: a full calendar date,
/// only a year, or nothing at all.
class PublishDate {
public:
    PublishDate() = default;
    static PublishDate full(std::chrono::year_month_day ymd) { return PublishDate(ymd); }
    static PublishDate year_only(std::chrono::year y) { return PublishDate(y); }

    /// "YYYY-MM-DD" (valid calendar date) or "YYYY"; anything else is absent.
    static PublishDate parse(std::string_view text)
    {
        text = trim(text);
        auto digits = [](std::string_view s, std::size_t n) { return s.size() == n && all_digits(s); };
        if (digits(text, 4)) return year_only(std::chrono::year{*parse_int<int>(text)});
        if (text.size() == 10 && text[4] == '-' && text[7] == '-' && digits(text.substr(0, 4), 4) &&
            digits(text.substr(5, 2), 2) && digits(text.substr(8, 2), 2)) {
            std::chrono::year_month_day ymd{std::chrono::year{*parse_int<int>(text.substr(0, 4))},
                std::chrono::month{*parse_int<unsigned>(text.substr(5, 2))},
                std::chrono::day{*parse_int<unsigned>(text.substr(8, 2))}};
            if (ymd.ok()) return full(ymd);
        }
        return {};
    }

    bool is_full() const { return std::holds_alternative<std::chrono::year_month_day>(value_); }
    bool is_year_only() const { return std::holds_alternative<std::chrono::year>(value_); }
    bool is_absent() const { return std::holds_alternative<std::monostate>(value_); }

    std::chrono::year_month_day date() const { return std::get<std::chrono::year_month_day>(value_); }
    std::chrono::year year() const
    {
        if (is_full()) return date().year();
        return std::get<std::chrono::year>(value_);
    }

    /// Canonical text form; empty when absent.
    std::string to_string() const
    {
        char buf[16];
        if (is_full()) {
            auto d = date();
            std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
            return buf;
        }
        if (is_year_only()) {
            std::snprintf(buf, sizeof buf, "%04d", static_cast<int>(year()));
            return buf;
        }
        return {};
    }

    friend bool operator==(const PublishDate&, const PublishDate&) = default;

private:
    explicit PublishDate(std::chrono::year_month_day d)
        : value_(d)
    {}
    explicit PublishDate(std::chrono::year y)
        : value_(y)
    {}

    std::variant<std::monostate, std::chrono::year_month_day, std::chrono::year> value_;
};

// ---------------------------------------------------------------------------
// Documents

struct Document {
    std::string doc_id;
    std::string title;
    std::string abstract;
    std::vector<std::string> paragraphs;
    PublishDate publish_date;
    std::map<std::string, std::string> extra;

    friend bool operator==(const Document&, const Document&) = default;
};

inline nlohmann::json to_json(const Document& doc)
{
    nlohmann::json j;
    j["doc_id"] = doc.doc_id;
    j["title"] = doc.title;
    j["abstract"] = doc.abstract;
    j["paragraphs"] = doc.paragraphs;
    if (doc.publish_date.is_absent())
        j["publish_date"] = nullptr;
    else
        j["publish_date"] = doc.publish_date.to_string();
    j["extra"] = doc.extra;
    return j;
}

inline Document document_from_json(const nlohmann::json& j)
{
    Document doc;
    doc.doc_id = j.at("doc_id").get<std::string>();
    if (doc.doc_id.empty()) throw ContractError("document with empty doc_id");
    doc.title = j.value("title", "");
    doc.abstract = j.value("abstract", "");
    if (auto it = j.find("paragraphs"); it != j.end() && !it->is_null())
        doc.paragraphs = it->get<std::vector<std::string>>();
    if (auto it = j.find("publish_date"); it != j.end() && it->is_string())
        doc.publish_date = PublishDate::parse(it->get<std::string>());
    if (auto it = j.find("extra"); it != j.end() && it->is_object())
        doc.extra = it->get<std::map<std::string, std::string>>();
    return doc;
}

inline void write_jsonl(const std::vector<Document>& docs, std::ostream& out)
{
    for (const auto& d : docs) out << to_json(d).dump() << '\n';
}

inline void write_jsonl(const std::vector<Document>& docs, const std::filesystem::path& path)
{
    auto out = open_output(path);
    write_jsonl(docs, out);
}

inline std::vector<Document> read_jsonl(std::istream& in)
{
    std::vector<Document> docs;
    std::unordered_set<std::string> seen;
    for_each_line(in, [&](std::size_t n, std::string_view line) {
        if (trim(line).empty()) return;
        try {
            docs.push_back(document_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(e.what(), n);
        } catch (const ContractError& e) {
            throw ParseError(e.what(), n);
        }
        if (!seen.insert(docs.back().doc_id).second) throw ParseError("duplicate doc_id " + docs.back().doc_id, n);
    });
    return docs;
}

inline std::vector<Document> read_jsonl(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_jsonl(in);
}

// ---------------------------------------------------------------------------
// Ingestion from CSV metadata

struct IngestStats {
    std::size_t rows = 0;
    std::size_t skipped = 0;
    std::size_t with_fulltext = 0;
};

struct IngestResult {
    std::vector<Document> documents;
    IngestStats stats;
};

namespace detail {

inline std::optional<std::size_t> find_column(const std::vector<std::string>& header, std::initializer_list<std::string_view> names)
{
    for (auto name : names)
        for (std::size_t i = 0; i < header.size(); ++i)
            if (ascii_lower(trim(header[i])) == name) return i;
    return std::nullopt;
}

inline std::vector<std::string> load_fulltext(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) return {};
    std::vector<std::string> paragraphs;
    try {
        auto j = nlohmann::json::parse(in);
        if (auto it = j.find("body_text"); it != j.end() && it->is_array()) {
            for (const auto& p : *it)
                if (p.is_object() && p.contains("text")) paragraphs.push_back(p["text"].get<std::string>());
        } else if (auto pit = j.find("paragraphs"); pit != j.end() && pit->is_array()) {
            for (const auto& p : *pit) paragraphs.push_back(p.get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        warn("unreadable full text " + file.string() + ": " + e.what());
        return {};
    }
    return paragraphs;
}

}  // namespace detail

/// Reads a metadata CSV (header row required) and, when given, per-article
/// full-text JSON files named `<doc_id>.json`. Output order equals row order.
inline IngestResult parse_corpus(std::istream& metadata, const std::optional<std::filesystem::path>& fulltext_dir = {},
    unsigned threads = default_threads())
{
    csv::Reader reader(metadata);
    auto header = reader.next();
    if (!header) throw ContractError("metadata file is empty (no header row)");

    auto require = [&](std::string_view canonical, std::initializer_list<std::string_view> names) {
        auto col = detail::find_column(*header, names);
        if (!col) throw ContractError("metadata header is missing required column: " + std::string(canonical));
        return *col;
    };
    const auto id_col = require("doc_id", {"doc_id", "cord_uid", "id"});
    const auto title_col = require("title", {"title"});
    const auto abstract_col = require("abstract", {"abstract"});
    const auto date_col = require("publish_date", {"publish_date", "publish_time", "date"});

    IngestResult result;
    std::unordered_set<std::string> seen;
    while (auto row = reader.next()) {
        if (row->size() == 1 && trim((*row)[0]).empty()) continue;  // blank line
        ++result.stats.rows;
        if (reader.malformed() || row->size() != header->size()) {
            ++result.stats.skipped;
            continue;
        }
        Document doc;
        doc.doc_id = std::string(trim((*row)[id_col]));
        if (doc.doc_id.empty() || !seen.insert(doc.doc_id).second) {
            ++result.stats.skipped;
            continue;
        }
        doc.title = std::string(trim((*row)[title_col]));
        doc.abstract = std::string(trim((*row)[abstract_col]));
        doc.publish_date = PublishDate::parse((*row)[date_col]);
        for (std::size_t i = 0; i < header->size(); ++i) {
            if (i == id_col || i == title_col || i == abstract_col || i == date_col) continue;
            if (!(*row)[i].empty()) doc.extra[std::string(trim((*header)[i]))] = (*row)[i];
        }
        result.documents.push_back(std::move(doc));
    }

    if (fulltext_dir) {
        parallel_for(result.documents.size(), threads, [&](std::size_t i) {
            auto& doc = result.documents[i];
            doc.paragraphs = detail::load_fulltext(*fulltext_dir / (doc.doc_id + ".json"));
        });
        for (const auto& d : result.documents)
            if (!d.paragraphs.empty()) ++result.stats.with_fulltext;
    }
    return result;
}

inline IngestResult parse_corpus(const std::filesystem::path& metadata_file,
    const std::optional<std::filesystem::path>& fulltext_dir = {}, unsigned threads = default_threads())
{
    auto in = open_input(metadata_file);
    return parse_corpus(in, fulltext_dir, threads);
}

// ---------------------------------------------------------------------------
// Publication-date filter

struct DateFilterPolicy {
    std::chrono::year_month_day cutoff{std::chrono::year{2020}, std::chrono::January, std::chrono::day{1}};
    bool keep_undated = false;

    void validate() const
    {
        if (!cutoff.ok()) throw ContractError("date filter cutoff is not a valid calendar date");
    }

    bool keeps(const PublishDate& date) const
    {
        if (date.is_full()) return date.date() >= cutoff;
        if (date.is_year_only()) return date.year() >= cutoff.year();
        return keep_undated;
    }
};

struct FilterStats {
    std::size_t kept = 0;
    std::size_t dropped = 0;
    std::size_t undated = 0;
};

struct FilterResult {
    std::vector<Document> kept;
    FilterStats stats;
};

inline FilterResult filter_by_date(std::vector<Document> docs, const DateFilterPolicy& policy)
{
    policy.validate();
    FilterResult result;
    for (auto& d : docs) {
        if (d.publish_date.is_absent()) ++result.stats.undated;
        if (policy.keeps(d.publish_date)) {
            result.kept.push_back(std::move(d));
            ++result.stats.kept;
        } else {
            ++result.stats.dropped;
        }
    }
    return result;
}

}  // namespace medrank
