#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace medrank::csv {

/// Minimal RFC 4180 record reader: comma separated, double-quote quoting,
/// doubled quotes as escapes, quoted fields may span lines.
class Reader {
public:
    explicit Reader(std::istream& in)
        : in_(in)
    {}

    /// Next record, or nullopt at end of input. An unterminated quote at
    /// end of input yields the partial record with malformed() set.
    std::optional<std::vector<std::string>> next()
    {
        malformed_ = false;
        std::vector<std::string> fields;
        std::string field;
        bool quoted = false;
        bool any = false;
        record_line_ = line_ + 1;
        for (int ch; (ch = in_.get()) != std::char_traits<char>::eof();) {
            any = true;
            char c = static_cast<char>(ch);
            if (quoted) {
                if (c == '"') {
                    if (in_.peek() == '"') {
                        in_.get();
                        field += '"';
                    } else {
                        quoted = false;
                    }
                } else {
                    if (c == '\n') ++line_;
                    field += c;
                }
                continue;
            }
            switch (c) {
            case '"':
                quoted = true;
                break;
            case ',':
                fields.push_back(std::move(field));
                field.clear();
                break;
            case '\r':
                break;
            case '\n':
                ++line_;
                fields.push_back(std::move(field));
                return fields;
            default:
                field += c;
            }
        }
        if (!any) return std::nullopt;
        if (quoted) malformed_ = true;
        fields.push_back(std::move(field));
        return fields;
    }

    bool malformed() const noexcept { return malformed_; }
    /// 1-based line on which the last returned record started.
    std::size_t record_line() const noexcept { return record_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
    std::size_t record_line_ = 0;
    bool malformed_ = false;
};

}  // namespace medrank::csv
