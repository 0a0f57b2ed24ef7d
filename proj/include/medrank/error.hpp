#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace medrank {

/// Input file content that cannot be parsed. Carries the 1-based line number
/// when one is known (0 otherwise).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what)
        , line_(line)
    {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A caller broke a stage contract (bad parameter, unresolvable id,
/// mismatched inputs). The CLI maps this to a usage exit code.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The scorer process or socket failed underneath us.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The scorer answered, but not according to the wire protocol.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Persisted artifact written by an incompatible version.
class FormatVersionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace medrank
