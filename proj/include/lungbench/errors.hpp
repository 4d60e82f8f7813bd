#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lungbench {

// Bad user input (files, flags, schema violations). CLI maps this to exit 2.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Broken internal contract. CLI maps this to exit 3.
class InvariantError : public std::logic_error {
public:
    explicit InvariantError(const std::string& msg) : std::logic_error(msg) {}
};

// Input error tied to a specific line of a delimited-text file.
class ParseError : public InputError {
public:
    ParseError(std::size_t line, std::string column, const std::string& msg)
        : InputError("line " + std::to_string(line) +
                     (column.empty() ? "" : ", column '" + column + "'") + ": " + msg),
          line_(line),
          column_(std::move(column)) {}

    std::size_t line() const { return line_; }
    const std::string& column() const { return column_; }

private:
    std::size_t line_;
    std::string column_;
};

}  // namespace lungbench
