#pragma once

#include <stdexcept>
#include <string>

namespace tickwarp {

/// Base class for every error raised by the library. The CLI maps these to
/// exit code 1 and prints what().
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (t outside
/// [0, T], dt >= T, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Parameter set that cannot describe a valid activity function.
class InvalidModel : public Error {
public:
    using Error::Error;
};

/// Input data that cannot support the requested computation.
class DataError : public Error {
public:
    using Error::Error;
};

/// Malformed text input (tick rows, tables, config records).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace tickwarp
