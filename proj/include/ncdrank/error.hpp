#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ncd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Arguments that violate an operation's contract (bad lengths, weights, indices).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// NaN/Inf produced, or a singular system where a solution was required.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace ncd
