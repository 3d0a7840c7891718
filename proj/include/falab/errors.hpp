#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace falab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on shapes or values was violated by the caller.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Malformed configuration document or command line.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// A line of a data file could not be parsed.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A data row has the wrong number of fields.
class SchemaError : public Error {
public:
    SchemaError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A data file contained a header but no rows (or nothing at all).
class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

/// cos(b, beta) requested with a zero vector.
class UndefinedAlignment : public Error {
public:
    using Error::Error;
};

} // namespace falab
