#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace causalsem {

// Base for every error raised by the library. The CLI maps subclasses onto
// exit codes, so keep the hierarchy flat.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GraphError : public Error {
public:
    using Error::Error;
};

// Query refers to a node that is not in the graph, or is otherwise ill-posed.
class InvalidQuery : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class TokenizeError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// A malformed record in a line-oriented file. line is 1-based.
class RecordError : public Error {
public:
    RecordError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ModelFormatError : public Error {
public:
    using Error::Error;
};

} // namespace causalsem
