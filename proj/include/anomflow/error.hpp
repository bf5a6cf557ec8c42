#pragma once

#include <stdexcept>
#include <string>

namespace anomflow {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind { data = 2, config = 3, invariant = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Malformed input bytes (bad JSON record, unparseable CSV row).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class InvariantError : public Error {
public:
    explicit InvariantError(const std::string& what) : Error(ErrorKind::invariant, what) {}
};

}  // namespace anomflow
