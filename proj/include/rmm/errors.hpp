#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rmm {

struct Finding;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed document text. Line and column are 1-based.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : Error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class DanglingRefError : public Error {
public:
    DanglingRefError(std::string id, const std::string& context)
        : Error("dangling reference '" + id + "' (" + context + ")"), id_(std::move(id)) {}

    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

class KindConflictError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class InvalidIdError : public Error {
public:
    using Error::Error;
};

class UnresolvedRefError : public Error {
public:
    using Error::Error;
};

class RevisionMismatchError : public Error {
public:
    using Error::Error;
};

/// Raised by operations that require a model free of Error findings.
class ValidationGateError : public Error {
public:
    ValidationGateError(const std::string& what, std::vector<Finding> findings);
    ~ValidationGateError() override;
    ValidationGateError(const ValidationGateError&);
    ValidationGateError& operator=(const ValidationGateError&);

    const std::vector<Finding>& findings() const noexcept { return findings_; }

private:
    std::vector<Finding> findings_;
};

/// Network or endpoint failure while talking to an external tool.
class TransportError : public Error {
public:
    TransportError(const std::string& what, std::string endpoint)
        : Error(what + " [" + endpoint + "]"), endpoint_(std::move(endpoint)) {}

    const std::string& endpoint() const noexcept { return endpoint_; }

private:
    std::string endpoint_;
};

/// The external copy of an element is newer than ours; nothing was overwritten.
class ConflictError : public Error {
public:
    using Error::Error;
};

}  // namespace rmm
