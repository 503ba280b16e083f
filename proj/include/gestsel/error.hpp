#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gestsel {

enum class ErrorKind {
    Parse,
    Validation,
    Io,
    EmptyCorpus,
    UnknownTarget,
    InsufficientExamples,
    InvalidPlan,
    MissingGestureLabel,
    EmptyDescriptor,
    Transport,
    RateLimited,
    CacheMiss,
    ProviderRefusal,
    DimensionMismatch,
    ZeroVector,
    MissingTarget,
    WrongLevel,
    EmptyRun,
    DuplicateFinalLabel,
    EmptyDictionary,
    Config,
    ManifestCorrupt,
    PortInUse,
    Usage,
};

std::string_view error_kind_name(ErrorKind kind);

// Distinct process exit code per error class; Usage is always 2.
int exit_code_for(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::string_view kind_name() const { return error_kind_name(kind_); }

private:
    ErrorKind kind_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& message, long line, long record)
        : Error(ErrorKind::Parse, message), line_(line), record_(record) {}

    /// 1-based line in the source document, or -1 when unknown.
    long line() const noexcept { return line_; }
    /// 0-based record index, or -1 when the failure is outside a record.
    long record() const noexcept { return record_; }

private:
    long line_;
    long record_;
};

class ValidationError : public Error {
public:
    ValidationError(const std::string& id, const std::string& field, const std::string& message)
        : Error(ErrorKind::Validation, id + ": " + field + ": " + message), id_(id), field_(field) {}

    const std::string& id() const noexcept { return id_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::string id_;
    std::string field_;
};

class RateLimitedError : public Error {
public:
    RateLimitedError(const std::string& message, double retry_after_seconds)
        : Error(ErrorKind::RateLimited, message), retry_after_(retry_after_seconds) {}

    /// Seconds suggested by the provider, negative when not supplied.
    double retry_after() const noexcept { return retry_after_; }

private:
    double retry_after_;
};

}  // namespace gestsel
