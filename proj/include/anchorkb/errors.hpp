#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace anchorkb {

// Base class for all library errors that are not plain argument misuse.
// Argument misuse (bad parameter combinations) throws std::invalid_argument.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
};

// Input data violates the documented schema (conversation files, fixture
// payloads, CSV rows, knowledge-base files with missing or mistyped fields).
class SchemaError : public Error {
public:
    using Error::Error;
};

// An operation that requires at least one element received none.
class EmptyInputError : public Error {
public:
    using Error::Error;
};

// A completion could not be parsed into the expected structure. Carries the
// raw text so callers can log or persist it for inspection.
class ExtractionParseError : public Error {
public:
    ExtractionParseError(const std::string& message, std::string raw_text)
        : Error(message), raw(std::move(raw_text)) {}
    std::string raw;
};

// A remote call failed after all retries were exhausted.
class TransportError : public Error {
public:
    TransportError(const std::string& message, int attempts_made)
        : Error(message), attempts(attempts_made) {}
    int attempts = 0;
};

// An operation was invoked in a phase where it is not legal, e.g. saving or
// querying a knowledge base that has not been consolidated.
class StateError : public Error {
public:
    using Error::Error;
};

// Filesystem-level failure: missing file, unreadable directory, write error.
class IoError : public Error {
public:
    using Error::Error;
};

// A persisted knowledge base declares a format major version this build
// does not understand.
class VersionError : public Error {
public:
    using Error::Error;
};

// Cross-file referential integrity failed on load. All broken references are
// collected before throwing so one round of inspection shows every problem.
class ValidationError : public Error {
public:
    ValidationError(const std::string& message, std::vector<std::string> problems)
        : Error(message), broken_references(std::move(problems)) {}
    std::vector<std::string> broken_references;
};

// The regression design matrix is unusable: fewer than three points, or no
// variation in the predictor.
class DegenerateDesignError : public Error {
public:
    using Error::Error;
};

}  // namespace anchorkb
