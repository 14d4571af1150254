#pragma once

#include <stdexcept>
#include <string>

namespace idxadvis {

/// Root of every error the advisor raises. Subclasses are grouped by the
/// component that raises them so callers can map them onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// SQL / feature extraction
class ParseError : public Error {
public:
    using Error::Error;
};
class UnknownColumn : public Error {
public:
    using Error::Error;
};
class AmbiguousColumn : public Error {
public:
    using Error::Error;
};
class EstimatorUnavailable : public Error {
public:
    using Error::Error;
};
class PredicateError : public Error {
public:
    using Error::Error;
};

// What-if layer
class BackendError : public Error {
public:
    using Error::Error;
};
class DuplicateIndex : public Error {
public:
    using Error::Error;
};
class NotFound : public Error {
public:
    using Error::Error;
};
class ZeroBaseline : public Error {
public:
    using Error::Error;
};

// Demonstrations
class MatchEmpty : public Error {
public:
    using Error::Error;
};
class NoQueriesParsed : public Error {
public:
    using Error::Error;
};

// LLM
class LLMError : public Error {
public:
    using Error::Error;
};
class EmptyCompletion : public LLMError {
public:
    using LLMError::LLMError;
};

// Scaling
class EmptyOptions : public Error {
public:
    using Error::Error;
};

// Configuration and file IO
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace idxadvis
