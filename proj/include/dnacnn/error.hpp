#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dnacnn {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor or vector shapes disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A kernel would produce an empty output (e.g. input shorter than the window).
class EmptyOutputError : public DimensionError {
public:
    using DimensionError::DimensionError;
};

/// Input values violate a documented precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Configuration is inconsistent (e.g. batch not divisible by replicas).
class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Malformed text input. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class EncodeError : public ValidationError {
public:
    EncodeError(const std::string& what, std::size_t position)
        : ValidationError(what), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class PlacementError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

/// Collective participants disagree or a peer never showed up.
class ProtocolError : public Error {
public:
    using Error::Error;
};

class InternalError : public Error {
public:
    using Error::Error;
};

/// Non-finite gradient or loss.
class DivergedError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace dnacnn
