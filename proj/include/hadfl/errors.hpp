#pragma once

#include <stdexcept>
#include <string>

namespace hadfl {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Rejected input: precondition violation, dimension mismatch, out-of-range value.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Non-finite loss or parameter produced during training.
class NumericError : public Error {
public:
    using Error::Error;
};

// Malformed wire data or a protocol state violation inside a session.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// Experiment configuration problem. `field` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace hadfl
