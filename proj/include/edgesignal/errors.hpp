#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace edgesignal {

/// Bad user input: configuration, scenario, frames or log documents.
/// The CLI maps this family to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public InputError {
public:
    using InputError::InputError;
};

/// A document failed to parse; `line` is 1-based, 0 when not line-oriented.
class ParseError : public InputError {
public:
    ParseError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Malformed snapshot handed to the decision engine.
class StructuralError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ClockRegression : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace edgesignal
