#pragma once

#include <stdexcept>
#include <string>

namespace modescope {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments: non-finite coordinates, dimension mismatch, bad index.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A configuration value outside its admissible range (e.g. an angle that
/// reaches pi/2 for the chosen constants).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Too few observations to form a statistic.
class InsufficientData : public Error {
public:
    using Error::Error;
};

/// Tied projected distances at the endpoints of a subsection.
class DegenerateScale : public Error {
public:
    using Error::Error;
};

/// A missing or contradictory command-line option.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Input file problems. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace modescope
