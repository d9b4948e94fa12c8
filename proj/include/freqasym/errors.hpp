#pragma once

#include <stdexcept>
#include <string>

namespace freqasym {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double worst_residual)
        : Error(what), worst_residual_(worst_residual) {}
    double worst_residual() const noexcept { return worst_residual_; }

private:
    double worst_residual_;
};

class IslandedNetwork : public Error {
public:
    using Error::Error;
};

class NewtonDivergence : public Error {
public:
    NewtonDivergence(const std::string& what, double time)
        : Error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

class NoSynchronousInertia : public Error {
public:
    using Error::Error;
};

class EmptyTrace : public Error {
public:
    EmptyTrace() : Error("frequency trace is empty") {}
};

class ValidationError : public Error {
public:
    using Error::Error;
};

/// Parse failure in a configuration or data file; carries the 1-based line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, std::string field = {})
        : Error(format(what, line, field)), line_(line), field_(std::move(field)) {}
    int line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    static std::string format(const std::string& what, int line, const std::string& field) {
        std::string s = "line " + std::to_string(line);
        if (!field.empty()) s += " field '" + field + "'";
        return s + ": " + what;
    }
    int line_;
    std::string field_;
};

class MalformedRow : public ParseError {
public:
    using ParseError::ParseError;
};

class NonMonotonicTimestamps : public ParseError {
public:
    using ParseError::ParseError;
};

class OutOfRangeFrequency : public ParseError {
public:
    using ParseError::ParseError;
};

class GapPolicyViolation : public ParseError {
public:
    using ParseError::ParseError;
};

class MismatchedNominalFrequency : public Error {
public:
    using Error::Error;
};

} // namespace freqasym
