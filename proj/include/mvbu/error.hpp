#pragma once

#include <stdexcept>
#include <string>

namespace mvbu {

// Exit codes used by the command-line front end.
enum class ExitCode : int { Ok = 0, Validation = 2, Numerical = 3, Io = 4 };

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept = 0;
};

/// Bad input: shapes, bounds, malformed configuration.
class ValidationError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::Validation; }
};

/// Solver failure, divergence, NaN, stalled chain.
class NumericalError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::Numerical; }
};

class IoError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::Io; }
};

inline void require(bool cond, const std::string& what)
{
    if (!cond) throw ValidationError(what);
}

} // namespace mvbu
