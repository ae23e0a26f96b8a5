#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace synthctl {

/// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid invocation: bad config schema, unknown keys, bad parameters.
/// CLI exit code 1.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input data. CLI exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

/// A numerical search failed to converge. CLI exit code 3.
class OptimizerFailure : public Error {
public:
    explicit OptimizerFailure(const std::string& diagnostic)
        : Error("optimizer failure: " + diagnostic) {}
};

// ---------------------------------------------------------------------------
// Data errors carrying the first offending coordinate
// ---------------------------------------------------------------------------

class ParseError : public DataError {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& reason)
        : DataError("parse error at line " + std::to_string(line) + ", column " +
                    std::to_string(column) + ": " + reason),
          line(line),
          column(column),
          reason(reason) {}

    std::size_t line;
    std::size_t column;
    std::string reason;
};

class EmptyInputError : public DataError {
public:
    EmptyInputError() : DataError("input contains no data rows") {}
};

class MissingValueError : public DataError {
public:
    MissingValueError(const std::string& variable, const std::string& unit,
                      const std::string& week)
        : DataError("missing value at (variable=" + variable + ", unit=" + unit +
                    ", week=" + week + ")"),
          variable(variable),
          unit(unit),
          week(week) {}

    std::string variable;
    std::string unit;
    std::string week;
};

class IrregularWeekSpacingError : public DataError {
public:
    IrregularWeekSpacingError(const std::string& week, long gap_days)
        : DataError("irregular week spacing: " + std::to_string(gap_days) +
                    "-day gap before " + week),
          week(week),
          gap_days(gap_days) {}

    std::string week;
    long gap_days;
};

class DuplicateUnitError : public DataError {
public:
    explicit DuplicateUnitError(const std::string& unit)
        : DataError("duplicate unit id: " + unit), unit(unit) {}

    std::string unit;
};

class DuplicateVariableError : public DataError {
public:
    explicit DuplicateVariableError(const std::string& variable)
        : DataError("duplicate variable name: " + variable), variable(variable) {}

    std::string variable;
};

class UnknownUnitError : public DataError {
public:
    explicit UnknownUnitError(const std::string& unit)
        : DataError("unknown unit: " + unit), unit(unit) {}

    std::string unit;
};

class UnknownVariableError : public DataError {
public:
    explicit UnknownVariableError(const std::string& variable)
        : DataError("unknown variable: " + variable), variable(variable) {}

    std::string variable;
};

class TreatedInDonorPoolError : public DataError {
public:
    explicit TreatedInDonorPoolError(const std::string& unit)
        : DataError("treated unit appears in its own donor pool: " + unit),
          unit(unit) {}

    std::string unit;
};

class InsufficientPreWindowError : public DataError {
public:
    explicit InsufficientPreWindowError(std::size_t weeks)
        : DataError("pre-treatment window has " + std::to_string(weeks) +
                    " week(s); at least 2 are required"),
          weeks(weeks) {}

    std::size_t weeks;
};

class NonPositiveBaselinePriceError : public DataError {
public:
    explicit NonPositiveBaselinePriceError(const std::string& context)
        : DataError("baseline price is not strictly positive (" + context + ")") {}
};

class NonPositiveMaximumError : public DataError {
public:
    NonPositiveMaximumError()
        : DataError("series maximum is not strictly positive") {}
};

class LengthMismatchError : public DataError {
public:
    LengthMismatchError(std::size_t lhs, std::size_t rhs)
        : DataError("series length mismatch: " + std::to_string(lhs) + " vs " +
                    std::to_string(rhs)) {}
};

class EmptyWindowError : public DataError {
public:
    explicit EmptyWindowError(const std::string& which)
        : DataError("window is empty: " + which) {}
};

class ZeroPreMspeError : public DataError {
public:
    ZeroPreMspeError()
        : DataError("pre-treatment MSPE is zero; post/pre ratio is undefined") {}
};

}  // namespace synthctl
