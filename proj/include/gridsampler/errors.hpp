#ifndef GRIDSAMPLER_ERRORS_HPP
#define GRIDSAMPLER_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gridsampler {

/// Base class for all library errors. The CLI maps subtrees to exit codes:
/// ValidationError -> 1, IoError -> 2, ConsistencyGateError -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data: malformed files, violated invariants, domain errors.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Filesystem-level failure (missing file, unwritable path, lock held).
class IoError : public Error {
public:
    using Error::Error;
};

/// Manually authored judgment matrix failed the CR gate.
class ConsistencyGateError : public Error {
public:
    using Error::Error;
};

/// Iterative eigen computation exhausted its iteration budget.
class NoConvergence : public Error {
public:
    using Error::Error;
};

class OrderOutOfRange : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidOrder : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Every nonconformity rate sits below the smoothing floor; ratio weights
/// would be meaningless noise, so the caller needs more history.
class AllRatesZero : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ZeroStandard : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class MissingRubric : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class MissingReading : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DuplicateItemId : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DuplicateRecord : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class MissingIndicatorHistory : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class BothFormsPresent : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Parse failure with file/line/field location so the defect can be found
/// without re-running.
class ParseError : public ValidationError {
public:
    ParseError(std::string file, long line, std::string field, const std::string& reason)
        : ValidationError(file + ":" + std::to_string(line) + ": field '" + field +
                          "': " + reason),
          file_(std::move(file)),
          line_(line),
          field_(std::move(field)) {}

    const std::string& file() const { return file_; }
    long line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    std::string file_;
    long line_;
    std::string field_;
};

}  // namespace gridsampler

#endif  // GRIDSAMPLER_ERRORS_HPP
