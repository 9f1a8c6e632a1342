#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lmx {

// Base for everything thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Formula text could not be parsed; carries the byte offset of the problem.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : Error(msg + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

// Malformed or unusable input data (ragged CSV, empty frame, ...).
class DataError : public Error {
public:
    using Error::Error;
};

// A column has the wrong kind for the requested operation.
class TypeError : public Error {
public:
    using Error::Error;
};

// Value outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

// Design matrix is rank deficient; names the offending column.
class SingularDesignError : public Error {
public:
    explicit SingularDesignError(const std::string& column)
        : Error("singular design: column '" + column + "' is linearly dependent"),
          column_(column) {}
    const std::string& column() const { return column_; }

private:
    std::string column_;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

// Optimizer failed to converge; carries the best parameter vector seen.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, std::vector<double> best_theta)
        : Error(msg), best_theta_(std::move(best_theta)) {}
    const std::vector<double>& best_theta() const { return best_theta_; }

private:
    std::vector<double> best_theta_;
};

}  // namespace lmx
