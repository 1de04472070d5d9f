#pragma once

#include <stdexcept>
#include <string>

namespace brwlab {

// Every failure raised by the library derives from Error so that the CLI can
// map it onto the "operational error" exit code in one place.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnsupportedDimensionError : public Error {
public:
    explicit UnsupportedDimensionError(int dim)
        : Error("unsupported dimension " + std::to_string(dim) + " (expected 3, 4 or 5)"), dim_(dim) {}
    int dim() const noexcept { return dim_; }

private:
    int dim_;
};

class OutOfTableError : public Error {
public:
    using Error::Error;
};

class SingularityError : public Error {
public:
    using Error::Error;
};

class CacheError : public Error {
public:
    using Error::Error;
};

class CodecError : public Error {
public:
    using Error::Error;
};

class AdmissibilityError : public Error {
public:
    using Error::Error;
};

class BudgetError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual) : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class FitError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0, int column = 0)
        : Error(line > 0 ? what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"
                         : what),
          line_(line),
          column_(column) {}
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

}  // namespace brwlab
