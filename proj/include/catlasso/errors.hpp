#pragma once

#include <stdexcept>
#include <string>

namespace catlasso {

/// Mismatched dimensions between inputs (row counts, vector lengths).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A coding scheme was requested for a variable with fewer than two levels.
class ArityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A linear constraint (e.g. sum-to-zero) is violated beyond tolerance.
class ConstraintError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A level with zero observations where standardization needs n_l >= 1.
class EmptyLevelError : public std::invalid_argument {
public:
    EmptyLevelError(const std::string& what, int level)
        : std::invalid_argument(what), level_(level) {}
    int level() const { return level_; }

private:
    int level_;
};

/// An empty cell in a two-way cross tabulation.
class EmptyCellError : public std::invalid_argument {
public:
    EmptyCellError(const std::string& what, int row_level, int col_level)
        : std::invalid_argument(what), row_(row_level), col_(col_level) {}
    int row_level() const { return row_; }
    int col_level() const { return col_; }

private:
    int row_;
    int col_;
};

/// Numerical failure (e.g. a radicand far below zero).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace catlasso
