#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "catlasso/design.hpp"

namespace catlasso {

/// Malformed CSV input; message carries the 1-based line number.
class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 when absent
};

/// Reads a comma-separated table with a required header row. Cells are
/// trimmed; empty lines are skipped; ragged rows raise CsvError with the
/// offending line number.
CsvTable read_csv(std::istream& in, const std::string& source = "<input>");
CsvTable read_csv_file(const std::string& path);

/**
 * A categorical column ingested from raw strings. If every value parses as
 * a positive integer the values are taken as literal 1-based levels
 * (num_levels = max observed); otherwise distinct values are sorted
 * lexicographically and mapped to 1..K, with the labels retained for output.
 */
struct CategoricalColumn {
    std::string name;
    CategoricalVariable var;
    std::vector<std::string> labels;  // empty for literal integer levels

    std::string level_name(int level) const;  // 1-based level -> display label
};

CategoricalColumn ingest_categorical(const std::string& name,
                                     const std::vector<std::string>& raw);

/// Parses a numeric column (the response, typically).
Eigen::VectorXd parse_numeric_column(const CsvTable& table, int column);

/// Writes value with 17 significant digits (round-trip exact for doubles).
std::string format_double(double value);

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& header,
                      const Eigen::MatrixXd& values);

}  // namespace catlasso
