#include "catlasso/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace catlasso {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == name) return static_cast<int>(j);
    }
    return -1;
}

CsvTable read_csv(std::istream& in, const std::string& source) {
    CsvTable table;
    std::string line;
    int line_number = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        std::vector<std::string> fields = split_line(line);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw CsvError(source + ":" + std::to_string(line_number) +
                           ": expected " + std::to_string(table.header.size()) +
                           " fields, got " + std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    if (!have_header) {
        throw CsvError(source + ": missing header row");
    }
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError(path + ": cannot open for reading");
    return read_csv(in, path);
}

std::string CategoricalColumn::level_name(int level) const {
    if (labels.empty()) return std::to_string(level);
    return labels[static_cast<std::size_t>(level - 1)];
}

CategoricalColumn ingest_categorical(const std::string& name,
                                     const std::vector<std::string>& raw) {
    CategoricalColumn column;
    column.name = name;

    bool all_int = !raw.empty();
    std::vector<int> as_int(raw.size());
    for (std::size_t i = 0; i < raw.size() && all_int; ++i) {
        const std::string& cell = raw[i];
        if (cell.empty()) {
            all_int = false;
            break;
        }
        char* end = nullptr;
        long value = std::strtol(cell.c_str(), &end, 10);
        if (end == nullptr || *end != '\0' || value < 1 || value > 1000000) {
            all_int = false;
        } else {
            as_int[i] = static_cast<int>(value);
        }
    }

    if (all_int) {
        int levels = 0;
        for (int v : as_int) levels = std::max(levels, v);
        column.var = CategoricalVariable(std::move(as_int), levels);
        return column;
    }

    // Map distinct labels to dense 1-based indices in sorted order.
    std::map<std::string, int> index;
    for (const std::string& cell : raw) index[cell] = 0;
    int next = 1;
    for (auto& [label, idx] : index) {
        idx = next++;
        column.labels.push_back(label);
    }
    std::vector<int> obs;
    obs.reserve(raw.size());
    for (const std::string& cell : raw) obs.push_back(index[cell]);
    column.var = CategoricalVariable(std::move(obs), next - 1);
    return column;
}

Eigen::VectorXd parse_numeric_column(const CsvTable& table, int column) {
    if (column < 0 || column >= static_cast<int>(table.header.size())) {
        throw CsvError("numeric column index out of range");
    }
    Eigen::VectorXd values(static_cast<int>(table.rows.size()));
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const std::string& cell = table.rows[i][static_cast<std::size_t>(column)];
        char* end = nullptr;
        double value = std::strtod(cell.c_str(), &end);
        if (cell.empty() || end == nullptr || *end != '\0') {
            throw CsvError("row " + std::to_string(i + 2) + ": '" + cell +
                           "' is not numeric in column '" +
                           table.header[static_cast<std::size_t>(column)] + "'");
        }
        values[static_cast<int>(i)] = value;
    }
    return values;
}

std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& header,
                      const Eigen::MatrixXd& values) {
    for (std::size_t j = 0; j < header.size(); ++j) {
        out << (j ? "," : "") << header[j];
    }
    out << '\n';
    for (int i = 0; i < values.rows(); ++i) {
        for (int j = 0; j < values.cols(); ++j) {
            out << (j ? "," : "") << format_double(values(i, j));
        }
        out << '\n';
    }
}

}  // namespace catlasso
