#pragma once

#include "mfnet/types.hpp"

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mfnet::csv {

/// Splits one line on commas, honouring double-quoted fields.
std::vector<std::string> split_line(std::string_view line);

/// Quotes the field when it contains a comma, quote or newline.
std::string quote(std::string_view field);

std::string join(const std::vector<std::string>& fields);

/// Shortest representation that parses back to the same double.
std::string format(double value);

/// Whole-field parse; throws parse_error naming `context` on failure.
double parse_double(std::string_view text, const std::string& context);
long long parse_int(std::string_view text, const std::string& context);

/// Matrix with a header row of column labels and a leading row-label column.
void write_labelled_matrix(std::ostream& out, const Matrix& m, const std::vector<std::string>& row_labels,
                           const std::vector<std::string>& col_labels, std::string_view corner = "entity");

struct LabelledMatrix {
    Matrix values;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
};

/// NA fields read as quiet NaN.
LabelledMatrix read_labelled_matrix(std::istream& in, const std::string& source);
LabelledMatrix read_labelled_matrix(const std::filesystem::path& path);

/// Table with a header; every row must have the header's width.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::size_t column(std::string_view name) const;
};

Table read_table(std::istream& in, const std::string& source);
Table read_table(const std::filesystem::path& path);

std::ofstream open_for_write(const std::filesystem::path& path);

}  // namespace mfnet::csv
