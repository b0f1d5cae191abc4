#include "mfnet/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace mfnet::csv {

std::vector<std::string> split_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    std::vector<std::string> fields;
    std::string current;
    bool in_quotes = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (in_quotes) {
            if (c == '"') {
                if (k + 1 < line.size() && line[k + 1] == '"') {
                    current.push_back('"');
                    ++k;
                } else {
                    in_quotes = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t k = 0; k < fields.size(); ++k) {
        if (k > 0) {
            out.push_back(',');
        }
        out += quote(fields[k]);
    }
    return out;
}

std::string format(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) {
        fail(errc::invalid, "cannot format value");
    }
    return std::string(buf, ptr);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

double parse_double(std::string_view text, const std::string& context) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        fail(errc::parse, context + ": cannot parse number '" + std::string(text) + "'");
    }
    return value;
}

long long parse_int(std::string_view text, const std::string& context) {
    text = trim(text);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        fail(errc::parse, context + ": cannot parse integer '" + std::string(text) + "'");
    }
    return value;
}

void write_labelled_matrix(std::ostream& out, const Matrix& m, const std::vector<std::string>& row_labels,
                           const std::vector<std::string>& col_labels, std::string_view corner) {
    if (static_cast<Index>(row_labels.size()) != m.rows() || static_cast<Index>(col_labels.size()) != m.cols()) {
        fail(errc::invalid, "label count does not match matrix shape");
    }
    out << quote(corner);
    for (const auto& label : col_labels) {
        out << ',' << quote(label);
    }
    out << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        out << quote(row_labels[static_cast<std::size_t>(i)]);
        for (Index j = 0; j < m.cols(); ++j) {
            out << ',' << (std::isnan(m(i, j)) ? std::string("NA") : format(m(i, j)));
        }
        out << '\n';
    }
}

LabelledMatrix read_labelled_matrix(std::istream& in, const std::string& source) {
    Table table = read_table(in, source);
    LabelledMatrix result;
    result.col_labels.assign(table.header.begin() + 1, table.header.end());
    const auto rows = static_cast<Index>(table.rows.size());
    const auto cols = static_cast<Index>(result.col_labels.size());
    result.values.resize(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        result.row_labels.push_back(row[0]);
        for (Index j = 0; j < cols; ++j) {
            const std::string& field = row[static_cast<std::size_t>(j + 1)];
            result.values(i, j) = field == "NA" ? std::numeric_limits<double>::quiet_NaN()
                                                : parse_double(field, source + " row " + std::to_string(i + 2));
        }
    }
    return result;
}

LabelledMatrix read_labelled_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(errc::io, "cannot open " + path.string());
    }
    return read_labelled_matrix(in, path.string());
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == name) {
            return k;
        }
    }
    fail(errc::parse, "missing column '" + std::string(name) + "'");
}

Table read_table(std::istream& in, const std::string& source) {
    Table table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        auto fields = split_line(line);
        if (table.header.empty()) {
            for (auto& f : fields) {
                f = std::string(trim(f));
            }
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size()) {
            fail(errc::parse, source + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(table.header.size()) + " fields, found " +
                                  std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    if (table.header.empty()) {
        fail(errc::parse, source + ": missing header");
    }
    return table;
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(errc::io, "cannot open " + path.string());
    }
    return read_table(in, path.string());
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(errc::io, "cannot write " + path.string());
    }
    return out;
}

}  // namespace mfnet::csv
