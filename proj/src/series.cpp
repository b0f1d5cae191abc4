#include "mfnet/series.hpp"

#include "mfnet/csv.hpp"
#include "mfnet/log.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace mfnet {

YearMonth YearMonth::from_ordinal(int k) {
    const int year = k >= 0 ? k / 12 : -((-k + 11) / 12);
    return YearMonth{year, k - year * 12 + 1};
}

std::string YearMonth::str() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
}

MatrixSeries::MatrixSeries(std::vector<std::string> entities, YearMonth start, std::vector<Matrix> values,
                           bool diag_defined, bool simulated)
    : entities_(std::move(entities)),
      start_(start),
      values_(std::move(values)),
      diag_defined_(diag_defined),
      simulated_(simulated) {
    if (start_.month < 1 || start_.month > 12) {
        fail(errc::invalid, "start month out of range: " + std::to_string(start_.month));
    }
    std::set<std::string> unique(entities_.begin(), entities_.end());
    if (unique.size() != entities_.size()) {
        fail(errc::duplicate, "entity labels must be unique");
    }
    const Index n = this->n();
    for (std::size_t t = 0; t < values_.size(); ++t) {
        Matrix& x = values_[t];
        if (x.rows() != n || x.cols() != n) {
            fail(errc::invalid, "matrix " + std::to_string(t) + " is " + std::to_string(x.rows()) + "x" +
                                    std::to_string(x.cols()) + ", expected " + std::to_string(n) + "x" +
                                    std::to_string(n));
        }
        if (!diag_defined_) {
            x.diagonal().setZero();
        }
        if (!x.allFinite()) {
            fail(errc::non_finite, "non-finite entry in matrix " + std::to_string(t));
        }
        if (!simulated_ && (x.array() < 0.0).any()) {
            fail(errc::invalid, "negative flow in matrix " + std::to_string(t) + " of a non-simulated series");
        }
    }
}

std::vector<YearMonth> MatrixSeries::times() const {
    std::vector<YearMonth> out;
    out.reserve(values_.size());
    for (Index t = 0; t < length(); ++t) {
        out.push_back(time(t));
    }
    return out;
}

double MatrixSeries::value(Index t, Index i, Index j) const {
    if (!defined(i, j)) {
        fail(errc::contract, "diagonal cell (" + std::to_string(i) + "," + std::to_string(j) + ") is undefined");
    }
    return values_.at(static_cast<std::size_t>(t))(i, j);
}

Matrix MatrixSeries::defined_mask() const {
    Matrix mask = Matrix::Ones(n(), n());
    if (!diag_defined_) {
        mask.diagonal().setZero();
    }
    return mask;
}

std::optional<Index> MatrixSeries::entity_index(const std::string& label) const {
    auto it = std::find(entities_.begin(), entities_.end(), label);
    if (it == entities_.end()) {
        return std::nullopt;
    }
    return static_cast<Index>(it - entities_.begin());
}

MatrixSeries MatrixSeries::permuted(std::span<const Index> perm) const {
    if (static_cast<Index>(perm.size()) != n()) {
        fail(errc::invalid, "permutation length does not match entity count");
    }
    std::vector<std::string> labels;
    Eigen::PermutationMatrix<Eigen::Dynamic> p(n());
    std::vector<bool> seen(static_cast<std::size_t>(n()), false);
    for (Index k = 0; k < n(); ++k) {
        const Index old = perm[static_cast<std::size_t>(k)];
        if (old < 0 || old >= n() || seen[static_cast<std::size_t>(old)]) {
            fail(errc::invalid, "not a permutation");
        }
        seen[static_cast<std::size_t>(old)] = true;
        labels.push_back(entities_[static_cast<std::size_t>(old)]);
        p.indices()(old) = static_cast<int>(k);
    }
    std::vector<Matrix> values;
    values.reserve(values_.size());
    for (const auto& x : values_) {
        values.push_back(p * x * p.transpose());
    }
    return MatrixSeries(std::move(labels), start_, std::move(values), diag_defined_, simulated_);
}

bool MatrixSeries::operator==(const MatrixSeries& other) const {
    return entities_ == other.entities_ && start_ == other.start_ && diag_defined_ == other.diag_defined_ &&
           simulated_ == other.simulated_ && values_ == other.values_;
}

MatrixSeries window(const MatrixSeries& series, Index start_index, Index length) {
    if (start_index < 0 || length < 0 || start_index + length > series.length()) {
        fail(errc::out_of_range, "window [" + std::to_string(start_index) + ", " +
                                     std::to_string(start_index + length) + ") outside series of length " +
                                     std::to_string(series.length()));
    }
    const auto& all = series.filled_all();
    std::vector<Matrix> values(all.begin() + start_index, all.begin() + start_index + length);
    return MatrixSeries(series.entities(), series.time(start_index), std::move(values), series.diag_defined(),
                        series.simulated());
}

MatrixSeries three_month_average(const MatrixSeries& series) {
    const Index T = series.length();
    if (T < 3) {
        fail(errc::invalid, "three-month average needs at least 3 months, got " + std::to_string(T));
    }
    std::vector<Matrix> values;
    values.reserve(static_cast<std::size_t>(T - 2));
    for (Index t = 1; t + 1 < T; ++t) {
        values.push_back((series.filled(t - 1) + series.filled(t) + series.filled(t + 1)) / 3.0);
    }
    return MatrixSeries(series.entities(), series.time(1), std::move(values), series.diag_defined(),
                        series.simulated());
}

// ---------------------------------------------------------------------------
// Long-format ingestion

namespace {

struct Record {
    std::string exporter;
    std::string importer;
    int ordinal;
    double value;
    std::size_t line;
};

}  // namespace

ReportedFlows read_long_records(std::istream& in, const std::string& source, const IngestOptions& options) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    std::size_t c_exp = 0, c_imp = 0, c_year = 0, c_month = 0, c_value = 0;
    std::vector<Record> records;

    auto where = [&](std::size_t ln) { return source + ":" + std::to_string(ln); };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto fields = csv::split_line(line);
        if (header.empty()) {
            for (auto& f : fields) {
                f.erase(0, f.find_first_not_of(" \t"));
                f.erase(f.find_last_not_of(" \t\r") + 1);
                if (f.size() >= 3 && f.compare(0, 3, "\xEF\xBB\xBF") == 0) {
                    f.erase(0, 3);
                }
            }
            header = fields;
            auto col = [&](const char* name) {
                auto it = std::find(header.begin(), header.end(), name);
                if (it == header.end()) {
                    fail(errc::parse, where(line_no) + ": header lacks column '" + name + "'");
                }
                return static_cast<std::size_t>(it - header.begin());
            };
            c_exp = col("exporter");
            c_imp = col("importer");
            c_year = col("year");
            c_month = col("month");
            c_value = col("value");
            continue;
        }
        if (fields.size() != header.size()) {
            fail(errc::parse, where(line_no) + ": expected " + std::to_string(header.size()) + " fields, found " +
                                  std::to_string(fields.size()));
        }
        Record rec;
        rec.exporter = fields[c_exp];
        rec.importer = fields[c_imp];
        if (rec.exporter.empty() || rec.importer.empty()) {
            fail(errc::parse, where(line_no) + ": empty entity label");
        }
        const auto year = csv::parse_int(fields[c_year], where(line_no));
        const auto month = csv::parse_int(fields[c_month], where(line_no));
        if (month < 1 || month > 12) {
            fail(errc::parse, where(line_no) + ": month " + std::to_string(month) + " outside 1..12");
        }
        rec.ordinal = YearMonth{static_cast<int>(year), static_cast<int>(month)}.ordinal();
        rec.value = csv::parse_double(fields[c_value], where(line_no));
        if (!std::isfinite(rec.value)) {
            fail(errc::parse, where(line_no) + ": non-finite value");
        }
        if (rec.value < 0.0 && !options.allow_negative) {
            fail(errc::parse, where(line_no) + ": negative flow (allow_negative is off)");
        }
        rec.line = line_no;
        records.push_back(std::move(rec));
    }
    if (header.empty()) {
        fail(errc::parse, source + ": empty file");
    }
    if (records.empty()) {
        fail(errc::parse, source + ": no records");
    }

    std::set<std::string> labels;
    std::set<int> months;
    for (const auto& r : records) {
        labels.insert(r.exporter);
        labels.insert(r.importer);
        months.insert(r.ordinal);
    }
    const int first = *months.begin();
    const int last = *months.rbegin();
    if (static_cast<int>(months.size()) != last - first + 1) {
        for (int k = first; k <= last; ++k) {
            if (!months.count(k)) {
                fail(errc::non_contiguous, source + ": no records for " + YearMonth::from_ordinal(k).str() +
                                               " inside the observed range");
            }
        }
    }

    ReportedFlows flows;
    flows.entities.assign(labels.begin(), labels.end());
    flows.start = YearMonth::from_ordinal(first);
    const Index n = flows.n();
    const auto T = static_cast<std::size_t>(last - first + 1);
    flows.values.assign(T, Matrix::Zero(n, n));
    flows.observed.assign(T, BoolMatrix::Constant(n, n, false));

    std::map<std::string, Index> index;
    for (Index k = 0; k < n; ++k) {
        index[flows.entities[static_cast<std::size_t>(k)]] = k;
    }
    for (const auto& r : records) {
        const Index i = index.at(r.exporter);
        const Index j = index.at(r.importer);
        const auto t = static_cast<std::size_t>(r.ordinal - first);
        if (flows.observed[t](i, j)) {
            fail(errc::duplicate, where(r.line) + ": duplicate record (" + r.exporter + ", " + r.importer + ", " +
                                      YearMonth::from_ordinal(r.ordinal).str() + ")");
        }
        flows.observed[t](i, j) = true;
        flows.values[t](i, j) = r.value;
        flows.has_diagonal = flows.has_diagonal || i == j;
        flows.has_negative = flows.has_negative || r.value < 0.0;
    }
    return flows;
}

namespace {

std::string cell_name(const ReportedFlows& f, std::size_t t, Index i, Index j) {
    return "(" + f.entities[static_cast<std::size_t>(i)] + ", " + f.entities[static_cast<std::size_t>(j)] + ", " +
           f.start.plus(static_cast<int>(t)).str() + ")";
}

}  // namespace

MatrixSeries complete(const ReportedFlows& flows, const IngestOptions& options, CompletionStats* stats) {
    std::size_t missing = 0;
    std::vector<Matrix> values = flows.values;
    const bool diag = flows.has_diagonal;
    for (std::size_t t = 0; t < values.size(); ++t) {
        for (Index j = 0; j < flows.n(); ++j) {
            for (Index i = 0; i < flows.n(); ++i) {
                if ((i == j && !diag) || flows.observed[t](i, j)) {
                    continue;
                }
                if (options.strict) {
                    fail(errc::missing, "missing cell " + cell_name(flows, t, i, j));
                }
                values[t](i, j) = 0.0;
                ++missing;
            }
        }
    }
    if (missing > 0) {
        log::warn(std::to_string(missing) + " missing cells set to 0");
    }
    if (stats) {
        stats->missing_zeroed += missing;
    }
    return MatrixSeries(flows.entities, flows.start, std::move(values), diag, flows.has_negative);
}

MatrixSeries ingest_long_csv(const std::filesystem::path& path, const IngestOptions& options,
                             CompletionStats* stats) {
    std::ifstream in(path);
    if (!in) {
        fail(errc::io, "cannot open " + path.string());
    }
    return complete(read_long_records(in, path.string(), options), options, stats);
}

MatrixSeries mirror_impute(const ReportedFlows& exports_reported, const ReportedFlows& imports_reported,
                           const IngestOptions& options, CompletionStats* stats) {
    std::set<std::string> labels(exports_reported.entities.begin(), exports_reported.entities.end());
    labels.insert(imports_reported.entities.begin(), imports_reported.entities.end());

    ReportedFlows merged;
    merged.entities.assign(labels.begin(), labels.end());
    const int first = std::min(exports_reported.start.ordinal(), imports_reported.start.ordinal());
    const int last = std::max(exports_reported.start.ordinal() + static_cast<int>(exports_reported.length()),
                              imports_reported.start.ordinal() + static_cast<int>(imports_reported.length())) -
                     1;
    merged.start = YearMonth::from_ordinal(first);
    const Index n = merged.n();
    const auto T = static_cast<std::size_t>(last - first + 1);
    merged.values.assign(T, Matrix::Zero(n, n));
    merged.observed.assign(T, BoolMatrix::Constant(n, n, false));
    merged.has_diagonal = exports_reported.has_diagonal && imports_reported.has_diagonal;
    merged.has_negative = exports_reported.has_negative || imports_reported.has_negative;

    auto remap = [&](const ReportedFlows& f) {
        std::vector<Index> to_merged;
        for (const auto& label : f.entities) {
            to_merged.push_back(static_cast<Index>(std::distance(labels.begin(), labels.find(label))));
        }
        return to_merged;
    };
    const auto exp_map = remap(exports_reported);
    const auto imp_map = remap(imports_reported);

    std::size_t fallbacks = 0;
    // Partner-reported imports first.
    for (std::size_t t = 0; t < imports_reported.values.size(); ++t) {
        const auto mt = static_cast<std::size_t>(imports_reported.start.ordinal() - first) + t;
        for (Index j = 0; j < imports_reported.n(); ++j) {
            for (Index i = 0; i < imports_reported.n(); ++i) {
                if (imports_reported.observed[t](i, j)) {
                    const Index mi = imp_map[static_cast<std::size_t>(i)];
                    const Index mj = imp_map[static_cast<std::size_t>(j)];
                    merged.values[mt](mi, mj) = imports_reported.values[t](i, j);
                    merged.observed[mt](mi, mj) = true;
                }
            }
        }
    }
    for (std::size_t t = 0; t < exports_reported.values.size(); ++t) {
        const auto mt = static_cast<std::size_t>(exports_reported.start.ordinal() - first) + t;
        for (Index j = 0; j < exports_reported.n(); ++j) {
            for (Index i = 0; i < exports_reported.n(); ++i) {
                const Index mi = exp_map[static_cast<std::size_t>(i)];
                const Index mj = exp_map[static_cast<std::size_t>(j)];
                if (exports_reported.observed[t](i, j) && !merged.observed[mt](mi, mj)) {
                    merged.values[mt](mi, mj) = exports_reported.values[t](i, j);
                    merged.observed[mt](mi, mj) = true;
                    if (mi != mj) {
                        ++fallbacks;
                    }
                }
            }
        }
    }
    if (fallbacks > 0) {
        log::warn(std::to_string(fallbacks) + " cells fell back to exporter-reported values");
    }
    if (stats) {
        stats->mirror_fallbacks += fallbacks;
    }
    return complete(merged, options, stats);
}

void write_long_csv(const MatrixSeries& series, std::ostream& out) {
    out << "exporter,importer,year,month,value\n";
    const auto& labels = series.entities();
    for (Index t = 0; t < series.length(); ++t) {
        const YearMonth ym = series.time(t);
        const std::string when = "," + std::to_string(ym.year) + "," + std::to_string(ym.month) + ",";
        for (Index i = 0; i < series.n(); ++i) {
            for (Index j = 0; j < series.n(); ++j) {
                if (!series.defined(i, j)) {
                    continue;
                }
                out << csv::quote(labels[static_cast<std::size_t>(i)]) << ','
                    << csv::quote(labels[static_cast<std::size_t>(j)]) << when
                    << csv::format(series.filled(t)(i, j)) << '\n';
            }
        }
    }
}

void export_long_csv(const MatrixSeries& series, const std::filesystem::path& path) {
    auto out = csv::open_for_write(path);
    write_long_csv(series, out);
}

void export_matrix_csvs(const MatrixSeries& series, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (Index t = 0; t < series.length(); ++t) {
        auto out = csv::open_for_write(dir / (series.time(t).str() + ".csv"));
        const auto& labels = series.entities();
        out << "exporter";
        for (const auto& label : labels) {
            out << ',' << csv::quote(label);
        }
        out << '\n';
        for (Index i = 0; i < series.n(); ++i) {
            out << csv::quote(labels[static_cast<std::size_t>(i)]);
            for (Index j = 0; j < series.n(); ++j) {
                out << ',' << (series.defined(i, j) ? csv::format(series.filled(t)(i, j)) : "NA");
            }
            out << '\n';
        }
    }
}

}  // namespace mfnet
