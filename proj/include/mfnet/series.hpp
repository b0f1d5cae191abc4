#pragma once

#include "mfnet/types.hpp"

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mfnet {

struct YearMonth {
    int year = 1970;
    int month = 1;  // 1..12

    [[nodiscard]] int ordinal() const { return year * 12 + (month - 1); }
    [[nodiscard]] static YearMonth from_ordinal(int k);
    [[nodiscard]] YearMonth plus(int months) const { return from_ordinal(ordinal() + months); }
    /// "YYYY-MM"
    [[nodiscard]] std::string str() const;

    auto operator<=>(const YearMonth&) const = default;
};

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Monthly sequence of n x n directed flow matrices. Row i holds the flows
/// exported by entity i. When the diagonal is undefined it is held as a mask
/// and reading it through value() is a contract violation; filled() exposes
/// the zero-filled matrix that every moment and projection uses.
///
/// Immutable after construction.
class MatrixSeries {
public:
    MatrixSeries(std::vector<std::string> entities, YearMonth start, std::vector<Matrix> values,
                 bool diag_defined = false, bool simulated = false);

    [[nodiscard]] Index n() const { return static_cast<Index>(entities_.size()); }
    [[nodiscard]] Index length() const { return static_cast<Index>(values_.size()); }
    [[nodiscard]] const std::vector<std::string>& entities() const { return entities_; }
    [[nodiscard]] YearMonth start() const { return start_; }
    [[nodiscard]] YearMonth time(Index t) const { return start_.plus(static_cast<int>(t)); }
    [[nodiscard]] std::vector<YearMonth> times() const;
    [[nodiscard]] bool diag_defined() const { return diag_defined_; }
    [[nodiscard]] bool simulated() const { return simulated_; }

    [[nodiscard]] bool defined(Index i, Index j) const { return diag_defined_ || i != j; }
    /// Throws contract_violation on an undefined cell.
    [[nodiscard]] double value(Index t, Index i, Index j) const;
    /// Undefined cells read as zero.
    [[nodiscard]] const Matrix& filled(Index t) const { return values_[static_cast<std::size_t>(t)]; }
    [[nodiscard]] const std::vector<Matrix>& filled_all() const { return values_; }
    /// 1 on defined cells, 0 elsewhere.
    [[nodiscard]] Matrix defined_mask() const;

    [[nodiscard]] std::optional<Index> entity_index(const std::string& label) const;

    /// Relabel: new entity k is old entity perm[k]; each matrix becomes P X P'.
    [[nodiscard]] MatrixSeries permuted(std::span<const Index> perm) const;

    bool operator==(const MatrixSeries& other) const;

private:
    std::vector<std::string> entities_;
    YearMonth start_;
    std::vector<Matrix> values_;
    bool diag_defined_;
    bool simulated_;
};

/// Contiguous sub-series [start_index, start_index + length).
MatrixSeries window(const MatrixSeries& series, Index start_index, Index length);

/// Centered three-month mean; the first and last months are dropped.
MatrixSeries three_month_average(const MatrixSeries& series);

/// Flows as reported, before completion. observed[t](i,j) marks a record.
struct ReportedFlows {
    std::vector<std::string> entities;
    YearMonth start;
    std::vector<Matrix> values;
    std::vector<BoolMatrix> observed;
    bool has_diagonal = false;
    bool has_negative = false;

    [[nodiscard]] Index n() const { return static_cast<Index>(entities.size()); }
    [[nodiscard]] Index length() const { return static_cast<Index>(values.size()); }
};

struct IngestOptions {
    bool strict = true;
    bool allow_negative = false;
};

struct CompletionStats {
    std::size_t missing_zeroed = 0;
    std::size_t mirror_fallbacks = 0;
};

/// Parses `exporter,importer,year,month,value` records (header required,
/// column order free). Entities are sorted by label.
ReportedFlows read_long_records(std::istream& in, const std::string& source, const IngestOptions& options = {});

/// Turns reported flows into a series. Missing off-diagonal cells are an
/// error under strict, zero otherwise.
MatrixSeries complete(const ReportedFlows& flows, const IngestOptions& options, CompletionStats* stats = nullptr);

MatrixSeries ingest_long_csv(const std::filesystem::path& path, const IngestOptions& options = {},
                             CompletionStats* stats = nullptr);

/// Export flow i->j is taken from j's reported import from i; the exporter's
/// own report is the fallback. Both inputs are already oriented exporter-row.
MatrixSeries mirror_impute(const ReportedFlows& exports_reported, const ReportedFlows& imports_reported,
                           const IngestOptions& options = {}, CompletionStats* stats = nullptr);

void write_long_csv(const MatrixSeries& series, std::ostream& out);
void export_long_csv(const MatrixSeries& series, const std::filesystem::path& path);
/// One labelled n x n CSV per time point, named YYYY-MM.csv. Undefined
/// cells are written as NA.
void export_matrix_csvs(const MatrixSeries& series, const std::filesystem::path& dir);

}  // namespace mfnet
