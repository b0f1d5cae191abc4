#pragma once

#include "mfnet/analysis.hpp"
#include "mfnet/estimator.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mfnet {

enum class PlotKind { Heatmap, Network, Dendrogram, Scree };

const char* to_string(PlotKind kind);
PlotKind plot_kind_from_string(const std::string& text);

struct ExportOptions {
    Index clusters = 4;
    WardInput ward_input = WardInput::SquaredEuclidean;
};

/// Writes plot-ready CSVs into `dir` and returns the files written.
///  heatmap:    heatmap[_export|_import].csv   entity,hub,window_label,loading
///  network:    network_nodes.csv, network_hub_edges.csv, network_member_edges.csv
///  dendrogram: dendrogram[_export|_import|_joint]_{merges,labels}.csv
///  scree:      scree.csv                      window_label,side,index,eigenvalue
std::vector<std::filesystem::path> export_plot_data(const RollingResult& result, PlotKind kind,
                                                    const std::filesystem::path& dir,
                                                    const ExportOptions& options = {});

struct HeatmapRow {
    std::string entity;
    std::string hub;
    std::string window_label;
    double loading = 0.0;
};

std::vector<HeatmapRow> read_heatmap_csv(const std::filesystem::path& path);

/// Rows Ratio, Scree and variance explained (percent), the last labelled
/// "r=4", "(4, 4)" or "r=auto"; one column per window. TwoSided cells read
/// "(a, b)".
void write_rank_table(const std::vector<RankRow>& rows, std::ostream& out);
void write_rank_table(const std::vector<RankRow>& rows, const std::filesystem::path& path);

void write_merges_csv(const ClusterTree& tree, std::ostream& out);
void write_cluster_labels_csv(const ClusterTree& tree, const std::vector<std::string>& entities, std::ostream& out);
std::vector<Merge> read_merges_csv(const std::filesystem::path& path);

struct FitDumpOptions {
    bool residuals = false;
    const MatrixSeries* series = nullptr;  // needed for residuals
    bool moments = false;                  // M matrices, also needs series
    /// Subspace distances to a known truth, reported when set.
    std::optional<double> truth_distance_left;
    std::optional<double> truth_distance_right;
};

/// Per-fit directory: loadings, factors, eigenvalues and fit_report.json.
void write_fit_dir(const ModelFit& fit, const std::filesystem::path& dir, const FitDumpOptions& options = {});

/// Same plus rotated/sum-to-one loadings, sum-to-one factors and the
/// rotation/alignment record.
void write_window_dir(const WindowResult& window, const std::filesystem::path& dir,
                      const FitDumpOptions& options = {});

/// Time-indexed factor matrices, one row per (month, hub pair).
void write_factor_csv(const std::vector<Matrix>& factors, const std::vector<std::string>& hubs_left,
                      const std::vector<std::string>& hubs_right, YearMonth start, const std::filesystem::path& path);

}  // namespace mfnet
