#pragma once

#include "mfnet/estimator.hpp"
#include "mfnet/rotation.hpp"
#include "mfnet/series.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mfnet {

/// One loading side after rotation, normalisation and alignment.
struct SideResult {
    VarimaxResult<double> varimax;
    SumOneResult sum_one;      // unaligned
    AlignmentMap alignment;
    LoadingMatrix aligned;     // sum-to-one, columns in aligned order
    /// Untruncated sum-to-one basis Q R D^-1 (aligned), D = column sums of Q R.
    /// The factor re-expression uses this basis so A F_t A' = Q Z_t Q' holds exactly.
    Matrix scaled_basis;
};

struct WindowResult {
    std::string label;
    Index start_index = 0;
    ModelFit fit;
    SideResult left;
    std::optional<SideResult> right;  // TwoSided only
    /// F_t = D1 R1' Z_t R2 D2 with rows/cols in aligned order.
    std::vector<Matrix> factors;

    [[nodiscard]] const SideResult& right_side() const { return right ? *right : left; }
};

struct RollingOptions {
    Index window_months = 60;
    Index step_months = 12;
    ModelFamily model = ModelFamily::SymmetricLoading;
    RankSpec r1 = 4;  // r for SymmetricLoading
    RankSpec r2 = 4;
    FitOptions fit;
    VarimaxOptions varimax;
    std::vector<std::string> anchors;
    unsigned workers = 0;  // 0: hardware concurrency
};

struct RollingResult {
    ModelFamily model = ModelFamily::SymmetricLoading;
    std::vector<std::string> entities;
    std::vector<WindowResult> windows;
};

/// Mid-window label: the calendar year of the middle month when the step is
/// a whole number of years, otherwise that month as YYYY-MM.
std::string window_label(const MatrixSeries& series, Index start_index, Index length, Index step_months);

/// Rotate + normalise one orthonormal loading (identity alignment).
SideResult rotate_side(const LoadingMatrix& q, const VarimaxOptions& options = {});

/// Re-aligns a side, updating `aligned` and `scaled_basis`.
void realign(SideResult& side, const AlignmentMap& map);

/// F_t in the sum-to-one parameterization for the given sides.
std::vector<Matrix> sum_one_factors(const ModelFit& fit, const SideResult& left, const SideResult& right);

/// Rotation, normalisation and alignment for one fitted window. With no
/// reference and no anchors the eigen order is kept.
WindowResult analyze_window(ModelFit fit, std::string label, Index start_index, const RollingOptions& options,
                            const WindowResult* previous = nullptr);

RollingResult rolling_fit(const MatrixSeries& series, const RollingOptions& options);

/// One row per window: ratio/scree estimates and variance explained at the
/// fitted rank(s).
struct RankRow {
    std::string label;
    int r_left = 0;  // fitted counts; name the variance row
    std::optional<int> r_right;
    int ratio_left = 0;
    int scree_left = 0;
    std::optional<int> ratio_right;
    std::optional<int> scree_right;
    double variance_explained = 0.0;
    std::optional<std::pair<double, double>> side_variance_explained;
};

std::vector<RankRow> rank_table(const RollingResult& result);

// ---------------------------------------------------------------------------
// Hub networks

struct HubNetwork {
    std::string label;
    Matrix mean_factor;        // r1 x r2
    Matrix truncated_left;     // n x r1
    Matrix truncated_right;    // n x r2
    Vector hub_self_volume;    // diagonal of mean_factor
    std::vector<std::pair<Index, Index>> direction_flips;  // negative mean-factor entries
    std::vector<std::string> entities;
    std::vector<std::string> hubs_left;
    std::vector<std::string> hubs_right;
};

/// Rounds 10 A half away from zero; entries rounding to zero are dropped and
/// the kept entries of A rescaled to sum to one. A column with nothing left
/// keeps only its largest entry.
Matrix network_truncation(const Matrix& sum_one_loadings);

HubNetwork hub_network(std::string label, const LoadingMatrix& left, const LoadingMatrix& right,
                       std::span<const Matrix> factors);
HubNetwork hub_network(const WindowResult& window);

// ---------------------------------------------------------------------------
// Ward clustering

enum class WardInput {
    SquaredEuclidean,  // Lance-Williams Ward update on squared distances
    Euclidean,         // same update on plain Euclidean distances (R's hclust "ward.D" on dist())
};

/// hclust-style merge row: negative ids are singletons -(i+1), positive ids
/// refer to earlier merge steps (1-based).
struct Merge {
    int left = 0;
    int right = 0;
    double height = 0.0;
    Index size = 0;
};

struct ClusterTree {
    std::vector<Merge> merges;
    std::vector<int> labels;  // 1..k, numbered by first appearance
};

ClusterTree ward_cluster(const Matrix& features, Index k, WardInput input = WardInput::SquaredEuclidean);

std::vector<int> cut_tree(const std::vector<Merge>& merges, Index n, Index k);

enum class FeatureSide { Left, Right, Joint };

/// Entity feature rows: aligned sum-to-one loadings concatenated over all
/// windows, or one window's loadings when `window` is given.
Matrix clustering_features(const RollingResult& result, FeatureSide side, std::optional<Index> window = std::nullopt);

}  // namespace mfnet
