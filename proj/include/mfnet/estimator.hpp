#pragma once

#include "mfnet/moments.hpp"
#include "mfnet/series.hpp"
#include "mfnet/spectral.hpp"

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace mfnet {

enum class ModelFamily {
    SymmetricLoading,  // X_t = A F_t A' + E_t
    TwoSided,          // X_t = A1 F_t A2' + E_t
};

const char* to_string(ModelFamily model);
ModelFamily model_family_from_string(const std::string& text);

/// A fixed factor count, or nullopt for automatic selection by the ratio rule.
using RankSpec = std::optional<int>;

struct FitOptions {
    int h0 = 1;
    bool center = false;
    MomentPath path = MomentPath::Fast;
    RmaxRule rmax_rule = RmaxRule::CeilHalf;
    double scree_threshold = 0.85;
};

struct RankEstimates {
    int ratio = 0;
    int scree = 0;
    int r_max = 0;
};

struct FactorSeries {
    std::vector<Matrix> values;  // T matrices, r1 x r2
    std::vector<std::string> hubs_left;
    std::vector<std::string> hubs_right;
};

struct ModelFit {
    ModelFamily model = ModelFamily::SymmetricLoading;
    LoadingMatrix q_left;
    std::optional<LoadingMatrix> q_right;  // absent for SymmetricLoading
    FactorSeries factors;
    Vector eigenvalues_left;
    Vector eigenvalues_right;  // empty for SymmetricLoading
    RankEstimates ranks_left;
    std::optional<RankEstimates> ranks_right;

    /// 1 - sum_t |E_t|^2 / sum_t |X_t|^2 over defined cells.
    double variance_explained = 0.0;
    /// Leading-r eigenvalue share of M (scree reading of the same number).
    double eigen_share_left = 0.0;
    std::optional<double> eigen_share_right;
    /// TwoSided only: (export, import) share captured by each loading alone.
    std::optional<std::pair<double, double>> side_variance_explained;

    int h0 = 1;
    bool centered = false;
    YearMonth window_start;
    Index window_length = 0;

    [[nodiscard]] const LoadingMatrix& left() const { return q_left; }
    [[nodiscard]] const LoadingMatrix& right() const { return q_right ? *q_right : q_left; }
    [[nodiscard]] Index r1() const { return q_left.cols(); }
    [[nodiscard]] Index r2() const { return right().cols(); }
};

ModelFit fit_model1(const MatrixSeries& series, RankSpec r, const FitOptions& options = {});
ModelFit fit_model2(const MatrixSeries& series, RankSpec r1, RankSpec r2, const FitOptions& options = {});

/// Z_t = Q1' X_t Q2 on the zero-filled X_t.
std::vector<Matrix> extract_factors(const MatrixSeries& series, const Matrix& q_left, const Matrix& q_right);

/// E_t = X_t - Q1 Z_t Q2' with undefined cells set to zero.
std::vector<Matrix> residuals(const MatrixSeries& series, const ModelFit& fit);

/// Signal part Q1 Z_t Q2'.
std::vector<Matrix> fitted_values(const ModelFit& fit);

double variance_explained(const MatrixSeries& series, const ModelFit& fit);
double variance_explained(const MatrixSeries& series, std::span<const Matrix> residual_matrices);

}  // namespace mfnet
