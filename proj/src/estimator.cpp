#include "mfnet/estimator.hpp"

#include "mfnet/log.hpp"

#include <algorithm>
#include <string>

namespace mfnet {

const char* to_string(ModelFamily model) {
    return model == ModelFamily::SymmetricLoading ? "sym" : "two-sided";
}

ModelFamily model_family_from_string(const std::string& text) {
    if (text == "sym" || text == "symmetric" || text == "model1") {
        return ModelFamily::SymmetricLoading;
    }
    if (text == "two-sided" || text == "two_sided" || text == "model2") {
        return ModelFamily::TwoSided;
    }
    fail(errc::invalid, "unknown model family '" + text + "'");
}

namespace {

void check_fit_preconditions(const MatrixSeries& series, const FitOptions& options) {
    if (series.length() < options.h0 + 2) {
        fail(errc::invalid, "series of length " + std::to_string(series.length()) + " too short for h0 = " +
                                std::to_string(options.h0) + " (need T >= h0 + 2)");
    }
    if (series.n() < 2) {
        fail(errc::invalid, "need at least two entities");
    }
}

struct Side {
    Spectrum spectrum;
    RankEstimates ranks;
    LoadingMatrix q;
};

Side estimate_side(const MatrixSeries& series, MomentMode mode, RankSpec r, const FitOptions& options,
                   const std::string& hub_prefix) {
    MomentOptions mo;
    mo.h0 = options.h0;
    mo.mode = mode;
    mo.path = options.path;
    mo.center = options.center;
    const SymmetricAccumulator acc = build_m_matrix(series, mo);

    Side side;
    side.spectrum = sym_eigen(acc.m);
    const Vector& lambda = side.spectrum.eigenvalues;
    if (!(lambda(0) > 0.0)) {
        fail(errc::degenerate, "moment matrix is zero; no lagged signal to estimate loadings from");
    }
    side.ranks.r_max = r_max_for(series.n(), options.rmax_rule);
    side.ranks.ratio = ratio_rank(lambda, side.ranks.r_max);
    side.ranks.scree = scree_rank(lambda, options.scree_threshold);

    const int chosen = r ? *r : side.ranks.ratio;
    if (chosen < 1 || chosen > series.n()) {
        fail(errc::out_of_range, "r = " + std::to_string(chosen) + " outside 1.." + std::to_string(series.n()));
    }
    side.q = top_loadings(side.spectrum, chosen, series.entities(), hub_prefix);
    return side;
}

double defined_sq_norm(const Matrix& x, bool diag_defined) {
    double s = x.squaredNorm();
    if (!diag_defined) {
        s -= x.diagonal().squaredNorm();
    }
    return s;
}

double total_sq_norm(const MatrixSeries& series) {
    double total = 0.0;
    for (const auto& x : series.filled_all()) {
        total += defined_sq_norm(x, series.diag_defined());
    }
    if (!(total > 0.0)) {
        fail(errc::degenerate, "variance explained undefined: series has zero total variation");
    }
    return total;
}

void finish_fit(const MatrixSeries& series, ModelFit& fit) {
    fit.factors.values = extract_factors(series, fit.left().values, fit.right().values);
    fit.factors.hubs_left = fit.left().hubs;
    fit.factors.hubs_right = fit.right().hubs;
    fit.variance_explained = variance_explained(series, fit);
    fit.window_start = series.start();
    fit.window_length = series.length();
}

}  // namespace

ModelFit fit_model1(const MatrixSeries& series, RankSpec r, const FitOptions& options) {
    check_fit_preconditions(series, options);
    Side side = estimate_side(series, MomentMode::Both, r, options, "H");
    ModelFit fit;
    fit.model = ModelFamily::SymmetricLoading;
    fit.q_left = std::move(side.q);
    fit.eigenvalues_left = side.spectrum.eigenvalues;
    fit.ranks_left = side.ranks;
    fit.eigen_share_left = eigen_share(fit.eigenvalues_left, fit.q_left.cols());
    fit.h0 = options.h0;
    fit.centered = options.center;
    finish_fit(series, fit);
    return fit;
}

ModelFit fit_model2(const MatrixSeries& series, RankSpec r1, RankSpec r2, const FitOptions& options) {
    check_fit_preconditions(series, options);
    // Columns of X_t lie in span(A1): the column-orientation moment gives the
    // export (left) loading, the row orientation the import (right) loading.
    Side left = estimate_side(series, MomentMode::Col, r1, options, "Ex");
    Side right = estimate_side(series, MomentMode::Row, r2, options, "Im");

    ModelFit fit;
    fit.model = ModelFamily::TwoSided;
    fit.q_left = std::move(left.q);
    fit.q_right = std::move(right.q);
    fit.eigenvalues_left = left.spectrum.eigenvalues;
    fit.eigenvalues_right = right.spectrum.eigenvalues;
    fit.ranks_left = left.ranks;
    fit.ranks_right = right.ranks;
    fit.eigen_share_left = eigen_share(fit.eigenvalues_left, fit.q_left.cols());
    fit.eigen_share_right = eigen_share(fit.eigenvalues_right, fit.q_right->cols());
    fit.h0 = options.h0;
    fit.centered = options.center;
    finish_fit(series, fit);

    const double total = total_sq_norm(series);
    const Matrix& q1 = fit.q_left.values;
    const Matrix& q2 = fit.q_right->values;
    double left_resid = 0.0;
    double right_resid = 0.0;
    for (const auto& x : series.filled_all()) {
        const Matrix off_left = x - q1 * (q1.transpose() * x);
        const Matrix off_right = x - (x * q2) * q2.transpose();
        left_resid += defined_sq_norm(off_left, series.diag_defined());
        right_resid += defined_sq_norm(off_right, series.diag_defined());
    }
    fit.side_variance_explained = std::make_pair(1.0 - left_resid / total, 1.0 - right_resid / total);
    return fit;
}

std::vector<Matrix> extract_factors(const MatrixSeries& series, const Matrix& q_left, const Matrix& q_right) {
    std::vector<Matrix> z;
    z.reserve(static_cast<std::size_t>(series.length()));
    for (const auto& x : series.filled_all()) {
        z.push_back(q_left.transpose() * x * q_right);
    }
    return z;
}

std::vector<Matrix> fitted_values(const ModelFit& fit) {
    std::vector<Matrix> out;
    out.reserve(fit.factors.values.size());
    for (const auto& z : fit.factors.values) {
        out.push_back(fit.left().values * z * fit.right().values.transpose());
    }
    return out;
}

std::vector<Matrix> residuals(const MatrixSeries& series, const ModelFit& fit) {
    if (static_cast<Index>(fit.factors.values.size()) != series.length()) {
        fail(errc::invalid, "fit does not belong to this series (length mismatch)");
    }
    std::vector<Matrix> out;
    out.reserve(fit.factors.values.size());
    for (Index t = 0; t < series.length(); ++t) {
        Matrix e = series.filled(t) -
                   fit.left().values * fit.factors.values[static_cast<std::size_t>(t)] * fit.right().values.transpose();
        if (!series.diag_defined()) {
            e.diagonal().setZero();
        }
        out.push_back(std::move(e));
    }
    return out;
}

double variance_explained(const MatrixSeries& series, std::span<const Matrix> residual_matrices) {
    if (static_cast<Index>(residual_matrices.size()) != series.length()) {
        fail(errc::invalid, "residual count does not match series length");
    }
    const double total = total_sq_norm(series);
    double resid = 0.0;
    for (const auto& e : residual_matrices) {
        resid += defined_sq_norm(e, series.diag_defined());
    }
    return std::clamp(1.0 - resid / total, 0.0, 1.0);
}

double variance_explained(const MatrixSeries& series, const ModelFit& fit) {
    const auto e = residuals(series, fit);
    return variance_explained(series, e);
}

}  // namespace mfnet
