#pragma once

#include "mfnet/series.hpp"
#include "mfnet/types.hpp"

namespace mfnet {

enum class Orientation { Col, Row };
enum class MomentMode { Col, Row, Both };
enum class MomentPath { Fast, Naive };

const char* to_string(MomentMode mode);
MomentMode moment_mode_from_string(const std::string& text);

struct MomentOptions {
    int h0 = 1;
    MomentMode mode = MomentMode::Both;
    MomentPath path = MomentPath::Fast;
    /// Subtract each cell's temporal mean over the window first.
    bool center = false;
};

/// The accumulated n x n moment matrix with its provenance.
struct SymmetricAccumulator {
    Matrix m;
    int h0 = 1;
    MomentMode mode = MomentMode::Both;
    bool centered = false;
    YearMonth start;
    Index length = 0;
};

/// Lag-h cross moment between column (or row) i at t and column (or row) j
/// at t + h, averaged over the T - h available pairs:
///   Col: (1/(T-h)) sum_t X_t[:, i] X_{t+h}[:, j]'
///   Row: (1/(T-h)) sum_t X_t[i, :]' X_{t+h}[j, :]
Matrix lagged_cross_moment(const MatrixSeries& series, int h, Index i, Index j, Orientation orientation);

/// sum_{h=1..h0} sum_{i,j} Omega_ij(h) Omega_ij(h)' for the chosen
/// orientation(s). Naive evaluates that sum literally; Fast uses
///   M(h) = (T-h)^-2 sum_{t,s} <X_{t+h}, X_{s+h}>_F X_t X_s'
/// which is the same quantity with the (i, j) sums collapsed.
SymmetricAccumulator build_m_matrix(const MatrixSeries& series, const MomentOptions& options = {});

/// Zero-filled matrices, optionally with the per-cell temporal mean removed
/// on defined cells.
std::vector<Matrix> moment_inputs(const MatrixSeries& series, bool center);

}  // namespace mfnet
