#include "mfnet/moments.hpp"

#include <string>

namespace mfnet {

const char* to_string(MomentMode mode) {
    switch (mode) {
    case MomentMode::Col:
        return "col";
    case MomentMode::Row:
        return "row";
    case MomentMode::Both:
        return "both";
    }
    return "both";
}

MomentMode moment_mode_from_string(const std::string& text) {
    if (text == "col") {
        return MomentMode::Col;
    }
    if (text == "row") {
        return MomentMode::Row;
    }
    if (text == "both") {
        return MomentMode::Both;
    }
    fail(errc::invalid, "unknown moment mode '" + text + "'");
}

std::vector<Matrix> moment_inputs(const MatrixSeries& series, bool center) {
    std::vector<Matrix> xs = series.filled_all();
    if (center && !xs.empty()) {
        Matrix mean = Matrix::Zero(series.n(), series.n());
        for (const auto& x : xs) {
            mean += x;
        }
        mean /= static_cast<double>(xs.size());
        for (auto& x : xs) {
            x -= mean;
        }
    }
    return xs;
}

namespace {

Matrix cross_moment(const std::vector<Matrix>& xs, int h, Index i, Index j, Orientation orientation) {
    const auto T = static_cast<Index>(xs.size());
    const Index n = xs.front().rows();
    Matrix omega = Matrix::Zero(n, n);
    for (Index t = 0; t + h < T; ++t) {
        const Matrix& a = xs[static_cast<std::size_t>(t)];
        const Matrix& b = xs[static_cast<std::size_t>(t + h)];
        for (Index q = 0; q < n; ++q) {
            for (Index p = 0; p < n; ++p) {
                omega(p, q) += orientation == Orientation::Col ? a(p, i) * b(q, j) : a(i, p) * b(j, q);
            }
        }
    }
    return omega / static_cast<double>(T - h);
}

void check_lag(Index T, int h) {
    if (h < 1 || h >= T) {
        fail(errc::out_of_range, "lag " + std::to_string(h) + " outside 1.." + std::to_string(T - 1));
    }
}

// Literal sum over (i, j) of Omega_ij Omega_ij'.
Matrix naive_lag_term(const std::vector<Matrix>& xs, int h, Orientation orientation) {
    const Index n = xs.front().rows();
    Matrix m = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const Matrix omega = cross_moment(xs, h, i, j, orientation);
            for (Index b = 0; b < n; ++b) {
                for (Index a = 0; a < n; ++a) {
                    double acc = 0.0;
                    for (Index k = 0; k < n; ++k) {
                        acc += omega(a, k) * omega(b, k);
                    }
                    m(a, b) += acc;
                }
            }
        }
    }
    return m;
}

// Column layout: column t of `stacked` is vec(X_t), so the leading
// n x n(T-h) block of its storage is [X_0 | X_1 | ...].
Matrix fast_lag_term(const Matrix& stacked, Index n, int h) {
    const Index T = stacked.cols();
    const Index pairs = T - h;
    const auto lower = stacked.leftCols(pairs);
    const auto upper = stacked.rightCols(pairs);
    const Matrix gram = upper.transpose() * upper;  // <X_{t+h}, X_{s+h}>_F
    const Matrix weighted = lower * gram;           // column t: vec(sum_s G_ts X_s)
    Eigen::Map<const Matrix> xs(stacked.data(), n, n * pairs);
    Eigen::Map<const Matrix> ys(weighted.data(), n, n * pairs);
    return (xs * ys.transpose()) / (static_cast<double>(pairs) * static_cast<double>(pairs));
}

Matrix stack(const std::vector<Matrix>& xs, Orientation orientation) {
    const Index n = xs.front().rows();
    Matrix stacked(n * n, static_cast<Index>(xs.size()));
    for (std::size_t t = 0; t < xs.size(); ++t) {
        if (orientation == Orientation::Col) {
            stacked.col(static_cast<Index>(t)) = xs[t].reshaped();
        } else {
            stacked.col(static_cast<Index>(t)) = xs[t].transpose().reshaped();
        }
    }
    return stacked;
}

}  // namespace

Matrix lagged_cross_moment(const MatrixSeries& series, int h, Index i, Index j, Orientation orientation) {
    check_lag(series.length(), h);
    if (i < 0 || j < 0 || i >= series.n() || j >= series.n()) {
        fail(errc::out_of_range, "entity index out of range");
    }
    return cross_moment(series.filled_all(), h, i, j, orientation);
}

SymmetricAccumulator build_m_matrix(const MatrixSeries& series, const MomentOptions& options) {
    const Index T = series.length();
    if (options.h0 < 1 || options.h0 > T - 1) {
        fail(errc::out_of_range, "h0 = " + std::to_string(options.h0) + " outside 1.." + std::to_string(T - 1));
    }
    const Index n = series.n();
    const std::vector<Matrix> xs = moment_inputs(series, options.center);

    std::vector<Orientation> orientations;
    if (options.mode != MomentMode::Row) {
        orientations.push_back(Orientation::Col);
    }
    if (options.mode != MomentMode::Col) {
        orientations.push_back(Orientation::Row);
    }

    Matrix m = Matrix::Zero(n, n);
    for (Orientation orientation : orientations) {
        Matrix stacked;
        if (options.path == MomentPath::Fast) {
            stacked = stack(xs, orientation);
        }
        for (int h = 1; h <= options.h0; ++h) {
            const Matrix term =
                options.path == MomentPath::Fast ? fast_lag_term(stacked, n, h) : naive_lag_term(xs, h, orientation);
            if (!term.allFinite()) {
                fail(errc::non_finite, "non-finite moment accumulation at lag " + std::to_string(h) + " (" +
                                           (orientation == Orientation::Col ? "col" : "row") + ")");
            }
            m += term;
        }
    }

    SymmetricAccumulator acc;
    acc.m = (m + m.transpose()) / 2.0;
    acc.h0 = options.h0;
    acc.mode = options.mode;
    acc.centered = options.center;
    acc.start = series.start();
    acc.length = T;
    return acc;
}

}  // namespace mfnet
