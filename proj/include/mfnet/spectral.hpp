#pragma once

#include "mfnet/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace mfnet {

/// Eigenpairs in descending eigenvalue order; column k of `eigenvectors`
/// belongs to eigenvalues(k).
template <typename Scalar>
struct BasicSpectrum {
    VectorX<Scalar> eigenvalues;
    MatrixX<Scalar> eigenvectors;
};
using Spectrum = BasicSpectrum<double>;

/// Flips each column so its largest-magnitude entry is positive (first such
/// index on ties).
template <typename Derived>
void fix_column_signs(Eigen::MatrixBase<Derived>& v) {
    for (Index k = 0; k < v.cols(); ++k) {
        Index arg = 0;
        typename Derived::Scalar best = -1;
        for (Index i = 0; i < v.rows(); ++i) {
            const auto mag = std::abs(v(i, k));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (v(arg, k) < 0) {
            v.col(k) = -v.col(k);
        }
    }
}

template <typename Derived>
BasicSpectrum<typename Derived::Scalar> sym_eigen(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    if (m.rows() != m.cols()) {
        fail(errc::invalid, "sym_eigen needs a square matrix");
    }
    if (!m.allFinite()) {
        fail(errc::non_finite, "sym_eigen input has non-finite entries");
    }
    const MatrixX<Scalar> a = m;
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(a);
    if (solver.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "symmetric eigensolver did not converge (n=" << a.rows() << ", |M|_F=" << a.norm()
            << ", asymmetry=" << (a - a.transpose()).norm() << ")";
        fail(errc::convergence, msg.str());
    }
    BasicSpectrum<Scalar> out;
    out.eigenvalues = solver.eigenvalues().reverse();
    out.eigenvectors = solver.eigenvectors().rowwise().reverse();
    fix_column_signs(out.eigenvectors);
    return out;
}

enum class RmaxRule { CeilHalf, CeilThird };

inline int r_max_for(Index n, RmaxRule rule) {
    const auto nn = static_cast<int>(n);
    const int r = rule == RmaxRule::CeilHalf ? (nn + 1) / 2 : (nn + 2) / 3;
    return std::max(1, std::min(r, nn - 1));
}

/// argmin_{1<=j<=r_max} lambda_{j+1} / lambda_j, smallest j on ties.
/// Eigenvalues below 1e-12 * lambda_1 are floored at that value first.
template <typename Derived>
int ratio_rank(const Eigen::MatrixBase<Derived>& eigenvalues, int r_max) {
    using Scalar = typename Derived::Scalar;
    const Index n = eigenvalues.size();
    if (n < 2) {
        fail(errc::invalid, "ratio_rank needs at least two eigenvalues");
    }
    if (r_max < 1 || r_max > n - 1) {
        fail(errc::out_of_range, "r_max = " + std::to_string(r_max) + " outside 1.." + std::to_string(n - 1));
    }
    const Scalar top = eigenvalues(0);
    if (!(top > 0)) {
        fail(errc::degenerate, "ratio_rank: all eigenvalues are zero");
    }
    const Scalar floor = Scalar(1e-12) * top;
    auto floored = [&](Index k) { return std::max(eigenvalues(k), floor); };
    int best = 1;
    Scalar best_ratio = floored(1) / floored(0);
    for (int j = 2; j <= r_max; ++j) {
        const Scalar ratio = floored(j) / floored(j - 1);
        if (ratio < best_ratio) {
            best_ratio = ratio;
            best = j;
        }
    }
    return best;
}

/// Smallest r whose leading eigenvalues hold at least `threshold` of the total.
template <typename Derived>
int scree_rank(const Eigen::MatrixBase<Derived>& eigenvalues, double threshold = 0.85) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        fail(errc::invalid, "scree threshold must lie in (0, 1]");
    }
    const double total = static_cast<double>(eigenvalues.sum());
    if (!(total > 0.0)) {
        fail(errc::degenerate, "scree_rank: eigenvalues sum to zero");
    }
    double running = 0.0;
    for (Index k = 0; k < eigenvalues.size(); ++k) {
        running += static_cast<double>(eigenvalues(k));
        // shares within 1e-12 of the threshold count as reaching it
        if (running / total >= threshold - 1e-12) {
            return static_cast<int>(k + 1);
        }
    }
    return static_cast<int>(eigenvalues.size());
}

/// Share of the eigenvalue total held by the leading r.
template <typename Derived>
double eigen_share(const Eigen::MatrixBase<Derived>& eigenvalues, Index r) {
    const double total = static_cast<double>(eigenvalues.sum());
    if (!(total > 0.0)) {
        return 0.0;
    }
    return static_cast<double>(eigenvalues.head(r).sum()) / total;
}

enum class LoadingState { Orthonormal, Rotated, SumToOne };

const char* to_string(LoadingState state);

/// n x r loading with entity (row) and hub (column) labels.
struct LoadingMatrix {
    Matrix values;
    LoadingState state = LoadingState::Orthonormal;
    std::vector<std::string> entities;
    std::vector<std::string> hubs;

    [[nodiscard]] Index rows() const { return values.rows(); }
    [[nodiscard]] Index cols() const { return values.cols(); }
};

std::vector<std::string> hub_labels(const std::string& prefix, Index r);

LoadingMatrix top_loadings(const Spectrum& spectrum, Index r, const std::vector<std::string>& entities,
                           const std::string& hub_prefix = "H");

}  // namespace mfnet
