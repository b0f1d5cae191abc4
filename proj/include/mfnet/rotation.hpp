#pragma once

#include "mfnet/spectral.hpp"
#include "mfnet/types.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mfnet {

/// V(L) = sum_k [ (1/n) sum_i L_ik^4 - ((1/n) sum_i L_ik^2)^2 ].
template <typename Derived>
typename Derived::Scalar varimax_criterion(const Eigen::MatrixBase<Derived>& loadings) {
    using Scalar = typename Derived::Scalar;
    const Scalar n = static_cast<Scalar>(loadings.rows());
    Scalar total = 0;
    for (Index k = 0; k < loadings.cols(); ++k) {
        const auto sq = loadings.col(k).array().square();
        const Scalar mean_sq = sq.sum() / n;
        total += sq.square().sum() / n - mean_sq * mean_sq;
    }
    return total;
}

struct VarimaxOptions {
    double tolerance = 1e-8;  // stop when a sweep gains less than this
    int max_sweeps = 1000;
    /// Flip columns whose entries sum negative, so hubs load mostly positive.
    bool orient_positive = true;
};

template <typename Scalar>
struct VarimaxResult {
    MatrixX<Scalar> rotated;
    MatrixX<Scalar> rotation;  // r x r orthogonal, rotated = input * rotation
    std::vector<Scalar> criterion_trace;  // value before sweep 1, after each sweep
    int sweeps = 0;
    bool converged = false;
};

/// Orthogonal varimax by pairwise planar rotations, sweeping the column
/// pairs (k, l) in lexicographic order. Each planar angle is the exact
/// maximiser of the pair's contribution; a step is kept only when the full
/// criterion does not drop, so the trace is non-decreasing.
template <typename Derived>
VarimaxResult<typename Derived::Scalar> varimax(const Eigen::MatrixBase<Derived>& loadings,
                                                const VarimaxOptions& options = {}) {
    using Scalar = typename Derived::Scalar;
    const Index n = loadings.rows();
    const Index r = loadings.cols();
    VarimaxResult<Scalar> out;
    out.rotated = loadings;
    out.rotation = MatrixX<Scalar>::Identity(r, r);
    Scalar current = varimax_criterion(out.rotated);
    out.criterion_trace.push_back(current);
    if (r < 2) {
        out.converged = true;
        return out;
    }
    const Scalar nn = static_cast<Scalar>(n);
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
        const Scalar before = current;
        for (Index k = 0; k + 1 < r; ++k) {
            for (Index l = k + 1; l < r; ++l) {
                const auto x = out.rotated.col(k).array();
                const auto y = out.rotated.col(l).array();
                const VectorX<Scalar> u = (x.square() - y.square()).matrix();
                const VectorX<Scalar> v = (Scalar(2) * x * y).matrix();
                const Scalar a = u.sum();
                const Scalar b = v.sum();
                const Scalar c = (u.array().square() - v.array().square()).sum();
                const Scalar d = Scalar(2) * u.dot(v);
                const Scalar num = d - Scalar(2) * a * b / nn;
                const Scalar den = c - (a * a - b * b) / nn;
                if (num == Scalar(0) && den >= Scalar(0)) {
                    continue;
                }
                const Scalar phi = std::atan2(num, den) / Scalar(4);
                const Scalar cs = std::cos(phi);
                const Scalar sn = std::sin(phi);

                MatrixX<Scalar> trial = out.rotated;
                trial.col(k) = cs * out.rotated.col(k) + sn * out.rotated.col(l);
                trial.col(l) = -sn * out.rotated.col(k) + cs * out.rotated.col(l);
                const Scalar value = varimax_criterion(trial);
                if (value < current) {
                    continue;
                }
                out.rotated = std::move(trial);
                const VectorX<Scalar> rk = out.rotation.col(k);
                const VectorX<Scalar> rl = out.rotation.col(l);
                out.rotation.col(k) = cs * rk + sn * rl;
                out.rotation.col(l) = -sn * rk + cs * rl;
                current = value;
            }
        }
        out.criterion_trace.push_back(current);
        out.sweeps = sweep + 1;
        if (current - before < Scalar(options.tolerance)) {
            out.converged = true;
            break;
        }
    }
    if (options.orient_positive) {
        for (Index k = 0; k < r; ++k) {
            if (out.rotated.col(k).sum() < Scalar(0)) {
                out.rotated.col(k) = -out.rotated.col(k);
                out.rotation.col(k) = -out.rotation.col(k);
            }
        }
    }
    return out;
}

struct SumOneResult {
    Matrix loadings;         // nonnegative, columns sum to one
    Vector truncated_mass;   // per column: negative mass / total absolute mass
    Vector column_sums;      // per column sum before truncation
};

/// Truncates negatives to zero, then divides each column by its sum.
SumOneResult sum_one_normalize(const Matrix& rotated);

enum class AlignMethod { Anchor, GreedyMatch, Exhaustive };

const char* to_string(AlignMethod method);

struct AnchorAssignment {
    std::string anchor;
    Index hub = -1;        // column of `current` placed in this slot
    double loading = 0.0;  // that column's loading on the anchor
    bool conflict = false; // resolved by the fallback matcher
};

/// permutation[k] = column of the current loading placed at slot k.
struct AlignmentMap {
    std::vector<Index> permutation;
    std::vector<AnchorAssignment> anchor_report;
    AlignMethod method = AlignMethod::GreedyMatch;
};

/// |cos| similarity between reference column a and current column b.
Matrix column_cosines(const Matrix& reference, const Matrix& current);

/// Greedy maximum-cosine assignment of current columns to reference slots;
/// ties go to the lower hub index.
AlignmentMap align_greedy(const Matrix& current, const Matrix& reference);

/// Optimal assignment by enumeration (r <= 8).
AlignmentMap align_exhaustive(const Matrix& current, const Matrix& reference);

/// Anchor slots first: slot p takes the hub with the largest loading on
/// anchors[p]. A hub claimed twice is resolved by greedy matching against
/// `reference` when given, else by the next-largest unclaimed loading.
/// Remaining hubs follow in their original order, or greedily matched to the
/// remaining reference slots when a reference is given.
AlignmentMap align_anchors(const LoadingMatrix& current, std::span<const std::string> anchors,
                           const Matrix* reference = nullptr);

AlignmentMap align_hubs(const LoadingMatrix& current, const LoadingMatrix* reference,
                        std::span<const std::string> anchors, AlignMethod method);

/// Columns reordered so column k is old column permutation[k].
Matrix apply_alignment(const Matrix& m, const AlignmentMap& map);
LoadingMatrix apply_alignment(const LoadingMatrix& m, const AlignmentMap& map);

bool is_permutation(std::span<const Index> perm, Index r);

}  // namespace mfnet
