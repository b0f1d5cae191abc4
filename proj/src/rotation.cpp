#include "mfnet/rotation.hpp"

#include "mfnet/log.hpp"

#include <algorithm>
#include <numeric>

namespace mfnet {

SumOneResult sum_one_normalize(const Matrix& rotated) {
    SumOneResult out;
    const Index r = rotated.cols();
    out.loadings = rotated.cwiseMax(0.0);
    out.truncated_mass.resize(r);
    out.column_sums = rotated.colwise().sum().transpose();
    for (Index k = 0; k < r; ++k) {
        const double positive = out.loadings.col(k).sum();
        if (!(positive > 0.0)) {
            fail(errc::degenerate, "loading column " + std::to_string(k + 1) +
                                       " has no positive entry; sign convention failed");
        }
        const double absolute = rotated.col(k).cwiseAbs().sum();
        out.truncated_mass(k) = (absolute - positive) / absolute;
        out.loadings.col(k) /= positive;
    }
    return out;
}

const char* to_string(AlignMethod method) {
    switch (method) {
    case AlignMethod::Anchor:
        return "anchor";
    case AlignMethod::GreedyMatch:
        return "greedy_match";
    case AlignMethod::Exhaustive:
        return "exhaustive";
    }
    return "greedy_match";
}

bool is_permutation(std::span<const Index> perm, Index r) {
    if (static_cast<Index>(perm.size()) != r) {
        return false;
    }
    std::vector<bool> seen(static_cast<std::size_t>(r), false);
    for (Index p : perm) {
        if (p < 0 || p >= r || seen[static_cast<std::size_t>(p)]) {
            return false;
        }
        seen[static_cast<std::size_t>(p)] = true;
    }
    return true;
}

Matrix column_cosines(const Matrix& reference, const Matrix& current) {
    if (reference.rows() != current.rows() || reference.cols() != current.cols()) {
        fail(errc::invalid, "alignment needs loadings of equal shape");
    }
    Matrix cos = Matrix::Zero(reference.cols(), current.cols());
    for (Index a = 0; a < reference.cols(); ++a) {
        for (Index b = 0; b < current.cols(); ++b) {
            const double denom = reference.col(a).norm() * current.col(b).norm();
            cos(a, b) = denom > 0.0 ? std::abs(reference.col(a).dot(current.col(b))) / denom : 0.0;
        }
    }
    return cos;
}

namespace {

// Greedy over the given reference slots and current columns; fills perm.
void greedy_fill(const Matrix& cos, std::vector<Index> slots, std::vector<Index> columns, std::vector<Index>& perm) {
    while (!slots.empty()) {
        std::size_t best_s = 0;
        std::size_t best_c = 0;
        double best = -1.0;
        // Scan order (slot, column) ascending with strict improvement keeps the
        // lowest indices on ties.
        for (std::size_t s = 0; s < slots.size(); ++s) {
            for (std::size_t c = 0; c < columns.size(); ++c) {
                const double value = cos(slots[s], columns[c]);
                if (value > best) {
                    best = value;
                    best_s = s;
                    best_c = c;
                }
            }
        }
        perm[static_cast<std::size_t>(slots[best_s])] = columns[best_c];
        slots.erase(slots.begin() + static_cast<std::ptrdiff_t>(best_s));
        columns.erase(columns.begin() + static_cast<std::ptrdiff_t>(best_c));
    }
}

std::vector<Index> iota(Index r) {
    std::vector<Index> v(static_cast<std::size_t>(r));
    std::iota(v.begin(), v.end(), Index{0});
    return v;
}

}  // namespace

AlignmentMap align_greedy(const Matrix& current, const Matrix& reference) {
    const Matrix cos = column_cosines(reference, current);
    AlignmentMap map;
    map.method = AlignMethod::GreedyMatch;
    map.permutation.assign(static_cast<std::size_t>(current.cols()), -1);
    greedy_fill(cos, iota(current.cols()), iota(current.cols()), map.permutation);
    return map;
}

AlignmentMap align_exhaustive(const Matrix& current, const Matrix& reference) {
    const Index r = current.cols();
    if (r > 8) {
        fail(errc::invalid, "exhaustive alignment limited to r <= 8");
    }
    const Matrix cos = column_cosines(reference, current);
    std::vector<Index> perm = iota(r);
    std::vector<Index> best = perm;
    double best_score = -1.0;
    do {
        double score = 0.0;
        for (Index k = 0; k < r; ++k) {
            score += cos(k, perm[static_cast<std::size_t>(k)]);
        }
        if (score > best_score + 1e-15) {
            best_score = score;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    AlignmentMap map;
    map.method = AlignMethod::Exhaustive;
    map.permutation = best;
    return map;
}

AlignmentMap align_anchors(const LoadingMatrix& current, std::span<const std::string> anchors,
                           const Matrix* reference) {
    const Index r = current.cols();
    AlignmentMap map;
    map.method = AlignMethod::Anchor;
    map.permutation.assign(static_cast<std::size_t>(r), -1);
    std::vector<bool> taken(static_cast<std::size_t>(r), false);
    std::optional<Matrix> cos;
    if (reference) {
        cos = column_cosines(*reference, current.values);
    }

    const auto slots = std::min<Index>(r, static_cast<Index>(anchors.size()));
    for (Index p = 0; p < slots; ++p) {
        const std::string& anchor = anchors[static_cast<std::size_t>(p)];
        auto it = std::find(current.entities.begin(), current.entities.end(), anchor);
        if (it == current.entities.end()) {
            fail(errc::invalid, "anchor entity '" + anchor + "' not among the loading's entities");
        }
        const auto row = static_cast<Index>(it - current.entities.begin());

        Index claim = 0;
        for (Index k = 1; k < r; ++k) {
            if (current.values(row, k) > current.values(row, claim)) {
                claim = k;
            }
        }
        AnchorAssignment report;
        report.anchor = anchor;
        if (taken[static_cast<std::size_t>(claim)]) {
            report.conflict = true;
            Index pick = -1;
            for (Index k = 0; k < r; ++k) {
                if (taken[static_cast<std::size_t>(k)]) {
                    continue;
                }
                const double score = cos ? (*cos)(p, k) : current.values(row, k);
                const double incumbent = pick < 0 ? 0.0 : (cos ? (*cos)(p, pick) : current.values(row, pick));
                if (pick < 0 || score > incumbent) {
                    pick = k;
                }
            }
            log::info("hub conflict on anchor '" + anchor + "': hub " + std::to_string(claim + 1) +
                      " already placed, using hub " + std::to_string(pick + 1));
            claim = pick;
        }
        taken[static_cast<std::size_t>(claim)] = true;
        map.permutation[static_cast<std::size_t>(p)] = claim;
        report.hub = claim;
        report.loading = current.values(row, claim);
        map.anchor_report.push_back(report);
    }

    std::vector<Index> free_slots;
    std::vector<Index> free_columns;
    for (Index k = slots; k < r; ++k) {
        free_slots.push_back(k);
    }
    for (Index k = 0; k < r; ++k) {
        if (!taken[static_cast<std::size_t>(k)]) {
            free_columns.push_back(k);
        }
    }
    if (cos) {
        greedy_fill(*cos, free_slots, free_columns, map.permutation);
    } else {
        for (std::size_t s = 0; s < free_slots.size(); ++s) {
            map.permutation[static_cast<std::size_t>(free_slots[s])] = free_columns[s];
        }
    }
    return map;
}

AlignmentMap align_hubs(const LoadingMatrix& current, const LoadingMatrix* reference,
                        std::span<const std::string> anchors, AlignMethod method) {
    if (reference && (reference->rows() != current.rows() || reference->cols() != current.cols())) {
        fail(errc::invalid, "reference and current loadings differ in shape");
    }
    switch (method) {
    case AlignMethod::Anchor:
        return align_anchors(current, anchors, reference ? &reference->values : nullptr);
    case AlignMethod::GreedyMatch:
        if (!reference) {
            fail(errc::invalid, "greedy alignment needs a reference loading");
        }
        return align_greedy(current.values, reference->values);
    case AlignMethod::Exhaustive:
        if (!reference) {
            fail(errc::invalid, "exhaustive alignment needs a reference loading");
        }
        return align_exhaustive(current.values, reference->values);
    }
    fail(errc::invalid, "unknown alignment method");
}

Matrix apply_alignment(const Matrix& m, const AlignmentMap& map) {
    if (!is_permutation(map.permutation, m.cols())) {
        fail(errc::invalid, "alignment is not a permutation of the loading's columns");
    }
    Matrix out(m.rows(), m.cols());
    for (Index k = 0; k < m.cols(); ++k) {
        out.col(k) = m.col(map.permutation[static_cast<std::size_t>(k)]);
    }
    return out;
}

LoadingMatrix apply_alignment(const LoadingMatrix& m, const AlignmentMap& map) {
    LoadingMatrix out = m;
    out.values = apply_alignment(m.values, map);
    return out;
}

}  // namespace mfnet
