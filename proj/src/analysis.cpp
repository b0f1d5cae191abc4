#include "mfnet/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace mfnet {

std::string window_label(const MatrixSeries& series, Index start_index, Index length, Index step_months) {
    const YearMonth mid = series.time(start_index + length / 2);
    if (step_months % 12 == 0) {
        return std::to_string(mid.year);
    }
    return mid.str();
}

SideResult rotate_side(const LoadingMatrix& q, const VarimaxOptions& options) {
    SideResult side;
    side.varimax = varimax(q.values, options);
    side.sum_one = sum_one_normalize(side.varimax.rotated);
    side.alignment.method = AlignMethod::GreedyMatch;
    side.alignment.permutation.resize(static_cast<std::size_t>(q.cols()));
    std::iota(side.alignment.permutation.begin(), side.alignment.permutation.end(), Index{0});

    side.aligned.values = side.sum_one.loadings;
    side.aligned.state = LoadingState::SumToOne;
    side.aligned.entities = q.entities;
    side.aligned.hubs = q.hubs;

    const Vector& d = side.sum_one.column_sums;
    for (Index k = 0; k < d.size(); ++k) {
        if (!(d(k) > 1e-12 * side.varimax.rotated.col(k).cwiseAbs().sum())) {
            fail(errc::degenerate, "rotated loading column " + std::to_string(k + 1) +
                                       " sums to ~0; the sum-to-one factor scale is undefined");
        }
    }
    side.scaled_basis = side.varimax.rotated * d.cwiseInverse().asDiagonal();
    return side;
}

void realign(SideResult& side, const AlignmentMap& map) {
    side.alignment = map;
    side.aligned.values = apply_alignment(side.sum_one.loadings, map);
    const Matrix unaligned = side.varimax.rotated * side.sum_one.column_sums.cwiseInverse().asDiagonal();
    side.scaled_basis = apply_alignment(unaligned, map);
}

std::vector<Matrix> sum_one_factors(const ModelFit& fit, const SideResult& left, const SideResult& right) {
    // T = R D^-1, so T^-1 = D R'.
    const Matrix left_inv = left.sum_one.column_sums.asDiagonal() * left.varimax.rotation.transpose();
    const Matrix right_inv = right.sum_one.column_sums.asDiagonal() * right.varimax.rotation.transpose();
    const auto& pl = left.alignment.permutation;
    const auto& pr = right.alignment.permutation;
    std::vector<Matrix> out;
    out.reserve(fit.factors.values.size());
    for (const auto& z : fit.factors.values) {
        const Matrix f = left_inv * z * right_inv.transpose();
        Matrix aligned(f.rows(), f.cols());
        for (Index a = 0; a < f.rows(); ++a) {
            for (Index b = 0; b < f.cols(); ++b) {
                aligned(a, b) = f(pl[static_cast<std::size_t>(a)], pr[static_cast<std::size_t>(b)]);
            }
        }
        out.push_back(std::move(aligned));
    }
    return out;
}

namespace {

AlignmentMap choose_alignment(const SideResult& side, const SideResult* previous, const RollingOptions& options) {
    const std::vector<std::string>& anchors = options.anchors;
    const LoadingMatrix unaligned{side.sum_one.loadings, LoadingState::SumToOne, side.aligned.entities,
                                  side.aligned.hubs};
    if (!anchors.empty()) {
        return align_anchors(unaligned, anchors, previous ? &previous->aligned.values : nullptr);
    }
    if (previous) {
        return align_greedy(unaligned.values, previous->aligned.values);
    }
    return side.alignment;
}

}  // namespace

WindowResult analyze_window(ModelFit fit, std::string label, Index start_index, const RollingOptions& options,
                            const WindowResult* previous) {
    WindowResult w;
    w.label = std::move(label);
    w.start_index = start_index;
    w.left = rotate_side(fit.left(), options.varimax);
    if (fit.model == ModelFamily::TwoSided) {
        w.right = rotate_side(fit.right(), options.varimax);
    }
    w.fit = std::move(fit);
    if (previous && (previous->left.aligned.cols() != w.left.aligned.cols() ||
                     previous->right_side().aligned.cols() != w.right_side().aligned.cols())) {
        previous = nullptr;  // rank changed between windows; nothing to match against
    }
    realign(w.left, choose_alignment(w.left, previous ? &previous->left : nullptr, options));
    if (w.right) {
        realign(*w.right, choose_alignment(*w.right, previous ? &previous->right_side() : nullptr, options));
    }
    w.factors = sum_one_factors(w.fit, w.left, w.right_side());
    return w;
}

RollingResult rolling_fit(const MatrixSeries& series, const RollingOptions& options) {
    const Index T = series.length();
    if (options.window_months < 1 || options.step_months < 1) {
        fail(errc::invalid, "window and step must be positive");
    }
    if (options.window_months > T) {
        fail(errc::invalid, "window of " + std::to_string(options.window_months) + " months exceeds series length " +
                                std::to_string(T));
    }
    const Index count = (T - options.window_months) / options.step_months + 1;

    std::vector<std::optional<ModelFit>> fits(static_cast<std::size_t>(count));
    std::atomic<Index> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (Index w = next++; w < count; w = next++) {
            try {
                const MatrixSeries sub = window(series, w * options.step_months, options.window_months);
                fits[static_cast<std::size_t>(w)] = options.model == ModelFamily::SymmetricLoading
                                                        ? fit_model1(sub, options.r1, options.fit)
                                                        : fit_model2(sub, options.r1, options.r2, options.fit);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
            }
        }
    };
    unsigned workers = options.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.workers;
    workers = static_cast<unsigned>(std::min<Index>(workers, count));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned k = 0; k < workers; ++k) {
            pool.emplace_back(worker);
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }

    RollingResult result;
    result.model = options.model;
    result.entities = series.entities();
    for (Index w = 0; w < count; ++w) {
        const Index start = w * options.step_months;
        const WindowResult* previous = result.windows.empty() ? nullptr : &result.windows.back();
        result.windows.push_back(analyze_window(std::move(*fits[static_cast<std::size_t>(w)]),
                                                window_label(series, start, options.window_months,
                                                             options.step_months),
                                                start, options, previous));
    }
    return result;
}

std::vector<RankRow> rank_table(const RollingResult& result) {
    std::vector<RankRow> rows;
    for (const auto& w : result.windows) {
        RankRow row;
        row.label = w.label;
        row.r_left = static_cast<int>(w.fit.r1());
        if (w.fit.model == ModelFamily::TwoSided) {
            row.r_right = static_cast<int>(w.fit.r2());
        }
        row.ratio_left = w.fit.ranks_left.ratio;
        row.scree_left = w.fit.ranks_left.scree;
        if (w.fit.ranks_right) {
            row.ratio_right = w.fit.ranks_right->ratio;
            row.scree_right = w.fit.ranks_right->scree;
        }
        row.variance_explained = w.fit.variance_explained;
        row.side_variance_explained = w.fit.side_variance_explained;
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------

Matrix network_truncation(const Matrix& sum_one_loadings) {
    Matrix out = Matrix::Zero(sum_one_loadings.rows(), sum_one_loadings.cols());
    for (Index k = 0; k < sum_one_loadings.cols(); ++k) {
        const auto col = sum_one_loadings.col(k);
        for (Index i = 0; i < col.size(); ++i) {
            if (std::round(10.0 * col(i)) != 0.0) {  // std::round: half away from zero
                out(i, k) = col(i);
            }
        }
        double total = out.col(k).sum();
        if (!(total > 0.0)) {
            Index arg = 0;
            col.maxCoeff(&arg);
            out(arg, k) = 1.0;
            total = 1.0;
        }
        out.col(k) /= total;
    }
    return out;
}

HubNetwork hub_network(std::string label, const LoadingMatrix& left, const LoadingMatrix& right,
                       std::span<const Matrix> factors) {
    if (factors.empty()) {
        fail(errc::invalid, "hub network needs at least one factor matrix");
    }
    HubNetwork net;
    net.label = std::move(label);
    net.mean_factor = Matrix::Zero(factors.front().rows(), factors.front().cols());
    for (const auto& f : factors) {
        net.mean_factor += f;
    }
    net.mean_factor /= static_cast<double>(factors.size());
    if (net.mean_factor.rows() != left.cols() || net.mean_factor.cols() != right.cols()) {
        fail(errc::invalid, "factor shape does not match loadings");
    }
    net.truncated_left = network_truncation(left.values);
    net.truncated_right = network_truncation(right.values);
    net.hub_self_volume = net.mean_factor.diagonal();
    for (Index a = 0; a < net.mean_factor.rows(); ++a) {
        for (Index b = 0; b < net.mean_factor.cols(); ++b) {
            if (net.mean_factor(a, b) < 0.0) {
                net.direction_flips.emplace_back(a, b);
            }
        }
    }
    net.entities = left.entities;
    net.hubs_left = left.hubs;
    net.hubs_right = right.hubs;
    return net;
}

HubNetwork hub_network(const WindowResult& window) {
    return hub_network(window.label, window.left.aligned, window.right_side().aligned, window.factors);
}

// ---------------------------------------------------------------------------

ClusterTree ward_cluster(const Matrix& features, Index k, WardInput input) {
    const Index n = features.rows();
    if (n < 1) {
        fail(errc::invalid, "clustering needs at least one entity");
    }
    if (k < 1 || k > n) {
        fail(errc::out_of_range, "k = " + std::to_string(k) + " outside 1.." + std::to_string(n));
    }
    Matrix d(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const double sq = (features.row(i) - features.row(j)).squaredNorm();
            d(i, j) = input == WardInput::SquaredEuclidean ? sq : std::sqrt(sq);
        }
    }

    std::vector<bool> active(static_cast<std::size_t>(n), true);
    std::vector<Index> size(static_cast<std::size_t>(n), 1);
    std::vector<int> id(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        id[static_cast<std::size_t>(i)] = -static_cast<int>(i + 1);
    }

    ClusterTree tree;
    for (Index step = 1; step < n; ++step) {
        Index bi = -1;
        Index bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < n; ++i) {
            if (!active[static_cast<std::size_t>(i)]) {
                continue;
            }
            for (Index j = i + 1; j < n; ++j) {
                if (active[static_cast<std::size_t>(j)] && d(i, j) < best) {
                    best = d(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        const auto ui = static_cast<std::size_t>(bi);
        const auto uj = static_cast<std::size_t>(bj);
        const double nu = static_cast<double>(size[ui]);
        const double nv = static_cast<double>(size[uj]);
        for (Index w = 0; w < n; ++w) {
            const auto uw = static_cast<std::size_t>(w);
            if (!active[uw] || w == bi || w == bj) {
                continue;
            }
            const double nw = static_cast<double>(size[uw]);
            const double updated = ((nu + nw) * d(bi, w) + (nv + nw) * d(bj, w) - nw * best) / (nu + nv + nw);
            d(bi, w) = d(w, bi) = updated;
        }

        Merge m;
        int a = id[ui];
        int b = id[uj];
        // hclust ordering: singletons before clusters, then ascending.
        if ((a > 0 && b < 0) || (a < 0 && b < 0 && a < b) || (a > 0 && b > 0 && a > b)) {
            std::swap(a, b);
        }
        m.left = a;
        m.right = b;
        m.height = best;
        m.size = size[ui] + size[uj];
        tree.merges.push_back(m);

        active[uj] = false;
        size[ui] += size[uj];
        id[ui] = static_cast<int>(step);
    }
    tree.labels = cut_tree(tree.merges, n, k);
    return tree;
}

std::vector<int> cut_tree(const std::vector<Merge>& merges, Index n, Index k) {
    if (k < 1 || k > n || static_cast<Index>(merges.size()) != n - 1) {
        fail(errc::invalid, "cut_tree: inconsistent tree or k");
    }
    std::vector<Index> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), Index{0});
    auto find = [&](Index x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        }
        return x;
    };
    // Representative singleton of every merge step.
    std::vector<Index> rep(merges.size() + 1, 0);
    auto member = [&](int node) {
        return node < 0 ? static_cast<Index>(-node - 1) : rep[static_cast<std::size_t>(node)];
    };
    for (std::size_t s = 0; s < merges.size(); ++s) {
        const Index a = member(merges[s].left);
        const Index b = member(merges[s].right);
        rep[s + 1] = a;
        if (static_cast<Index>(s) < n - k) {
            parent[static_cast<std::size_t>(find(b))] = find(a);
        }
    }
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    std::vector<int> root_label(static_cast<std::size_t>(n), 0);
    int next_label = 0;
    for (Index i = 0; i < n; ++i) {
        const auto root = static_cast<std::size_t>(find(i));
        if (root_label[root] == 0) {
            root_label[root] = ++next_label;
        }
        labels[static_cast<std::size_t>(i)] = root_label[root];
    }
    return labels;
}

Matrix clustering_features(const RollingResult& result, FeatureSide side, std::optional<Index> window) {
    if (result.windows.empty()) {
        fail(errc::invalid, "no windows to cluster");
    }
    std::vector<const Matrix*> blocks;
    auto add = [&](const WindowResult& w) {
        if (side != FeatureSide::Right) {
            blocks.push_back(&w.left.aligned.values);
        }
        if (side != FeatureSide::Left) {
            blocks.push_back(&w.right_side().aligned.values);
        }
    };
    if (window) {
        if (*window < 0 || *window >= static_cast<Index>(result.windows.size())) {
            fail(errc::out_of_range, "window index out of range");
        }
        add(result.windows[static_cast<std::size_t>(*window)]);
    } else {
        for (const auto& w : result.windows) {
            add(w);
        }
    }
    Index cols = 0;
    for (const Matrix* b : blocks) {
        cols += b->cols();
    }
    Matrix features(blocks.front()->rows(), cols);
    Index at = 0;
    for (const Matrix* b : blocks) {
        features.middleCols(at, b->cols()) = *b;
        at += b->cols();
    }
    return features;
}

}  // namespace mfnet
