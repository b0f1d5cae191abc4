// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include "support.hpp"

#include "mfnet/analysis.hpp"
#include "mfnet/cli.hpp"
#include "mfnet/csv.hpp"
#include "mfnet/export.hpp"
#include "mfnet/log.hpp"
#include "mfnet/simgen.hpp"

#include <Eigen/Eigenvalues>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

using namespace mfnet;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kOracleRel = 1e-10;
constexpr double kOracleSeconds = 30.0;
constexpr double kPsdRel = 1e-10;
constexpr double kExactVe = 1e-8;
constexpr double kExactDistance = 1e-6;
constexpr double kConsistencyMean = 0.1;
constexpr double kConsistencySeconds = 300.0;
constexpr double kRatioShare = 0.90;
constexpr double kScreeTail = 1e-8;
constexpr double kOrthogonal = 1e-10;
constexpr double kSpan = 1e-12;
constexpr double kResidual = 1e-10;
constexpr double kMass = 1e-8;
constexpr double kClusterShare = 0.95;

struct Verdict {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// 1 ------------------------------------------------------------------------
Verdict oracle_equivalence() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const Index n = std::uniform_int_distribution<Index>(2, 8)(rng);
        const int h0 = std::uniform_int_distribution<int>(1, 3)(rng);
        const Index T = std::uniform_int_distribution<Index>(h0 + 2, 40)(rng);
        const std::uint64_t seed = rng();
        const MatrixSeries s = rep % 3 == 0   ? testing::signed_series(n, T, seed)
                               : rep % 3 == 1 ? testing::random_series(n, T, seed)
                                              : testing::random_series(n, T, seed, true);
        for (MomentMode mode : {MomentMode::Col, MomentMode::Row, MomentMode::Both}) {
            MomentOptions o;
            o.h0 = h0;
            o.mode = mode;
            o.path = MomentPath::Fast;
            const Matrix fast = build_m_matrix(s, o).m;
            o.path = MomentPath::Naive;
            const Matrix naive = build_m_matrix(s, o).m;
            worst = std::max(worst, testing::max_rel_diff(fast, naive));
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= kOracleRel && secs < kOracleSeconds,
            "50 instances x 3 modes, max rel diff " + fmt("%.2e", worst) + " (tol 1e-10), " + fmt("%.2f", secs) +
                " s (limit 30 s)"};
}

// 2 ------------------------------------------------------------------------
Verdict psd_property() {
    std::mt19937_64 rng(202);
    double worst = 0.0;
    int count = 0;
    auto check = [&](const MatrixSeries& s, int h0) {
        MomentOptions o;
        o.h0 = h0;
        const Matrix m = build_m_matrix(s, o).m;
        Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
        const double top = es.eigenvalues().maxCoeff();
        const double low = es.eigenvalues().minCoeff();
        // Ratio against the allowed floor; zero matrices give exactly 0.
        const double score = top > 0.0 ? -low / top : (low < 0.0 ? 1.0 : 0.0);
        worst = std::max(worst, score);
        ++count;
    };
    for (int rep = 0; rep < 100; ++rep) {
        const Index n = 2 + rep % 9;
        const Index T = 10 + rep % 31;
        const int h0 = 1 + rep % 3;
        switch (rep % 5) {
        case 0:
            check(MatrixSeries(testing::labels(n), {2000, 1}, std::vector<Matrix>(T, Matrix::Zero(n, n))), h0);
            break;
        case 1:
            check(MatrixSeries(testing::labels(n), {2000, 1},
                               std::vector<Matrix>(T, Matrix::Constant(n, n, 1.0 + rep))), h0);
            break;
        case 2: {
            const Vector u = testing::uniform(n, 1, rng, 0.0, 1.0).col(0);
            const Vector v = testing::uniform(n, 1, rng, 0.0, 1.0).col(0);
            std::vector<Matrix> xs;
            for (Index t = 0; t < T; ++t) {
                xs.push_back(std::uniform_real_distribution<double>(0.0, 5.0)(rng) * u * v.transpose());
            }
            check(MatrixSeries(testing::labels(n), {2000, 1}, xs, true), h0);
            break;
        }
        case 3:
            check(testing::random_series(n, T, rng()), h0);
            break;
        default: {
            TruthSpec spec;
            spec.n = std::max<Index>(n, 3);
            spec.r1 = 2;
            spec.noise = NoiseKind::CrossCorrelated;
            spec.noise_correlation = 0.4;
            spec.seed = rng();
            check(simulate(make_truth(spec), T).first, h0);
            break;
        }
        }
    }
    return {count == 100 && worst <= kPsdRel,
            std::to_string(count) + " inputs (zero, constant, rank-1, random, correlated), worst -min/max eigenvalue " +
                fmt("%.2e", worst) + " (tol 1e-10)"};
}

// 3 ------------------------------------------------------------------------
Verdict exact_recovery() {
    TruthSpec spec;
    spec.n = 20;
    spec.r1 = 3;
    spec.phi = 0.7;
    spec.sigma_e = 0.0;
    spec.mask_diagonal = false;
    spec.seed = 303;
    const auto [s1, t1] = simulate(make_truth(spec), 200);
    const ModelFit f1 = fit_model1(s1, 3);
    const double d1 = subspace_distance(f1.left().values, orthonormal_basis(t1.a_left));

    spec.model = ModelFamily::TwoSided;
    spec.r2 = 2;
    const auto [s2, t2] = simulate(make_truth(spec), 200);
    const ModelFit f2 = fit_model2(s2, 3, 2);
    const double d2l = subspace_distance(f2.left().values, orthonormal_basis(t2.a_left));
    const double d2r = subspace_distance(f2.right().values, orthonormal_basis(t2.a_right));

    const bool ok = f1.variance_explained >= 1.0 - kExactVe && d1 <= kExactDistance &&
                    f2.variance_explained >= 1.0 - kExactVe && d2l <= kExactDistance && d2r <= kExactDistance;
    return {ok, "model 1: 1-VE " + fmt("%.1e", 1.0 - f1.variance_explained) + ", dist " + fmt("%.1e", d1) +
                    "; model 2 (3,2): 1-VE " + fmt("%.1e", 1.0 - f2.variance_explained) + ", dist " +
                    fmt("%.1e", d2l) + "/" + fmt("%.1e", d2r) + " (tol 1e-8, 1e-6)"};
}

// 4 ------------------------------------------------------------------------
Verdict consistency() {
    const auto t0 = Clock::now();
    TruthSpec spec;
    spec.n = 20;
    spec.r1 = 3;
    spec.phi = 0.7;
    spec.sigma_f = 1.0;
    spec.sigma_e = 1.0;
    spec.seed = 4000;
    std::vector<double> means;
    for (Index T : {100, 400, 1600}) {
        const auto rec = monte_carlo(spec, T, 50);
        double m = 0.0;
        for (const auto& r : rec) {
            m += r.distance_left;
        }
        means.push_back(m / 50.0);
    }
    const double secs = seconds_since(t0);
    const bool ok = means[0] > means[1] && means[1] > means[2] && means[2] < kConsistencyMean &&
                    secs < kConsistencySeconds;
    return {ok, "mean distance over 50 seeds at T=100/400/1600: " + fmt("%.4f", means[0]) + " / " +
                    fmt("%.4f", means[1]) + " / " + fmt("%.4f", means[2]) + " (need decreasing, last < 0.1), " +
                    fmt("%.1f", secs) + " s (limit 300 s)"};
}

// 5 ------------------------------------------------------------------------
Verdict rank_selection() {
    TruthSpec spec;
    spec.n = 20;
    spec.r1 = 3;
    spec.sigma_e = 0.5;
    spec.seed = 5000;
    int hits = 0;
    for (const auto& r : monte_carlo(spec, 800, 100)) {
        hits += r.ratio_left == 3 ? 1 : 0;
    }

    // Noise-free spectra.
    int scree_at_least = 0;
    int tail_cases = 0;
    int scree_exact = 0;
    spec.sigma_e = 0.0;
    spec.mask_diagonal = false;
    for (int rep = 0; rep < 100; ++rep) {
        spec.seed = 5500 + static_cast<std::uint64_t>(rep);
        const auto s = simulate(make_truth(spec), 400).first;
        const ModelFit f = fit_model1(s, 3);
        const Vector& ev = f.eigenvalues_left;
        scree_at_least += f.ranks_left.scree >= 3 ? 1 : 0;
        if ((ev.tail(ev.size() - 3).array().abs() < kScreeTail * ev(0)).all()) {
            ++tail_cases;
            scree_exact += f.ranks_left.scree == 3 ? 1 : 0;
        }
    }
    const bool ok = hits >= kRatioShare * 100 && scree_at_least == 100 && tail_cases > 0 && scree_exact == tail_cases;
    return {ok, "ratio = 3 in " + std::to_string(hits) + "/100 at T=800, sigma_e=0.5 (need >= 90); noise-free scree >= 3 in " +
                    std::to_string(scree_at_least) + "/100, == 3 in " + std::to_string(scree_exact) + "/" +
                    std::to_string(tail_cases) + " with tail < 1e-8 lambda_1"};
}

// 6 ------------------------------------------------------------------------
Verdict varimax_contract() {
    std::mt19937_64 rng(606);
    int monotone = 0;
    double worst_orth = 0.0;
    double worst_span = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const Index n = std::uniform_int_distribution<Index>(4, 30)(rng);
        const Index r = std::uniform_int_distribution<Index>(1, std::min<Index>(n - 1, 8))(rng);
        const Matrix q = testing::random_orthonormal(n, r, rng);
        const auto res = varimax(q);
        bool up = true;
        for (std::size_t k = 1; k < res.criterion_trace.size(); ++k) {
            up = up && res.criterion_trace[k] >= res.criterion_trace[k - 1];
        }
        monotone += up ? 1 : 0;
        worst_orth = std::max(worst_orth,
                              (res.rotation.transpose() * res.rotation - Matrix::Identity(r, r)).cwiseAbs().maxCoeff());
        worst_span = std::max(worst_span, subspace_distance(q, res.rotated));
    }

    // Block-structured input: every row loads on one hub.
    const Matrix block = planted_hub_loading(15, 3, 2.5);
    std::vector<Index> sigma{2, 0, 1};
    Matrix shuffled(15, 3);
    for (Index k = 0; k < 3; ++k) {
        shuffled.col(k) = (k == 1 ? -1.0 : 1.0) * block.col(sigma[static_cast<std::size_t>(k)]);
    }
    bool fixed = true;
    for (const Matrix* input : {&block, static_cast<const Matrix*>(&shuffled)}) {
        const auto res = varimax(*input, {1e-8, 1000, false});
        const Matrix a = res.rotation.cwiseAbs();
        for (Index i = 0; i < 3; ++i) {
            Index arg = 0;
            const double top = a.row(i).maxCoeff(&arg);
            fixed = fixed && std::abs(top - 1.0) <= kOrthogonal && a.row(i).sum() - top <= kOrthogonal &&
                    a.col(arg).sum() - top <= kOrthogonal;
        }
        fixed = fixed && std::abs(varimax_criterion(res.rotated) - varimax_criterion(*input)) <= kOrthogonal;
    }

    const bool ok = monotone == 100 && worst_orth <= kOrthogonal && worst_span <= kSpan && fixed;
    return {ok, "trace non-decreasing " + std::to_string(monotone) + "/100, max |R'R-I| " + fmt("%.1e", worst_orth) +
                    " (tol 1e-10), max span distance " + fmt("%.1e", worst_span) +
                    " (tol 1e-12), block input gives signed permutation: " + (fixed ? "yes" : "no")};
}

// 7 ------------------------------------------------------------------------
Verdict residual_identity() {
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        const Index n = 5 + rep;
        const MatrixSeries s = rep % 2 == 0 ? testing::signed_series(n, 30, 700 + rep)
                                            : testing::random_series(n, 30, 700 + rep);
        const bool two = rep >= 5;
        const ModelFit fit = two ? fit_model2(s, 2, 3) : fit_model1(s, 3);
        const Matrix& q1 = fit.left().values;
        const Matrix& q2 = fit.right().values;
        const Matrix p1 = q1 * q1.transpose();
        const Matrix p2 = q2 * q2.transpose();
        const Matrix eye = Matrix::Identity(n, n);
        for (Index t = 0; t < s.length(); ++t) {
            const Matrix& x = s.filled(t);
            const Matrix direct = x - q1 * fit.factors.values[static_cast<std::size_t>(t)] * q2.transpose();
            const Matrix split = (eye - p1) * x + p1 * x * (eye - p2);
            worst = std::max(worst, (direct - split).cwiseAbs().maxCoeff());
        }
    }
    return {worst <= kResidual, "10 fits (5 symmetric, 5 two-sided), max entry gap " + fmt("%.1e", worst) +
                                    " (tol 1e-10)"};
}

// 8 ------------------------------------------------------------------------
Verdict mass_conservation() {
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        TruthSpec spec;
        spec.model = rep % 2 == 0 ? ModelFamily::SymmetricLoading : ModelFamily::TwoSided;
        spec.n = 12 + rep;
        spec.r1 = 3;
        spec.r2 = 2 + rep % 3;
        spec.loading = rep % 3 == 0 ? LoadingKind::Gaussian : LoadingKind::PlantedHubs;
        spec.sigma_f = 2.0;
        spec.sigma_e = 0.5;
        spec.seed = 800 + static_cast<std::uint64_t>(rep);
        const auto s = simulate(make_truth(spec), 60).first;
        const ModelFit fit = spec.model == ModelFamily::SymmetricLoading ? fit_model1(s, 3) : fit_model2(s, 3, spec.r2);
        RollingOptions o;
        o.model = spec.model;
        const WindowResult w = analyze_window(fit, "w", 0, o);
        const HubNetwork net = hub_network(w);
        double flow = 0.0;
        for (const Matrix& xhat : fitted_values(fit)) {
            flow += xhat.sum();
        }
        flow /= static_cast<double>(s.length());
        const double total = net.mean_factor.sum();
        const double scale = std::max({std::abs(flow), std::abs(total), 1e-300});
        worst = std::max(worst, std::abs(total - flow) / scale);
    }
    return {worst <= kMass, "10 windows, max relative gap between mean-factor mass and mean fitted flow " +
                                fmt("%.1e", worst) + " (tol 1e-8)"};
}

// 9 ------------------------------------------------------------------------
Verdict clustering() {
    // 1-D points 0, 1, 3, 7, 8 under the squared-distance Lance-Williams
    // recurrence, worked by hand:
    //   {0},{1} at 1;  {7},{8} at 1;
    //   d({0,1},{3}) = (2*9 + 2*4 - 1)/3 = 25/3
    //   d({0,1,3},{7,8}) = 2*3*2/5 * (7.5 - 4/3)^2 = 1369/15
    Matrix x(5, 1);
    x << 0, 1, 3, 7, 8;
    const ClusterTree tree = ward_cluster(x, 2);
    const std::vector<Merge> want{{-1, -2, 1.0, 2}, {-4, -5, 1.0, 2}, {-3, 1, 25.0 / 3.0, 3}, {2, 3, 1369.0 / 15.0, 5}};
    bool hand = tree.merges.size() == want.size() && tree.labels == std::vector<int>{1, 1, 1, 2, 2};
    for (std::size_t s = 0; hand && s < want.size(); ++s) {
        const Merge& m = tree.merges[s];
        hand = m.left == want[s].left && m.right == want[s].right && m.size == want[s].size &&
               std::abs(m.height - want[s].height) <= 1e-12 * want[s].height;
    }

    // Planted two-block partition through the full pipeline: simulate,
    // fit, rotate, normalise, cluster.
    int recovered = 0;
    for (int rep = 0; rep < 50; ++rep) {
        TruthSpec spec;
        spec.n = 16;
        spec.r1 = 2;
        spec.loading = LoadingKind::PlantedHubs;
        spec.sigma_f = 2.0;
        spec.sigma_e = 0.5;
        spec.seed = 900 + static_cast<std::uint64_t>(rep);
        const auto s = simulate(make_truth(spec), 120).first;
        RollingOptions o;
        o.r1 = o.r2 = 2;
        const WindowResult w = analyze_window(fit_model1(s, 2), "w", 0, o);
        const ClusterTree t = ward_cluster(w.left.aligned.values, 2);
        bool ok = true;
        for (Index i = 0; i < 16; ++i) {
            ok = ok && t.labels[static_cast<std::size_t>(i)] == (i < 8 ? 1 : 2);
        }
        recovered += ok ? 1 : 0;
    }
    return {hand && recovered >= kClusterShare * 50,
            std::string("hand tree ") + (hand ? "matches" : "differs") + "; planted blocks recovered " +
                std::to_string(recovered) + "/50 (need >= 48)"};
}

// 10 -----------------------------------------------------------------------
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Parses a CSV with a header and writes it back; true when the bytes agree.
bool reserializes(const fs::path& p) {
    const csv::Table t = csv::read_table(p);
    std::ostringstream out;
    out << csv::join(t.header) << '\n';
    for (const auto& row : t.rows) {
        std::vector<std::string> fields;
        for (const auto& f : row) {
            double v = 0.0;
            const char* end = f.data() + f.size();
            const auto [ptr, ec] = std::from_chars(f.data(), end, v);
            fields.push_back(ec == std::errc{} && ptr == end ? csv::format(v) : f);
        }
        out << csv::join(fields) << '\n';
    }
    return out.str() == slurp(p);
}

Verdict protocol_shape() {
    testing::TempDir tmp;
    std::ostringstream out;
    std::ostringstream err;
    const fs::path sim = tmp.path() / "sim";
    const fs::path roll = tmp.path() / "rolling";
    int code = cli::run({"simulate", "--n", "24", "--T", "408", "--r", "4", "--loading", "planted", "--sigma-f", "2",
                         "--sigma-e", "0.5", "--start", "1982-01", "--seed", "10", "--output", sim.string()},
                        out, err);
    if (code != 0) {
        return {false, "simulate failed: " + err.str()};
    }
    code = cli::run({"rolling", "--input", (sim / "series.csv").string(), "--allow-negative", "--r", "4", "--quiet",
                     "--output", roll.string()},
                    out, err);
    if (code != 0) {
        return {false, "rolling failed: " + err.str()};
    }
    std::vector<std::string> problems;
    auto expect = [&](bool cond, const std::string& what) {
        if (!cond) {
            problems.push_back(what);
        }
    };

    std::vector<std::string> labels;
    for (int y = 1984; y <= 2013; ++y) {
        labels.push_back(std::to_string(y));
    }
    std::set<std::string> dirs;
    for (const auto& e : fs::directory_iterator(roll / "windows")) {
        dirs.insert(e.path().filename().string());
    }
    expect(dirs == std::set<std::string>(labels.begin(), labels.end()), "window directories");

    // Rank table: a header row of labels, then Ratio, Scree and the r=4 variance row.
    const csv::Table rank = csv::read_table(roll / "rank_table.csv");
    std::vector<std::string> header{"estimator"};
    header.insert(header.end(), labels.begin(), labels.end());
    expect(rank.header == header, "rank table header");
    expect(rank.rows.size() == 3 && rank.rows[0][0] == "Ratio" && rank.rows[1][0] == "Scree" &&
               rank.rows[2][0] == "r=4",
           "rank table rows");
    for (std::size_t r = 0; r < rank.rows.size() && r < 2; ++r) {
        for (std::size_t c = 1; c < rank.rows[r].size(); ++c) {
            const long long v = csv::parse_int(rank.rows[r][c], "rank table");
            expect(v >= 1 && v <= (r == 0 ? 12 : 24), "rank value range");
        }
    }

    if (rank.rows.size() == 3) {
        for (std::size_t c = 1; c < rank.rows[2].size(); ++c) {
            const std::string& f = rank.rows[2][c];
            const double v = csv::parse_double(f, "rank table");
            expect(f.size() >= 4 && f[f.size() - 3] == '.' && v >= 0.0 && v <= 100.0, "variance explained cell");
        }
    }

    // Heatmap: every cell equals the per-window sum-to-one loading.
    const auto heat = read_heatmap_csv(roll / "plots" / "heatmap.csv");
    expect(heat.size() == 30u * 24u * 4u, "heatmap row count");
    std::map<std::string, csv::LabelledMatrix> sum1;
    for (const auto& l : labels) {
        sum1[l] = csv::read_labelled_matrix(roll / "windows" / l / "loadings_left_sum1.csv");
    }
    std::size_t heat_mismatch = 0;
    for (const auto& row : heat) {
        const auto& m = sum1.at(row.window_label);
        const auto i = std::find(m.row_labels.begin(), m.row_labels.end(), row.entity) - m.row_labels.begin();
        const auto k = std::find(m.col_labels.begin(), m.col_labels.end(), row.hub) - m.col_labels.begin();
        if (i >= static_cast<long>(m.row_labels.size()) || k >= static_cast<long>(m.col_labels.size()) ||
            m.values(i, k) != row.loading) {
            ++heat_mismatch;
        }
    }
    expect(heat_mismatch == 0, "heatmap cells");

    // Network tables.
    const csv::Table nodes = csv::read_table(roll / "plots" / "network_nodes.csv");
    const csv::Table edges = csv::read_table(roll / "plots" / "network_hub_edges.csv");
    expect(nodes.rows.size() == 30u * 4u, "network node rows");
    expect(edges.rows.size() <= 30u * 16u, "network edge rows");

    // Dendrogram.
    const auto merges = read_merges_csv(roll / "plots" / "dendrogram_merges.csv");
    const csv::Table dlabels = csv::read_table(roll / "plots" / "dendrogram_labels.csv");
    expect(merges.size() == 23, "dendrogram merges");
    std::set<std::string> groups;
    for (const auto& row : dlabels.rows) {
        groups.insert(row[1]);
    }
    expect(dlabels.rows.size() == 24 && groups.size() == 4, "dendrogram labels");
    for (std::size_t s = 1; s < merges.size(); ++s) {
        expect(merges[s].height >= merges[s - 1].height, "dendrogram heights");
    }

    for (const char* f : {"heatmap.csv", "network_nodes.csv", "network_hub_edges.csv", "network_member_edges.csv",
                          "dendrogram_merges.csv", "dendrogram_labels.csv", "scree.csv"}) {
        expect(reserializes(roll / "plots" / f), std::string("lossless parse-back of ") + f);
    }
    std::string detail = "30 windows 1984..2013, rank table, heatmap/network/dendrogram parse-back";
    for (const auto& p : problems) {
        detail += "; FAILED " + p;
    }
    return {problems.empty(), detail};
}

}  // namespace

int main() {
    log::quiet() = true;
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"oracle equivalence", oracle_equivalence},
        {"PSD property", psd_property},
        {"exact recovery", exact_recovery},
        {"consistency trend", consistency},
        {"rank selection", rank_selection},
        {"varimax contract", varimax_contract},
        {"residual identity", residual_identity},
        {"mass conservation", mass_conservation},
        {"clustering", clustering},
        {"protocol shape", protocol_shape},
    };
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Verdict v;
        try {
            v = criteria[k].second();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        failures += v.pass ? 0 : 1;
        std::printf("%s %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), v.detail.c_str());
        std::fflush(stdout);
    }
    return failures;
}
