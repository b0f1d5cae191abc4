#include "support.hpp"

#include "mfnet/moments.hpp"
#include "mfnet/spectral.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace mfnet;

namespace {

double min_eig_ratio(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const Vector ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    return top > 0.0 ? ev.minCoeff() / top : 0.0;
}

MomentOptions opts(int h0, MomentMode mode, MomentPath path = MomentPath::Fast) {
    MomentOptions o;
    o.h0 = h0;
    o.mode = mode;
    o.path = path;
    return o;
}

}  // namespace

TEST_SUITE("moments") {

TEST_CASE("lagged cross moment: zero input") {
    const MatrixSeries s(testing::labels(3), {2000, 1}, std::vector<Matrix>(5, Matrix::Zero(3, 3)));
    CHECK(lagged_cross_moment(s, 1, 0, 1, Orientation::Col).isZero(0.0));
    CHECK(lagged_cross_moment(s, 2, 2, 1, Orientation::Row).isZero(0.0));
}

TEST_CASE("lagged cross moment: single term by hand") {
    Matrix x0(2, 2);
    Matrix x1(2, 2);
    x0 << 0, 2, 3, 0;
    x1 << 0, 5, 7, 0;
    const MatrixSeries s({"A", "B"}, {2000, 1}, {x0, x1});
    // Col, i = 0, j = 1: column 0 of X_0 is (0, 3), column 1 of X_1 is (5, 0).
    Matrix expect_col(2, 2);
    expect_col << 0, 0, 15, 0;
    CHECK(lagged_cross_moment(s, 1, 0, 1, Orientation::Col) == expect_col);
    // Row, i = 0, j = 1: row 0 of X_0 is (0, 2), row 1 of X_1 is (7, 0).
    Matrix expect_row(2, 2);
    expect_row << 0, 0, 14, 0;
    CHECK(lagged_cross_moment(s, 1, 0, 1, Orientation::Row) == expect_row);
}

TEST_CASE("lagged cross moment matches the per-entry loop") {
    const MatrixSeries s = testing::random_series(5, 20, 3);
    for (int h : {1, 2, 7}) {
        for (Index i = 0; i < 5; ++i) {
            for (Index j = 0; j < 5; ++j) {
                for (Orientation o : {Orientation::Col, Orientation::Row}) {
                    const Matrix got = lagged_cross_moment(s, h, i, j, o);
                    const Matrix want = testing::oracle_omega(s, h, i, j, o);
                    CHECK(testing::max_rel_diff(got, want) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("lag range") {
    const MatrixSeries s = testing::random_series(3, 4, 1);
    CHECK_THROWS_AS(lagged_cross_moment(s, 4, 0, 0, Orientation::Col), Error);
    CHECK_THROWS_AS(lagged_cross_moment(s, 0, 0, 0, Orientation::Col), Error);
    CHECK_THROWS_AS(build_m_matrix(s, opts(4, MomentMode::Both)), Error);
    CHECK_THROWS_AS(build_m_matrix(s, opts(0, MomentMode::Both)), Error);
    CHECK_NOTHROW(build_m_matrix(s, opts(3, MomentMode::Both)));
}

TEST_CASE("zero series gives a zero matrix") {
    const MatrixSeries s(testing::labels(4), {2000, 1}, std::vector<Matrix>(6, Matrix::Zero(4, 4)));
    for (MomentPath p : {MomentPath::Fast, MomentPath::Naive}) {
        CHECK(build_m_matrix(s, opts(2, MomentMode::Both, p)).m.isZero(0.0));
    }
}

TEST_CASE("fast equals naive equals the oracle") {
    const MatrixSeries s = testing::random_series(6, 30, 17);
    for (MomentMode mode : {MomentMode::Col, MomentMode::Row, MomentMode::Both}) {
        const Matrix fast = build_m_matrix(s, opts(2, mode, MomentPath::Fast)).m;
        const Matrix naive = build_m_matrix(s, opts(2, mode, MomentPath::Naive)).m;
        const Matrix oracle = testing::oracle_m(s, 2, mode);
        CHECK(testing::max_rel_diff(fast, naive) < 1e-10);
        CHECK(testing::max_rel_diff(naive, oracle) < 1e-12);
    }
}

TEST_CASE("property: fast equals naive on random shapes") {
    std::mt19937_64 rng(2024);
    for (int rep = 0; rep < 25; ++rep) {
        const Index n = std::uniform_int_distribution<Index>(2, 8)(rng);
        const Index T = std::uniform_int_distribution<Index>(5, 40)(rng);
        const int h0 = std::uniform_int_distribution<int>(1, 3)(rng);
        const bool diag = rep % 2 == 0;
        const MatrixSeries s = diag ? testing::signed_series(n, T, rng()) : testing::random_series(n, T, rng());
        const Matrix fast = build_m_matrix(s, opts(h0, MomentMode::Both, MomentPath::Fast)).m;
        const Matrix naive = build_m_matrix(s, opts(h0, MomentMode::Both, MomentPath::Naive)).m;
        INFO("n=" << n << " T=" << T << " h0=" << h0);
        CHECK(testing::max_rel_diff(fast, naive) < 1e-10);
    }
}

TEST_CASE("BOTH is COL plus ROW") {
    const MatrixSeries s = testing::random_series(5, 25, 8);
    for (MomentPath p : {MomentPath::Fast, MomentPath::Naive}) {
        const Matrix both = build_m_matrix(s, opts(3, MomentMode::Both, p)).m;
        const Matrix col = build_m_matrix(s, opts(3, MomentMode::Col, p)).m;
        const Matrix row = build_m_matrix(s, opts(3, MomentMode::Row, p)).m;
        CHECK(testing::max_rel_diff(both, col + row) < 1e-13);
    }
}

TEST_CASE("symmetric and positive semidefinite") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const MatrixSeries s = testing::random_series(6, 15, seed);
        const SymmetricAccumulator acc = build_m_matrix(s, opts(2, MomentMode::Both));
        CHECK((acc.m - acc.m.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(min_eig_ratio(acc.m) >= -1e-10);
    }
}

TEST_CASE("accumulator provenance") {
    const MatrixSeries s = testing::random_series(3, 12, 2);
    MomentOptions o = opts(2, MomentMode::Row);
    o.center = true;
    const SymmetricAccumulator acc = build_m_matrix(s, o);
    CHECK(acc.h0 == 2);
    CHECK(acc.mode == MomentMode::Row);
    CHECK(acc.centered);
    CHECK(acc.start == s.start());
    CHECK(acc.length == 12);
}

TEST_CASE("permutation equivariance") {
    const MatrixSeries s = testing::random_series(5, 20, 4);
    const std::vector<Index> perm{2, 4, 0, 1, 3};
    Matrix p = Matrix::Zero(5, 5);
    for (Index k = 0; k < 5; ++k) {
        p(k, perm[static_cast<std::size_t>(k)]) = 1.0;
    }
    const Matrix m = build_m_matrix(s, opts(2, MomentMode::Both)).m;
    const Matrix mp = build_m_matrix(s.permuted(perm), opts(2, MomentMode::Both)).m;
    CHECK(testing::max_rel_diff(mp, p * m * p.transpose()) < 1e-12);
}

TEST_CASE("scale equivariance: c^4") {
    const MatrixSeries s = testing::random_series(4, 18, 6);
    const double c = 3.5;
    std::vector<Matrix> scaled;
    for (const auto& x : s.filled_all()) {
        scaled.push_back(c * x);
    }
    const MatrixSeries sc(s.entities(), s.start(), scaled);
    const Matrix m = build_m_matrix(s, opts(1, MomentMode::Both)).m;
    const Matrix mc = build_m_matrix(sc, opts(1, MomentMode::Both)).m;
    CHECK(testing::max_rel_diff(mc, std::pow(c, 4) * m) < 1e-12);

    const Spectrum a = sym_eigen(m);
    const Spectrum b = sym_eigen(mc);
    const Matrix qa = a.eigenvectors.leftCols(2);
    const Matrix qb = b.eigenvectors.leftCols(2);
    CHECK((qa * qa.transpose() - qb * qb.transpose()).norm() < 1e-8);
}

TEST_CASE("noise-free rank-r series gives numerical rank r") {
    std::mt19937_64 rng(5);
    const Index n = 8;
    const Index r = 2;
    const Matrix q = testing::random_orthonormal(n, r, rng);
    std::vector<Matrix> xs;
    Matrix z = Matrix::Zero(r, r);
    std::normal_distribution<double> e(0.0, 1.0);
    for (int t = 0; t < 80; ++t) {
        for (Index a = 0; a < r; ++a) {
            for (Index b = 0; b < r; ++b) {
                z(a, b) = 0.8 * z(a, b) + e(rng);
            }
        }
        xs.push_back(q * z * q.transpose());
    }
    const MatrixSeries s(testing::labels(n), {2000, 1}, xs, true, true);
    const Matrix m = build_m_matrix(s, opts(1, MomentMode::Both)).m;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    Vector ev = es.eigenvalues().reverse();
    for (Index k = r; k < n; ++k) {
        CHECK(std::abs(ev(k)) < 1e-8 * ev(0));
    }
    CHECK(ev(r - 1) > 1e-3 * ev(0));
}

TEST_CASE("undefined diagonal enters as zero") {
    // Two series differing only on the (masked) diagonal give the same M.
    const MatrixSeries s = testing::random_series(4, 10, 9, true);
    const MatrixSeries masked(s.entities(), s.start(), s.filled_all(), false);
    std::vector<Matrix> zeroed = s.filled_all();
    for (auto& x : zeroed) {
        x.diagonal().setZero();
    }
    const MatrixSeries explicit_zero(s.entities(), s.start(), zeroed, true);
    CHECK(build_m_matrix(masked, opts(1, MomentMode::Both)).m ==
          build_m_matrix(explicit_zero, opts(1, MomentMode::Both)).m);
}

TEST_CASE("centering removes per-cell means") {
    const MatrixSeries s = testing::random_series(3, 12, 10);
    std::vector<Matrix> shifted;
    for (const auto& x : s.filled_all()) {
        Matrix y = x + Matrix::Constant(3, 3, 50.0);
        shifted.push_back(y);
    }
    const MatrixSeries sh(s.entities(), s.start(), shifted);
    MomentOptions o = opts(1, MomentMode::Both);
    o.center = true;
    CHECK(testing::max_rel_diff(build_m_matrix(s, o).m, build_m_matrix(sh, o).m) < 1e-9);
    o.center = false;
    CHECK(testing::max_rel_diff(build_m_matrix(s, o).m, build_m_matrix(sh, o).m) > 1e-3);
}

TEST_CASE("naive path is bit-stable") {
    const MatrixSeries s = testing::random_series(5, 20, 12);
    const Matrix a = build_m_matrix(s, opts(2, MomentMode::Both, MomentPath::Naive)).m;
    const Matrix b = build_m_matrix(s, opts(2, MomentMode::Both, MomentPath::Naive)).m;
    CHECK(a == b);
}

TEST_CASE("mode names") {
    CHECK(moment_mode_from_string("col") == MomentMode::Col);
    CHECK(moment_mode_from_string(to_string(MomentMode::Both)) == MomentMode::Both);
    CHECK_THROWS_AS(moment_mode_from_string("diag"), Error);
}

}  // TEST_SUITE
