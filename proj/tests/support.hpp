#pragma once

// Test helpers: random inputs and direct, loop-level oracles that do not
// share code with the library paths they check.

#include "mfnet/moments.hpp"
#include "mfnet/series.hpp"
#include "mfnet/types.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

namespace testing {

using mfnet::Index;
using mfnet::Matrix;
using mfnet::MatrixSeries;
using mfnet::Vector;

inline std::vector<std::string> labels(Index n, const std::string& prefix = "C") {
    std::vector<std::string> out;
    for (Index i = 0; i < n; ++i) {
        out.push_back(prefix + (i < 9 ? "0" : "") + std::to_string(i + 1));
    }
    return out;
}

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> z(0.0, scale);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) {
            m(i, j) = z(rng);
        }
    }
    return m;
}

inline Matrix uniform(Index rows, Index cols, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) {
            m(i, j) = u(rng);
        }
    }
    return m;
}

/// Nonnegative random flows; the diagonal is undefined unless asked.
inline MatrixSeries random_series(Index n, Index T, std::uint64_t seed, bool diag_defined = false) {
    std::mt19937_64 rng(seed);
    std::vector<Matrix> values;
    for (Index t = 0; t < T; ++t) {
        values.push_back(uniform(n, n, rng, 0.0, 10.0));
    }
    return MatrixSeries(labels(n), {2000, 1}, std::move(values), diag_defined);
}

inline MatrixSeries signed_series(Index n, Index T, std::uint64_t seed, bool diag_defined = true) {
    std::mt19937_64 rng(seed);
    std::vector<Matrix> values;
    for (Index t = 0; t < T; ++t) {
        values.push_back(gaussian(n, n, rng));
    }
    return MatrixSeries(labels(n), {2000, 1}, std::move(values), diag_defined, true);
}

inline Matrix random_orthonormal(Index n, Index r, std::mt19937_64& rng) {
    Eigen::HouseholderQR<Matrix> qr(gaussian(n, r, rng));
    return qr.householderQ() * Matrix::Identity(n, r);
}

/// Cell read that treats an undefined diagonal as zero, via value().
inline double cell(const MatrixSeries& s, Index t, Index i, Index j) {
    return s.defined(i, j) ? s.value(t, i, j) : 0.0;
}

/// Omega_ij(h) entry by entry: COL pairs column i at t with column j at t+h,
/// ROW pairs rows.
inline Matrix oracle_omega(const MatrixSeries& s, int h, Index i, Index j, mfnet::Orientation o) {
    const Index n = s.n();
    const Index T = s.length();
    Matrix out = Matrix::Zero(n, n);
    for (Index a = 0; a < n; ++a) {
        for (Index b = 0; b < n; ++b) {
            double sum = 0.0;
            for (Index t = 0; t + h < T; ++t) {
                if (o == mfnet::Orientation::Col) {
                    sum += cell(s, t, a, i) * cell(s, t + h, b, j);
                } else {
                    sum += cell(s, t, i, a) * cell(s, t + h, j, b);
                }
            }
            out(a, b) = sum / static_cast<double>(T - h);
        }
    }
    return out;
}

inline Matrix oracle_m(const MatrixSeries& s, int h0, mfnet::MomentMode mode) {
    const Index n = s.n();
    Matrix m = Matrix::Zero(n, n);
    for (int h = 1; h <= h0; ++h) {
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) {
                if (mode != mfnet::MomentMode::Row) {
                    const Matrix w = oracle_omega(s, h, i, j, mfnet::Orientation::Col);
                    m += w * w.transpose();
                }
                if (mode != mfnet::MomentMode::Col) {
                    const Matrix w = oracle_omega(s, h, i, j, mfnet::Orientation::Row);
                    m += w * w.transpose();
                }
            }
        }
    }
    return m;
}

/// Span distance from principal angles: cos(theta_k) are the singular values
/// of q1'q2 and the distance is sqrt(sum sin^2 / r).
inline double principal_angle_distance(const Matrix& q1, const Matrix& q2) {
    Eigen::JacobiSVD<Matrix> svd(q1.transpose() * q2);
    const Vector c = svd.singularValues();
    double s2 = 0.0;
    for (Index k = 0; k < c.size(); ++k) {
        s2 += 1.0 - std::min(1.0, c(k) * c(k));
    }
    return std::sqrt(std::max(0.0, s2) / static_cast<double>(q1.cols()));
}

inline double max_rel_diff(const Matrix& a, const Matrix& b) {
    const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    if (scale == 0.0) {
        return 0.0;
    }
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Self-cleaning scratch directory.
class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("mfnet-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    [[nodiscard]] const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testing
