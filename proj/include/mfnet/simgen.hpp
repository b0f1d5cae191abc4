#pragma once

#include "mfnet/estimator.hpp"
#include "mfnet/series.hpp"
#include "mfnet/types.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace mfnet {

/// ||Q1 Q1' - Q2 Q2'||_F / sqrt(2r) for orthonormal n x r frames. Zero iff the
/// spans agree, one for orthogonal spans.
template <typename DerivedA, typename DerivedB>
double subspace_distance(const Eigen::MatrixBase<DerivedA>& q1, const Eigen::MatrixBase<DerivedB>& q2) {
    if (q1.rows() != q2.rows() || q1.cols() != q2.cols()) {
        fail(errc::invalid, "subspace_distance needs equal shapes");
    }
    const Index r = q1.cols();
    const Matrix a = q1.template cast<double>();
    const Matrix b = q2.template cast<double>();
    const Matrix eye = Matrix::Identity(r, r);
    if ((a.transpose() * a - eye).cwiseAbs().maxCoeff() > 1e-8 ||
        (b.transpose() * b - eye).cwiseAbs().maxCoeff() > 1e-8) {
        fail(errc::invalid, "subspace_distance needs orthonormal columns");
    }
    const double d = (a * a.transpose() - b * b.transpose()).norm() / std::sqrt(2.0 * static_cast<double>(r));
    return std::min(1.0, d);
}

/// Orthonormal basis of span(a) (thin QR).
Matrix orthonormal_basis(const Matrix& a);

enum class LoadingKind {
    Gaussian,     // orthonormalised Gaussian
    PlantedHubs,  // disjoint entity blocks, one dominant entity per hub
};

enum class NoiseKind {
    Iid,
    CrossCorrelated,  // E_t = L G_t L' with L the Cholesky factor of an equicorrelation
};

struct GroundTruth {
    ModelFamily model = ModelFamily::SymmetricLoading;
    std::vector<std::string> entities;
    Matrix a_left;
    Matrix a_right;
    Matrix phi;  // r1 x r2 AR(1) coefficient per factor entry
    double sigma_f = 1.0;
    double sigma_e = 1.0;
    NoiseKind noise = NoiseKind::Iid;
    double noise_correlation = 0.0;
    bool mask_diagonal = true;
    std::uint64_t seed = 0;
    YearMonth start{1982, 1};
};

struct TruthSpec {
    ModelFamily model = ModelFamily::SymmetricLoading;
    Index n = 20;
    Index r1 = 3;
    Index r2 = 3;
    double phi = 0.7;
    double sigma_f = 1.0;
    double sigma_e = 1.0;
    LoadingKind loading = LoadingKind::Gaussian;
    /// PlantedHubs: weight of each hub's dominant entity relative to the rest.
    double dominance = 3.0;
    /// PlantedHubs: entity index of each hub's dominant member (default: block heads).
    std::vector<Index> dominant;
    NoiseKind noise = NoiseKind::Iid;
    double noise_correlation = 0.0;
    bool mask_diagonal = true;
    std::uint64_t seed = 0;
    std::vector<std::string> entities;  // default E01, E02, ...
    YearMonth start{1982, 1};
};

/// Draws loadings for the spec (seeded by spec.seed).
GroundTruth make_truth(const TruthSpec& spec);

/// Disjoint-block loading: entity i belongs to block i * r / n. Each column
/// has unit length with the dominant entity weighted `dominance` times the
/// other members.
Matrix planted_hub_loading(Index n, Index r, double dominance, const std::vector<Index>& dominant = {});

inline constexpr int kBurnIn = 200;

/// X_t = A_left F_t A_right' + E_t with stationary AR(1) factor entries
/// (burn-in discarded) and Gaussian noise. Deterministic given truth.seed.
std::pair<MatrixSeries, GroundTruth> simulate(const GroundTruth& truth, Index T);

/// Same as simulate, with loadings switching from `truth` to `after` at
/// month `break_at`; factors and noise continue across the break.
MatrixSeries simulate_with_break(const GroundTruth& truth, const GroundTruth& after, Index T, Index break_at);

void write_truth_json(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth read_truth_json(const std::filesystem::path& path);

struct ReplicationRecord {
    std::uint64_t seed = 0;
    Index T = 0;
    double distance_left = 0.0;
    double distance_right = 0.0;
    int ratio_left = 0;
    int ratio_right = 0;
    int scree_left = 0;
    int scree_right = 0;
    double variance_explained = 0.0;
};

/// Simulate + fit for seeds base_seed, base_seed + 1, ...; fits use the
/// true ranks.
std::vector<ReplicationRecord> monte_carlo(const TruthSpec& spec, Index T, int replications,
                                           const FitOptions& options = {});

void write_replication_csv(const std::vector<ReplicationRecord>& records, const std::filesystem::path& path);

}  // namespace mfnet
