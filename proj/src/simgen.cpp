#include "mfnet/simgen.hpp"

#include "mfnet/csv.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>

namespace mfnet {

namespace {

using Rng = std::mt19937_64;

Rng stream(std::uint64_t seed, std::uint64_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return Rng(seq);
}

Matrix gaussian(Index rows, Index cols, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) {
            m(i, j) = scale * normal(rng);
        }
    }
    return m;
}

std::vector<std::string> default_entities(Index n) {
    std::vector<std::string> out;
    for (Index i = 0; i < n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "E%02lld", static_cast<long long>(i + 1));
        out.emplace_back(buf);
    }
    return out;
}

void validate(const GroundTruth& truth) {
    const Index n = truth.a_left.rows();
    if (n < 2 || truth.a_right.rows() != n) {
        fail(errc::invalid, "loadings must share n >= 2 rows");
    }
    if (static_cast<Index>(truth.entities.size()) != n) {
        fail(errc::invalid, "entity labels do not match loading rows");
    }
    if (truth.phi.rows() != truth.a_left.cols() || truth.phi.cols() != truth.a_right.cols()) {
        fail(errc::invalid, "phi must be r1 x r2");
    }
    if ((truth.phi.array().abs() >= 1.0).any()) {
        fail(errc::invalid, "AR coefficients must satisfy |phi| < 1");
    }
    if (truth.sigma_f < 0.0 || truth.sigma_e < 0.0) {
        fail(errc::invalid, "scales must be nonnegative");
    }
    if (truth.noise == NoiseKind::CrossCorrelated && !(truth.noise_correlation > -1.0 / static_cast<double>(n - 1) &&
                                                       truth.noise_correlation < 1.0)) {
        fail(errc::invalid, "noise correlation outside the positive-definite range");
    }
    for (const Matrix* a : {&truth.a_left, &truth.a_right}) {
        Eigen::ColPivHouseholderQR<Matrix> qr(*a);
        if (qr.rank() < a->cols()) {
            fail(errc::invalid, "loadings must have full column rank");
        }
    }
}

class Process {
public:
    Process(const GroundTruth& truth, Rng& rng) : truth_(truth), rng_(rng) {
        const Index n = truth.a_left.rows();
        factor_ = Matrix::Zero(truth.a_left.cols(), truth.a_right.cols());
        if (truth.noise == NoiseKind::CrossCorrelated) {
            const double rho = truth.noise_correlation;
            Matrix corr = Matrix::Constant(n, n, rho);
            corr.diagonal().setOnes();
            chol_ = corr.llt().matrixL();
        }
        for (int k = 0; k < kBurnIn; ++k) {
            step_factor();
        }
    }

    Matrix next(const Matrix& a_left, const Matrix& a_right) {
        step_factor();
        const Index n = a_left.rows();
        Matrix noise = gaussian(n, n, rng_, truth_.sigma_e);
        if (truth_.noise == NoiseKind::CrossCorrelated) {
            noise = chol_ * noise * chol_.transpose();
        }
        return a_left * factor_ * a_right.transpose() + noise;
    }

private:
    void step_factor() {
        factor_ = truth_.phi.cwiseProduct(factor_) + gaussian(factor_.rows(), factor_.cols(), rng_, truth_.sigma_f);
    }

    const GroundTruth& truth_;
    Rng& rng_;
    Matrix factor_;
    Matrix chol_;
};

}  // namespace

Matrix orthonormal_basis(const Matrix& a) {
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
    return q;
}

Matrix planted_hub_loading(Index n, Index r, double dominance, const std::vector<Index>& dominant) {
    if (r < 1 || r > n) {
        fail(errc::invalid, "planted hubs need 1 <= r <= n");
    }
    Matrix a = Matrix::Zero(n, r);
    std::vector<Index> heads(static_cast<std::size_t>(r), -1);
    for (Index i = 0; i < n; ++i) {
        const Index block = i * r / n;
        a(i, block) = 1.0;
        if (heads[static_cast<std::size_t>(block)] < 0) {
            heads[static_cast<std::size_t>(block)] = i;
        }
    }
    if (!dominant.empty()) {
        if (static_cast<Index>(dominant.size()) != r) {
            fail(errc::invalid, "need one dominant entity per hub");
        }
        for (Index k = 0; k < r; ++k) {
            const Index d = dominant[static_cast<std::size_t>(k)];
            if (d < 0 || d >= n || a(d, k) == 0.0) {
                fail(errc::invalid, "dominant entity of hub " + std::to_string(k + 1) + " is outside its block");
            }
            heads[static_cast<std::size_t>(k)] = d;
        }
    }
    for (Index k = 0; k < r; ++k) {
        a(heads[static_cast<std::size_t>(k)], k) = dominance;
        a.col(k).normalize();
    }
    return a;
}

GroundTruth make_truth(const TruthSpec& spec) {
    if (spec.n < 2 || spec.r1 < 1 || spec.r1 > spec.n || spec.r2 < 1 || spec.r2 > spec.n) {
        fail(errc::invalid, "need n >= 2 and 1 <= r <= n");
    }
    Rng rng = stream(spec.seed, 1);
    GroundTruth truth;
    truth.model = spec.model;
    truth.entities = spec.entities.empty() ? default_entities(spec.n) : spec.entities;
    if (static_cast<Index>(truth.entities.size()) != spec.n) {
        fail(errc::invalid, "entity label count differs from n");
    }
    const Index r2 = spec.model == ModelFamily::SymmetricLoading ? spec.r1 : spec.r2;
    if (spec.loading == LoadingKind::PlantedHubs) {
        truth.a_left = planted_hub_loading(spec.n, spec.r1, spec.dominance, spec.dominant);
    } else {
        truth.a_left = orthonormal_basis(gaussian(spec.n, spec.r1, rng));
    }
    if (spec.model == ModelFamily::SymmetricLoading) {
        truth.a_right = truth.a_left;
    } else if (spec.loading == LoadingKind::PlantedHubs) {
        truth.a_right = planted_hub_loading(spec.n, r2, spec.dominance);
    } else {
        truth.a_right = orthonormal_basis(gaussian(spec.n, r2, rng));
    }
    truth.phi = Matrix::Constant(spec.r1, r2, spec.phi);
    truth.sigma_f = spec.sigma_f;
    truth.sigma_e = spec.sigma_e;
    truth.noise = spec.noise;
    truth.noise_correlation = spec.noise_correlation;
    truth.mask_diagonal = spec.mask_diagonal;
    truth.seed = spec.seed;
    truth.start = spec.start;
    validate(truth);
    return truth;
}

std::pair<MatrixSeries, GroundTruth> simulate(const GroundTruth& truth, Index T) {
    validate(truth);
    if (T < 1) {
        fail(errc::invalid, "T must be positive");
    }
    Rng rng = stream(truth.seed, 2);
    Process process(truth, rng);
    std::vector<Matrix> values;
    values.reserve(static_cast<std::size_t>(T));
    for (Index t = 0; t < T; ++t) {
        values.push_back(process.next(truth.a_left, truth.a_right));
    }
    MatrixSeries series(truth.entities, truth.start, std::move(values), !truth.mask_diagonal, true);
    return {std::move(series), truth};
}

MatrixSeries simulate_with_break(const GroundTruth& truth, const GroundTruth& after, Index T, Index break_at) {
    validate(truth);
    validate(after);
    if (after.a_left.rows() != truth.a_left.rows() || after.a_left.cols() != truth.a_left.cols() ||
        after.a_right.cols() != truth.a_right.cols()) {
        fail(errc::invalid, "loadings before and after the break must share shapes");
    }
    Rng rng = stream(truth.seed, 2);
    Process process(truth, rng);
    std::vector<Matrix> values;
    for (Index t = 0; t < T; ++t) {
        const GroundTruth& active = t < break_at ? truth : after;
        values.push_back(process.next(active.a_left, active.a_right));
    }
    return MatrixSeries(truth.entities, truth.start, std::move(values), !truth.mask_diagonal, true);
}

namespace {

nlohmann::json matrix_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    const auto rows = static_cast<Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Index>(j.at(0).size()) : 0;
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (static_cast<Index>(j.at(static_cast<std::size_t>(i)).size()) != cols) {
            fail(errc::parse, "ragged matrix in truth JSON");
        }
        for (Index k = 0; k < cols; ++k) {
            m(i, k) = j.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k)).get<double>();
        }
    }
    return m;
}

}  // namespace

void write_truth_json(const GroundTruth& truth, const std::filesystem::path& path) {
    nlohmann::json j;
    j["model"] = to_string(truth.model);
    j["entities"] = truth.entities;
    j["a_left"] = matrix_json(truth.a_left);
    j["a_right"] = matrix_json(truth.a_right);
    j["phi"] = matrix_json(truth.phi);
    j["sigma_f"] = truth.sigma_f;
    j["sigma_e"] = truth.sigma_e;
    j["noise"] = truth.noise == NoiseKind::Iid ? "iid" : "cross_correlated";
    j["noise_correlation"] = truth.noise_correlation;
    j["mask_diagonal"] = truth.mask_diagonal;
    j["seed"] = truth.seed;
    j["start"] = truth.start.str();
    j["burn_in"] = kBurnIn;
    auto out = csv::open_for_write(path);
    out << j.dump(2) << '\n';
}

GroundTruth read_truth_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(errc::io, "cannot open " + path.string());
    }
    GroundTruth truth;
    try {
        const auto j = nlohmann::json::parse(in);
        truth.model = model_family_from_string(j.at("model").get<std::string>());
        truth.entities = j.at("entities").get<std::vector<std::string>>();
        truth.a_left = matrix_from_json(j.at("a_left"));
        truth.a_right = matrix_from_json(j.at("a_right"));
        truth.phi = matrix_from_json(j.at("phi"));
        truth.sigma_f = j.at("sigma_f").get<double>();
        truth.sigma_e = j.at("sigma_e").get<double>();
        truth.noise = j.at("noise").get<std::string>() == "iid" ? NoiseKind::Iid : NoiseKind::CrossCorrelated;
        truth.noise_correlation = j.at("noise_correlation").get<double>();
        truth.mask_diagonal = j.at("mask_diagonal").get<bool>();
        truth.seed = j.at("seed").get<std::uint64_t>();
        const auto start = j.at("start").get<std::string>();
        truth.start = YearMonth{std::stoi(start.substr(0, 4)), std::stoi(start.substr(5, 2))};
    } catch (const nlohmann::json::exception& e) {
        fail(errc::parse, path.string() + ": " + e.what());
    }
    validate(truth);
    return truth;
}

std::vector<ReplicationRecord> monte_carlo(const TruthSpec& spec, Index T, int replications,
                                           const FitOptions& options) {
    std::vector<ReplicationRecord> records;
    for (int k = 0; k < replications; ++k) {
        TruthSpec s = spec;
        s.seed = spec.seed + static_cast<std::uint64_t>(k);
        const GroundTruth truth = make_truth(s);
        const auto [series, _] = simulate(truth, T);
        ReplicationRecord rec;
        rec.seed = s.seed;
        rec.T = T;
        if (spec.model == ModelFamily::SymmetricLoading) {
            const ModelFit fit = fit_model1(series, static_cast<int>(spec.r1), options);
            rec.distance_left = subspace_distance(fit.left().values, orthonormal_basis(truth.a_left));
            rec.distance_right = rec.distance_left;
            rec.ratio_left = rec.ratio_right = fit.ranks_left.ratio;
            rec.scree_left = rec.scree_right = fit.ranks_left.scree;
            rec.variance_explained = fit.variance_explained;
        } else {
            const ModelFit fit = fit_model2(series, static_cast<int>(spec.r1), static_cast<int>(spec.r2), options);
            rec.distance_left = subspace_distance(fit.left().values, orthonormal_basis(truth.a_left));
            rec.distance_right = subspace_distance(fit.right().values, orthonormal_basis(truth.a_right));
            rec.ratio_left = fit.ranks_left.ratio;
            rec.ratio_right = fit.ranks_right->ratio;
            rec.scree_left = fit.ranks_left.scree;
            rec.scree_right = fit.ranks_right->scree;
            rec.variance_explained = fit.variance_explained;
        }
        records.push_back(rec);
    }
    return records;
}

void write_replication_csv(const std::vector<ReplicationRecord>& records, const std::filesystem::path& path) {
    auto out = csv::open_for_write(path);
    out << "seed,T,distance_left,distance_right,ratio_left,ratio_right,scree_left,scree_right,variance_explained\n";
    for (const auto& r : records) {
        out << r.seed << ',' << r.T << ',' << csv::format(r.distance_left) << ',' << csv::format(r.distance_right)
            << ',' << r.ratio_left << ',' << r.ratio_right << ',' << r.scree_left << ',' << r.scree_right << ','
            << csv::format(r.variance_explained) << '\n';
    }
}

}  // namespace mfnet
