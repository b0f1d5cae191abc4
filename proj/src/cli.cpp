#include "mfnet/cli.hpp"

#include "mfnet/analysis.hpp"
#include "mfnet/csv.hpp"
#include "mfnet/estimator.hpp"
#include "mfnet/export.hpp"
#include "mfnet/log.hpp"
#include "mfnet/series.hpp"
#include "mfnet/simgen.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <unistd.h>

namespace mfnet::cli {

namespace fs = std::filesystem;

namespace {

struct Settings {
    // data
    std::string input;
    std::string imports;
    std::string output;
    bool no_strict = false;
    bool allow_negative = false;
    bool three_month = false;
    std::string format = "long";
    // model
    std::string model = "sym";
    std::string r = "auto";
    std::string r1;
    std::string r2;
    int h0 = 1;
    bool center = false;
    std::string rmax_rule = "half";
    double scree_threshold = 0.85;
    bool deterministic = false;
    unsigned workers = 0;
    // estimate
    std::string truth;
    bool dump_residuals = false;
    bool dump_m = false;
    // rolling
    Index window = 60;
    Index step = 12;
    std::vector<std::string> anchors;
    std::string window_label;
    // clustering
    Index k = 4;
    std::string features = "joint";
    std::string ward_input = "squared";
    // simulate
    Index n = 20;
    Index T = 500;
    double phi = 0.7;
    double sigma_f = 1.0;
    double sigma_e = 1.0;
    std::string loading = "gaussian";
    double dominance = 3.0;
    std::string noise = "iid";
    double noise_correlation = 0.0;
    bool keep_diagonal = false;
    std::string start = "1982-01";
    int replications = 0;
    std::uint64_t seed = 0;
};

std::string env_name(const std::string& long_name) {
    std::string out = "MFNET_";
    for (char c : long_name) {
        out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

// Adds an option bound to `target` with an MFNET_ environment override.
template <typename T>
CLI::Option* opt(CLI::App* app, const std::string& name, T& target, const std::string& help) {
    return app->add_option("--" + name, target, help)->envname(env_name(name));
}

CLI::Option* flag(CLI::App* app, const std::string& name, bool& target, const std::string& help) {
    return app->add_flag("--" + name, target, help)->envname(env_name(name));
}

void data_options(CLI::App* app, Settings& s) {
    opt(app, "input", s.input, "long CSV: exporter,importer,year,month,value")->required();
    flag(app, "no-strict", s.no_strict, "zero-fill missing off-diagonal cells instead of failing");
    flag(app, "allow-negative", s.allow_negative, "accept negative values (simulated data)");
    flag(app, "three-month-average", s.three_month, "apply the centered three-month average first");
}

void model_options(CLI::App* app, Settings& s) {
    opt(app, "model", s.model, "sym | two-sided")->check(CLI::IsMember({"sym", "two-sided"}));
    opt(app, "r", s.r, "factor count or 'auto'");
    opt(app, "r1", s.r1, "export-side count for two-sided (default: --r)");
    opt(app, "r2", s.r2, "import-side count for two-sided (default: --r)");
    opt(app, "h0", s.h0, "maximum lag")->check(CLI::PositiveNumber);
    flag(app, "center", s.center, "subtract each cell's temporal mean before the moments");
    opt(app, "rmax-rule", s.rmax_rule, "half | third")->check(CLI::IsMember({"half", "third"}));
    opt(app, "scree-threshold", s.scree_threshold, "cumulative eigenvalue share")->check(CLI::Range(1e-12, 1.0));
    flag(app, "deterministic", s.deterministic, "literal summation order, single worker");
}

void rolling_options(CLI::App* app, Settings& s) {
    opt(app, "window", s.window, "window length in months")->check(CLI::PositiveNumber);
    opt(app, "step", s.step, "step in months")->check(CLI::PositiveNumber);
    opt(app, "anchors", s.anchors, "comma-separated anchor entities for hub ordering")->delimiter(',');
    opt(app, "workers", s.workers, "parallel window fits (0: all cores)");
}

RankSpec parse_rank(const std::string& text, const std::string& flag_name) {
    if (text == "auto" || text == "AUTO") {
        return std::nullopt;
    }
    const long long v = csv::parse_int(text, "--" + flag_name);
    if (v < 1) {
        fail(errc::invalid, "--" + flag_name + " must be positive or 'auto'");
    }
    return static_cast<int>(v);
}

FitOptions fit_options(const Settings& s) {
    FitOptions o;
    o.h0 = s.h0;
    o.center = s.center;
    o.path = s.deterministic ? MomentPath::Naive : MomentPath::Fast;
    o.rmax_rule = s.rmax_rule == "third" ? RmaxRule::CeilThird : RmaxRule::CeilHalf;
    o.scree_threshold = s.scree_threshold;
    return o;
}

ModelFamily model_of(const Settings& s) { return model_family_from_string(s.model); }

RankSpec r1_of(const Settings& s) { return parse_rank(s.r1.empty() ? s.r : s.r1, s.r1.empty() ? "r" : "r1"); }
RankSpec r2_of(const Settings& s) { return parse_rank(s.r2.empty() ? s.r : s.r2, s.r2.empty() ? "r" : "r2"); }

MatrixSeries load(const Settings& s, bool simulated_hint = false) {
    IngestOptions io;
    io.strict = !s.no_strict;
    io.allow_negative = s.allow_negative || simulated_hint;
    CompletionStats stats;
    MatrixSeries series = [&] {
        if (!s.imports.empty()) {
            std::ifstream ex(s.input);
            std::ifstream im(s.imports);
            if (!ex || !im) {
                fail(errc::io, "cannot open " + (!ex ? s.input : s.imports));
            }
            return mirror_impute(read_long_records(ex, s.input, io), read_long_records(im, s.imports, io), io, &stats);
        }
        return ingest_long_csv(s.input, io, &stats);
    }();
    if (s.three_month) {
        series = three_month_average(series);
    }
    return series;
}

ModelFit fit(const MatrixSeries& series, const Settings& s) {
    if (model_of(s) == ModelFamily::SymmetricLoading) {
        return fit_model1(series, parse_rank(s.r, "r"), fit_options(s));
    }
    return fit_model2(series, r1_of(s), r2_of(s), fit_options(s));
}

RollingOptions rolling_of(const Settings& s) {
    RollingOptions o;
    o.window_months = s.window;
    o.step_months = s.step;
    o.model = model_of(s);
    const bool sym = o.model == ModelFamily::SymmetricLoading;
    o.r1 = sym ? parse_rank(s.r, "r") : r1_of(s);
    o.r2 = sym ? o.r1 : r2_of(s);
    o.fit = fit_options(s);
    o.anchors = s.anchors;
    o.workers = s.deterministic ? 1 : s.workers;
    return o;
}

YearMonth parse_year_month(const std::string& text) {
    const auto dash = text.find('-');
    if (dash == std::string::npos) {
        fail(errc::parse, "expected YYYY-MM, got '" + text + "'");
    }
    YearMonth ym;
    ym.year = static_cast<int>(csv::parse_int(text.substr(0, dash), "--start"));
    ym.month = static_cast<int>(csv::parse_int(text.substr(dash + 1), "--start"));
    if (ym.month < 1 || ym.month > 12) {
        fail(errc::parse, "month out of range in '" + text + "'");
    }
    return ym;
}

// Effective configuration of the selected subcommand, echoed as config.json.
nlohmann::json effective_config(const CLI::App* sub) {
    nlohmann::json j;
    j["subcommand"] = sub->get_name();
    for (const CLI::Option* o : sub->get_options()) {
        const std::string name = o->get_single_name();
        if (name == "help" || name.empty()) {
            continue;
        }
        if (o->count() > 0) {
            const auto& res = o->results();
            if (o->get_expected_min() == 0) {
                j["options"][name] = true;
            } else if (res.size() == 1) {
                j["options"][name] = res.front();
            } else {
                j["options"][name] = res;
            }
        } else if (o->get_expected_min() == 0) {
            j["options"][name] = false;
        } else {
            j["options"][name] = o->get_default_str();
        }
    }
    return j;
}

/// Builds into a sibling temporary directory and renames it into place once
/// the subcommand has succeeded.
class StagedOutput {
public:
    explicit StagedOutput(fs::path target) : target_(std::move(target)) {
        if (target_.empty()) {
            fail(errc::invalid, "--output is required");
        }
        const fs::path parent = target_.has_parent_path() ? target_.parent_path() : fs::path(".");
        fs::create_directories(parent);
        staging_ = parent / ("." + target_.filename().string() + ".tmp-" + std::to_string(::getpid()));
        fs::remove_all(staging_);
        fs::create_directories(staging_);
    }
    StagedOutput(const StagedOutput&) = delete;
    StagedOutput& operator=(const StagedOutput&) = delete;
    ~StagedOutput() {
        if (!committed_) {
            std::error_code ec;
            fs::remove_all(staging_, ec);
        }
    }

    [[nodiscard]] const fs::path& dir() const { return staging_; }

    void commit() {
        if (fs::exists(target_)) {
            fs::remove_all(target_);
        }
        fs::rename(staging_, target_);
        committed_ = true;
    }

private:
    fs::path target_;
    fs::path staging_;
    bool committed_ = false;
};

void write_config(const nlohmann::json& config, const fs::path& dir) {
    auto out = csv::open_for_write(dir / "config.json");
    out << config.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

void cmd_ingest(const Settings& s, const nlohmann::json& config) {
    const MatrixSeries series = load(s);
    StagedOutput staged(s.output);
    if (s.format == "matrices") {
        export_matrix_csvs(series, staged.dir() / "matrices");
    } else {
        export_long_csv(series, staged.dir() / "series.csv");
    }
    write_config(config, staged.dir());
    staged.commit();
}

Matrix truth_rows(const Matrix& a, const std::vector<std::string>& truth_entities,
                  const std::vector<std::string>& entities) {
    if (truth_entities.size() != entities.size()) {
        fail(errc::invalid, "truth and data have different entity counts");
    }
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < entities.size(); ++i) {
        auto it = std::find(truth_entities.begin(), truth_entities.end(), entities[i]);
        if (it == truth_entities.end()) {
            fail(errc::invalid, "entity '" + entities[i] + "' missing from truth");
        }
        out.row(static_cast<Index>(i)) = a.row(it - truth_entities.begin());
    }
    return out;
}

void cmd_estimate(const Settings& s, const nlohmann::json& config) {
    const MatrixSeries series = load(s, !s.truth.empty());
    const ModelFit f = fit(series, s);
    FitDumpOptions dump;
    dump.series = &series;
    dump.residuals = s.dump_residuals;
    dump.moments = s.dump_m;
    if (!s.truth.empty()) {
        const GroundTruth truth = read_truth_json(s.truth);
        auto distance = [&](const Matrix& a, const LoadingMatrix& q) {
            if (a.cols() != q.cols()) {
                fail(errc::invalid, "fitted rank " + std::to_string(q.cols()) + " differs from true rank " +
                                        std::to_string(a.cols()));
            }
            return subspace_distance(q.values, orthonormal_basis(truth_rows(a, truth.entities, q.entities)));
        };
        dump.truth_distance_left = distance(truth.a_left, f.left());
        if (f.model == ModelFamily::TwoSided) {
            dump.truth_distance_right = distance(truth.a_right, f.right());
        }
    }
    StagedOutput staged(s.output);
    write_fit_dir(f, staged.dir(), dump);
    write_config(config, staged.dir());
    staged.commit();
}

std::string pair_or_single(int a, std::optional<int> b) {
    return b ? "(" + std::to_string(a) + ", " + std::to_string(*b) + ")" : std::to_string(a);
}

void cmd_rank(const Settings& s, std::ostream& out) {
    const MatrixSeries series = load(s);
    Settings probe = s;
    probe.r = "1";
    probe.r1.clear();
    probe.r2.clear();
    const ModelFit f = fit(series, probe);
    const bool two = f.model == ModelFamily::TwoSided;
    std::optional<int> ratio_right;
    std::optional<int> scree_right;
    if (two) {
        ratio_right = f.ranks_right->ratio;
        scree_right = f.ranks_right->scree;
    }
    std::ostringstream table;
    table << "index,eigenvalue" << (two ? "_export,eigenvalue_import" : "") << '\n';
    for (Index k = 0; k < f.eigenvalues_left.size(); ++k) {
        table << k + 1 << ',' << csv::format(f.eigenvalues_left(k));
        if (two) {
            table << ',' << csv::format(f.eigenvalues_right(k));
        }
        table << '\n';
    }
    out << "ratio: " << pair_or_single(f.ranks_left.ratio, ratio_right) << '\n';
    out << "scree: " << pair_or_single(f.ranks_left.scree, scree_right) << '\n';
    out << "r_max: " << f.ranks_left.r_max << '\n';
    out << table.str();
    if (!s.output.empty()) {
        auto file = csv::open_for_write(s.output);
        file << table.str();
    }
}

void cmd_rolling(const Settings& s, const nlohmann::json& config) {
    const MatrixSeries series = load(s);
    const RollingResult result = rolling_fit(series, rolling_of(s));
    StagedOutput staged(s.output);
    for (const auto& w : result.windows) {
        FitDumpOptions dump;
        write_window_dir(w, staged.dir() / "windows" / w.label, dump);
    }
    write_rank_table(rank_table(result), staged.dir() / "rank_table.csv");
    ExportOptions eo;
    eo.clusters = std::min<Index>(s.k, series.n());
    eo.ward_input = s.ward_input == "euclidean" ? WardInput::Euclidean : WardInput::SquaredEuclidean;
    for (PlotKind kind : {PlotKind::Heatmap, PlotKind::Network, PlotKind::Dendrogram, PlotKind::Scree}) {
        export_plot_data(result, kind, staged.dir() / "plots", eo);
    }
    write_config(config, staged.dir());
    staged.commit();
}

std::optional<Index> find_window(const RollingResult& result, const std::string& label) {
    if (label.empty()) {
        return std::nullopt;
    }
    for (std::size_t w = 0; w < result.windows.size(); ++w) {
        if (result.windows[w].label == label) {
            return static_cast<Index>(w);
        }
    }
    fail(errc::invalid, "no window labelled '" + label + "'");
}

void cmd_cluster(const Settings& s, const nlohmann::json& config) {
    const MatrixSeries series = load(s);
    const RollingResult result = rolling_fit(series, rolling_of(s));
    FeatureSide side = FeatureSide::Joint;
    if (s.features == "left" || s.features == "export" || result.model == ModelFamily::SymmetricLoading) {
        side = FeatureSide::Left;
    } else if (s.features == "right" || s.features == "import") {
        side = FeatureSide::Right;
    }
    const Matrix features = clustering_features(result, side, find_window(result, s.window_label));
    const ClusterTree tree = ward_cluster(
        features, s.k, s.ward_input == "euclidean" ? WardInput::Euclidean : WardInput::SquaredEuclidean);
    StagedOutput staged(s.output);
    {
        auto out = csv::open_for_write(staged.dir() / "merges.csv");
        write_merges_csv(tree, out);
    }
    {
        auto out = csv::open_for_write(staged.dir() / "labels.csv");
        write_cluster_labels_csv(tree, result.entities, out);
    }
    write_config(config, staged.dir());
    staged.commit();
}

void cmd_export_network(const Settings& s, const nlohmann::json& config) {
    const MatrixSeries series = load(s);
    RollingResult result = rolling_fit(series, rolling_of(s));
    if (const auto w = find_window(result, s.window_label)) {
        WindowResult keep = std::move(result.windows[static_cast<std::size_t>(*w)]);
        result.windows.clear();
        result.windows.push_back(std::move(keep));
    }
    StagedOutput staged(s.output);
    export_plot_data(result, PlotKind::Network, staged.dir());
    write_config(config, staged.dir());
    staged.commit();
}

void cmd_simulate(const Settings& s, const nlohmann::json& config) {
    TruthSpec spec;
    spec.model = model_of(s);
    spec.n = s.n;
    const RankSpec r = parse_rank(s.r == "auto" ? "3" : s.r, "r");
    spec.r1 = s.r1.empty() ? *r : *parse_rank(s.r1, "r1");
    spec.r2 = s.r2.empty() ? *r : *parse_rank(s.r2, "r2");
    if (spec.model == ModelFamily::SymmetricLoading) {
        spec.r2 = spec.r1;
    }
    spec.phi = s.phi;
    spec.sigma_f = s.sigma_f;
    spec.sigma_e = s.sigma_e;
    spec.loading = s.loading == "planted" ? LoadingKind::PlantedHubs : LoadingKind::Gaussian;
    spec.dominance = s.dominance;
    spec.noise = s.noise == "correlated" ? NoiseKind::CrossCorrelated : NoiseKind::Iid;
    spec.noise_correlation = s.noise_correlation;
    spec.mask_diagonal = !s.keep_diagonal;
    spec.seed = s.seed;
    spec.start = parse_year_month(s.start);

    StagedOutput staged(s.output);
    if (s.replications > 0) {
        FitOptions fo = fit_options(s);
        write_replication_csv(monte_carlo(spec, s.T, s.replications, fo), staged.dir() / "replications.csv");
    } else {
        const auto [series, truth] = simulate(make_truth(spec), s.T);
        export_long_csv(series, staged.dir() / "series.csv");
        write_truth_json(truth, staged.dir() / "truth.json");
    }
    write_config(config, staged.dir());
    staged.commit();
}

// --config: plain key=value lines. A key fills its option only when the
// option is absent from the command line and from the environment.
std::vector<std::string> config_args(const fs::path& path, const CLI::App* sub,
                                     const std::vector<std::string>& argv) {
    std::ifstream in(path);
    if (!in) {
        fail(errc::io, "cannot open config file " + path.string());
    }
    std::vector<std::string> extra;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(errc::parse, path.string() + ":" + std::to_string(line_no) + ": expected key=value");
        }
        auto trim = [](std::string v) {
            const auto a = v.find_first_not_of(" \t\r");
            const auto b = v.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        std::replace(key.begin(), key.end(), '_', '-');
        if (key.rfind("--", 0) == 0) {
            key = key.substr(2);
        }
        const CLI::Option* o = sub->get_option_no_throw("--" + key);
        if (!o) {
            throw CLI::ExtrasError("unknown config key '" + key + "' in " + path.string(),
                                   CLI::ExitCodes::ExtrasError);
        }
        const bool on_command_line = std::any_of(argv.begin(), argv.end(), [&](const std::string& a) {
            return a == "--" + key || a.rfind("--" + key + "=", 0) == 0;
        });
        if (on_command_line || std::getenv(env_name(key).c_str()) != nullptr) {
            continue;
        }
        if (o->get_expected_min() == 0) {
            if (value == "true" || value == "1" || value == "yes" || value == "on") {
                extra.push_back("--" + key);
            }
        } else {
            extra.push_back("--" + key + "=" + value);
        }
    }
    return extra;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    // One settings block per subcommand so defaults can differ between them.
    std::map<std::string, Settings> settings;
    for (const char* name : {"rolling", "cluster", "export-network"}) {
        settings[name].r = "4";
    }
    settings["simulate"].r = "3";
    CLI::App app{"Matrix factor models for directed flow networks", "mfnet"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    bool quiet = false;
    app.add_option("--config", config_path, "key=value file; flags and MFNET_* variables take precedence")
        ->envname("MFNET_CONFIG");
    app.add_flag("--quiet", quiet, "suppress warnings")->envname("MFNET_QUIET");

    Settings& s_ingest = settings["ingest"];
    auto* ingest = app.add_subcommand("ingest", "read long CSV, complete and re-export");
    data_options(ingest, s_ingest);
    opt(ingest, "imports", s_ingest.imports, "importer-reported long CSV for mirror imputation");
    opt(ingest, "format", s_ingest.format, "long | matrices")->check(CLI::IsMember({"long", "matrices"}));
    opt(ingest, "output", s_ingest.output, "output directory")->required();

    Settings& s_estimate = settings["estimate"];
    auto* estimate = app.add_subcommand("estimate", "fit one model to the whole series");
    data_options(estimate, s_estimate);
    model_options(estimate, s_estimate);
    opt(estimate, "truth", s_estimate.truth, "truth JSON from simulate; adds subspace distances");
    flag(estimate, "dump-residuals", s_estimate.dump_residuals, "write residual matrices");
    flag(estimate, "dump-m", s_estimate.dump_m, "write the M matrices");
    opt(estimate, "output", s_estimate.output, "output directory")->required();

    Settings& s_rank = settings["rank"];
    auto* rank = app.add_subcommand("rank", "ratio and scree rank estimates with the eigenvalue table");
    data_options(rank, s_rank);
    model_options(rank, s_rank);
    opt(rank, "output", s_rank.output, "also write the eigenvalue CSV here");

    Settings& s_rolling = settings["rolling"];
    auto* rolling = app.add_subcommand("rolling", "rolling-window fits, rank table and plot data");
    data_options(rolling, s_rolling);
    model_options(rolling, s_rolling);
    rolling_options(rolling, s_rolling);
    opt(rolling, "k", s_rolling.k, "clusters in the dendrogram export")->check(CLI::PositiveNumber);
    opt(rolling, "ward-input", s_rolling.ward_input, "squared | euclidean")->check(CLI::IsMember({"squared", "euclidean"}));
    opt(rolling, "output", s_rolling.output, "output directory")->required();

    Settings& s_cluster = settings["cluster"];
    auto* cluster = app.add_subcommand("cluster", "Ward clustering of entities by aligned loadings");
    data_options(cluster, s_cluster);
    model_options(cluster, s_cluster);
    rolling_options(cluster, s_cluster);
    opt(cluster, "k", s_cluster.k, "number of clusters")->check(CLI::PositiveNumber);
    opt(cluster, "features", s_cluster.features, "left | right | joint (export/import accepted)")
        ->check(CLI::IsMember({"left", "right", "joint", "export", "import"}));
    opt(cluster, "window-label", s_cluster.window_label, "cluster one window instead of all");
    opt(cluster, "ward-input", s_cluster.ward_input, "squared | euclidean")->check(CLI::IsMember({"squared", "euclidean"}));
    opt(cluster, "output", s_cluster.output, "output directory")->required();

    Settings& s_network = settings["export-network"];
    auto* network = app.add_subcommand("export-network", "hub network node/edge tables");
    data_options(network, s_network);
    model_options(network, s_network);
    rolling_options(network, s_network);
    opt(network, "window-label", s_network.window_label, "export one window only");
    opt(network, "output", s_network.output, "output directory")->required();

    Settings& s_simulate_cmd = settings["simulate"];
    auto* simulate_cmd = app.add_subcommand("simulate", "synthetic series with known truth");
    opt(simulate_cmd, "model", s_simulate_cmd.model, "sym | two-sided")->check(CLI::IsMember({"sym", "two-sided"}));
    opt(simulate_cmd, "n", s_simulate_cmd.n, "entities")->check(CLI::Range(2, 100000));
    opt(simulate_cmd, "r", s_simulate_cmd.r, "factor count (default 3)");
    opt(simulate_cmd, "r1", s_simulate_cmd.r1, "left count for two-sided");
    opt(simulate_cmd, "r2", s_simulate_cmd.r2, "right count for two-sided");
    opt(simulate_cmd, "T", s_simulate_cmd.T, "months")->check(CLI::PositiveNumber);
    opt(simulate_cmd, "phi", s_simulate_cmd.phi, "AR(1) coefficient")->check(CLI::Range(-0.999999, 0.999999));
    opt(simulate_cmd, "sigma-f", s_simulate_cmd.sigma_f, "factor innovation scale")->check(CLI::NonNegativeNumber);
    opt(simulate_cmd, "sigma-e", s_simulate_cmd.sigma_e, "noise scale")->check(CLI::NonNegativeNumber);
    opt(simulate_cmd, "loading", s_simulate_cmd.loading, "gaussian | planted")->check(CLI::IsMember({"gaussian", "planted"}));
    opt(simulate_cmd, "dominance", s_simulate_cmd.dominance, "planted hub dominance");
    opt(simulate_cmd, "noise", s_simulate_cmd.noise, "iid | correlated")->check(CLI::IsMember({"iid", "correlated"}));
    opt(simulate_cmd, "noise-correlation", s_simulate_cmd.noise_correlation, "equicorrelation for correlated noise")
        ->check(CLI::Range(0.0, 0.999999));
    flag(simulate_cmd, "keep-diagonal", s_simulate_cmd.keep_diagonal, "keep diagonal cells defined");
    opt(simulate_cmd, "start", s_simulate_cmd.start, "first month, YYYY-MM");
    opt(simulate_cmd, "replications", s_simulate_cmd.replications, "Monte-Carlo replications (fits at the true ranks)");
    opt(simulate_cmd, "seed", s_simulate_cmd.seed, "base seed");
    flag(simulate_cmd, "deterministic", s_simulate_cmd.deterministic, "literal summation order in Monte-Carlo fits");
    opt(simulate_cmd, "h0", s_simulate_cmd.h0, "maximum lag for Monte-Carlo fits")->check(CLI::PositiveNumber);
    opt(simulate_cmd, "output", s_simulate_cmd.output, "output directory")->required();

    std::vector<std::string> argv = args;
    try {
        // Locate --config and the subcommand before the real parse so config
        // entries can be merged underneath the command line.
        for (std::size_t i = 0; i < argv.size(); ++i) {
            if (argv[i] == "--config" && i + 1 < argv.size()) {
                config_path = argv[i + 1];
            } else if (argv[i].rfind("--config=", 0) == 0) {
                config_path = argv[i].substr(9);
            }
        }
        if (config_path.empty()) {
            if (const char* env = std::getenv("MFNET_CONFIG")) {
                config_path = env;
            }
        }
        if (!config_path.empty()) {
            const CLI::App* sub = nullptr;
            for (const auto& a : argv) {
                if (auto* found = app.get_subcommand_no_throw(a)) {
                    sub = found;
                    break;
                }
            }
            if (sub) {
                const auto extra = config_args(config_path, sub, argv);
                argv.insert(argv.end(), extra.begin(), extra.end());
            }
        }
        std::vector<std::string> reversed(argv.rbegin(), argv.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "mfnet: " << e.what() << '\n';
        const CLI::App* sub = nullptr;
        for (const CLI::App* c : app.get_subcommands()) {
            sub = c;
        }
        err << (sub ? sub->help() : app.help());
        return 2;
    } catch (const Error& e) {
        err << nlohmann::json{{"code", e.code()}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }

    log::quiet() = quiet;
    const CLI::App* sub = app.get_subcommands().front();
    const nlohmann::json config = effective_config(sub);
    try {
        const std::string name = sub->get_name();
        const Settings& s = settings.at(name);
        if (name == "ingest") {
            cmd_ingest(s, config);
        } else if (name == "estimate") {
            cmd_estimate(s, config);
        } else if (name == "rank") {
            cmd_rank(s, out);
        } else if (name == "rolling") {
            cmd_rolling(s, config);
        } else if (name == "cluster") {
            cmd_cluster(s, config);
        } else if (name == "export-network") {
            cmd_export_network(s, config);
        } else if (name == "simulate") {
            cmd_simulate(s, config);
        }
    } catch (const Error& e) {
        err << nlohmann::json{{"code", e.code()}, {"message", e.what()}}.dump() << '\n';
        return 1;
    } catch (const fs::filesystem_error& e) {
        err << nlohmann::json{{"code", errc::io}, {"message", e.what()}}.dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << nlohmann::json{{"code", "internal_error"}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace mfnet::cli
