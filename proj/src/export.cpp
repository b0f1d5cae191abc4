#include "mfnet/export.hpp"

#include "mfnet/csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

namespace mfnet {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(PlotKind kind) {
    switch (kind) {
    case PlotKind::Heatmap:
        return "heatmap";
    case PlotKind::Network:
        return "network";
    case PlotKind::Dendrogram:
        return "dendrogram";
    case PlotKind::Scree:
        return "scree";
    }
    return "heatmap";
}

PlotKind plot_kind_from_string(const std::string& text) {
    for (PlotKind kind : {PlotKind::Heatmap, PlotKind::Network, PlotKind::Dendrogram, PlotKind::Scree}) {
        if (text == to_string(kind)) {
            return kind;
        }
    }
    fail(errc::invalid, "unknown plot kind '" + text + "' (heatmap, network, dendrogram, scree)");
}

namespace {

std::string pct(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
    return buf;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_json(const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

json ranks_json(const RankEstimates& r) {
    return {{"ratio", r.ratio}, {"scree", r.scree}, {"r_max", r.r_max}};
}

json fit_json(const ModelFit& fit, const FitDumpOptions& options = {}) {
    json j;
    j["model"] = to_string(fit.model);
    j["h0"] = fit.h0;
    j["centered"] = fit.centered;
    j["window_start"] = fit.window_start.str();
    j["window_length"] = fit.window_length;
    j["r1"] = fit.r1();
    j["r2"] = fit.r2();
    j["hubs_left"] = fit.left().hubs;
    j["hubs_right"] = fit.right().hubs;
    j["ranks_left"] = ranks_json(fit.ranks_left);
    if (fit.ranks_right) {
        j["ranks_right"] = ranks_json(*fit.ranks_right);
    }
    j["variance_explained"] = {{"residual_based", fit.variance_explained},
                               {"eigen_share_left", fit.eigen_share_left}};
    if (fit.eigen_share_right) {
        j["variance_explained"]["eigen_share_right"] = *fit.eigen_share_right;
    }
    if (fit.side_variance_explained) {
        j["variance_explained"]["export_side"] = fit.side_variance_explained->first;
        j["variance_explained"]["import_side"] = fit.side_variance_explained->second;
    }
    if (fit.model == ModelFamily::TwoSided) {
        j["side_mapping"] = {{"left", "export: column moments, rows of X_t are exporters"},
                             {"right", "import: row moments, columns of X_t are importers"}};
    }
    if (options.truth_distance_left) {
        j["truth"]["subspace_distance_left"] = *options.truth_distance_left;
    }
    if (options.truth_distance_right) {
        j["truth"]["subspace_distance_right"] = *options.truth_distance_right;
    }
    return j;
}

json side_json(const SideResult& side) {
    json j;
    j["varimax"] = {{"rotation", matrix_json(side.varimax.rotation)},
                    {"sweeps", side.varimax.sweeps},
                    {"converged", side.varimax.converged},
                    {"criterion", side.varimax.criterion_trace.empty() ? 0.0 : side.varimax.criterion_trace.back()}};
    j["truncated_mass"] = vector_json(side.sum_one.truncated_mass);
    j["column_sums"] = vector_json(side.sum_one.column_sums);
    json perm = json::array();
    for (Index p : side.alignment.permutation) {
        perm.push_back(p);
    }
    j["alignment"] = {{"method", to_string(side.alignment.method)}, {"permutation", perm}};
    json anchors = json::array();
    for (const auto& a : side.alignment.anchor_report) {
        anchors.push_back({{"anchor", a.anchor}, {"hub", a.hub}, {"loading", a.loading}, {"conflict", a.conflict}});
    }
    j["alignment"]["anchors"] = anchors;
    return j;
}

void write_json(const json& j, const fs::path& path) {
    auto out = csv::open_for_write(path);
    out << j.dump(2) << '\n';
}

void write_matrix(const Matrix& m, const std::vector<std::string>& rows, const std::vector<std::string>& cols,
                  const fs::path& path, std::string_view corner = "entity") {
    auto out = csv::open_for_write(path);
    csv::write_labelled_matrix(out, m, rows, cols, corner);
}

void write_eigenvalues(const ModelFit& fit, const fs::path& path) {
    auto out = csv::open_for_write(path);
    out << "index,left";
    if (fit.model == ModelFamily::TwoSided) {
        out << ",right";
    }
    out << '\n';
    for (Index k = 0; k < fit.eigenvalues_left.size(); ++k) {
        out << k + 1 << ',' << csv::format(fit.eigenvalues_left(k));
        if (fit.model == ModelFamily::TwoSided) {
            out << ',' << csv::format(fit.eigenvalues_right(k));
        }
        out << '\n';
    }
}

struct SideView {
    std::string suffix;
    const SideResult* side;
};

std::vector<SideView> sides(const RollingResult& result, const WindowResult& w) {
    if (result.model == ModelFamily::SymmetricLoading) {
        return {{"", &w.left}};
    }
    return {{"_export", &w.left}, {"_import", &w.right_side()}};
}

void check_nonempty(const RollingResult& result) {
    if (result.windows.empty()) {
        fail(errc::invalid, "nothing to export: the rolling result has no windows");
    }
}

}  // namespace

void write_factor_csv(const std::vector<Matrix>& factors, const std::vector<std::string>& hubs_left,
                      const std::vector<std::string>& hubs_right, YearMonth start, const fs::path& path) {
    auto out = csv::open_for_write(path);
    out << "time,hub_from,hub_to,value\n";
    for (std::size_t t = 0; t < factors.size(); ++t) {
        const std::string stamp = start.plus(static_cast<int>(t)).str();
        for (Index a = 0; a < factors[t].rows(); ++a) {
            for (Index b = 0; b < factors[t].cols(); ++b) {
                out << stamp << ',' << csv::quote(hubs_left[static_cast<std::size_t>(a)]) << ','
                    << csv::quote(hubs_right[static_cast<std::size_t>(b)]) << ',' << csv::format(factors[t](a, b))
                    << '\n';
            }
        }
    }
}

void write_fit_dir(const ModelFit& fit, const fs::path& dir, const FitDumpOptions& options) {
    fs::create_directories(dir);
    write_matrix(fit.left().values, fit.left().entities, fit.left().hubs, dir / "loadings_left.csv");
    if (fit.model == ModelFamily::TwoSided) {
        write_matrix(fit.right().values, fit.right().entities, fit.right().hubs, dir / "loadings_right.csv");
    }
    write_factor_csv(fit.factors.values, fit.factors.hubs_left, fit.factors.hubs_right, fit.window_start,
                     dir / "factors.csv");
    write_eigenvalues(fit, dir / "eigenvalues.csv");
    if (options.residuals) {
        if (!options.series) {
            fail(errc::invalid, "residual dump needs the fitted series");
        }
        auto e = residuals(*options.series, fit);
        for (std::size_t t = 0; t < e.size(); ++t) {
            if (!options.series->diag_defined()) {
                e[t].diagonal().setConstant(std::numeric_limits<double>::quiet_NaN());
            }
            write_matrix(e[t], fit.left().entities, fit.left().entities,
                         dir / "residuals" / (fit.window_start.plus(static_cast<int>(t)).str() + ".csv"), "exporter");
        }
    }
    if (options.moments) {
        if (!options.series) {
            fail(errc::invalid, "moment dump needs the fitted series");
        }
        MomentOptions mo;
        mo.h0 = fit.h0;
        mo.center = fit.centered;
        if (fit.model == ModelFamily::SymmetricLoading) {
            write_matrix(build_m_matrix(*options.series, mo).m, fit.left().entities, fit.left().entities,
                         dir / "m_both.csv");
        } else {
            mo.mode = MomentMode::Col;
            write_matrix(build_m_matrix(*options.series, mo).m, fit.left().entities, fit.left().entities,
                         dir / "m_col.csv");
            mo.mode = MomentMode::Row;
            write_matrix(build_m_matrix(*options.series, mo).m, fit.left().entities, fit.left().entities,
                         dir / "m_row.csv");
        }
    }
    write_json(fit_json(fit, options), dir / "fit_report.json");
}

void write_window_dir(const WindowResult& w, const fs::path& dir, const FitDumpOptions& options) {
    write_fit_dir(w.fit, dir, options);
    const bool two = w.fit.model == ModelFamily::TwoSided;
    auto dump_side = [&](const SideResult& side, const std::string& name) {
        write_matrix(apply_alignment(side.varimax.rotated, side.alignment), side.aligned.entities,
                     side.aligned.hubs, dir / ("loadings_" + name + "_rotated.csv"));
        write_matrix(side.aligned.values, side.aligned.entities, side.aligned.hubs,
                     dir / ("loadings_" + name + "_sum1.csv"));
    };
    dump_side(w.left, "left");
    if (two) {
        dump_side(w.right_side(), "right");
    }
    write_factor_csv(w.factors, w.left.aligned.hubs, w.right_side().aligned.hubs, w.fit.window_start,
                     dir / "factors_sum1.csv");

    json report = fit_json(w.fit, options);
    report["label"] = w.label;
    report["left"] = side_json(w.left);
    if (two) {
        report["right"] = side_json(w.right_side());
    }
    write_json(report, dir / "fit_report.json");
}

// ---------------------------------------------------------------------------

void write_rank_table(const std::vector<RankRow>& rows, std::ostream& out) {
    std::vector<std::string> header{"estimator"};
    std::vector<std::string> ratio{"Ratio"};
    std::vector<std::string> scree{"Scree"};
    auto pair = [](const std::string& a, const std::string& b) { return "(" + a + ", " + b + ")"; };
    auto same = [&](auto field) {
        return std::all_of(rows.begin(), rows.end(), [&](const RankRow& r) { return field(r) == field(rows.front()); });
    };
    const bool fixed_left = same([](const RankRow& r) { return r.r_left; });
    const bool fixed_right = same([](const RankRow& r) { return r.r_right.value_or(0); });
    std::string model_label = "r=auto";
    if (!rows.empty() && rows.front().r_right) {
        model_label = pair(fixed_left ? std::to_string(rows.front().r_left) : "auto",
                           fixed_right ? std::to_string(*rows.front().r_right) : "auto");
    } else if (!rows.empty() && fixed_left) {
        model_label = "r=" + std::to_string(rows.front().r_left);
    }
    std::vector<std::string> ve{model_label};
    for (const auto& row : rows) {
        header.push_back(row.label);
        if (row.ratio_right) {
            ratio.push_back(pair(std::to_string(row.ratio_left), std::to_string(*row.ratio_right)));
            scree.push_back(pair(std::to_string(row.scree_left), std::to_string(row.scree_right.value_or(0))));
        } else {
            ratio.push_back(std::to_string(row.ratio_left));
            scree.push_back(std::to_string(row.scree_left));
        }
        if (row.side_variance_explained) {
            ve.push_back(pair(pct(row.side_variance_explained->first), pct(row.side_variance_explained->second)));
        } else {
            ve.push_back(pct(row.variance_explained));
        }
    }
    for (const auto* line : {&header, &ratio, &scree, &ve}) {
        out << csv::join(*line) << '\n';
    }
}

void write_rank_table(const std::vector<RankRow>& rows, const fs::path& path) {
    auto out = csv::open_for_write(path);
    write_rank_table(rows, out);
}

void write_merges_csv(const ClusterTree& tree, std::ostream& out) {
    out << "step,left,right,height,size\n";
    for (std::size_t s = 0; s < tree.merges.size(); ++s) {
        const Merge& m = tree.merges[s];
        out << s + 1 << ',' << m.left << ',' << m.right << ',' << csv::format(m.height) << ',' << m.size << '\n';
    }
}

void write_cluster_labels_csv(const ClusterTree& tree, const std::vector<std::string>& entities, std::ostream& out) {
    out << "entity,cluster\n";
    for (std::size_t i = 0; i < entities.size(); ++i) {
        out << csv::quote(entities[i]) << ',' << tree.labels[i] << '\n';
    }
}

std::vector<Merge> read_merges_csv(const fs::path& path) {
    const csv::Table table = csv::read_table(path);
    const auto cl = table.column("left");
    const auto cr = table.column("right");
    const auto ch = table.column("height");
    const auto cs = table.column("size");
    std::vector<Merge> merges;
    for (const auto& row : table.rows) {
        Merge m;
        m.left = static_cast<int>(csv::parse_int(row[cl], path.string()));
        m.right = static_cast<int>(csv::parse_int(row[cr], path.string()));
        m.height = csv::parse_double(row[ch], path.string());
        m.size = csv::parse_int(row[cs], path.string());
        merges.push_back(m);
    }
    return merges;
}

std::vector<HeatmapRow> read_heatmap_csv(const fs::path& path) {
    const csv::Table table = csv::read_table(path);
    const auto ce = table.column("entity");
    const auto ch = table.column("hub");
    const auto cw = table.column("window_label");
    const auto cl = table.column("loading");
    std::vector<HeatmapRow> rows;
    rows.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        rows.push_back({row[ce], row[ch], row[cw], csv::parse_double(row[cl], path.string())});
    }
    return rows;
}

// ---------------------------------------------------------------------------

std::vector<fs::path> export_plot_data(const RollingResult& result, PlotKind kind, const fs::path& dir,
                                       const ExportOptions& options) {
    check_nonempty(result);
    fs::create_directories(dir);
    std::vector<fs::path> written;
    const bool two = result.model == ModelFamily::TwoSided;

    switch (kind) {
    case PlotKind::Heatmap: {
        for (const auto& [suffix, first] : sides(result, result.windows.front())) {
            const fs::path path = dir / ("heatmap" + suffix + ".csv");
            auto out = csv::open_for_write(path);
            out << "entity,hub,window_label,loading\n";
            for (const auto& w : result.windows) {
                const SideResult& side = suffix == "_import" ? w.right_side() : w.left;
                const Matrix& a = side.aligned.values;
                for (Index k = 0; k < a.cols(); ++k) {
                    for (Index i = 0; i < a.rows(); ++i) {
                        out << csv::quote(side.aligned.entities[static_cast<std::size_t>(i)]) << ','
                            << csv::quote(side.aligned.hubs[static_cast<std::size_t>(k)]) << ','
                            << csv::quote(w.label) << ',' << csv::format(a(i, k)) << '\n';
                    }
                }
            }
            written.push_back(path);
        }
        break;
    }
    case PlotKind::Network: {
        const fs::path nodes = dir / "network_nodes.csv";
        const fs::path hub_edges = dir / "network_hub_edges.csv";
        const fs::path member_edges = dir / "network_member_edges.csv";
        auto on = csv::open_for_write(nodes);
        auto oh = csv::open_for_write(hub_edges);
        auto om = csv::open_for_write(member_edges);
        on << "window_label,side,hub,self_volume\n";
        oh << "window_label,hub_from,hub_to,weight,direction_flip\n";
        om << "window_label,side,entity,hub,loading\n";
        for (const auto& w : result.windows) {
            const HubNetwork net = hub_network(w);
            const Index r1 = net.mean_factor.rows();
            const Index r2 = net.mean_factor.cols();
            auto node_rows = [&](const std::string& side, const std::vector<std::string>& hubs) {
                for (std::size_t k = 0; k < hubs.size(); ++k) {
                    const auto kk = static_cast<Index>(k);
                    const double self = kk < std::min(r1, r2) ? net.mean_factor(kk, kk) : 0.0;
                    on << csv::quote(w.label) << ',' << side << ',' << csv::quote(hubs[k]) << ','
                       << csv::format(self) << '\n';
                }
            };
            auto member_rows = [&](const std::string& side, const Matrix& t, const std::vector<std::string>& hubs) {
                for (Index k = 0; k < t.cols(); ++k) {
                    for (Index i = 0; i < t.rows(); ++i) {
                        if (t(i, k) != 0.0) {
                            om << csv::quote(w.label) << ',' << side << ','
                               << csv::quote(net.entities[static_cast<std::size_t>(i)]) << ','
                               << csv::quote(hubs[static_cast<std::size_t>(k)]) << ',' << csv::format(t(i, k))
                               << '\n';
                        }
                    }
                }
            };
            if (two) {
                node_rows("export", net.hubs_left);
                node_rows("import", net.hubs_right);
                member_rows("export", net.truncated_left, net.hubs_left);
                member_rows("import", net.truncated_right, net.hubs_right);
            } else {
                node_rows("both", net.hubs_left);
                member_rows("both", net.truncated_left, net.hubs_left);
            }
            for (Index a = 0; a < r1; ++a) {
                for (Index b = 0; b < r2; ++b) {
                    if (a == b) {
                        continue;
                    }
                    const double v = net.mean_factor(a, b);
                    oh << csv::quote(w.label) << ',' << csv::quote(net.hubs_left[static_cast<std::size_t>(a)]) << ','
                       << csv::quote(net.hubs_right[static_cast<std::size_t>(b)]) << ',' << csv::format(v) << ','
                       << (v < 0.0 ? 1 : 0) << '\n';
                }
            }
        }
        written = {nodes, hub_edges, member_edges};
        break;
    }
    case PlotKind::Dendrogram: {
        std::vector<std::pair<std::string, FeatureSide>> variants;
        if (two) {
            variants = {{"_export", FeatureSide::Left}, {"_import", FeatureSide::Right}, {"_joint", FeatureSide::Joint}};
        } else {
            variants = {{"", FeatureSide::Left}};
        }
        for (const auto& [suffix, side] : variants) {
            const Matrix features = clustering_features(result, side);
            const Index k = std::min<Index>(options.clusters, features.rows());
            const ClusterTree tree = ward_cluster(features, k, options.ward_input);
            const fs::path merges = dir / ("dendrogram" + suffix + "_merges.csv");
            const fs::path labels = dir / ("dendrogram" + suffix + "_labels.csv");
            {
                auto out = csv::open_for_write(merges);
                write_merges_csv(tree, out);
            }
            {
                auto out = csv::open_for_write(labels);
                write_cluster_labels_csv(tree, result.entities, out);
            }
            written.push_back(merges);
            written.push_back(labels);
        }
        break;
    }
    case PlotKind::Scree: {
        const fs::path path = dir / "scree.csv";
        auto out = csv::open_for_write(path);
        out << "window_label,side,index,eigenvalue\n";
        for (const auto& w : result.windows) {
            auto rows = [&](const std::string& side, const Vector& eig) {
                for (Index k = 0; k < eig.size(); ++k) {
                    out << csv::quote(w.label) << ',' << side << ',' << k + 1 << ',' << csv::format(eig(k)) << '\n';
                }
            };
            if (two) {
                rows("export", w.fit.eigenvalues_left);
                rows("import", w.fit.eigenvalues_right);
            } else {
                rows("both", w.fit.eigenvalues_left);
            }
        }
        written.push_back(path);
        break;
    }
    }
    return written;
}

}  // namespace mfnet
