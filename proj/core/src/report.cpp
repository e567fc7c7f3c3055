#include "fairgat/report.hpp"

#include <iomanip>
#include <sstream>

namespace fairgat {

namespace {

nlohmann::json components_to_json(const BoundComponents& c) {
    return {{"rhs", c.rhs},
            {"rhs_feature_dim_variant", c.rhs_feature_dim},
            {"lipschitz", c.lipschitz},
            {"sigma_max", c.sigma_max},
            {"attention_term", c.attention_term},
            {"delta_h_in", c.delta_h_in},
            {"delta_c", c.delta_c},
            {"delta_z", c.delta_z},
            {"sqrt_n", c.sqrt_n},
            {"sqrt_f", c.sqrt_f}};
}

std::string metric_grouping(const std::string& name) {
    if (name.ends_with("_mixed")) return "mixed";
    if (name.ends_with("_group")) return "group";
    if (name.ends_with("_subgroup")) return "subgroup";
    return "sensitive";
}

}  // namespace

nlohmann::json bound_report_to_json(const BoundReport& report) {
    nlohmann::json j;
    j["delta_input"] = report.delta_input;
    j["delta_output"] = report.delta_output;
    j["composed_bound"] = report.composed_bound;
    j["composed_satisfied"] = report.composed_satisfied;
    j["all_satisfied"] = report.all_satisfied;
    j["max_a2_violation"] = report.max_a2_violation;
    nlohmann::json layers = nlohmann::json::array();
    for (const LayerBoundReport& lb : report.layers) {
        nlohmann::json lj;
        lj["kind"] = lb.kind == LayerKind::Attention ? "attention" : "fc";
        lj["lhs"] = lb.lhs;
        lj["rhs"] = lb.measured.rhs;
        lj["propagated_rhs"] = lb.propagated_rhs;
        lj["alpha_chi"] = lb.alpha_chi;
        lj["a2_violation"] = lb.a2_violation;
        lj["assumption_violated"] = lb.assumption_violated;
        lj["satisfied"] = lb.satisfied;
        lj["components"] = components_to_json(lb.measured);
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    return j;
}

nlohmann::json run_report_to_json(const RunReport& report) {
    nlohmann::json j;
    j["artifact_version"] = kArtifactVersion;
    j["config"] = config_to_json(report.config);

    nlohmann::json seeds = nlohmann::json::array();
    nlohmann::json records = nlohmann::json::array();
    for (const SeedResult& r : report.seeds) {
        nlohmann::json sj;
        sj["seed"] = r.seed;
        sj["failed"] = r.failed;
        if (r.failed) {
            sj["failure"] = r.failure;
        } else {
            sj["metrics"] = r.metrics;
            sj["metric_errors"] = r.metric_errors;
            sj["best_val_accuracy"] = r.best_val_accuracy;
            sj["best_epoch"] = r.best_epoch;
            sj["seconds_per_epoch"] = r.seconds_per_epoch;
            if (r.has_bounds) sj["bounds"] = bound_report_to_json(r.bounds);
            for (const auto& [name, value] : r.metrics) {
                records.push_back({{"metric", name},
                                   {"value", value},
                                   {"grouping", metric_grouping(name)},
                                   {"seed", r.seed},
                                   {"split", "test"}});
            }
        }
        seeds.push_back(std::move(sj));
    }
    j["seeds"] = std::move(seeds);
    j["records"] = std::move(records);

    nlohmann::json agg;
    for (const auto& [name, a] : report.aggregate) {
        agg[name] = {{"mean", a.mean}, {"std", a.stddev}, {"count", a.count}};
    }
    j["aggregate"] = std::move(agg);
    return j;
}

namespace {

std::string fixed(double v, int precision = 4) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(precision) << v;
    return ss.str();
}

std::string mean_std(const RunReport& report, const std::string& name) {
    const auto it = report.aggregate.find(name);
    if (it == report.aggregate.end()) return "-";
    return fixed(it->second.mean) + " +- " + fixed(it->second.stddev);
}

void render_row(std::ostringstream& out, const std::vector<std::string>& cells,
                const std::vector<int>& widths) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
        out << std::left << std::setw(widths[c]) << cells[c];
        if (c + 1 < cells.size()) out << "  ";
    }
    out << "\n";
}

std::vector<std::string> metric_columns(const RunReport& report) {
    if (report.config.task == Task::NodeClassification) {
        return {"accuracy", "delta_sp", "delta_eo", "delta_yhat"};
    }
    return {"accuracy", "dp_mixed", "eo_mixed", "dp_group",
            "eo_group", "dp_subgroup", "eo_subgroup"};
}

}  // namespace

std::string render_run_table(const RunReport& report) {
    const std::vector<std::string> metrics = metric_columns(report);
    std::vector<std::string> header = {"seed"};
    header.insert(header.end(), metrics.begin(), metrics.end());
    header.push_back("sec/epoch");

    std::vector<std::vector<std::string>> rows;
    for (const SeedResult& r : report.seeds) {
        std::vector<std::string> row{std::to_string(r.seed)};
        if (r.failed) {
            row.push_back("FAILED: " + r.failure);
            while (row.size() < header.size()) row.push_back("-");
        } else {
            for (const std::string& m : metrics) {
                const auto it = r.metrics.find(m);
                row.push_back(it != r.metrics.end() ? fixed(it->second) : "err");
            }
            row.push_back(fixed(r.seconds_per_epoch, 5));
        }
        rows.push_back(std::move(row));
    }
    std::vector<std::string> mean_row{"mean"};
    for (const std::string& m : metrics) mean_row.push_back(mean_std(report, m));
    mean_row.push_back(mean_std(report, "seconds_per_epoch"));
    rows.push_back(std::move(mean_row));

    std::vector<int> widths(header.size(), 0);
    for (std::size_t c = 0; c < header.size(); ++c) {
        widths[c] = static_cast<int>(header[c].size());
        for (const auto& row : rows) {
            if (c < row.size()) {
                widths[c] = std::max(widths[c], static_cast<int>(row[c].size()));
            }
        }
    }
    std::ostringstream out;
    out << "task: " << task_name(report.config.task)
        << "  steps: " << format_steps(report.config.fair.steps);
    if (report.config.task == Task::LinkPrediction) {
        out << "  neg-ratio: " << report.config.negative_ratio;
    }
    out << "\n";
    render_row(out, header, widths);
    for (const auto& row : rows) render_row(out, row, widths);
    return out.str();
}

std::string render_bound_table(const BoundReport& report) {
    std::ostringstream out;
    const std::vector<std::string> header = {"layer", "kind",     "lhs",
                                             "rhs",   "prop_rhs", "alpha_chi",
                                             "a2_dev", "status"};
    std::vector<std::vector<std::string>> rows;
    for (std::size_t l = 0; l < report.layers.size(); ++l) {
        const LayerBoundReport& lb = report.layers[l];
        std::string status = lb.satisfied ? "ok" : "VIOLATED";
        if (lb.assumption_violated) status += " (assumption-violated: bound not guaranteed)";
        rows.push_back({std::to_string(l),
                        lb.kind == LayerKind::Attention ? "attention" : "fc",
                        fixed(lb.lhs, 6), fixed(lb.measured.rhs, 6),
                        fixed(lb.propagated_rhs, 6), fixed(lb.alpha_chi, 6),
                        fixed(lb.a2_violation, 10), status});
    }
    std::vector<int> widths(header.size(), 0);
    for (std::size_t c = 0; c < header.size(); ++c) {
        widths[c] = static_cast<int>(header[c].size());
        for (const auto& row : rows) {
            widths[c] = std::max(widths[c], static_cast<int>(row[c].size()));
        }
    }
    render_row(out, header, widths);
    for (const auto& row : rows) render_row(out, row, widths);
    out << "delta_input=" << fixed(report.delta_input, 6)
        << "  delta_output=" << fixed(report.delta_output, 6)
        << "  composed_bound=" << fixed(report.composed_bound, 6)
        << "  composed_satisfied=" << (report.composed_satisfied ? "yes" : "no")
        << "  max_a2_violation=" << fixed(report.max_a2_violation, 10) << "\n";
    return out.str();
}

std::string render_ablation_table(
    const std::vector<std::pair<std::string, RunReport>>& rows) {
    if (rows.empty()) return "";
    const std::vector<std::string> metrics = metric_columns(rows.front().second);
    std::vector<std::string> header = {"mode"};
    header.insert(header.end(), metrics.begin(), metrics.end());

    std::vector<std::vector<std::string>> table;
    for (const auto& [name, report] : rows) {
        std::vector<std::string> row{name};
        for (const std::string& m : metrics) row.push_back(mean_std(report, m));
        table.push_back(std::move(row));
    }
    std::vector<int> widths(header.size(), 0);
    for (std::size_t c = 0; c < header.size(); ++c) {
        widths[c] = static_cast<int>(header[c].size());
        for (const auto& row : table) {
            widths[c] = std::max(widths[c], static_cast<int>(row[c].size()));
        }
    }
    std::ostringstream out;
    render_row(out, header, widths);
    for (const auto& row : table) render_row(out, row, widths);
    return out.str();
}

nlohmann::json ablation_to_json(
    const std::vector<std::pair<std::string, RunReport>>& rows) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [name, report] : rows) {
        j.push_back({{"mode", name}, {"report", run_report_to_json(report)}});
    }
    return j;
}

}  // namespace fairgat
