// Command-line front end: train / eval / bounds / ablate / gen.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairgat/data.hpp"
#include "fairgat/errors.hpp"
#include "fairgat/report.hpp"
#include "fairgat/train.hpp"

namespace {

namespace fs = std::filesystem;
using fairgat::RunConfig;

struct CommonTrainFlags {
    std::string data_dir;
    std::string out_dir = "out";
    std::string config_path;
    std::string task = "node-classification";
    std::string steps = "all";
    double alpha_chi_max = 0.75;
    double eta = 1.0;
    double kappa = 1.0;
    double alpha_star = -1.0;  // <0 means unset
    bool no_normalize = false;
    int epochs = 500;
    double lr = 0.005;
    double weight_decay = 0.0005;
    int hidden = 128;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    std::vector<double> split = {0.4, 0.3, 0.3};
    double threshold = 0.5;
    double neg_ratio = 1.0;
};

void add_model_flags(CLI::App* cmd, CommonTrainFlags& flags) {
    cmd->add_option("--task", flags.task, "node-classification or link-prediction");
    cmd->add_option("--alpha-chi-max", flags.alpha_chi_max,
                    "Cap on the inter-group attention mass (0, 1]");
    cmd->add_option("--eta", flags.eta, "Representation scaling factor");
    cmd->add_option("--kappa", flags.kappa, "Spectral norm target (0, 1]");
    cmd->add_option("--alpha-star", flags.alpha_star,
                    "Directly tuned inter-attention mass (overrides the closed form; "
                    "required for non-binary sensitive attributes)");
    cmd->add_option("--steps", flags.steps,
                    "Enabled steps: comma list of fair_attention, spectral_norm, "
                    "scaling; or all / none");
    cmd->add_flag("--no-normalize", flags.no_normalize,
                  "Skip the unit-variance normalization before eta scaling");
    cmd->add_option("--epochs", flags.epochs, "Training epochs");
    cmd->add_option("--lr", flags.lr, "Adam learning rate");
    cmd->add_option("--weight-decay", flags.weight_decay, "L2 weight decay");
    cmd->add_option("--hidden", flags.hidden, "Hidden dimension");
    cmd->add_option("--seeds", flags.seeds, "Seeds to run")->delimiter(',');
    cmd->add_option("--split", flags.split, "Train/val/test fractions")
        ->delimiter(',')
        ->expected(3);
    cmd->add_option("--threshold", flags.threshold, "Hard-label threshold");
    cmd->add_option("--neg-ratio", flags.neg_ratio,
                    "Negatives per positive for link prediction");
    cmd->add_option("--config", flags.config_path,
                    "Flat key=value config file; flags override it");
}

RunConfig to_run_config(const CommonTrainFlags& flags) {
    RunConfig config;
    config.task = fairgat::parse_task(flags.task);
    config.hidden = flags.hidden;
    config.epochs = flags.epochs;
    config.optim.lr = flags.lr;
    config.optim.weight_decay = flags.weight_decay;
    config.seeds = flags.seeds;
    config.split = {flags.split[0], flags.split[1], flags.split[2]};
    config.threshold = flags.threshold;
    config.negative_ratio = flags.neg_ratio;
    config.fair.alpha_chi_max = flags.alpha_chi_max;
    config.fair.eta = flags.eta;
    config.fair.kappa = flags.kappa;
    config.fair.steps = fairgat::parse_steps(flags.steps);
    config.fair.normalize_before_scaling = !flags.no_normalize;
    if (flags.alpha_star >= 0.0) config.fair.alpha_star_override = flags.alpha_star;
    config.validate();
    return config;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw fairgat::DataError("cannot write " + path.string());
    out << text;
}

int cmd_train(const CommonTrainFlags& flags) {
    const RunConfig config = to_run_config(flags);
    const auto loaded = fairgat::load_graph_bundle(flags.data_dir);

    const fairgat::RunReport report = fairgat::train_run(config, loaded.graph);

    fs::create_directories(flags.out_dir);
    write_text(fs::path(flags.out_dir) / "report.json",
               fairgat::run_report_to_json(report).dump(2) + "\n");
    const std::string table = fairgat::render_run_table(report);
    write_text(fs::path(flags.out_dir) / "table.txt", table);
    for (const auto& seed_result : report.seeds) {
        if (seed_result.failed) continue;
        fairgat::save_model((fs::path(flags.out_dir) /
                             ("model_seed" + std::to_string(seed_result.seed) + ".json"))
                                .string(),
                            seed_result.model, config, seed_result.seed);
    }
    std::cout << table;
    for (const auto& seed_result : report.seeds) {
        if (seed_result.failed) {
            std::cout << "seed " << seed_result.seed << " FAILED: " << seed_result.failure
                      << "\n";
        }
    }
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_dir,
             const std::vector<std::string>& wanted, double threshold_override) {
    fairgat::SavedModel model = fairgat::load_model(model_path);
    if (threshold_override >= 0.0) model.config.threshold = threshold_override;
    const auto loaded = fairgat::load_graph_bundle(data_dir);

    std::map<std::string, double> metrics;
    std::map<std::string, std::string> errors;
    if (model.config.task == fairgat::Task::NodeClassification) {
        fairgat::evaluate_node_model(model.stack, loaded.graph, model.config, model.seed,
                                     &metrics, &errors, nullptr, nullptr);
    } else {
        fairgat::evaluate_link_model(model.stack, loaded.graph, model.config, model.seed,
                                     &metrics, &errors);
    }

    const auto keep = [&](const std::string& name) {
        if (wanted.empty()) return true;
        return std::find(wanted.begin(), wanted.end(), name) != wanted.end();
    };
    nlohmann::json j;
    j["artifact_version"] = fairgat::kArtifactVersion;
    j["config"] = fairgat::config_to_json(model.config);
    j["seed"] = model.seed;
    nlohmann::json records = nlohmann::json::array();
    for (const auto& [name, value] : metrics) {
        if (!keep(name)) continue;
        records.push_back({{"metric", name},
                           {"value", value},
                           {"seed", model.seed},
                           {"split", "test"}});
        std::cout << name << " = " << value << "\n";
    }
    for (const auto& [name, what] : errors) {
        if (!keep(name)) continue;
        records.push_back({{"metric", name}, {"error", what}, {"seed", model.seed}});
        std::cout << name << " = error: " << what << "\n";
    }
    j["records"] = std::move(records);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_bounds(const std::string& model_path, const std::string& data_dir,
               const std::string& out_path) {
    const fairgat::SavedModel model = fairgat::load_model(model_path);
    if (model.config.task != fairgat::Task::NodeClassification) {
        throw fairgat::ConfigError("bounds analysis requires a node-classification model");
    }
    const auto loaded = fairgat::load_graph_bundle(data_dir);
    const fairgat::BoundReport report =
        fairgat::bounds_for_model(model.stack, loaded.graph);
    std::cout << fairgat::render_bound_table(report);
    nlohmann::json j;
    j["artifact_version"] = fairgat::kArtifactVersion;
    j["config"] = fairgat::config_to_json(model.config);
    j["seed"] = model.seed;
    j["bounds"] = fairgat::bound_report_to_json(report);
    if (!out_path.empty()) write_text(out_path, j.dump(2) + "\n");
    return 0;
}

int cmd_ablate(const CommonTrainFlags& flags) {
    const RunConfig base = to_run_config(flags);
    const auto loaded = fairgat::load_graph_bundle(flags.data_dir);

    const std::pair<const char*, const char*> modes[] = {
        {"GAT", "none"},
        {"Steps 1&2", "fair_attention,spectral_norm"},
        {"Steps 1&3", "fair_attention,scaling"},
        {"Steps 2&3", "spectral_norm,scaling"},
        {"FairGAT", "all"},
    };
    std::vector<std::pair<std::string, fairgat::RunReport>> rows;
    std::vector<std::pair<std::string, std::string>> failures;
    for (const auto& [name, steps] : modes) {
        RunConfig config = base;
        config.fair.steps = fairgat::parse_steps(steps);
        try {
            rows.emplace_back(name, fairgat::train_run(config, loaded.graph));
        } catch (const std::exception& e) {
            failures.emplace_back(name, e.what());
        }
    }

    const std::string table = fairgat::render_ablation_table(rows);
    std::cout << table;
    for (const auto& [name, what] : failures) {
        std::cout << name << " FAILED: " << what << "\n";
    }
    fs::create_directories(flags.out_dir);
    nlohmann::json j;
    j["artifact_version"] = fairgat::kArtifactVersion;
    j["modes"] = fairgat::ablation_to_json(rows);
    if (!failures.empty()) {
        nlohmann::json fj = nlohmann::json::array();
        for (const auto& [name, what] : failures) {
            fj.push_back({{"mode", name}, {"error", what}});
        }
        j["failures"] = std::move(fj);
    }
    write_text(fs::path(flags.out_dir) / "ablation.json", j.dump(2) + "\n");
    write_text(fs::path(flags.out_dir) / "ablation.txt", table);
    return 0;
}

struct GenFlags {
    std::string out_dir;
    std::vector<int> group_sizes = {250, 250};
    double p_intra = 0.05;
    double p_inter = 0.005;
    int feature_dim = 8;
    double feature_shift = 1.0;
    std::string label_rule = "group-correlated";
    double rho = 0.7;
    std::uint64_t seed = 0;
};

/// Expands `--config file` into command-line tokens: every key=value line
/// becomes --key=value inserted right after the subcommand, except keys the
/// user already passed explicitly (so flags always override the file).
std::vector<std::string> expand_config_args(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);

    std::size_t subcommand_at = args.size();
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (!args[i].empty() && args[i][0] != '-') {
            subcommand_at = i;
            break;
        }
    }
    if (subcommand_at == args.size()) return args;

    std::string config_path;
    std::set<std::string> user_keys;
    for (std::size_t i = subcommand_at + 1; i < args.size(); ++i) {
        const std::string& arg = args[i];
        if (arg.rfind("--", 0) != 0) continue;
        const auto eq = arg.find('=');
        const std::string key = arg.substr(2, eq == std::string::npos ? arg.npos : eq - 2);
        user_keys.insert(key);
        if (key == "config") {
            if (eq != std::string::npos) {
                config_path = arg.substr(eq + 1);
            } else if (i + 1 < args.size()) {
                config_path = args[i + 1];
            }
        }
    }
    if (config_path.empty()) return args;

    std::ifstream in(config_path);
    if (!in) throw fairgat::DataError("cannot open config file: " + config_path);
    std::vector<std::string> injected;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || key == "config" || user_keys.count(key) != 0) continue;
        injected.push_back("--" + key + "=" + value);
    }
    args.insert(args.begin() + subcommand_at + 1, injected.begin(), injected.end());
    return args;
}

int cmd_gen(const GenFlags& flags) {
    fairgat::SbmSpec spec;
    spec.group_sizes = flags.group_sizes;
    spec.p_intra = flags.p_intra;
    spec.p_inter = flags.p_inter;
    spec.feature_dim = flags.feature_dim;
    spec.feature_shift = flags.feature_shift;
    spec.rho = flags.rho;
    spec.seed = flags.seed;
    if (flags.label_rule == "group-correlated") {
        spec.label_rule = fairgat::SbmSpec::LabelRule::GroupCorrelated;
    } else if (flags.label_rule == "feature-threshold") {
        spec.label_rule = fairgat::SbmSpec::LabelRule::FeatureThreshold;
    } else {
        throw fairgat::ConfigError("unknown label rule: " + flags.label_rule);
    }
    const fairgat::Graph graph = fairgat::generate_sbm(spec);
    fairgat::save_graph_bundle(graph, flags.out_dir, spec.seed);
    std::cout << "wrote " << graph.n_nodes() << " nodes, " << graph.n_edges()
              << " edges to " << flags.out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fairness-aware graph attention training and bound analysis"};
    app.require_subcommand(1);

    CommonTrainFlags train_flags;
    CLI::App* train = app.add_subcommand("train", "Train a model over the configured seeds");
    train->add_option("--data", train_flags.data_dir, "Graph bundle directory")
        ->required();
    train->add_option("--out", train_flags.out_dir, "Output directory");
    add_model_flags(train, train_flags);

    std::string eval_model, eval_data;
    std::vector<std::string> eval_metrics;
    double eval_threshold = -1.0;
    CLI::App* eval = app.add_subcommand("eval", "Re-evaluate a trained model");
    eval->add_option("--model", eval_model, "Model file from train")->required();
    eval->add_option("--data", eval_data, "Graph bundle directory")->required();
    eval->add_option("--metrics", eval_metrics, "Metrics to report (default all)")
        ->delimiter(',');
    eval->add_option("--threshold", eval_threshold, "Hard-label threshold override");
    std::string eval_config;
    eval->add_option("--config", eval_config,
                     "Flat key=value config file; flags override it");

    std::string bounds_model, bounds_data, bounds_out;
    CLI::App* bounds = app.add_subcommand("bounds", "Disparity bound analysis");
    bounds->add_option("--model", bounds_model, "Model file from train")->required();
    bounds->add_option("--data", bounds_data, "Graph bundle directory")->required();
    bounds->add_option("--out", bounds_out, "Write the JSON report here");
    std::string bounds_config;
    bounds->add_option("--config", bounds_config,
                       "Flat key=value config file; flags override it");

    CommonTrainFlags ablate_flags;
    CLI::App* ablate = app.add_subcommand("ablate", "Run the five step-ablation modes");
    ablate->add_option("--data", ablate_flags.data_dir, "Graph bundle directory")
        ->required();
    ablate->add_option("--out", ablate_flags.out_dir, "Output directory");
    add_model_flags(ablate, ablate_flags);

    GenFlags gen_flags;
    CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic SBM graph bundle");
    gen->add_option("--out", gen_flags.out_dir, "Bundle directory to write")->required();
    gen->add_option("--nodes", gen_flags.group_sizes, "Nodes per sensitive group")
        ->delimiter(',');
    gen->add_option("--p-intra", gen_flags.p_intra, "Intra-group edge probability");
    gen->add_option("--p-inter", gen_flags.p_inter, "Inter-group edge probability");
    gen->add_option("--feature-dim", gen_flags.feature_dim, "Feature dimension");
    gen->add_option("--feature-shift", gen_flags.feature_shift,
                    "Group-mean feature offset");
    gen->add_option("--label-rule", gen_flags.label_rule,
                    "group-correlated or feature-threshold");
    gen->add_option("--rho", gen_flags.rho, "Label-group correlation");
    gen->add_option("--seed", gen_flags.seed, "Generator seed");
    std::string gen_config;
    gen->add_option("--config", gen_config,
                    "Flat key=value config file; flags override it");

    try {
        std::vector<std::string> args = expand_config_args(argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const fairgat::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (train->parsed()) return cmd_train(train_flags);
        if (eval->parsed()) return cmd_eval(eval_model, eval_data, eval_metrics,
                                            eval_threshold);
        if (bounds->parsed()) return cmd_bounds(bounds_model, bounds_data, bounds_out);
        if (ablate->parsed()) return cmd_ablate(ablate_flags);
        if (gen->parsed()) return cmd_gen(gen_flags);
    } catch (const fairgat::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const fairgat::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
