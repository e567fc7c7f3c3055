#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairgat/bounds.hpp"
#include "fairgat/data.hpp"
#include "fairgat/graph.hpp"
#include "fairgat/layers.hpp"
#include "fairgat/optim.hpp"

namespace fairgat {

enum class Task { NodeClassification, LinkPrediction };

const char* task_name(Task task);
Task parse_task(const std::string& text);

inline FairGATConfig default_fair_config() {
    FairGATConfig config;
    config.steps = parse_steps("all");
    return config;
}

struct RunConfig {
    Task task = Task::NodeClassification;
    int hidden = 128;
    FairGATConfig fair = default_fair_config();
    AdamConfig optim;  // lr 0.005, weight decay 0.0005
    int epochs = 500;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    std::array<double, 3> split = {0.4, 0.3, 0.3};
    double threshold = 0.5;
    double negative_ratio = 1.0;

    void validate() const;
};

struct SeedResult {
    std::uint64_t seed = 0;
    bool failed = false;
    std::string failure;
    // metric name -> value; missing metrics carry an entry in metric_errors
    std::map<std::string, double> metrics;
    std::map<std::string, std::string> metric_errors;
    double best_val_accuracy = 0.0;
    int best_epoch = -1;
    double seconds_per_epoch = 0.0;
    bool has_bounds = false;
    BoundReport bounds;
    LayerStack model;  // selected (best validation) parameters
};

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;
    int count = 0;
};

struct RunReport {
    RunConfig config;
    std::vector<SeedResult> seeds;
    std::map<std::string, Aggregate> aggregate;
};

/// Trains one seed end to end and evaluates the selected model on the test
/// split. A NaN loss aborts the seed and records the failure.
SeedResult train_single(const RunConfig& config, const Graph& graph,
                        std::uint64_t seed);

/// Trains every configured seed and aggregates test metrics (mean, sample
/// standard deviation over succeeding seeds).
RunReport train_run(const RunConfig& config, const Graph& graph);

/// Test metrics of a trained node-classification model under the split that
/// the given seed induces. Per-metric failures (e.g. EO undefined) are
/// recorded without aborting the rest.
void evaluate_node_model(const LayerStack& stack, const Graph& graph,
                         const RunConfig& config, std::uint64_t seed,
                         std::map<std::string, double>* metrics,
                         std::map<std::string, std::string>* metric_errors,
                         BoundReport* bounds, bool* has_bounds);

void evaluate_link_model(const LayerStack& stack, const Graph& graph,
                         const RunConfig& config, std::uint64_t seed,
                         std::map<std::string, double>* metrics,
                         std::map<std::string, std::string>* metric_errors);

/// Bound analysis of a trained node-classification model on the full graph.
BoundReport bounds_for_model(const LayerStack& stack, const Graph& graph);

struct SavedModel {
    LayerStack stack;
    RunConfig config;
    std::uint64_t seed = 0;
};

void save_model(const std::string& path, const LayerStack& stack,
                const RunConfig& config, std::uint64_t seed);
SavedModel load_model(const std::string& path);

/// JSON round-trip of the resolved configuration (model files, reports).
nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

}  // namespace fairgat
