#include "fairgat/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fairgat/errors.hpp"
#include "fairgat/metrics.hpp"
#include "fairgat/rng.hpp"

namespace fairgat {

namespace {
constexpr int kModelFormatVersion = 1;
}

const char* task_name(Task task) {
    return task == Task::NodeClassification ? "node-classification" : "link-prediction";
}

Task parse_task(const std::string& text) {
    if (text == "node-classification" || text == "nc") return Task::NodeClassification;
    if (text == "link-prediction" || text == "lp") return Task::LinkPrediction;
    throw ConfigError("unknown task '" + text +
                      "' (expected node-classification or link-prediction)");
}

void RunConfig::validate() const {
    if (hidden < 1) throw ConfigError("hidden dimension must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (threshold < 0.0 || threshold > 1.0) {
        throw ConfigError("threshold must be in [0, 1]");
    }
    if (negative_ratio < 0.0) throw ConfigError("negative ratio must be >= 0");
    double sum = 0.0;
    for (double f : split) {
        if (f < 0.0) throw ConfigError("split fractions must be non-negative");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
}

namespace {

struct Parameters {
    std::vector<Matrix> weights;       // per layer
    std::vector<Matrix> attn_vectors;  // per layer; empty matrix for FC
};

Parameters stack_parameters(const LayerStack& stack) {
    Parameters p;
    for (const StackLayer& layer : stack.layers) {
        p.weights.push_back(layer.w);
        p.attn_vectors.push_back(layer.a);
    }
    return p;
}

void write_parameters(LayerStack& stack, const Parameters& p) {
    for (std::size_t l = 0; l < stack.layers.size(); ++l) {
        stack.layers[l].w = p.weights[l];
        if (stack.layers[l].kind == LayerKind::Attention) {
            stack.layers[l].a = p.attn_vectors[l];
        }
    }
}

LayerStack make_link_encoder_stack(int in_dim, int hidden, FairGATConfig config,
                                   std::uint64_t seed) {
    LayerStack stack;
    stack.config = config;
    const int dims[3] = {in_dim, hidden, hidden};
    for (int l = 0; l < 2; ++l) {
        StackLayer layer;
        layer.kind = LayerKind::Attention;
        layer.w = glorot_init(dims[l], dims[l + 1], derive_seed(seed, 2ULL * l));
        layer.a = glorot_init(2 * dims[l + 1], 1, derive_seed(seed, 2ULL * l + 1));
        layer.activation = l == 0 ? ActivationKind{Activation::ReLU, 0.2}
                                  : ActivationKind{Activation::Identity, 0.2};
        stack.layers.push_back(std::move(layer));
    }
    stack.validate();
    return stack;
}

struct OptimizerState {
    ParamStore store;
    std::vector<int> weight_slots;  // per layer
    std::vector<int> attn_slots;    // per layer, -1 for FC
};

OptimizerState make_optimizer(const LayerStack& stack) {
    OptimizerState state;
    for (std::size_t l = 0; l < stack.layers.size(); ++l) {
        state.weight_slots.push_back(
            state.store.add("layer" + std::to_string(l) + ".W", stack.layers[l].w));
        if (stack.layers[l].kind == LayerKind::Attention) {
            state.attn_slots.push_back(
                state.store.add("layer" + std::to_string(l) + ".a", stack.layers[l].a));
        } else {
            state.attn_slots.push_back(-1);
        }
    }
    return state;
}

Parameters current_parameters(const OptimizerState& state, const LayerStack& stack) {
    Parameters p;
    for (std::size_t l = 0; l < stack.layers.size(); ++l) {
        p.weights.push_back(state.store.value(state.weight_slots[l]));
        p.attn_vectors.push_back(state.attn_slots[l] >= 0
                                     ? state.store.value(state.attn_slots[l])
                                     : stack.layers[l].a);
    }
    return p;
}

std::vector<Matrix> collect_gradients(const Tape& tape, const BuiltNetwork& net,
                                      const OptimizerState& state) {
    // Aligned with ParamStore insertion order: layer0.W, layer0.a, layer1.W, ...
    std::vector<Matrix> grads(state.store.count());
    for (std::size_t l = 0; l < net.weight_nodes.size(); ++l) {
        grads[state.weight_slots[l]] = tape.adjoint(net.weight_nodes[l]);
        if (state.attn_slots[l] >= 0) {
            grads[state.attn_slots[l]] = tape.adjoint(net.attn_nodes[l]);
        }
    }
    return grads;
}

Matrix soft_predictions(const Matrix& output, bool binary) {
    if (binary) return output;  // sigmoid already applied by the final layer
    Matrix soft(output.rows(), output.cols());
    for (std::size_t i = 0; i < output.rows(); ++i) {
        const auto row = output.row(i);
        const double m = *std::max_element(row.begin(), row.end());
        double denom = 0.0;
        for (double v : row) denom += std::exp(v - m);
        for (std::size_t j = 0; j < output.cols(); ++j) {
            soft(i, j) = std::exp(row[j] - m) / denom;
        }
    }
    return soft;
}

double subset_accuracy(const NodePredictions& preds, const std::vector<int>& labels,
                       const std::vector<int>& nodes) {
    return accuracy(preds, labels, nodes);
}

struct LinkEvalData {
    std::vector<int> us, vs;     // endpoint ids for every evaluated edge
    std::vector<int> truth;      // 1 for positives, 0 for sampled negatives
    std::vector<Edge> edges;     // endpoint pairs (for dyadic groupings)
};

LinkEvalData link_eval_edges(const Graph& graph, const std::vector<int>& pos_ids,
                             const std::vector<Edge>& negs) {
    LinkEvalData data;
    for (int id : pos_ids) {
        const Edge& e = graph.edges()[id];
        data.us.push_back(e.u);
        data.vs.push_back(e.v);
        data.truth.push_back(1);
        data.edges.push_back(e);
    }
    for (const Edge& e : negs) {
        data.us.push_back(e.u);
        data.vs.push_back(e.v);
        data.truth.push_back(0);
        data.edges.push_back(e);
    }
    return data;
}

std::vector<double> decode_scores(const Matrix& embeddings, const LinkEvalData& data) {
    std::vector<double> scores(data.us.size(), 0.0);
    for (std::size_t e = 0; e < data.us.size(); ++e) {
        const auto hu = embeddings.row(data.us[e]);
        const auto hv = embeddings.row(data.vs[e]);
        double dot = 0.0;
        for (std::size_t j = 0; j < embeddings.cols(); ++j) dot += hu[j] * hv[j];
        scores[e] = sigmoid(dot);
    }
    return scores;
}

double link_accuracy(const std::vector<double>& scores, const std::vector<int>& truth,
                     double threshold) {
    std::size_t correct = 0;
    for (std::size_t e = 0; e < scores.size(); ++e) {
        correct += (scores[e] >= threshold ? 1 : 0) == truth[e] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

SeedResult train_node_classification(const RunConfig& config, const Graph& graph,
                                     std::uint64_t seed) {
    SeedResult result;
    result.seed = seed;
    if (!graph.has_labels()) throw DataError("node classification requires labels");

    const Graph g = graph.with_self_loops();
    const SensitivePartition partition = build_partition(g);
    const DataSplit split = split_nodes(graph, config.split, seed);

    const bool binary = graph.num_classes() <= 2;
    const int out_dim = binary ? 1 : graph.num_classes();
    const ActivationKind final_act = binary
                                         ? ActivationKind{Activation::Sigmoid, 0.2}
                                         : ActivationKind{Activation::Identity, 0.2};
    LayerStack stack = make_default_stack(g.feature_dim(), config.hidden, out_dim,
                                          final_act, config.fair, derive_seed(seed, 77));

    Matrix targets(g.n_nodes(), 1);
    std::vector<int> labels_vec = graph.labels();
    for (int i = 0; i < g.n_nodes(); ++i) {
        targets(i, 0) = static_cast<double>(labels_vec[i]);
    }
    std::vector<double> train_weights(g.n_nodes(), 0.0);
    for (int i : split.train) train_weights[i] = 1.0;

    OptimizerState opt = make_optimizer(stack);
    Parameters best = stack_parameters(stack);
    double best_val = -1.0;
    int best_epoch = -1;

    Tape tape;
    const auto t0 = std::chrono::steady_clock::now();
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        tape.reset();
        const Parameters params = current_parameters(opt, stack);
        const BuiltNetwork net =
            build_network(tape, stack, params.weights, params.attn_vectors, g, partition);

        const NodeId logits = net.layers.back().z_final;
        NodeId loss;
        if (binary) {
            loss = tape.bce_with_logits(logits, targets, train_weights);
        } else {
            loss = tape.softmax_cross_entropy(logits, labels_vec, train_weights);
        }
        const double loss_value = tape.value(loss)(0, 0);
        if (!std::isfinite(loss_value)) {
            result.failed = true;
            result.failure = "non-finite loss at epoch " + std::to_string(epoch);
            return result;
        }

        const Matrix soft = soft_predictions(tape.value(net.output), binary);
        const NodePredictions preds = make_predictions(soft, config.threshold);
        const double val_acc = subset_accuracy(preds, labels_vec, split.val);
        if (val_acc > best_val) {
            best_val = val_acc;
            best_epoch = epoch;
            best = params;
        }

        tape.backward(loss);
        opt.store.adam_step(collect_gradients(tape, net, opt), config.optim);
    }
    const auto t1 = std::chrono::steady_clock::now();
    result.seconds_per_epoch =
        std::chrono::duration<double>(t1 - t0).count() / config.epochs;
    result.best_val_accuracy = best_val;
    result.best_epoch = best_epoch;

    write_parameters(stack, best);
    result.model = stack;
    evaluate_node_model(stack, graph, config, seed, &result.metrics,
                        &result.metric_errors, &result.bounds, &result.has_bounds);
    return result;
}

SeedResult train_link_prediction(const RunConfig& config, const Graph& graph,
                                 std::uint64_t seed) {
    SeedResult result;
    result.seed = seed;

    const LinkSplit lsplit =
        split_edges_for_lp(graph, config.split, config.negative_ratio, seed);
    const Graph message_graph =
        graph.with_edge_subset(lsplit.train_pos).with_self_loops();
    const SensitivePartition partition = build_partition(message_graph);

    LayerStack stack = make_link_encoder_stack(graph.feature_dim(), config.hidden,
                                               config.fair, derive_seed(seed, 77));

    const LinkEvalData train_data =
        link_eval_edges(graph, lsplit.train_pos, lsplit.train_neg);
    const LinkEvalData val_data = link_eval_edges(graph, lsplit.val_pos, lsplit.val_neg);

    Matrix train_targets(train_data.truth.size(), 1);
    for (std::size_t e = 0; e < train_data.truth.size(); ++e) {
        train_targets(e, 0) = static_cast<double>(train_data.truth[e]);
    }
    const std::vector<double> train_weights(train_data.truth.size(), 1.0);

    OptimizerState opt = make_optimizer(stack);
    Parameters best = stack_parameters(stack);
    double best_val = -1.0;
    int best_epoch = -1;

    Tape tape;
    const auto t0 = std::chrono::steady_clock::now();
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        tape.reset();
        const Parameters params = current_parameters(opt, stack);
        const BuiltNetwork net = build_network(tape, stack, params.weights,
                                               params.attn_vectors, message_graph,
                                               partition);
        const NodeId hu = tape.gather_rows(net.output, train_data.us);
        const NodeId hv = tape.gather_rows(net.output, train_data.vs);
        const NodeId scores = tape.row_dot(hu, hv);
        const NodeId loss = tape.bce_with_logits(scores, train_targets, train_weights);

        const double loss_value = tape.value(loss)(0, 0);
        if (!std::isfinite(loss_value)) {
            result.failed = true;
            result.failure = "non-finite loss at epoch " + std::to_string(epoch);
            return result;
        }

        const std::vector<double> val_scores =
            decode_scores(tape.value(net.output), val_data);
        const double val_acc = link_accuracy(val_scores, val_data.truth, config.threshold);
        if (val_acc > best_val) {
            best_val = val_acc;
            best_epoch = epoch;
            best = params;
        }

        tape.backward(loss);
        opt.store.adam_step(collect_gradients(tape, net, opt), config.optim);
    }
    const auto t1 = std::chrono::steady_clock::now();
    result.seconds_per_epoch =
        std::chrono::duration<double>(t1 - t0).count() / config.epochs;
    result.best_val_accuracy = best_val;
    result.best_epoch = best_epoch;

    write_parameters(stack, best);
    result.model = stack;
    evaluate_link_model(stack, graph, config, seed, &result.metrics,
                        &result.metric_errors);
    return result;
}

}  // namespace

void evaluate_node_model(const LayerStack& stack, const Graph& graph,
                         const RunConfig& config, std::uint64_t seed,
                         std::map<std::string, double>* metrics,
                         std::map<std::string, std::string>* metric_errors,
                         BoundReport* bounds, bool* has_bounds) {
    const Graph g = graph.with_self_loops();
    const SensitivePartition partition = build_partition(g);
    const DataSplit split = split_nodes(graph, config.split, seed);

    const ForwardResult fwd = forward_network(stack, g, partition);
    const bool binary = stack.layers.back().activation.kind == Activation::Sigmoid;
    const Matrix soft = soft_predictions(fwd.predictions, binary);
    const NodePredictions preds = make_predictions(soft, config.threshold);

    const auto record = [&](const std::string& name, auto&& fn) {
        try {
            (*metrics)[name] = fn();
        } catch (const std::exception& e) {
            (*metric_errors)[name] = e.what();
        }
    };
    record("accuracy",
           [&] { return accuracy(preds, graph.labels(), split.test); });
    record("delta_sp",
           [&] { return statistical_parity(preds, partition, split.test); });
    record("delta_eo", [&] {
        return equal_opportunity(preds, graph.labels(), partition, split.test);
    });
    record("delta_yhat", [&] { return delta_yhat(preds, partition, split.test); });

    if (bounds && has_bounds) {
        *has_bounds = false;
        if (graph.num_groups() == 2) {
            *bounds = network_bound(fwd.trace, partition);
            *has_bounds = true;
        }
    }
}

void evaluate_link_model(const LayerStack& stack, const Graph& graph,
                         const RunConfig& config, std::uint64_t seed,
                         std::map<std::string, double>* metrics,
                         std::map<std::string, std::string>* metric_errors) {
    const LinkSplit lsplit =
        split_edges_for_lp(graph, config.split, config.negative_ratio, seed);
    const Graph message_graph =
        graph.with_edge_subset(lsplit.train_pos).with_self_loops();
    const SensitivePartition partition = build_partition(message_graph);

    const ForwardResult fwd = forward_network(stack, message_graph, partition);
    const LinkEvalData test_data =
        link_eval_edges(graph, lsplit.test_pos, lsplit.test_neg);
    const std::vector<double> scores = decode_scores(fwd.predictions, test_data);
    std::vector<int> hard(scores.size());
    for (std::size_t e = 0; e < scores.size(); ++e) {
        hard[e] = scores[e] >= config.threshold ? 1 : 0;
    }

    (*metrics)["accuracy"] = link_accuracy(scores, test_data.truth, config.threshold);
    for (const DyadicKind kind :
         {DyadicKind::Mixed, DyadicKind::Group, DyadicKind::Subgroup}) {
        const DyadicGrouping grouping =
            make_dyadic_grouping(kind, test_data.edges, graph.sensitive());
        const std::string suffix = dyadic_kind_name(kind);
        try {
            (*metrics)["dp_" + suffix] = dyadic_dp(scores, grouping);
        } catch (const std::exception& e) {
            (*metric_errors)["dp_" + suffix] = e.what();
        }
        try {
            (*metrics)["eo_" + suffix] = dyadic_eo(hard, test_data.truth, grouping);
        } catch (const std::exception& e) {
            (*metric_errors)["eo_" + suffix] = e.what();
        }
    }
}

BoundReport bounds_for_model(const LayerStack& stack, const Graph& graph) {
    const Graph g = graph.with_self_loops();
    const SensitivePartition partition = build_partition(g);
    const ForwardResult fwd = forward_network(stack, g, partition);
    return network_bound(fwd.trace, partition);
}

SeedResult train_single(const RunConfig& config, const Graph& graph,
                        std::uint64_t seed) {
    config.validate();
    return config.task == Task::NodeClassification
               ? train_node_classification(config, graph, seed)
               : train_link_prediction(config, graph, seed);
}

RunReport train_run(const RunConfig& config, const Graph& graph) {
    config.validate();
    RunReport report;
    report.config = config;
    for (std::uint64_t seed : config.seeds) {
        report.seeds.push_back(train_single(config, graph, seed));
    }

    std::map<std::string, std::vector<double>> series;
    for (const SeedResult& r : report.seeds) {
        if (r.failed) continue;
        for (const auto& [name, value] : r.metrics) series[name].push_back(value);
        series["seconds_per_epoch"].push_back(r.seconds_per_epoch);
    }
    for (const auto& [name, values] : series) {
        Aggregate agg;
        agg.count = static_cast<int>(values.size());
        for (double v : values) agg.mean += v;
        agg.mean /= values.size();
        if (values.size() > 1) {
            double ss = 0.0;
            for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
            agg.stddev = std::sqrt(ss / (values.size() - 1));
        }
        report.aggregate[name] = agg;
    }
    return report;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("data").get<std::vector<double>>());
}

const char* activation_name(ActivationKind kind) {
    switch (kind.kind) {
        case Activation::ReLU: return "relu";
        case Activation::LeakyReLU: return "leaky_relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Identity: return "identity";
    }
    return "unknown";
}

ActivationKind activation_from_name(const std::string& name, double slope) {
    if (name == "relu") return {Activation::ReLU, slope};
    if (name == "leaky_relu") return {Activation::LeakyReLU, slope};
    if (name == "sigmoid") return {Activation::Sigmoid, slope};
    if (name == "identity") return {Activation::Identity, slope};
    throw DataError("unknown activation in model file: " + name);
}

}  // namespace

nlohmann::json config_to_json(const RunConfig& config) {
    nlohmann::json j;
    j["task"] = task_name(config.task);
    j["hidden"] = config.hidden;
    j["epochs"] = config.epochs;
    j["lr"] = config.optim.lr;
    j["weight_decay"] = config.optim.weight_decay;
    j["threshold"] = config.threshold;
    j["negative_ratio"] = config.negative_ratio;
    j["split"] = config.split;
    j["seeds"] = config.seeds;
    j["alpha_chi_max"] = config.fair.alpha_chi_max;
    j["eta"] = config.fair.eta;
    j["kappa"] = config.fair.kappa;
    j["steps"] = format_steps(config.fair.steps);
    j["normalize_before_scaling"] = config.fair.normalize_before_scaling;
    if (config.fair.alpha_star_override.has_value()) {
        j["alpha_star_override"] = *config.fair.alpha_star_override;
    }
    return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig config;
    config.task = parse_task(j.at("task").get<std::string>());
    config.hidden = j.at("hidden").get<int>();
    config.epochs = j.at("epochs").get<int>();
    config.optim.lr = j.at("lr").get<double>();
    config.optim.weight_decay = j.at("weight_decay").get<double>();
    config.threshold = j.at("threshold").get<double>();
    config.negative_ratio = j.at("negative_ratio").get<double>();
    config.split = j.at("split").get<std::array<double, 3>>();
    config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    config.fair.alpha_chi_max = j.at("alpha_chi_max").get<double>();
    config.fair.eta = j.at("eta").get<double>();
    config.fair.kappa = j.at("kappa").get<double>();
    config.fair.steps = parse_steps(j.at("steps").get<std::string>());
    config.fair.normalize_before_scaling = j.at("normalize_before_scaling").get<bool>();
    if (j.contains("alpha_star_override")) {
        config.fair.alpha_star_override = j.at("alpha_star_override").get<double>();
    }
    return config;
}

void save_model(const std::string& path, const LayerStack& stack,
                const RunConfig& config, std::uint64_t seed) {
    nlohmann::json j;
    j["format_version"] = kModelFormatVersion;
    j["kind"] = "fairgat-model";
    j["seed"] = seed;
    j["config"] = config_to_json(config);
    nlohmann::json layers = nlohmann::json::array();
    for (const StackLayer& layer : stack.layers) {
        nlohmann::json lj;
        lj["kind"] = layer.kind == LayerKind::Attention ? "attention" : "fc";
        lj["activation"] = activation_name(layer.activation);
        lj["slope"] = layer.activation.slope;
        lj["w"] = matrix_to_json(layer.w);
        if (layer.kind == LayerKind::Attention) lj["a"] = matrix_to_json(layer.a);
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);

    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path);
    out << j.dump(2) << "\n";
}

SavedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed model file: " + std::string(e.what()));
    }
    if (j.value("kind", "") != "fairgat-model") {
        throw DataError("not a model file: " + path);
    }
    if (j.value("format_version", -1) != kModelFormatVersion) {
        throw DataError("model manifest version mismatch");
    }
    SavedModel model;
    model.seed = j.at("seed").get<std::uint64_t>();
    model.config = config_from_json(j.at("config"));
    model.stack.config = model.config.fair;
    for (const auto& lj : j.at("layers")) {
        StackLayer layer;
        layer.kind = lj.at("kind").get<std::string>() == "attention"
                         ? LayerKind::Attention
                         : LayerKind::FullyConnected;
        layer.activation = activation_from_name(lj.at("activation").get<std::string>(),
                                                lj.at("slope").get<double>());
        layer.w = matrix_from_json(lj.at("w"));
        if (layer.kind == LayerKind::Attention) {
            layer.a = matrix_from_json(lj.at("a"));
        }
        model.stack.layers.push_back(std::move(layer));
    }
    model.stack.validate();
    return model;
}

}  // namespace fairgat
