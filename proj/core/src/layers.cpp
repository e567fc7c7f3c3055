#include "fairgat/layers.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "fairgat/errors.hpp"
#include "fairgat/optim.hpp"
#include "fairgat/rng.hpp"

namespace fairgat {

namespace {
constexpr double kStdGuard = 1e-12;
constexpr ActivationKind kScoreActivation{Activation::LeakyReLU, 0.2};
}  // namespace

unsigned parse_steps(const std::string& text) {
    if (text.empty() || text == "none") return 0;
    if (text == "all") {
        return static_cast<unsigned>(Step::FairAttention) |
               static_cast<unsigned>(Step::SpectralNorm) |
               static_cast<unsigned>(Step::Scaling);
    }
    unsigned steps = 0;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token == "fair_attention") {
            steps |= static_cast<unsigned>(Step::FairAttention);
        } else if (token == "spectral_norm") {
            steps |= static_cast<unsigned>(Step::SpectralNorm);
        } else if (token == "scaling") {
            steps |= static_cast<unsigned>(Step::Scaling);
        } else {
            throw ConfigError("unknown step '" + token +
                              "' (expected fair_attention, spectral_norm, scaling, all, none)");
        }
    }
    return steps;
}

std::string format_steps(unsigned steps) {
    if (steps == 0) return "none";
    std::string out;
    const auto append = [&](const char* name) {
        if (!out.empty()) out += ',';
        out += name;
    };
    if (steps & static_cast<unsigned>(Step::FairAttention)) append("fair_attention");
    if (steps & static_cast<unsigned>(Step::SpectralNorm)) append("spectral_norm");
    if (steps & static_cast<unsigned>(Step::Scaling)) append("scaling");
    return out;
}

void LayerStack::validate() const {
    if (layers.empty()) throw ConfigError("layer stack is empty");
    if (!(config.alpha_chi_max > 0.0 && config.alpha_chi_max <= 1.0)) {
        throw ConfigError("alpha_chi_max must be in (0, 1]");
    }
    if (!(config.kappa > 0.0 && config.kappa <= 1.0)) {
        throw ConfigError("kappa must be in (0, 1]");
    }
    if (config.eta < 0.0) throw ConfigError("eta must be >= 0");
    bool seen_fc = false;
    std::size_t dim = layers.front().w.rows();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const StackLayer& layer = layers[l];
        if (layer.w.rows() != dim) {
            throw ConfigError("layer " + std::to_string(l) + " input dim " +
                              std::to_string(layer.w.rows()) + " != " + std::to_string(dim));
        }
        if (layer.kind == LayerKind::Attention) {
            if (seen_fc) throw ConfigError("attention layer after fully connected layer");
            if (layer.a.rows() != 2 * layer.w.cols() || layer.a.cols() != 1) {
                throw ConfigError("attention vector must be 2*F_out x 1");
            }
        } else {
            seen_fc = true;
        }
        dim = layer.w.cols();
    }
}

LayerStack make_default_stack(int in_dim, int hidden, int out_dim,
                              ActivationKind final_activation, FairGATConfig config,
                              std::uint64_t seed) {
    LayerStack stack;
    stack.config = config;
    const ActivationKind relu{Activation::ReLU, 0.2};
    const int dims[3] = {in_dim, hidden, hidden};
    for (int l = 0; l < 2; ++l) {
        StackLayer layer;
        layer.kind = LayerKind::Attention;
        layer.w = glorot_init(dims[l], dims[l + 1], derive_seed(seed, 2ULL * l));
        layer.a = glorot_init(2 * dims[l + 1], 1, derive_seed(seed, 2ULL * l + 1));
        layer.activation = relu;
        stack.layers.push_back(std::move(layer));
    }
    StackLayer fc;
    fc.kind = LayerKind::FullyConnected;
    fc.w = glorot_init(hidden, out_dim, derive_seed(seed, 4));
    fc.activation = final_activation;
    stack.layers.push_back(std::move(fc));
    stack.validate();
    return stack;
}

double optimal_inter_attention(double r0_chi, double r1_chi, double alpha_chi_max) {
    if (r0_chi < 0.0 || r0_chi > 1.0 || r1_chi < 0.0 || r1_chi > 1.0) {
        throw NumericError("optimal_inter_attention: ratios must be in [0, 1]");
    }
    if (!(alpha_chi_max > 0.0 && alpha_chi_max <= 1.0)) {
        throw NumericError("optimal_inter_attention: alpha_chi_max must be in (0, 1]");
    }
    const double r_sum = r0_chi + r1_chi;
    if (r_sum < 1.0 / alpha_chi_max) return alpha_chi_max;
    return 1.0 / r_sum;
}

AlphaStarInfo resolve_alpha_star(const SensitivePartition& partition,
                                 const FairGATConfig& config) {
    AlphaStarInfo info;
    if (config.alpha_star_override.has_value()) {
        const double v = *config.alpha_star_override;
        if (!(v > 0.0 && v <= 1.0)) {
            throw ConfigError("alpha_star override must be in (0, 1]");
        }
        info.value = v;
        info.from_override = true;
        return info;
    }
    if (partition.num_groups != 2) {
        throw ConfigError(
            "fair attention with a non-binary sensitive attribute requires an "
            "alpha-star override");
    }
    info.degenerate = partition.r0_chi() + partition.r1_chi() == 0.0;
    info.value = optimal_inter_attention(partition.r0_chi(), partition.r1_chi(),
                                         config.alpha_chi_max);
    return info;
}

namespace {

void check_attention_params(const Matrix& h, const AttentionLayerParams& params) {
    if (h.cols() != params.w.rows()) {
        throw NumericError("attention: feature dim " + std::to_string(h.cols()) +
                           " != weight rows " + std::to_string(params.w.rows()));
    }
    if (params.a.rows() != 2 * params.w.cols() || params.a.cols() != 1) {
        throw NumericError("attention: score vector must be 2*F_out x 1");
    }
}

// Raw scores e(h_i, h_j) = LReLU(a_anchor . c_i + a_neighbor . c_j).
Matrix attention_scores(const Matrix& c, const Matrix& a, const Graph& graph) {
    const std::size_t f = c.cols();
    Matrix a_src(f, 1), a_dst(f, 1);
    for (std::size_t j = 0; j < f; ++j) {
        a_src(j, 0) = a(j, 0);
        a_dst(j, 0) = a(f + j, 0);
    }
    const Matrix u = matmul(c, a_src);
    const Matrix v = matmul(c, a_dst);
    Matrix e = kernels::edge_pair_sum(u, v, graph);
    return activation(kScoreActivation, e);
}

}  // namespace

AttentionResult gat_attention_forward(const Matrix& h, const Graph& graph,
                                      const AttentionLayerParams& params) {
    check_attention_params(h, params);
    const Matrix c = matmul(h, params.w);
    const Matrix e = attention_scores(c, params.a, graph);
    AttentionResult out;
    out.attention = kernels::edge_softmax(e, graph);
    out.h_next = activation(params.activation, kernels::aggregate(out.attention, c, graph));
    return out;
}

AttentionResult fair_attention_forward(const Matrix& h, const Graph& graph,
                                       const SensitivePartition& partition,
                                       const AttentionLayerParams& params,
                                       double alpha_star) {
    check_attention_params(h, params);
    if (static_cast<int>(partition.in_chi.size()) != graph.n_nodes()) {
        throw NumericError("fair attention: partition does not match graph");
    }
    const Matrix c = matmul(h, params.w);
    const Matrix e = attention_scores(c, params.a, graph);
    AttentionResult out;
    out.attention = kernels::group_softmax(e, graph, alpha_star);
    out.h_next = activation(params.activation, kernels::aggregate(out.attention, c, graph));
    return out;
}

Matrix fc_forward(const Matrix& h, const Matrix& w, ActivationKind activation_kind) {
    return activation(activation_kind, matmul(h, w));
}

Matrix scale_representations(const Matrix& z, double eta, bool normalize_first) {
    if (eta < 0.0) throw NumericError("scale_representations: eta must be >= 0");
    Matrix out = normalize_first ? kernels::column_standardize(z, kStdGuard) : z;
    out *= eta;
    return out;
}

NodeMasses attention_masses(const Matrix& alpha, const Graph& graph) {
    if (static_cast<int>(alpha.rows()) != graph.n_arcs() || alpha.cols() != 1) {
        throw NumericError("attention_masses: one weight per arc expected");
    }
    NodeMasses masses;
    masses.inter.assign(graph.n_nodes(), 0.0);
    masses.intra.assign(graph.n_nodes(), 0.0);
    for (int a = 0; a < graph.n_arcs(); ++a) {
        auto& bucket = graph.arc_is_inter(a) ? masses.inter : masses.intra;
        bucket[graph.arc_src(a)] += alpha(a, 0);
    }
    return masses;
}

BuiltNetwork build_network(Tape& tape, const LayerStack& stack,
                           const std::vector<Matrix>& weights,
                           const std::vector<Matrix>& attn_vectors,
                           const Graph& graph, const SensitivePartition& partition) {
    stack.validate();
    if (weights.size() != stack.layers.size() ||
        attn_vectors.size() != stack.layers.size()) {
        throw NumericError("build_network: parameter count mismatch");
    }
    const FairGATConfig& cfg = stack.config;
    BuiltNetwork net;

    const bool fair = cfg.enabled(Step::FairAttention);
    if (fair) net.alpha_info = resolve_alpha_star(partition, cfg);

    NodeId h = tape.input(graph.features());
    for (std::size_t l = 0; l < stack.layers.size(); ++l) {
        const StackLayer& layer = stack.layers[l];
        LayerNodes ln;
        ln.kind = layer.kind;
        ln.h_in = h;

        const NodeId w_node = tape.param(weights[l]);
        net.weight_nodes.push_back(w_node);

        double sn_factor = 1.0;
        if (cfg.enabled(Step::SpectralNorm)) {
            ln.sigma_w = spectral_norm_estimate(weights[l]);
            if (ln.sigma_w == 0.0) throw NumericError("cannot normalize zero matrix");
            sn_factor = cfg.kappa / ln.sigma_w;
        }
        ln.sn_factor = sn_factor;
        const NodeId w_eff = sn_factor != 1.0 ? tape.scale(w_node, sn_factor) : w_node;

        if (layer.kind == LayerKind::Attention) {
            const NodeId a_node = tape.param(attn_vectors[l]);
            net.attn_nodes.push_back(a_node);

            NodeId c_used = tape.matmul(h, w_eff);
            if (cfg.enabled(Step::Scaling)) {
                if (cfg.normalize_before_scaling) {
                    c_used = tape.column_standardize(c_used, kStdGuard, &ln.c_inv_scale);
                }
                c_used = tape.scale(c_used, cfg.eta);
            }
            ln.c_used = c_used;

            const int f_out = static_cast<int>(layer.w.cols());
            std::vector<int> src_ids(f_out), dst_ids(f_out);
            std::iota(src_ids.begin(), src_ids.end(), 0);
            std::iota(dst_ids.begin(), dst_ids.end(), f_out);
            const NodeId a_src = tape.gather_rows(a_node, src_ids);
            const NodeId a_dst = tape.gather_rows(a_node, dst_ids);
            const NodeId u = tape.matmul(c_used, a_src);
            const NodeId v = tape.matmul(c_used, a_dst);
            NodeId e = tape.edge_pair_sum(u, v, graph);
            e = tape.apply_activation(e, kScoreActivation);

            ln.fair = fair;
            if (fair) {
                ln.alpha_star = net.alpha_info.value;
                ln.alpha = tape.group_softmax(e, graph, ln.alpha_star);
            } else {
                ln.alpha = tape.edge_softmax(e, graph);
            }

            NodeId z = tape.aggregate(ln.alpha, c_used, graph);
            if (cfg.enabled(Step::Scaling)) {
                if (cfg.normalize_before_scaling) {
                    z = tape.column_standardize(z, kStdGuard, &ln.z_inv_scale);
                }
                z = tape.scale(z, cfg.eta);
            }
            ln.z_final = z;
        } else {
            net.attn_nodes.push_back(-1);
            NodeId z = tape.matmul(h, w_eff);
            if (cfg.enabled(Step::Scaling)) {
                if (cfg.normalize_before_scaling) {
                    z = tape.column_standardize(z, kStdGuard, &ln.z_inv_scale);
                }
                z = tape.scale(z, cfg.eta);
            }
            ln.z_final = z;
        }

        ln.h_out = tape.apply_activation(ln.z_final, layer.activation);
        h = ln.h_out;
        net.layers.push_back(std::move(ln));
    }
    net.output = h;
    return net;
}

LayerTrace extract_trace(const Tape& tape, const BuiltNetwork& net,
                         const LayerStack& stack, const Graph& graph) {
    const FairGATConfig& cfg = stack.config;
    LayerTrace trace;
    trace.alpha_info = net.alpha_info;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const LayerNodes& ln = net.layers[l];
        LayerTraceEntry entry;
        entry.kind = ln.kind;
        entry.h_in = tape.value(ln.h_in);
        entry.z = tape.value(ln.z_final);
        entry.h_out = tape.value(ln.h_out);
        entry.lipschitz = lipschitz_constant(stack.layers[l].activation);
        entry.fair = ln.fair;
        entry.alpha_star = ln.alpha_star;

        // Per-column multiplier of the post-aggregation scaling map.
        const std::size_t f_out = stack.layers[l].w.cols();
        std::vector<double> z_mult(f_out, 1.0);
        std::vector<double> c_mult(f_out, 1.0);
        if (cfg.enabled(Step::Scaling)) {
            for (std::size_t j = 0; j < f_out; ++j) {
                const double zs = ln.z_inv_scale.empty() ? 1.0 : ln.z_inv_scale[j];
                z_mult[j] = cfg.eta * zs;
                if (ln.kind == LayerKind::Attention) {
                    const double cs = ln.c_inv_scale.empty() ? 1.0 : ln.c_inv_scale[j];
                    c_mult[j] = cfg.eta * cs;
                }
            }
        }

        if (ln.kind == LayerKind::Attention) {
            entry.attention = tape.value(ln.alpha);
            entry.masses = attention_masses(entry.attention, graph);
            // Fold the Z-side scaling into C so z_i = sum_j alpha_ij c_j holds.
            Matrix c = tape.value(ln.c_used);
            for (std::size_t i = 0; i < c.rows(); ++i) {
                for (std::size_t j = 0; j < f_out; ++j) c(i, j) *= z_mult[j];
            }
            entry.c = std::move(c);
        }

        // Realized linear map from H^l to the structural C (or Z for FC).
        Matrix w_trace = tape.value(net.weight_nodes[l]) * ln.sn_factor;
        for (std::size_t i = 0; i < w_trace.rows(); ++i) {
            for (std::size_t j = 0; j < f_out; ++j) {
                w_trace(i, j) *= c_mult[j] * z_mult[j];
            }
        }
        entry.sigma_max_eff = spectral_norm_estimate(w_trace);
        trace.layers.push_back(std::move(entry));
    }
    return trace;
}

ForwardResult forward_network(const LayerStack& stack, const Graph& graph,
                              const SensitivePartition& partition) {
    std::vector<Matrix> weights, attn;
    weights.reserve(stack.layers.size());
    attn.reserve(stack.layers.size());
    for (const StackLayer& layer : stack.layers) {
        weights.push_back(layer.w);
        attn.push_back(layer.a);
    }
    Tape tape;
    const BuiltNetwork net = build_network(tape, stack, weights, attn, graph, partition);
    ForwardResult result;
    result.trace = extract_trace(tape, net, stack, graph);
    result.predictions = tape.value(net.output);
    return result;
}

}  // namespace fairgat
