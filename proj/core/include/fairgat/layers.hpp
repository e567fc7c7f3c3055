#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairgat/autodiff.hpp"
#include "fairgat/graph.hpp"
#include "fairgat/matrix.hpp"
#include "fairgat/numerics.hpp"

namespace fairgat {

enum class AttentionMode { Conventional, Fair };

struct AttentionLayerParams {
    Matrix w;  // F_in x F_out
    Matrix a;  // 2*F_out x 1, split into anchor and neighbor halves
    ActivationKind activation;
    AttentionMode mode = AttentionMode::Conventional;
};

enum class Step : unsigned {
    FairAttention = 1u,
    SpectralNorm = 2u,
    Scaling = 4u,
};

struct FairGATConfig {
    double alpha_chi_max = 0.75;
    double eta = 1.0;
    double kappa = 1.0;
    unsigned steps = 0;  // bitwise-or of Step values; 0 = conventional GAT
    std::optional<double> alpha_star_override;  // link prediction / K > 2
    bool normalize_before_scaling = true;  // unit feature variance before eta

    bool enabled(Step s) const { return (steps & static_cast<unsigned>(s)) != 0; }
};

unsigned parse_steps(const std::string& text);
std::string format_steps(unsigned steps);

enum class LayerKind { Attention, FullyConnected };

struct StackLayer {
    LayerKind kind = LayerKind::Attention;
    Matrix w;  // F_in x F_out
    Matrix a;  // attention layers only
    ActivationKind activation;
};

/// Ordered layers (attention first, then fully connected) plus the FairGAT
/// configuration. Default architecture is 2 attention + 1 fully connected.
struct LayerStack {
    std::vector<StackLayer> layers;
    FairGATConfig config;

    void validate() const;
};

/// Glorot-initialized default stack for node classification or link
/// prediction embeddings.
LayerStack make_default_stack(int in_dim, int hidden, int out_dim,
                              ActivationKind final_activation, FairGATConfig config,
                              std::uint64_t seed);

/// Closed-form optimizer of |R1*a + R0*a - 1| over 0 <= a <= alpha_max.
double optimal_inter_attention(double r0_chi, double r1_chi, double alpha_chi_max);

struct AlphaStarInfo {
    double value = 0.0;
    bool degenerate = false;     // r0 + r1 == 0, boundary returned
    bool from_override = false;  // supplied as a hyperparameter
};

/// Resolves the inter-attention target for a fair layer: the closed form for
/// binary sensitive attributes, the override otherwise.
AlphaStarInfo resolve_alpha_star(const SensitivePartition& partition,
                                 const FairGATConfig& config);

struct AttentionResult {
    Matrix h_next;
    Matrix attention;  // one weight per directed arc, row-stochastic per anchor
};

AttentionResult gat_attention_forward(const Matrix& h, const Graph& graph,
                                      const AttentionLayerParams& params);

AttentionResult fair_attention_forward(const Matrix& h, const Graph& graph,
                                       const SensitivePartition& partition,
                                       const AttentionLayerParams& params,
                                       double alpha_star);

Matrix fc_forward(const Matrix& h, const Matrix& w, ActivationKind activation);

/// Multiplies representations by eta, optionally standardizing each feature
/// column to unit sample variance first (columns with std below 1e-12 are
/// left unscaled).
Matrix scale_representations(const Matrix& z, double eta, bool normalize_first);

struct NodeMasses {
    std::vector<double> inter;
    std::vector<double> intra;
};

/// Total attention mass per anchor node assigned to inter-/intra-group
/// neighbors.
NodeMasses attention_masses(const Matrix& alpha, const Graph& graph);

/// Everything the bound analyzer needs from one layer of a forward pass.
/// c and z are the matrices satisfying the structural equations
/// c_j = W_eff h_j and z_i = sum_j alpha_ij c_j exactly (scaling applied to
/// Z is folded into c so the aggregation identity is preserved).
struct LayerTraceEntry {
    LayerKind kind = LayerKind::Attention;
    Matrix h_in;
    Matrix c;          // attention layers only
    Matrix z;          // pre-activation input, post scaling
    Matrix h_out;
    Matrix attention;  // per-arc weights (attention layers only)
    NodeMasses masses;
    double sigma_max_eff = 0.0;  // spectral norm of the realized H -> C (or Z) map
    double lipschitz = 1.0;
    double alpha_star = 0.0;  // fair layers only
    bool fair = false;
};

struct LayerTrace {
    std::vector<LayerTraceEntry> layers;
    AlphaStarInfo alpha_info;
};

struct ForwardResult {
    Matrix predictions;  // final layer output
    LayerTrace trace;
};

/// Runs the full stack applying the enabled FairGAT steps: fair attention
/// (S1), spectral normalization with target kappa (S2), eta scaling of C and
/// Z (S3). Emits the trace consumed by the bound analyzer.
ForwardResult forward_network(const LayerStack& stack, const Graph& graph,
                              const SensitivePartition& partition);

/// Tape node ids for one layer of the differentiable forward pass.
struct LayerNodes {
    LayerKind kind;
    NodeId h_in = -1;
    NodeId c_used = -1;     // attention: matrix actually aggregated
    NodeId z_final = -1;    // pre-activation, post scaling
    NodeId h_out = -1;
    NodeId alpha = -1;      // attention only
    std::vector<double> z_inv_scale;  // realized Z standardization diag
    std::vector<double> c_inv_scale;  // realized C standardization diag
    double sigma_w = 0.0;    // power-iteration sigma of the raw weight
    double sn_factor = 1.0;  // kappa / sigma_w when spectral norm is on
    double alpha_star = 0.0;
    bool fair = false;
};

struct BuiltNetwork {
    NodeId output = -1;
    std::vector<NodeId> weight_nodes;  // W per layer
    std::vector<NodeId> attn_nodes;    // a per attention layer, -1 for FC
    std::vector<LayerNodes> layers;
    AlphaStarInfo alpha_info;
};

/// Records the stack's forward pass on a tape using the supplied parameter
/// values (aligned with stack.layers). forward_network and the trainer both
/// go through this builder, so inference and training are the same code path.
BuiltNetwork build_network(Tape& tape, const LayerStack& stack,
                           const std::vector<Matrix>& weights,
                           const std::vector<Matrix>& attn_vectors,
                           const Graph& graph, const SensitivePartition& partition);

/// Extracts the bound-analysis trace from a built network's tape values.
LayerTrace extract_trace(const Tape& tape, const BuiltNetwork& net,
                         const LayerStack& stack, const Graph& graph);

}  // namespace fairgat
