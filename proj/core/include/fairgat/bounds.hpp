#pragma once

#include <vector>

#include "fairgat/graph.hpp"
#include "fairgat/layers.hpp"
#include "fairgat/matrix.hpp"
#include "fairgat/numerics.hpp"

namespace fairgat {

/// 2-norm of the difference between the group means of the rows of h.
double measure_disparity(const Matrix& h, const SensitivePartition& partition);

/// One evaluated disparity bound with its full decomposition.
struct BoundComponents {
    double rhs = 0.0;          // bound with the sqrt(N) factor as stated
    double rhs_feature_dim = 0.0;  // diagnostic variant using sqrt(F)
    double lipschitz = 1.0;
    double sigma_max = 0.0;
    double attention_term = 0.0;  // |R1*a + R0*a - 1|, attention layers only
    double delta_h_in = 0.0;      // disparity fed into the bound
    double delta_c = 0.0;         // attention layers only
    double delta_z = 0.0;
    double sqrt_n = 0.0;
    double sqrt_f = 0.0;
};

/// Attention-layer bound: L(sigma |R1 a + R0 a - 1| d_h + 2 sqrt(N) D_c
/// + 2 sqrt(N) D_z). delta_h_in defaults to the measured disparity of the
/// layer input; pass delta_h_override >= 0 to propagate a prior bound.
BoundComponents attention_bound_rhs(const LayerTraceEntry& layer,
                             const SensitivePartition& partition, double alpha_chi,
                             double delta_h_override = -1.0);

/// Fully connected layer bound: L(sigma d_h + 2 sqrt(N) D_z).
BoundComponents fc_bound_rhs(const LayerTraceEntry& layer,
                             const SensitivePartition& partition,
                             double delta_h_override = -1.0);

struct ActivationCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfied = false;
};

/// Activation-disparity bound: disparity of act(z) group means is at most
/// L(disparity of z group means + 2 sqrt(N) D_z).
ActivationCheck activation_bound_check(const Matrix& z, ActivationKind kind,
                                       const SensitivePartition& partition);

struct LayerBoundReport {
    LayerKind kind = LayerKind::Attention;
    double lhs = 0.0;              // measured disparity of the layer output
    BoundComponents measured;      // RHS using the measured input disparity
    double propagated_rhs = 0.0;   // RHS using the previous layer's bound
    double alpha_chi = 0.0;        // attention target used in the RHS
    double a2_violation = 0.0;     // max over S^chi of |alpha_k^chi - alpha*|
    bool assumption_violated = false;  // conventional attention: no guarantee
    bool satisfied = false;        // lhs <= measured rhs + 1e-9
};

struct BoundReport {
    std::vector<LayerBoundReport> layers;
    double delta_input = 0.0;   // disparity of the input features
    double delta_output = 0.0;  // measured disparity of the final output
    double composed_bound = 0.0;
    bool composed_satisfied = false;
    bool all_satisfied = false;
    double max_a2_violation = 0.0;
};

/// Evaluates every per-layer bound and the Eq. of composition: each layer's
/// RHS (propagated form) feeds the next layer's input disparity. Layers
/// with conventional attention are evaluated with the empirical mean inter
/// mass and flagged as assumption-violated.
BoundReport network_bound(const LayerTrace& trace, const SensitivePartition& partition);

struct LayerAssumptionDiagnostics {
    double delta_c = 0.0;
    double delta_z = 0.0;
    double a2_violation = 0.0;
    double mean_inter_mass = 0.0;  // over S^chi anchors
};

/// Measured A1 quantities and the A2 deviation per layer.
std::vector<LayerAssumptionDiagnostics> assumption_diagnostics(
    const LayerTrace& trace, const SensitivePartition& partition);

inline constexpr double kBoundTolerance = 1e-9;

}  // namespace fairgat
