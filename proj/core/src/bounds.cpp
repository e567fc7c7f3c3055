#include "fairgat/bounds.hpp"

#include <cmath>

#include "fairgat/errors.hpp"

namespace fairgat {

double measure_disparity(const Matrix& h, const SensitivePartition& partition) {
    if (partition.num_groups != 2) {
        throw DataError("disparity measure requires a binary sensitive attribute");
    }
    const GroupStats stats = group_stats(h, partition);
    return vector_norm(stats.means[0] - stats.means[1]);
}

namespace {

struct A2Info {
    double alpha_chi = 0.0;       // attention target used in the RHS
    double violation = 0.0;       // max over S^chi of |mass - alpha_chi|
    double mean_inter_mass = 0.0;
};

A2Info a2_info(const LayerTraceEntry& layer, const SensitivePartition& partition) {
    A2Info info;
    if (layer.kind != LayerKind::Attention || partition.s_chi.empty()) return info;
    if (layer.fair) {
        info.alpha_chi = layer.alpha_star;
    } else {
        double sum = 0.0;
        for (int i : partition.s_chi) sum += layer.masses.inter[i];
        info.alpha_chi = sum / static_cast<double>(partition.s_chi.size());
    }
    double mean = 0.0;
    for (int i : partition.s_chi) {
        info.violation = std::max(info.violation,
                                  std::abs(layer.masses.inter[i] - info.alpha_chi));
        mean += layer.masses.inter[i];
    }
    info.mean_inter_mass = mean / static_cast<double>(partition.s_chi.size());
    return info;
}

}  // namespace

BoundComponents attention_bound_rhs(const LayerTraceEntry& layer,
                             const SensitivePartition& partition, double alpha_chi,
                             double delta_h_override) {
    if (layer.kind != LayerKind::Attention) {
        throw NumericError("attention_bound_rhs applies to attention layers");
    }
    BoundComponents c;
    c.lipschitz = layer.lipschitz;
    c.sigma_max = layer.sigma_max_eff;
    c.attention_term = std::abs(partition.r1_chi() * alpha_chi +
                                partition.r0_chi() * alpha_chi - 1.0);
    c.delta_h_in = delta_h_override >= 0.0
                       ? delta_h_override
                       : measure_disparity(layer.h_in, partition);
    c.delta_c = group_stats(layer.c, partition).delta;
    c.delta_z = group_stats(layer.z, partition).delta;
    c.sqrt_n = std::sqrt(static_cast<double>(layer.h_in.rows()));
    c.sqrt_f = std::sqrt(static_cast<double>(layer.z.cols()));
    const double inner = c.sigma_max * c.attention_term * c.delta_h_in;
    c.rhs = c.lipschitz * (inner + 2.0 * c.sqrt_n * c.delta_c + 2.0 * c.sqrt_n * c.delta_z);
    c.rhs_feature_dim =
        c.lipschitz * (inner + 2.0 * c.sqrt_f * c.delta_c + 2.0 * c.sqrt_f * c.delta_z);
    return c;
}

BoundComponents fc_bound_rhs(const LayerTraceEntry& layer,
                             const SensitivePartition& partition,
                             double delta_h_override) {
    if (layer.kind != LayerKind::FullyConnected) {
        throw NumericError("fc_bound_rhs applies to fully connected layers");
    }
    BoundComponents c;
    c.lipschitz = layer.lipschitz;
    c.sigma_max = layer.sigma_max_eff;
    c.delta_h_in = delta_h_override >= 0.0
                       ? delta_h_override
                       : measure_disparity(layer.h_in, partition);
    c.delta_z = group_stats(layer.z, partition).delta;
    c.sqrt_n = std::sqrt(static_cast<double>(layer.h_in.rows()));
    c.sqrt_f = std::sqrt(static_cast<double>(layer.z.cols()));
    const double inner = c.sigma_max * c.delta_h_in;
    c.rhs = c.lipschitz * (inner + 2.0 * c.sqrt_n * c.delta_z);
    c.rhs_feature_dim = c.lipschitz * (inner + 2.0 * c.sqrt_f * c.delta_z);
    return c;
}

ActivationCheck activation_bound_check(const Matrix& z, ActivationKind kind,
                                       const SensitivePartition& partition) {
    ActivationCheck check;
    check.lhs = measure_disparity(activation(kind, z), partition);
    const double delta_z = group_stats(z, partition).delta;
    const double sqrt_n = std::sqrt(static_cast<double>(z.rows()));
    check.rhs = lipschitz_constant(kind) *
                (measure_disparity(z, partition) + 2.0 * sqrt_n * delta_z);
    check.satisfied = check.lhs <= check.rhs + kBoundTolerance;
    return check;
}

BoundReport network_bound(const LayerTrace& trace, const SensitivePartition& partition) {
    if (trace.layers.empty()) throw NumericError("network_bound: empty trace");
    BoundReport report;
    report.delta_input = measure_disparity(trace.layers.front().h_in, partition);
    report.all_satisfied = true;

    double propagated = report.delta_input;
    for (const LayerTraceEntry& layer : trace.layers) {
        LayerBoundReport lb;
        lb.kind = layer.kind;
        lb.lhs = measure_disparity(layer.h_out, partition);

        const A2Info a2 = a2_info(layer, partition);
        lb.alpha_chi = a2.alpha_chi;
        lb.a2_violation = a2.violation;
        report.max_a2_violation = std::max(report.max_a2_violation, a2.violation);

        if (layer.kind == LayerKind::Attention) {
            lb.assumption_violated = !layer.fair && a2.violation > kBoundTolerance;
            lb.measured = attention_bound_rhs(layer, partition, a2.alpha_chi);
            lb.propagated_rhs =
                attention_bound_rhs(layer, partition, a2.alpha_chi, propagated).rhs;
        } else {
            lb.measured = fc_bound_rhs(layer, partition);
            lb.propagated_rhs = fc_bound_rhs(layer, partition, propagated).rhs;
        }
        lb.satisfied = lb.lhs <= lb.measured.rhs + kBoundTolerance;
        report.all_satisfied = report.all_satisfied && lb.satisfied;
        propagated = lb.propagated_rhs;
        report.layers.push_back(lb);
    }
    report.composed_bound = propagated;
    report.delta_output = report.layers.back().lhs;
    report.composed_satisfied =
        report.delta_output <= report.composed_bound + kBoundTolerance;
    report.all_satisfied = report.all_satisfied && report.composed_satisfied;
    return report;
}

std::vector<LayerAssumptionDiagnostics> assumption_diagnostics(
    const LayerTrace& trace, const SensitivePartition& partition) {
    std::vector<LayerAssumptionDiagnostics> out;
    out.reserve(trace.layers.size());
    for (const LayerTraceEntry& layer : trace.layers) {
        LayerAssumptionDiagnostics d;
        if (layer.kind == LayerKind::Attention) {
            d.delta_c = group_stats(layer.c, partition).delta;
        }
        d.delta_z = group_stats(layer.z, partition).delta;
        const A2Info a2 = a2_info(layer, partition);
        d.a2_violation = a2.violation;
        d.mean_inter_mass = a2.mean_inter_mass;
        out.push_back(d);
    }
    return out;
}

}  // namespace fairgat
