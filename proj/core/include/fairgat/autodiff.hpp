#pragma once

#include <variant>
#include <vector>

#include "fairgat/graph.hpp"
#include "fairgat/matrix.hpp"
#include "fairgat/numerics.hpp"

namespace fairgat {

using NodeId = int;

/// Reverse-mode tape over matrix operations. Values are computed eagerly as
/// nodes are recorded; backward() fills adjoints in one reverse sweep.
/// Graph-structured ops hold a pointer to the Graph, which must outlive the
/// tape. One tape per training run; not thread-safe.
class Tape {
public:
    NodeId input(Matrix value);
    NodeId param(Matrix value);

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId subtract(NodeId a, NodeId b);
    NodeId hadamard_product(NodeId a, NodeId b);
    /// Multiply by a scalar that is treated as a constant in the backward
    /// pass (used for eta scaling and the 1/sigma_max factor).
    NodeId scale(NodeId a, double c);
    NodeId apply_activation(NodeId a, ActivationKind kind);
    NodeId concat_cols(NodeId a, NodeId b);
    /// y_ij = x_ij * s_i with s an N x 1 node.
    NodeId row_scale(NodeId x, NodeId s);

    /// Per directed arc k: out_k = u[src(k)] + v[dst(k)]; u, v are N x 1.
    NodeId edge_pair_sum(NodeId u, NodeId v, const Graph& graph);
    /// Softmax of arc scores over each anchor's neighborhood.
    NodeId edge_softmax(NodeId scores, const Graph& graph);
    /// Group-masked softmax: separate softmax over a node's inter and intra
    /// neighbors scaled to masses alpha_star / 1 - alpha_star; a
    /// single-type neighborhood receives full mass 1.
    NodeId group_softmax(NodeId scores, const Graph& graph, double alpha_star);
    /// z_i = sum over arcs (i -> j) of alpha_arc * c_j.
    NodeId aggregate(NodeId alpha, NodeId c, const Graph& graph);
    /// Divide each column by its sample standard deviation; columns with
    /// std below the guard are left unscaled. The realized per-column
    /// multipliers are written to inv_scale_out when requested.
    NodeId column_standardize(NodeId x, double guard = 1e-12,
                              std::vector<double>* inv_scale_out = nullptr);
    NodeId gather_rows(NodeId x, std::vector<int> ids);
    /// Per-row inner product of two equal-shape matrices -> N x 1.
    NodeId row_dot(NodeId a, NodeId b);

    NodeId sum(NodeId x);
    /// Weighted mean of softplus(z) - t*z over entries (stable BCE).
    NodeId bce_with_logits(NodeId logits, Matrix targets, std::vector<double> weights);
    /// Weighted mean of logsumexp(z_i) - z_i[label_i] over rows.
    NodeId softmax_cross_entropy(NodeId logits, std::vector<int> labels,
                                 std::vector<double> weights);

    const Matrix& value(NodeId id) const { return values_[id]; }
    const Matrix& adjoint(NodeId id) const { return adjoints_[id]; }

    /// Reverse sweep from a scalar loss node. Throws NumericError if the
    /// loss is not 1x1.
    void backward(NodeId loss);
    /// Clears all nodes; the tape can be rebuilt for the next step.
    void reset();
    std::size_t size() const { return values_.size(); }

private:
    struct LeafOp {};
    struct MatMulOp { NodeId a, b; };
    struct AddOp { NodeId a, b; };
    struct SubOp { NodeId a, b; };
    struct HadamardOp { NodeId a, b; };
    struct ScaleOp { NodeId a; double c; };
    struct ActivationOp { NodeId a; ActivationKind kind; };
    struct ConcatColsOp { NodeId a, b; };
    struct RowScaleOp { NodeId x, s; };
    struct EdgePairSumOp { NodeId u, v; const Graph* graph; };
    struct EdgeSoftmaxOp { NodeId scores; const Graph* graph; };
    struct GroupSoftmaxOp { NodeId scores; const Graph* graph; double alpha_star; };
    struct AggregateOp { NodeId alpha, c; const Graph* graph; };
    struct ColumnStandardizeOp {
        NodeId x;
        std::vector<double> inv_scale;  // 1/s_j, or 1 for guarded columns
        std::vector<double> mean;
        std::vector<char> guarded;
    };
    struct GatherRowsOp { NodeId x; std::vector<int> ids; };
    struct RowDotOp { NodeId a, b; };
    struct SumOp { NodeId x; };
    struct BceLossOp {
        NodeId logits;
        Matrix targets;
        std::vector<double> weights;
        double weight_sum;
    };
    struct CeLossOp {
        NodeId logits;
        std::vector<int> labels;
        std::vector<double> weights;
        double weight_sum;
    };

    using Op = std::variant<LeafOp, MatMulOp, AddOp, SubOp, HadamardOp, ScaleOp,
                            ActivationOp, ConcatColsOp, RowScaleOp, EdgePairSumOp,
                            EdgeSoftmaxOp, GroupSoftmaxOp, AggregateOp,
                            ColumnStandardizeOp, GatherRowsOp, RowDotOp, SumOp,
                            BceLossOp, CeLossOp>;

    NodeId record(Op op, Matrix value);
    void backward_one(NodeId id);

    std::vector<Op> ops_;
    std::vector<Matrix> values_;
    std::vector<Matrix> adjoints_;
};

/// Forward-only helpers shared with the pure inference path. These define
/// the exact semantics the tape ops reuse.
namespace kernels {

Matrix edge_pair_sum(const Matrix& u, const Matrix& v, const Graph& graph);
Matrix edge_softmax(const Matrix& scores, const Graph& graph);
Matrix group_softmax(const Matrix& scores, const Graph& graph, double alpha_star);
Matrix aggregate(const Matrix& alpha, const Matrix& c, const Graph& graph);
/// Returns the standardized matrix; writes the realized per-column scaling
/// diagnostics if the out-pointers are non-null.
Matrix column_standardize(const Matrix& x, double guard,
                          std::vector<double>* inv_scale = nullptr,
                          std::vector<double>* mean = nullptr,
                          std::vector<char>* guarded = nullptr);

}  // namespace kernels

}  // namespace fairgat
