#include "fairgat/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fairgat/errors.hpp"

namespace fairgat {

namespace kernels {

Matrix edge_pair_sum(const Matrix& u, const Matrix& v, const Graph& graph) {
    if (u.cols() != 1 || v.cols() != 1 ||
        static_cast<int>(u.rows()) != graph.n_nodes() ||
        static_cast<int>(v.rows()) != graph.n_nodes()) {
        throw NumericError("edge_pair_sum expects N x 1 inputs");
    }
    Matrix out(graph.n_arcs(), 1);
    for (int a = 0; a < graph.n_arcs(); ++a) {
        out(a, 0) = u(graph.arc_src(a), 0) + v(graph.arc_dst(a), 0);
    }
    return out;
}

Matrix edge_softmax(const Matrix& scores, const Graph& graph) {
    if (static_cast<int>(scores.rows()) != graph.n_arcs() || scores.cols() != 1) {
        throw NumericError("edge_softmax expects one score per arc");
    }
    Matrix alpha(graph.n_arcs(), 1);
    for (int i = 0; i < graph.n_nodes(); ++i) {
        const int begin = graph.arc_begin(i), end = graph.arc_end(i);
        if (begin == end) throw NumericError("empty neighborhood");
        double m = scores(begin, 0);
        for (int a = begin + 1; a < end; ++a) m = std::max(m, scores(a, 0));
        double denom = 0.0;
        for (int a = begin; a < end; ++a) {
            alpha(a, 0) = std::exp(scores(a, 0) - m);
            denom += alpha(a, 0);
        }
        for (int a = begin; a < end; ++a) alpha(a, 0) /= denom;
    }
    return alpha;
}

Matrix group_softmax(const Matrix& scores, const Graph& graph, double alpha_star) {
    if (static_cast<int>(scores.rows()) != graph.n_arcs() || scores.cols() != 1) {
        throw NumericError("group_softmax expects one score per arc");
    }
    if (!(alpha_star > 0.0 && alpha_star <= 1.0)) {
        throw NumericError("group_softmax: alpha_star must be in (0, 1]");
    }
    Matrix alpha(graph.n_arcs(), 1);
    for (int i = 0; i < graph.n_nodes(); ++i) {
        const int begin = graph.arc_begin(i), end = graph.arc_end(i);
        if (begin == end) throw NumericError("empty neighborhood");
        // Bucket 1 holds inter arcs, bucket 0 intra; one merged sweep per
        // stage keeps the cost close to a plain softmax.
        double peak[2] = {-std::numeric_limits<double>::infinity(),
                          -std::numeric_limits<double>::infinity()};
        for (int a = begin; a < end; ++a) {
            double& m = peak[graph.arc_is_inter(a)];
            m = std::max(m, scores(a, 0));
        }
        const bool has_inter = peak[1] > -std::numeric_limits<double>::infinity();
        const bool has_intra = peak[0] > -std::numeric_limits<double>::infinity();
        double mass[2] = {1.0, 1.0};
        if (has_inter && has_intra) {
            mass[1] = alpha_star;
            mass[0] = 1.0 - alpha_star;
        }
        double denom[2] = {0.0, 0.0};
        for (int a = begin; a < end; ++a) {
            const int b = graph.arc_is_inter(a);
            const double e = std::exp(scores(a, 0) - peak[b]);
            alpha(a, 0) = e;
            denom[b] += e;
        }
        const double scale[2] = {mass[0] == 0.0 ? 0.0 : mass[0] / denom[0],
                                 mass[1] == 0.0 ? 0.0 : mass[1] / denom[1]};
        for (int a = begin; a < end; ++a) {
            alpha(a, 0) *= scale[graph.arc_is_inter(a)];
        }
    }
    return alpha;
}

Matrix aggregate(const Matrix& alpha, const Matrix& c, const Graph& graph) {
    if (static_cast<int>(alpha.rows()) != graph.n_arcs() || alpha.cols() != 1) {
        throw NumericError("aggregate expects one weight per arc");
    }
    if (static_cast<int>(c.rows()) != graph.n_nodes()) {
        throw NumericError("aggregate expects one row per node");
    }
    const std::size_t f = c.cols();
    Matrix z(graph.n_nodes(), f);
    for (int a = 0; a < graph.n_arcs(); ++a) {
        const double w = alpha(a, 0);
        const auto src_row = z.row(graph.arc_src(a));
        const auto c_row = c.row(graph.arc_dst(a));
        for (std::size_t j = 0; j < f; ++j) src_row[j] += w * c_row[j];
    }
    return z;
}

Matrix column_standardize(const Matrix& x, double guard,
                          std::vector<double>* inv_scale_out,
                          std::vector<double>* mean_out,
                          std::vector<char>* guarded_out) {
    const std::size_t n = x.rows(), f = x.cols();
    std::vector<double> mean(f, 0.0), inv_scale(f, 1.0);
    std::vector<char> guarded(f, 1);
    for (std::size_t j = 0; j < f; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += x(i, j);
        mu /= static_cast<double>(n);
        mean[j] = mu;
        if (n >= 2) {
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = x(i, j) - mu;
                ss += d * d;
            }
            const double std_j = std::sqrt(ss / static_cast<double>(n - 1));
            if (std_j >= guard) {
                inv_scale[j] = 1.0 / std_j;
                guarded[j] = 0;
            }
        }
    }
    Matrix out = x;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < f; ++j) out(i, j) *= inv_scale[j];
    }
    if (inv_scale_out) *inv_scale_out = std::move(inv_scale);
    if (mean_out) *mean_out = std::move(mean);
    if (guarded_out) *guarded_out = std::move(guarded);
    return out;
}

}  // namespace kernels

NodeId Tape::record(Op op, Matrix value) {
    ops_.push_back(std::move(op));
    values_.push_back(std::move(value));
    return static_cast<NodeId>(values_.size()) - 1;
}

NodeId Tape::input(Matrix value) { return record(LeafOp{}, std::move(value)); }
NodeId Tape::param(Matrix value) { return record(LeafOp{}, std::move(value)); }

NodeId Tape::matmul(NodeId a, NodeId b) {
    Matrix out = fairgat::matmul(values_[a], values_[b]);
    return record(MatMulOp{a, b}, std::move(out));
}

NodeId Tape::add(NodeId a, NodeId b) {
    Matrix out = values_[a] + values_[b];
    return record(AddOp{a, b}, std::move(out));
}

NodeId Tape::subtract(NodeId a, NodeId b) {
    Matrix out = values_[a] - values_[b];
    return record(SubOp{a, b}, std::move(out));
}

NodeId Tape::hadamard_product(NodeId a, NodeId b) {
    Matrix out = hadamard(values_[a], values_[b]);
    return record(HadamardOp{a, b}, std::move(out));
}

NodeId Tape::scale(NodeId a, double c) {
    Matrix out = values_[a] * c;
    return record(ScaleOp{a, c}, std::move(out));
}

NodeId Tape::apply_activation(NodeId a, ActivationKind kind) {
    Matrix out = activation(kind, values_[a]);
    return record(ActivationOp{a, kind}, std::move(out));
}

NodeId Tape::concat_cols(NodeId a, NodeId b) {
    const Matrix& ma = values_[a];
    const Matrix& mb = values_[b];
    if (ma.rows() != mb.rows()) throw NumericError("concat_cols: row mismatch");
    Matrix out(ma.rows(), ma.cols() + mb.cols());
    for (std::size_t i = 0; i < ma.rows(); ++i) {
        for (std::size_t j = 0; j < ma.cols(); ++j) out(i, j) = ma(i, j);
        for (std::size_t j = 0; j < mb.cols(); ++j) out(i, ma.cols() + j) = mb(i, j);
    }
    return record(ConcatColsOp{a, b}, std::move(out));
}

NodeId Tape::row_scale(NodeId x, NodeId s) {
    const Matrix& mx = values_[x];
    const Matrix& ms = values_[s];
    if (ms.cols() != 1 || ms.rows() != mx.rows()) {
        throw NumericError("row_scale expects an N x 1 scale");
    }
    Matrix out = mx;
    for (std::size_t i = 0; i < mx.rows(); ++i) {
        const double w = ms(i, 0);
        for (std::size_t j = 0; j < mx.cols(); ++j) out(i, j) *= w;
    }
    return record(RowScaleOp{x, s}, std::move(out));
}

NodeId Tape::edge_pair_sum(NodeId u, NodeId v, const Graph& graph) {
    Matrix out = kernels::edge_pair_sum(values_[u], values_[v], graph);
    return record(EdgePairSumOp{u, v, &graph}, std::move(out));
}

NodeId Tape::edge_softmax(NodeId scores, const Graph& graph) {
    Matrix out = kernels::edge_softmax(values_[scores], graph);
    return record(EdgeSoftmaxOp{scores, &graph}, std::move(out));
}

NodeId Tape::group_softmax(NodeId scores, const Graph& graph, double alpha_star) {
    Matrix out = kernels::group_softmax(values_[scores], graph, alpha_star);
    return record(GroupSoftmaxOp{scores, &graph, alpha_star}, std::move(out));
}

NodeId Tape::aggregate(NodeId alpha, NodeId c, const Graph& graph) {
    Matrix out = kernels::aggregate(values_[alpha], values_[c], graph);
    return record(AggregateOp{alpha, c, &graph}, std::move(out));
}

NodeId Tape::column_standardize(NodeId x, double guard,
                                std::vector<double>* inv_scale_out) {
    ColumnStandardizeOp op;
    op.x = x;
    Matrix out = kernels::column_standardize(values_[x], guard, &op.inv_scale,
                                             &op.mean, &op.guarded);
    if (inv_scale_out) *inv_scale_out = op.inv_scale;
    return record(std::move(op), std::move(out));
}

NodeId Tape::gather_rows(NodeId x, std::vector<int> ids) {
    const Matrix& mx = values_[x];
    Matrix out(ids.size(), mx.cols());
    for (std::size_t r = 0; r < ids.size(); ++r) {
        const int i = ids[r];
        if (i < 0 || i >= static_cast<int>(mx.rows())) {
            throw NumericError("gather_rows: row id out of range");
        }
        const auto src = mx.row(i);
        const auto dst = out.row(r);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return record(GatherRowsOp{x, std::move(ids)}, std::move(out));
}

NodeId Tape::row_dot(NodeId a, NodeId b) {
    const Matrix& ma = values_[a];
    const Matrix& mb = values_[b];
    if (!ma.same_shape(mb)) throw NumericError("row_dot: shape mismatch");
    Matrix out(ma.rows(), 1);
    for (std::size_t i = 0; i < ma.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < ma.cols(); ++j) acc += ma(i, j) * mb(i, j);
        out(i, 0) = acc;
    }
    return record(RowDotOp{a, b}, std::move(out));
}

NodeId Tape::sum(NodeId x) {
    double acc = 0.0;
    for (double v : values_[x].data()) acc += v;
    Matrix out(1, 1);
    out(0, 0) = acc;
    return record(SumOp{x}, std::move(out));
}

namespace {
double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}
}  // namespace

NodeId Tape::bce_with_logits(NodeId logits, Matrix targets, std::vector<double> weights) {
    const Matrix& z = values_[logits];
    if (!z.same_shape(targets)) throw NumericError("bce_with_logits: target shape mismatch");
    if (weights.size() != z.size()) throw NumericError("bce_with_logits: weight size mismatch");
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (wsum <= 0.0) throw NumericError("bce_with_logits: no weighted entries");
    double loss = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (weights[i] == 0.0) continue;
        loss += weights[i] * (softplus(z.data()[i]) - targets.data()[i] * z.data()[i]);
    }
    Matrix out(1, 1);
    out(0, 0) = loss / wsum;
    return record(BceLossOp{logits, std::move(targets), std::move(weights), wsum},
                  std::move(out));
}

NodeId Tape::softmax_cross_entropy(NodeId logits, std::vector<int> labels,
                                   std::vector<double> weights) {
    const Matrix& z = values_[logits];
    if (labels.size() != z.rows() || weights.size() != z.rows()) {
        throw NumericError("softmax_cross_entropy: label/weight size mismatch");
    }
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (wsum <= 0.0) throw NumericError("softmax_cross_entropy: no weighted rows");
    double loss = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
        if (weights[i] == 0.0) continue;
        const auto row = z.row(i);
        const double m = *std::max_element(row.begin(), row.end());
        double denom = 0.0;
        for (double v : row) denom += std::exp(v - m);
        const int y = labels[i];
        if (y < 0 || y >= static_cast<int>(z.cols())) {
            throw NumericError("softmax_cross_entropy: label out of range");
        }
        loss += weights[i] * (m + std::log(denom) - row[y]);
    }
    Matrix out(1, 1);
    out(0, 0) = loss / wsum;
    return record(CeLossOp{logits, std::move(labels), std::move(weights), wsum},
                  std::move(out));
}

void Tape::backward(NodeId loss) {
    if (loss < 0 || loss >= static_cast<NodeId>(values_.size())) {
        throw NumericError("backward: unknown node");
    }
    if (values_[loss].rows() != 1 || values_[loss].cols() != 1) {
        throw NumericError("backward requires a scalar loss");
    }
    adjoints_.clear();
    adjoints_.reserve(values_.size());
    for (const Matrix& v : values_) adjoints_.emplace_back(v.rows(), v.cols());
    adjoints_[loss](0, 0) = 1.0;
    for (NodeId id = loss; id >= 0; --id) backward_one(id);
}

void Tape::reset() {
    ops_.clear();
    values_.clear();
    adjoints_.clear();
}

void Tape::backward_one(NodeId id) {
    const Matrix& d = adjoints_[id];
    struct Visitor {
        Tape& t;
        const Matrix& d;
        NodeId id;

        void operator()(const LeafOp&) {}
        void operator()(const MatMulOp& op) {
            t.adjoints_[op.a] += matmul_nt(d, t.values_[op.b]);
            t.adjoints_[op.b] += matmul_tn(t.values_[op.a], d);
        }
        void operator()(const AddOp& op) {
            t.adjoints_[op.a] += d;
            t.adjoints_[op.b] += d;
        }
        void operator()(const SubOp& op) {
            t.adjoints_[op.a] += d;
            t.adjoints_[op.b] -= d;
        }
        void operator()(const HadamardOp& op) {
            t.adjoints_[op.a] += hadamard(d, t.values_[op.b]);
            t.adjoints_[op.b] += hadamard(d, t.values_[op.a]);
        }
        void operator()(const ScaleOp& op) { t.adjoints_[op.a] += d * op.c; }
        void operator()(const ActivationOp& op) {
            t.adjoints_[op.a] += hadamard(d, activation_grad(op.kind, t.values_[op.a]));
        }
        void operator()(const ConcatColsOp& op) {
            Matrix& da = t.adjoints_[op.a];
            Matrix& db = t.adjoints_[op.b];
            const std::size_t ca = da.cols();
            for (std::size_t i = 0; i < da.rows(); ++i) {
                for (std::size_t j = 0; j < ca; ++j) da(i, j) += d(i, j);
                for (std::size_t j = 0; j < db.cols(); ++j) db(i, j) += d(i, ca + j);
            }
        }
        void operator()(const RowScaleOp& op) {
            const Matrix& x = t.values_[op.x];
            const Matrix& s = t.values_[op.s];
            Matrix& dx = t.adjoints_[op.x];
            Matrix& ds = t.adjoints_[op.s];
            for (std::size_t i = 0; i < x.rows(); ++i) {
                const double w = s(i, 0);
                double acc = 0.0;
                for (std::size_t j = 0; j < x.cols(); ++j) {
                    dx(i, j) += w * d(i, j);
                    acc += x(i, j) * d(i, j);
                }
                ds(i, 0) += acc;
            }
        }
        void operator()(const EdgePairSumOp& op) {
            Matrix& du = t.adjoints_[op.u];
            Matrix& dv = t.adjoints_[op.v];
            const Graph& g = *op.graph;
            for (int a = 0; a < g.n_arcs(); ++a) {
                du(g.arc_src(a), 0) += d(a, 0);
                dv(g.arc_dst(a), 0) += d(a, 0);
            }
        }
        void operator()(const EdgeSoftmaxOp& op) {
            const Matrix& alpha = t.values_[id];
            Matrix& ds = t.adjoints_[op.scores];
            const Graph& g = *op.graph;
            for (int i = 0; i < g.n_nodes(); ++i) {
                const int begin = g.arc_begin(i), end = g.arc_end(i);
                double inner = 0.0;
                for (int a = begin; a < end; ++a) inner += alpha(a, 0) * d(a, 0);
                for (int a = begin; a < end; ++a) {
                    ds(a, 0) += alpha(a, 0) * (d(a, 0) - inner);
                }
            }
        }
        void operator()(const GroupSoftmaxOp& op) {
            const Matrix& alpha = t.values_[id];
            Matrix& ds = t.adjoints_[op.scores];
            const Graph& g = *op.graph;
            for (int i = 0; i < g.n_nodes(); ++i) {
                const int begin = g.arc_begin(i), end = g.arc_end(i);
                int count[2] = {0, 0};
                double inner[2] = {0.0, 0.0};
                for (int a = begin; a < end; ++a) {
                    const int b = g.arc_is_inter(a);
                    count[b] += 1;
                    inner[b] += alpha(a, 0) * d(a, 0);
                }
                double mass[2] = {1.0, 1.0};
                if (count[0] > 0 && count[1] > 0) {
                    mass[1] = op.alpha_star;
                    mass[0] = 1.0 - op.alpha_star;
                }
                // A zero-mass bucket has identically zero weights, so its
                // scores receive no gradient.
                for (int b = 0; b < 2; ++b) {
                    inner[b] = mass[b] == 0.0 ? 0.0 : inner[b] / mass[b];
                }
                for (int a = begin; a < end; ++a) {
                    const int b = g.arc_is_inter(a);
                    ds(a, 0) += alpha(a, 0) * (d(a, 0) - inner[b]);
                }
            }
        }
        void operator()(const AggregateOp& op) {
            const Matrix& alpha = t.values_[op.alpha];
            const Matrix& c = t.values_[op.c];
            Matrix& dalpha = t.adjoints_[op.alpha];
            Matrix& dc = t.adjoints_[op.c];
            const Graph& g = *op.graph;
            const std::size_t f = c.cols();
            for (int a = 0; a < g.n_arcs(); ++a) {
                const int i = g.arc_src(a), j = g.arc_dst(a);
                const auto dz_row = d.row(i);
                const auto c_row = c.row(j);
                const auto dc_row = dc.row(j);
                const double w = alpha(a, 0);
                double acc = 0.0;
                for (std::size_t k = 0; k < f; ++k) {
                    acc += c_row[k] * dz_row[k];
                    dc_row[k] += w * dz_row[k];
                }
                dalpha(a, 0) += acc;
            }
        }
        void operator()(const ColumnStandardizeOp& op) {
            const Matrix& x = t.values_[op.x];
            Matrix& dx = t.adjoints_[op.x];
            const std::size_t n = x.rows(), f = x.cols();
            for (std::size_t j = 0; j < f; ++j) {
                if (op.guarded[j]) {
                    for (std::size_t i = 0; i < n; ++i) dx(i, j) += d(i, j);
                    continue;
                }
                const double inv_s = op.inv_scale[j];
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += d(i, j) * x(i, j);
                const double coeff =
                    dot * inv_s * inv_s * inv_s / static_cast<double>(n - 1);
                for (std::size_t i = 0; i < n; ++i) {
                    dx(i, j) += d(i, j) * inv_s - (x(i, j) - op.mean[j]) * coeff;
                }
            }
        }
        void operator()(const GatherRowsOp& op) {
            Matrix& dx = t.adjoints_[op.x];
            for (std::size_t r = 0; r < op.ids.size(); ++r) {
                const auto src = d.row(r);
                const auto dst = dx.row(op.ids[r]);
                for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
            }
        }
        void operator()(const RowDotOp& op) {
            const Matrix& a = t.values_[op.a];
            const Matrix& b = t.values_[op.b];
            Matrix& da = t.adjoints_[op.a];
            Matrix& db = t.adjoints_[op.b];
            for (std::size_t i = 0; i < a.rows(); ++i) {
                const double w = d(i, 0);
                for (std::size_t j = 0; j < a.cols(); ++j) {
                    da(i, j) += w * b(i, j);
                    db(i, j) += w * a(i, j);
                }
            }
        }
        void operator()(const SumOp& op) {
            Matrix& dx = t.adjoints_[op.x];
            const double w = d(0, 0);
            for (double& v : dx.data()) v += w;
        }
        void operator()(const BceLossOp& op) {
            const Matrix& z = t.values_[op.logits];
            Matrix& dz = t.adjoints_[op.logits];
            const double w0 = d(0, 0) / op.weight_sum;
            for (std::size_t i = 0; i < z.size(); ++i) {
                if (op.weights[i] == 0.0) continue;
                dz.data()[i] += w0 * op.weights[i] *
                                (sigmoid(z.data()[i]) - op.targets.data()[i]);
            }
        }
        void operator()(const CeLossOp& op) {
            const Matrix& z = t.values_[op.logits];
            Matrix& dz = t.adjoints_[op.logits];
            const double w0 = d(0, 0) / op.weight_sum;
            for (std::size_t i = 0; i < z.rows(); ++i) {
                if (op.weights[i] == 0.0) continue;
                const auto row = z.row(i);
                const double m = *std::max_element(row.begin(), row.end());
                double denom = 0.0;
                for (double v : row) denom += std::exp(v - m);
                for (std::size_t j = 0; j < z.cols(); ++j) {
                    const double p = std::exp(row[j] - m) / denom;
                    const double target = j == static_cast<std::size_t>(op.labels[i]) ? 1.0 : 0.0;
                    dz(i, j) += w0 * op.weights[i] * (p - target);
                }
            }
        }
    };
    std::visit(Visitor{*this, d, id}, ops_[id]);
}

}  // namespace fairgat
