#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairgat/matrix.hpp"

namespace fairgat {

/// Undirected edge; normalized so u <= v. A self-loop has u == v.
struct Edge {
    int u = 0;
    int v = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable graph: node features, symmetric adjacency in compressed row
/// form, one sensitive group id per node (dense in 0..K-1), optional class
/// labels. Undirected edges are stored once and expanded to directed arcs
/// for neighborhood traversal; a self-loop expands to a single arc.
class Graph {
public:
    static Graph from_edges(int n_nodes, Matrix features, std::vector<Edge> edges,
                            std::vector<int> sensitive, std::vector<int> labels = {});

    /// Builds the adjacency verbatim from per-node neighbor lists without
    /// symmetrizing; validate_graph reports any asymmetry.
    static Graph from_adjacency_rows(int n_nodes, Matrix features,
                                     std::vector<std::vector<int>> rows,
                                     std::vector<int> sensitive,
                                     std::vector<int> labels = {});

    int n_nodes() const { return n_nodes_; }
    int n_edges() const { return static_cast<int>(edges_.size()); }
    int n_arcs() const { return static_cast<int>(arc_dst_.size()); }
    int feature_dim() const { return static_cast<int>(features_.cols()); }
    int num_groups() const { return num_groups_; }

    const Matrix& features() const { return features_; }
    const std::vector<int>& sensitive() const { return sensitive_; }
    bool has_labels() const { return !labels_.empty(); }
    const std::vector<int>& labels() const { return labels_; }
    int num_classes() const { return num_classes_; }

    const std::vector<Edge>& edges() const { return edges_; }
    bool has_edge(int u, int v) const;

    // CSR over directed arcs: for anchor i the arcs are arc_begin(i)..arc_end(i).
    int arc_begin(int node) const { return row_ptr_[node]; }
    int arc_end(int node) const { return row_ptr_[node + 1]; }
    int arc_src(int arc) const { return arc_src_[arc]; }
    int arc_dst(int arc) const { return arc_dst_[arc]; }
    int arc_edge_id(int arc) const { return arc_edge_id_[arc]; }
    int degree(int node) const { return row_ptr_[node + 1] - row_ptr_[node]; }
    std::span<const int> neighbors(int node) const {
        return {arc_dst_.data() + row_ptr_[node],
                static_cast<std::size_t>(degree(node))};
    }

    /// True if the arc joins nodes of different sensitive groups.
    bool arc_is_inter(int arc) const { return arc_inter_[arc] != 0; }

    bool has_self_loops() const { return has_self_loops_; }
    /// Preprocessing step: returns a copy with a self-loop on every node
    /// (idempotent). Self-loops are intra-group edges.
    Graph with_self_loops() const;

    /// Copy of this graph restricted to the given undirected edge ids
    /// (message-passing graph for link prediction).
    Graph with_edge_subset(std::span<const int> edge_ids) const;

private:
    Graph() = default;
    void build_csr();

    int n_nodes_ = 0;
    int num_groups_ = 0;
    int num_classes_ = 0;
    bool has_self_loops_ = false;
    Matrix features_;
    std::vector<int> sensitive_;
    std::vector<int> labels_;
    std::vector<Edge> edges_;
    std::vector<int> row_ptr_;
    std::vector<int> arc_src_;
    std::vector<int> arc_dst_;
    std::vector<int> arc_edge_id_;
    std::vector<char> arc_inter_;
};

/// Table 1 sets derived from the sensitive attribute: per-group node sets,
/// inter/intra edge sets, S^chi / S^omega and the R^chi ratios.
struct SensitivePartition {
    int num_groups = 0;
    std::vector<std::vector<int>> groups;  // node ids per sensitive group
    std::vector<int> s_chi;                // nodes with >=1 inter-edge
    std::vector<int> s_omega;              // nodes with no inter-edge
    std::vector<std::vector<int>> group_chi;  // groups[g] intersected with s_chi
    std::vector<int> e_chi;                // undirected inter edge ids
    std::vector<int> e_omega;              // undirected intra edge ids
    std::vector<double> r_chi;             // |S^chi_g| / |S_g| per group
    std::vector<char> in_chi;              // per-node membership lookup

    const std::vector<int>& s0() const { return groups[0]; }
    const std::vector<int>& s1() const { return groups[1]; }
    const std::vector<int>& s0_chi() const { return group_chi[0]; }
    const std::vector<int>& s1_chi() const { return group_chi[1]; }
    double r0_chi() const { return r_chi[0]; }
    double r1_chi() const { return r_chi[1]; }
};

/// Derives all partition sets and ratios. Throws DataError("degenerate
/// partition") when fewer than two sensitive groups are populated.
SensitivePartition build_partition(const Graph& graph);

/// Diagnostic scan; returns human-readable violations, empty iff the graph
/// invariants hold.
std::vector<std::string> validate_graph(const Graph& graph);

/// Train/validation/test node-id (or edge-id) split.
struct DataSplit {
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;
    std::uint64_t seed = 0;
};

}  // namespace fairgat
