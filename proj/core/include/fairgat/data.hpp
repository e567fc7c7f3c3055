#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fairgat/graph.hpp"

namespace fairgat {

/// Stochastic block model over sensitive groups with controllable homophily
/// (p_intra vs p_inter), a group-mean feature offset that controls the input
/// disparity, and a label rule.
struct SbmSpec {
    std::vector<int> group_sizes = {100, 100};
    double p_intra = 0.05;
    double p_inter = 0.005;
    int feature_dim = 8;
    double feature_shift = 1.0;
    enum class LabelRule { FeatureThreshold, GroupCorrelated } label_rule =
        LabelRule::GroupCorrelated;
    double rho = 0.7;  // P(label tracks the group) = (1 + rho) / 2
    std::uint64_t seed = 0;
};

Graph generate_sbm(const SbmSpec& spec);

struct LoadResult {
    Graph graph;
    std::vector<std::string> original_ids;  // original id per dense node id
};

/// Loads a graph from an edge list (two integer columns, comma or whitespace
/// separated, optional header) and a feature table (CSV with a header; first
/// column is the node id, the named sensitive/label columns are extracted,
/// every other column is a numeric feature). Node ids are remapped densely
/// in feature-file row order.
LoadResult load_graph(const std::string& edge_file, const std::string& feature_file,
                      const std::string& sensitive_column,
                      const std::string& label_column);

/// Writes dir/edges.csv, dir/features.csv and dir/manifest.json.
void save_graph_bundle(const Graph& graph, const std::string& dir,
                       std::uint64_t seed = 0,
                       const std::vector<std::string>& original_ids = {});

LoadResult load_graph_bundle(const std::string& dir);

/// Stratified node split (by sensitive group and label where possible);
/// split sizes follow the fractions exactly via largest-remainder rounding.
DataSplit split_nodes(const Graph& graph, std::array<double, 3> fractions,
                      std::uint64_t seed);

struct LinkSplit {
    std::vector<int> train_pos;  // undirected edge ids into graph.edges()
    std::vector<int> val_pos;
    std::vector<int> test_pos;
    std::vector<Edge> train_neg;  // sampled non-edges
    std::vector<Edge> val_neg;
    std::vector<Edge> test_neg;
    double negative_ratio = 1.0;
    std::uint64_t seed = 0;
};

/// Splits positive edges and samples matching negatives uniformly from
/// non-edges. Validation/test positives are meant to be removed from the
/// message-passing graph by the caller.
LinkSplit split_edges_for_lp(const Graph& graph, std::array<double, 3> fractions,
                             double negative_ratio, std::uint64_t seed);

}  // namespace fairgat
