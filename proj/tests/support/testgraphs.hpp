#pragma once

#include <vector>

#include "fairgat/graph.hpp"
#include "fairgat/rng.hpp"
#include "support/oracles.hpp"

namespace testgraphs {

/// Random graph with alternating sensitive groups and Bernoulli(p) edges;
/// isolated nodes are avoided by adding self-loops afterwards in callers
/// that need them.
inline fairgat::Graph random_graph(int n, int f, double p_edge, fairgat::Rng& rng,
                                   int num_groups = 2) {
    std::vector<int> sensitive(n);
    for (int i = 0; i < n; ++i) sensitive[i] = i % num_groups;
    std::vector<fairgat::Edge> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng.bernoulli(p_edge)) edges.push_back({i, j});
        }
    }
    fairgat::Matrix features = oracles::random_matrix(n, f, rng);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(rng.bernoulli(0.5));
    return fairgat::Graph::from_edges(n, std::move(features), std::move(edges),
                                      std::move(sensitive), std::move(labels));
}

inline fairgat::Graph path_graph(std::vector<int> sensitive, int feature_dim,
                                 fairgat::Rng& rng) {
    const int n = static_cast<int>(sensitive.size());
    std::vector<fairgat::Edge> edges;
    for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
    return fairgat::Graph::from_edges(n, oracles::random_matrix(n, feature_dim, rng),
                                      std::move(edges), std::move(sensitive));
}

}  // namespace testgraphs
