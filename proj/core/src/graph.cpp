#include "fairgat/graph.hpp"

#include <algorithm>
#include <set>

#include "fairgat/errors.hpp"

namespace fairgat {

Graph Graph::from_edges(int n_nodes, Matrix features, std::vector<Edge> edges,
                        std::vector<int> sensitive, std::vector<int> labels) {
    if (n_nodes <= 0) throw DataError("graph must have at least one node");
    if (static_cast<int>(features.rows()) != n_nodes) {
        throw DataError("feature matrix has " + std::to_string(features.rows()) +
                        " rows for " + std::to_string(n_nodes) + " nodes");
    }
    if (static_cast<int>(sensitive.size()) != n_nodes) {
        throw DataError("sensitive vector length mismatch");
    }
    if (!labels.empty() && static_cast<int>(labels.size()) != n_nodes) {
        throw DataError("label vector length mismatch");
    }

    for (auto& e : edges) {
        if (e.u < 0 || e.u >= n_nodes || e.v < 0 || e.v >= n_nodes) {
            throw DataError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                            ") references a node outside 0.." + std::to_string(n_nodes - 1));
        }
        if (e.u > e.v) std::swap(e.u, e.v);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    Graph g;
    g.n_nodes_ = n_nodes;
    g.features_ = std::move(features);
    g.sensitive_ = std::move(sensitive);
    g.labels_ = std::move(labels);
    g.edges_ = std::move(edges);

    int max_group = 0;
    for (int s : g.sensitive_) {
        if (s < 0) throw DataError("negative sensitive group id");
        max_group = std::max(max_group, s);
    }
    g.num_groups_ = max_group + 1;

    int max_label = 0;
    for (int y : g.labels_) {
        if (y < 0) throw DataError("negative class label");
        max_label = std::max(max_label, y);
    }
    g.num_classes_ = g.labels_.empty() ? 0 : max_label + 1;

    g.has_self_loops_ = std::any_of(g.edges_.begin(), g.edges_.end(),
                                    [](const Edge& e) { return e.u == e.v; });
    g.build_csr();
    return g;
}

Graph Graph::from_adjacency_rows(int n_nodes, Matrix features,
                                 std::vector<std::vector<int>> rows,
                                 std::vector<int> sensitive,
                                 std::vector<int> labels) {
    if (static_cast<int>(rows.size()) != n_nodes) {
        throw DataError("adjacency row count mismatch");
    }
    Graph g = from_edges(n_nodes, std::move(features), {}, std::move(sensitive),
                         std::move(labels));

    // Overwrite the CSR with the rows as given; undirected edge ids are the
    // normalized pairs seen in either direction.
    std::set<Edge> pairs;
    for (int i = 0; i < n_nodes; ++i) {
        auto& r = rows[i];
        std::sort(r.begin(), r.end());
        r.erase(std::unique(r.begin(), r.end()), r.end());
        for (int j : r) {
            if (j < 0 || j >= n_nodes) throw DataError("neighbor id out of range");
            pairs.insert(Edge{std::min(i, j), std::max(i, j)});
        }
    }
    g.edges_.assign(pairs.begin(), pairs.end());
    g.has_self_loops_ = std::any_of(g.edges_.begin(), g.edges_.end(),
                                    [](const Edge& e) { return e.u == e.v; });

    g.row_ptr_.assign(n_nodes + 1, 0);
    for (int i = 0; i < n_nodes; ++i) {
        g.row_ptr_[i + 1] = g.row_ptr_[i] + static_cast<int>(rows[i].size());
    }
    g.arc_src_.clear();
    g.arc_dst_.clear();
    g.arc_edge_id_.clear();
    g.arc_inter_.clear();
    for (int i = 0; i < n_nodes; ++i) {
        for (int j : rows[i]) {
            g.arc_src_.push_back(i);
            g.arc_dst_.push_back(j);
            const Edge key{std::min(i, j), std::max(i, j)};
            const auto it = std::lower_bound(g.edges_.begin(), g.edges_.end(), key);
            g.arc_edge_id_.push_back(static_cast<int>(it - g.edges_.begin()));
            g.arc_inter_.push_back(g.sensitive_[i] != g.sensitive_[j] ? 1 : 0);
        }
    }
    return g;
}

void Graph::build_csr() {
    std::vector<int> deg(n_nodes_, 0);
    for (const Edge& e : edges_) {
        deg[e.u] += 1;
        if (e.u != e.v) deg[e.v] += 1;
    }
    row_ptr_.assign(n_nodes_ + 1, 0);
    for (int i = 0; i < n_nodes_; ++i) row_ptr_[i + 1] = row_ptr_[i] + deg[i];

    const int arcs = row_ptr_[n_nodes_];
    arc_src_.assign(arcs, 0);
    arc_dst_.assign(arcs, 0);
    arc_edge_id_.assign(arcs, 0);
    std::vector<int> cursor(row_ptr_.begin(), row_ptr_.end() - 1);
    for (int id = 0; id < static_cast<int>(edges_.size()); ++id) {
        const Edge& e = edges_[id];
        arc_src_[cursor[e.u]] = e.u;
        arc_dst_[cursor[e.u]] = e.v;
        arc_edge_id_[cursor[e.u]] = id;
        ++cursor[e.u];
        if (e.u != e.v) {
            arc_src_[cursor[e.v]] = e.v;
            arc_dst_[cursor[e.v]] = e.u;
            arc_edge_id_[cursor[e.v]] = id;
            ++cursor[e.v];
        }
    }
    // Edges are sorted, so each neighbor list is sorted by destination.
    arc_inter_.resize(arcs);
    for (int a = 0; a < arcs; ++a) {
        arc_inter_[a] = sensitive_[arc_src_[a]] != sensitive_[arc_dst_[a]] ? 1 : 0;
    }
}

bool Graph::has_edge(int u, int v) const {
    if (u > v) std::swap(u, v);
    return std::binary_search(edges_.begin(), edges_.end(), Edge{u, v});
}

Graph Graph::with_self_loops() const {
    std::vector<Edge> edges = edges_;
    std::vector<char> has_loop(n_nodes_, 0);
    for (const Edge& e : edges) {
        if (e.u == e.v) has_loop[e.u] = 1;
    }
    for (int i = 0; i < n_nodes_; ++i) {
        if (!has_loop[i]) edges.push_back({i, i});
    }
    return from_edges(n_nodes_, features_, std::move(edges), sensitive_, labels_);
}

Graph Graph::with_edge_subset(std::span<const int> edge_ids) const {
    std::vector<Edge> kept;
    kept.reserve(edge_ids.size());
    for (int id : edge_ids) {
        if (id < 0 || id >= n_edges()) throw DataError("edge id out of range");
        kept.push_back(edges_[id]);
    }
    return from_edges(n_nodes_, features_, std::move(kept), sensitive_, labels_);
}

SensitivePartition build_partition(const Graph& graph) {
    const int n = graph.n_nodes();
    const auto& s = graph.sensitive();
    const int k = graph.num_groups();

    SensitivePartition p;
    p.num_groups = k;
    p.groups.assign(k, {});
    for (int i = 0; i < n; ++i) p.groups[s[i]].push_back(i);
    for (int g = 0; g < k; ++g) {
        if (p.groups[g].empty()) throw DataError("degenerate partition");
    }
    if (k < 2) throw DataError("degenerate partition");

    p.in_chi.assign(n, 0);
    for (int id = 0; id < graph.n_edges(); ++id) {
        const Edge& e = graph.edges()[id];
        if (s[e.u] != s[e.v]) {
            p.e_chi.push_back(id);
            p.in_chi[e.u] = 1;
            p.in_chi[e.v] = 1;
        } else {
            p.e_omega.push_back(id);
        }
    }
    for (int i = 0; i < n; ++i) {
        (p.in_chi[i] ? p.s_chi : p.s_omega).push_back(i);
    }
    p.group_chi.assign(k, {});
    p.r_chi.assign(k, 0.0);
    for (int g = 0; g < k; ++g) {
        for (int i : p.groups[g]) {
            if (p.in_chi[i]) p.group_chi[g].push_back(i);
        }
        p.r_chi[g] = static_cast<double>(p.group_chi[g].size()) /
                     static_cast<double>(p.groups[g].size());
    }
    return p;
}

std::vector<std::string> validate_graph(const Graph& graph) {
    std::vector<std::string> out;
    const int n = graph.n_nodes();

    for (int a = 0; a < graph.n_arcs(); ++a) {
        const int i = graph.arc_src(a);
        const int j = graph.arc_dst(a);
        if (i == j) continue;
        const auto nbrs = graph.neighbors(j);
        if (!std::binary_search(nbrs.begin(), nbrs.end(), i)) {
            out.push_back("asymmetric edge (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
        }
    }
    for (int i = 0; i < n; ++i) {
        if (graph.degree(i) == 0) {
            out.push_back("isolated node " + std::to_string(i));
        }
    }
    std::vector<int> counts(graph.num_groups(), 0);
    for (int s : graph.sensitive()) {
        if (s >= 0 && s < graph.num_groups()) counts[s] += 1;
    }
    for (int g = 0; g < graph.num_groups(); ++g) {
        if (counts[g] == 0) {
            out.push_back("sensitive ids not dense: group " + std::to_string(g) +
                          " unused");
        }
    }
    return out;
}

}  // namespace fairgat
