#include <doctest.h>

#include <algorithm>

#include "fairgat/errors.hpp"
#include "fairgat/graph.hpp"
#include "fairgat/rng.hpp"
#include "support/oracles.hpp"
#include "support/testgraphs.hpp"

using fairgat::Edge;
using fairgat::Graph;
using fairgat::Matrix;

TEST_CASE("partition of a single inter-edge graph") {
    const Graph g = Graph::from_edges(2, Matrix(2, 1), {{0, 1}}, {0, 1});
    const auto p = fairgat::build_partition(g);
    CHECK(p.e_chi == std::vector<int>{0});
    CHECK(p.e_omega.empty());
    CHECK(p.r0_chi() == 1.0);
    CHECK(p.r1_chi() == 1.0);
    CHECK(p.s_chi == std::vector<int>{0, 1});
    CHECK(p.s_omega.empty());
}

TEST_CASE("partition of the 4-node path 0-1-2-3 with groups 0,0,1,1") {
    const Graph g =
        Graph::from_edges(4, Matrix(4, 1), {{0, 1}, {1, 2}, {2, 3}}, {0, 0, 1, 1});
    const auto p = fairgat::build_partition(g);
    // Only edge (1,2) crosses groups.
    REQUIRE(p.e_chi.size() == 1);
    CHECK(g.edges()[p.e_chi[0]] == Edge{1, 2});
    CHECK(p.s_chi == std::vector<int>{1, 2});
    CHECK(p.r0_chi() == doctest::Approx(0.5));
    CHECK(p.r1_chi() == doctest::Approx(0.5));
    CHECK(p.s0_chi() == std::vector<int>{1});
    CHECK(p.s1_chi() == std::vector<int>{2});
}

TEST_CASE("single-group graph is a degenerate partition") {
    const Graph g = Graph::from_edges(
        4, Matrix(4, 1), {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}, {0, 0, 0, 0});
    CHECK_THROWS_WITH_AS(fairgat::build_partition(g), "degenerate partition",
                         fairgat::DataError);
}

TEST_CASE("validate_graph on a symmetric 3-cycle") {
    const Graph g = Graph::from_edges(3, Matrix(3, 1), {{0, 1}, {1, 2}, {0, 2}}, {0, 1, 0});
    CHECK(fairgat::validate_graph(g).empty());
}

TEST_CASE("validate_graph reports asymmetry") {
    const Graph g = Graph::from_adjacency_rows(2, Matrix(2, 1), {{1}, {}}, {0, 1});
    const auto diags = fairgat::validate_graph(g);
    REQUIRE_FALSE(diags.empty());
    CHECK(std::find(diags.begin(), diags.end(), "asymmetric edge (0,1)") != diags.end());
}

TEST_CASE("validate_graph reports isolated nodes") {
    const Graph g = Graph::from_edges(3, Matrix(3, 1), {{0, 1}}, {0, 1, 0});
    const auto diags = fairgat::validate_graph(g);
    CHECK(std::find(diags.begin(), diags.end(), "isolated node 2") != diags.end());
}

TEST_CASE("inter and intra edges cover every edge") {
    fairgat::Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Graph g = testgraphs::random_graph(12, 2, 0.4, rng);
        const auto p = fairgat::build_partition(g);
        CHECK(static_cast<int>(p.e_chi.size() + p.e_omega.size()) == g.n_edges());
        CHECK(static_cast<int>(p.s_chi.size() + p.s_omega.size()) == g.n_nodes());
    }
}

TEST_CASE("partition is independent of edge input order") {
    fairgat::Rng rng(8);
    const Matrix features = oracles::random_matrix(5, 2, rng);
    std::vector<Edge> edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}};
    const Graph g1 = Graph::from_edges(5, features, edges, {0, 1, 0, 1, 1});
    std::reverse(edges.begin(), edges.end());
    const Graph g2 = Graph::from_edges(5, features, edges, {0, 1, 0, 1, 1});
    const auto p1 = fairgat::build_partition(g1);
    const auto p2 = fairgat::build_partition(g2);
    CHECK(p1.s_chi == p2.s_chi);
    CHECK(p1.e_chi == p2.e_chi);
    CHECK(p1.r_chi == p2.r_chi);
}

TEST_CASE("relabeling sensitive groups swaps group sets and fixes edge sets") {
    fairgat::Rng rng(9);
    const Graph g = testgraphs::random_graph(10, 2, 0.5, rng);
    std::vector<int> flipped = g.sensitive();
    for (int& s : flipped) s = 1 - s;
    const Graph g2 = Graph::from_edges(10, g.features(), g.edges(), flipped, g.labels());
    const auto p1 = fairgat::build_partition(g);
    const auto p2 = fairgat::build_partition(g2);
    CHECK(p1.s0() == p2.s1());
    CHECK(p1.s1() == p2.s0());
    CHECK(p1.r0_chi() == p2.r1_chi());
    CHECK(p1.r1_chi() == p2.r0_chi());
    CHECK(p1.e_chi == p2.e_chi);
    CHECK(p1.e_omega == p2.e_omega);
}

TEST_CASE("self-loop preprocessing is idempotent and intra-group") {
    const Graph g = Graph::from_edges(3, Matrix(3, 1), {{0, 1}}, {0, 1, 0});
    const Graph with = g.with_self_loops();
    CHECK(with.n_edges() == 4);  // one original edge + three loops
    CHECK(with.with_self_loops().n_edges() == 4);
    for (int i = 0; i < 3; ++i) CHECK(with.degree(i) >= 1);
    const auto p = fairgat::build_partition(with);
    // Loops are intra edges; the inter sets are unchanged.
    CHECK(p.e_chi.size() == 1);
    CHECK(p.s_chi == std::vector<int>{0, 1});
    CHECK(fairgat::validate_graph(with).empty());
}

TEST_CASE("edge subset restriction keeps features and groups") {
    const Graph g =
        Graph::from_edges(4, Matrix(4, 2), {{0, 1}, {1, 2}, {2, 3}}, {0, 0, 1, 1});
    const std::vector<int> keep = {0, 2};
    const Graph sub = g.with_edge_subset(keep);
    CHECK(sub.n_edges() == 2);
    CHECK(sub.n_nodes() == 4);
    CHECK(sub.has_edge(0, 1));
    CHECK(sub.has_edge(2, 3));
    CHECK_FALSE(sub.has_edge(1, 2));
}

TEST_CASE("dangling edge endpoints are rejected") {
    CHECK_THROWS_AS(Graph::from_edges(2, Matrix(2, 1), {{0, 5}}, {0, 1}),
                    fairgat::DataError);
}
