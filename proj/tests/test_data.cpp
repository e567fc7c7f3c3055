#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fairgat/bounds.hpp"
#include "fairgat/data.hpp"
#include "fairgat/errors.hpp"
#include "fairgat/rng.hpp"

using fairgat::Edge;
using fairgat::Graph;
using fairgat::SbmSpec;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("fairgat_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST_CASE("sbm with p_intra=1, p_inter=0 gives two cliques") {
    SbmSpec spec;
    spec.group_sizes = {4, 3};
    spec.p_intra = 1.0;
    spec.p_inter = 0.0;
    spec.seed = 5;
    const Graph g = fairgat::generate_sbm(spec);
    CHECK(g.n_edges() == 6 + 3);  // C(4,2) + C(3,2)
    const auto partition = fairgat::build_partition(g);
    CHECK(partition.e_chi.empty());
    CHECK(partition.s_omega.size() == 7);
}

TEST_CASE("sbm edge density matches the block probabilities") {
    SbmSpec spec;
    spec.group_sizes = {60, 60};
    spec.p_intra = 0.3;
    spec.p_inter = 0.3;
    spec.seed = 6;
    const Graph g = fairgat::generate_sbm(spec);
    const double pairs = 120.0 * 119.0 / 2.0;
    const double density = g.n_edges() / pairs;
    const double sigma = std::sqrt(0.3 * 0.7 / pairs);
    CHECK(std::abs(density - 0.3) <= 3.0 * sigma);
}

TEST_CASE("feature_shift controls the input disparity") {
    SbmSpec spec;
    spec.group_sizes = {200, 200};
    spec.p_intra = 0.05;
    spec.p_inter = 0.05;
    spec.feature_dim = 8;
    spec.feature_shift = 0.0;
    spec.seed = 7;
    const Graph g = fairgat::generate_sbm(spec);
    const auto partition = fairgat::build_partition(g);
    const double delta_x = fairgat::measure_disparity(g.features(), partition);
    // Per-dimension difference of two 200-sample means of unit normals.
    const double se = std::sqrt((1.0 / 200 + 1.0 / 200) * spec.feature_dim);
    CHECK(delta_x <= 3.0 * se);

    spec.feature_shift = 1.0;
    const Graph shifted = fairgat::generate_sbm(spec);
    const auto p2 = fairgat::build_partition(shifted);
    const double shifted_delta = fairgat::measure_disparity(shifted.features(), p2);
    CHECK(shifted_delta ==
          doctest::Approx(std::sqrt(static_cast<double>(spec.feature_dim))).epsilon(0.2));
}

TEST_CASE("sbm determinism and homophily") {
    SbmSpec spec;
    spec.group_sizes = {100, 100};
    spec.p_intra = 0.10;
    spec.p_inter = 0.01;
    int homophilous = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        spec.seed = seed;
        const Graph g = fairgat::generate_sbm(spec);
        const auto partition = fairgat::build_partition(g);
        if (partition.e_omega.size() > partition.e_chi.size()) ++homophilous;
    }
    CHECK(homophilous >= 19);

    spec.seed = 3;
    const Graph a = fairgat::generate_sbm(spec);
    const Graph b = fairgat::generate_sbm(spec);
    CHECK(a.edges() == b.edges());
    CHECK(a.features() == b.features());
    CHECK(a.labels() == b.labels());
}

TEST_CASE("group-correlated labels track the sensitive attribute") {
    SbmSpec spec;
    spec.group_sizes = {300, 300};
    spec.p_intra = 0.02;
    spec.p_inter = 0.02;
    spec.label_rule = SbmSpec::LabelRule::GroupCorrelated;
    spec.rho = 0.7;
    spec.seed = 8;
    const Graph g = fairgat::generate_sbm(spec);
    int match = 0;
    for (int i = 0; i < g.n_nodes(); ++i) {
        match += g.labels()[i] == g.sensitive()[i] ? 1 : 0;
    }
    const double rate = static_cast<double>(match) / g.n_nodes();
    const double want = (1.0 + spec.rho) / 2.0;
    CHECK(std::abs(rate - want) < 3.0 * std::sqrt(want * (1 - want) / g.n_nodes()));
}

TEST_CASE("node split sizes follow the fractions exactly") {
    SbmSpec spec;
    spec.group_sizes = {5, 5};
    spec.p_intra = 0.5;
    spec.p_inter = 0.5;
    spec.seed = 9;
    const Graph g = fairgat::generate_sbm(spec);
    const auto split = fairgat::split_nodes(g, {0.4, 0.3, 0.3}, 1);
    CHECK(split.train.size() == 4);
    CHECK(split.val.size() == 3);
    CHECK(split.test.size() == 3);

    const auto again = fairgat::split_nodes(g, {0.4, 0.3, 0.3}, 1);
    CHECK(split.train == again.train);
    CHECK(split.val == again.val);
    CHECK(split.test == again.test);

    CHECK_THROWS_AS(fairgat::split_nodes(g, {0.5, 0.6, 0.1}, 1), fairgat::DataError);
}

TEST_CASE("node split is disjoint, exhaustive, and stratified-ish") {
    SbmSpec spec;
    spec.group_sizes = {40, 40};
    spec.p_intra = 0.2;
    spec.p_inter = 0.05;
    spec.seed = 10;
    const Graph g = fairgat::generate_sbm(spec);
    const auto split = fairgat::split_nodes(g, {0.4, 0.3, 0.3}, 3);
    std::vector<char> seen(g.n_nodes(), 0);
    for (const auto* part : {&split.train, &split.val, &split.test}) {
        for (int i : *part) {
            CHECK_FALSE(seen[i]);
            seen[i] = 1;
        }
    }
    CHECK(std::count(seen.begin(), seen.end(), 1) == g.n_nodes());
    // Both sensitive groups appear in every part.
    for (const auto* part : {&split.train, &split.val, &split.test}) {
        int groups[2] = {0, 0};
        for (int i : *part) groups[g.sensitive()[i]] += 1;
        CHECK(groups[0] > 0);
        CHECK(groups[1] > 0);
    }
}

TEST_CASE("link split on a complete graph has no negatives to sample") {
    SbmSpec spec;
    spec.group_sizes = {3, 3};
    spec.p_intra = 1.0;
    spec.p_inter = 1.0;
    spec.seed = 11;
    const Graph g = fairgat::generate_sbm(spec);
    CHECK_THROWS_WITH_AS(fairgat::split_edges_for_lp(g, {0.8, 0.1, 0.1}, 1.0, 1),
                         "requested negatives exceed available non-edges",
                         fairgat::DataError);
}

TEST_CASE("link split counts and determinism") {
    // Path with 10 edges on 11 nodes.
    std::vector<Edge> edges;
    for (int i = 0; i < 10; ++i) edges.push_back({i, i + 1});
    std::vector<int> sensitive(11);
    for (int i = 0; i < 11; ++i) sensitive[i] = i % 2;
    const Graph g =
        Graph::from_edges(11, fairgat::Matrix(11, 2), edges, sensitive);
    const auto split = fairgat::split_edges_for_lp(g, {0.8, 0.1, 0.1}, 1.0, 2);
    CHECK(split.train_pos.size() == 8);
    CHECK(split.val_pos.size() == 1);
    CHECK(split.test_pos.size() == 1);
    CHECK(split.train_neg.size() == 8);
    CHECK(split.val_neg.size() == 1);
    CHECK(split.test_neg.size() == 1);
    for (const Edge& e : split.train_neg) CHECK_FALSE(g.has_edge(e.u, e.v));

    const auto again = fairgat::split_edges_for_lp(g, {0.8, 0.1, 0.1}, 1.0, 2);
    CHECK(split.train_pos == again.train_pos);
    CHECK(split.train_neg == again.train_neg);
}

TEST_CASE("load_graph parses a small csv pair") {
    const auto dir = temp_dir("load");
    write_file(dir / "edges.csv", "0,1\n1,2\n");
    write_file(dir / "features.csv",
               "id,f0,f1,sensitive,label\n0,0.5,1.0,0,1\n1,0.25,-1.0,1,0\n2,0,2.5,0,1\n");
    const auto loaded = fairgat::load_graph((dir / "edges.csv").string(),
                                            (dir / "features.csv").string(),
                                            "sensitive", "label");
    CHECK(loaded.graph.n_nodes() == 3);
    CHECK(loaded.graph.n_edges() == 2);
    CHECK(loaded.graph.feature_dim() == 2);
    CHECK(loaded.graph.sensitive() == std::vector<int>{0, 1, 0});
    CHECK(loaded.graph.labels() == std::vector<int>{1, 0, 1});
    CHECK(loaded.graph.features()(2, 1) == doctest::Approx(2.5));
}

TEST_CASE("load_graph collapses duplicate edges and accepts headers") {
    const auto dir = temp_dir("dup");
    write_file(dir / "edges.csv", "src,dst\n0 1\n0,1\n");
    write_file(dir / "features.csv", "id,f0,sensitive\n0,1.0,0\n1,2.0,1\n");
    const auto loaded = fairgat::load_graph((dir / "edges.csv").string(),
                                            (dir / "features.csv").string(),
                                            "sensitive", "");
    CHECK(loaded.graph.n_edges() == 1);
    CHECK_FALSE(loaded.graph.has_labels());
}

TEST_CASE("load_graph errors name the offending line") {
    const auto dir = temp_dir("bad");
    write_file(dir / "edges.csv", "0,1\n0,7\n");
    write_file(dir / "features.csv", "id,f0,sensitive\n0,1.0,0\n1,2.0,1\n");
    CHECK_THROWS_WITH_AS(
        fairgat::load_graph((dir / "edges.csv").string(),
                            (dir / "features.csv").string(), "sensitive", ""),
        "edge references unknown node id '7' at line 2", fairgat::DataError);

    write_file(dir / "features_bad.csv", "id,f0,sensitive\n0,oops,0\n1,2.0,1\n");
    CHECK_THROWS_AS(
        fairgat::load_graph((dir / "edges.csv").string(),
                            (dir / "features_bad.csv").string(), "sensitive", ""),
        fairgat::DataError);
}

TEST_CASE("bundle round-trip preserves the graph and partition statistics") {
    SbmSpec spec;
    spec.group_sizes = {20, 15};
    spec.p_intra = 0.3;
    spec.p_inter = 0.1;
    spec.seed = 12;
    const Graph g = fairgat::generate_sbm(spec);
    const auto dir = temp_dir("bundle");
    fairgat::save_graph_bundle(g, dir.string(), spec.seed);
    const auto loaded = fairgat::load_graph_bundle(dir.string());

    CHECK(loaded.graph.n_nodes() == g.n_nodes());
    CHECK(loaded.graph.edges() == g.edges());
    CHECK(loaded.graph.sensitive() == g.sensitive());
    CHECK(loaded.graph.labels() == g.labels());
    CHECK(fairgat::max_abs(loaded.graph.features() - g.features()) == 0.0);

    const auto p1 = fairgat::build_partition(g);
    const auto p2 = fairgat::build_partition(loaded.graph);
    CHECK(p1.e_chi == p2.e_chi);
    CHECK(p1.r_chi == p2.r_chi);
}

TEST_CASE("saved bundles are byte-identical across invocations") {
    SbmSpec spec;
    spec.group_sizes = {10, 10};
    spec.seed = 13;
    const Graph g = fairgat::generate_sbm(spec);
    const auto dir1 = temp_dir("bytes1");
    const auto dir2 = temp_dir("bytes2");
    fairgat::save_graph_bundle(g, dir1.string(), spec.seed);
    fairgat::save_graph_bundle(fairgat::generate_sbm(spec), dir2.string(), spec.seed);
    for (const char* name : {"edges.csv", "features.csv", "manifest.json"}) {
        std::ifstream a(dir1 / name), b(dir2 / name);
        const std::string sa((std::istreambuf_iterator<char>(a)),
                             std::istreambuf_iterator<char>());
        const std::string sb((std::istreambuf_iterator<char>(b)),
                             std::istreambuf_iterator<char>());
        CHECK(sa == sb);
    }
}
