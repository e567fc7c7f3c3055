#include "fairgat/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fairgat/errors.hpp"
#include "fairgat/rng.hpp"

namespace fairgat {

namespace {
constexpr int kBundleFormatVersion = 1;
}

Graph generate_sbm(const SbmSpec& spec) {
    if (spec.group_sizes.size() < 2) throw DataError("generate_sbm: need >= 2 groups");
    for (int size : spec.group_sizes) {
        if (size < 1) throw DataError("generate_sbm: degenerate group size");
    }
    if (spec.p_intra < 0.0 || spec.p_intra > 1.0 || spec.p_inter < 0.0 ||
        spec.p_inter > 1.0) {
        throw DataError("generate_sbm: edge probabilities must be in [0, 1]");
    }
    if (spec.feature_dim < 1) throw DataError("generate_sbm: feature_dim must be >= 1");
    if (spec.rho < 0.0 || spec.rho > 1.0) {
        throw DataError("generate_sbm: rho must be in [0, 1]");
    }

    const int k = static_cast<int>(spec.group_sizes.size());
    const int n = std::accumulate(spec.group_sizes.begin(), spec.group_sizes.end(), 0);
    std::vector<int> sensitive(n);
    {
        int node = 0;
        for (int g = 0; g < k; ++g) {
            for (int j = 0; j < spec.group_sizes[g]; ++j) sensitive[node++] = g;
        }
    }

    Rng rng(spec.seed);
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double p = sensitive[i] == sensitive[j] ? spec.p_intra : spec.p_inter;
            if (rng.bernoulli(p)) edges.push_back({i, j});
        }
    }

    Matrix features(n, spec.feature_dim);
    for (int i = 0; i < n; ++i) {
        const double offset =
            spec.feature_shift * static_cast<double>(k - 1 - sensitive[i]);
        for (int j = 0; j < spec.feature_dim; ++j) {
            features(i, j) = rng.normal() + offset;
        }
    }

    std::vector<int> labels(n, 0);
    if (spec.label_rule == SbmSpec::LabelRule::FeatureThreshold) {
        std::vector<double> w(spec.feature_dim);
        double norm = 0.0;
        for (double& x : w) {
            x = rng.normal();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        std::vector<double> score(n, 0.0);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < spec.feature_dim; ++j) {
                score[i] += features(i, j) * w[j] / norm;
            }
        }
        std::vector<double> sorted = score;
        std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
        const double median = sorted[n / 2];
        for (int i = 0; i < n; ++i) labels[i] = score[i] > median ? 1 : 0;
    } else {
        const double p_track = (1.0 + spec.rho) / 2.0;
        for (int i = 0; i < n; ++i) {
            const int base = sensitive[i] % 2;
            labels[i] = rng.bernoulli(p_track) ? base : 1 - base;
        }
    }

    return Graph::from_edges(n, std::move(features), std::move(edges),
                             std::move(sensitive), std::move(labels));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

bool parse_double(const std::string& text, double* out) {
    try {
        std::size_t pos = 0;
        *out = std::stod(text, &pos);
        return pos == text.size();
    } catch (const std::exception&) {
        return false;
    }
}

bool parse_int(const std::string& text, long long* out) {
    try {
        std::size_t pos = 0;
        *out = std::stoll(text, &pos);
        return pos == text.size();
    } catch (const std::exception&) {
        return false;
    }
}

/// Remaps arbitrary non-negative integers to dense ids in sorted value order.
std::vector<int> densify(const std::vector<long long>& raw, const char* what) {
    std::set<long long> distinct(raw.begin(), raw.end());
    std::map<long long, int> to_dense;
    for (long long v : distinct) {
        if (v < 0) throw DataError(std::string(what) + " values must be non-negative");
        to_dense.emplace(v, static_cast<int>(to_dense.size()));
    }
    std::vector<int> out;
    out.reserve(raw.size());
    for (long long v : raw) out.push_back(to_dense.at(v));
    return out;
}

}  // namespace

LoadResult load_graph(const std::string& edge_file, const std::string& feature_file,
                      const std::string& sensitive_column,
                      const std::string& label_column) {
    std::ifstream features_in(feature_file);
    if (!features_in) throw DataError("cannot open feature file: " + feature_file);

    std::string line;
    if (!std::getline(features_in, line)) {
        throw DataError("feature file is empty: " + feature_file);
    }
    const std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 2) throw DataError("feature file needs id plus data columns");

    int sensitive_idx = -1, label_idx = -1;
    std::vector<int> feature_cols;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c] == sensitive_column) {
            sensitive_idx = static_cast<int>(c);
        } else if (!label_column.empty() && header[c] == label_column) {
            label_idx = static_cast<int>(c);
        } else {
            feature_cols.push_back(static_cast<int>(c));
        }
    }
    if (sensitive_idx < 0) {
        throw DataError("sensitive column '" + sensitive_column + "' not found");
    }
    if (!label_column.empty() && label_idx < 0) {
        throw DataError("label column '" + label_column + "' not found");
    }
    if (feature_cols.empty()) throw DataError("no feature columns in feature file");

    std::vector<std::string> original_ids;
    std::map<std::string, int> id_map;
    std::vector<double> feature_values;
    std::vector<long long> raw_sensitive, raw_labels;
    int line_no = 1;
    while (std::getline(features_in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataError("feature file line " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
        }
        const std::string& id = fields[0];
        if (!id_map.emplace(id, static_cast<int>(original_ids.size())).second) {
            throw DataError("duplicate node id '" + id + "' at feature file line " +
                            std::to_string(line_no));
        }
        original_ids.push_back(id);
        for (int c : feature_cols) {
            double v = 0.0;
            if (!parse_double(fields[c], &v)) {
                throw DataError("non-numeric feature '" + fields[c] + "' in column '" +
                                header[c] + "' at line " + std::to_string(line_no));
            }
            feature_values.push_back(v);
        }
        long long s = 0;
        if (!parse_int(fields[sensitive_idx], &s)) {
            throw DataError("non-integer sensitive value at line " +
                            std::to_string(line_no));
        }
        raw_sensitive.push_back(s);
        if (label_idx >= 0) {
            long long y = 0;
            if (!parse_int(fields[label_idx], &y)) {
                throw DataError("non-integer label at line " + std::to_string(line_no));
            }
            raw_labels.push_back(y);
        }
    }
    const int n = static_cast<int>(original_ids.size());
    if (n == 0) throw DataError("feature file has no data rows");

    std::ifstream edges_in(edge_file);
    if (!edges_in) throw DataError("cannot open edge file: " + edge_file);
    std::vector<Edge> edges;
    int edge_line_no = 0;
    bool first_content_line = true;
    while (std::getline(edges_in, line)) {
        ++edge_line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        for (char& ch : line) {
            if (ch == ',' || ch == '\t' || ch == ';') ch = ' ';
        }
        std::stringstream ss(line);
        std::string a, b;
        if (!(ss >> a >> b)) {
            throw DataError("malformed edge at line " + std::to_string(edge_line_no));
        }
        if (first_content_line) {
            first_content_line = false;
            long long ignored = 0;
            // Optional header: skip line 1 when its fields are non-numeric.
            if (!parse_int(a, &ignored) && !parse_int(b, &ignored)) continue;
        }
        const auto ia = id_map.find(a);
        const auto ib = id_map.find(b);
        if (ia == id_map.end() || ib == id_map.end()) {
            const std::string& missing = ia == id_map.end() ? a : b;
            throw DataError("edge references unknown node id '" + missing +
                            "' at line " + std::to_string(edge_line_no));
        }
        edges.push_back({ia->second, ib->second});
    }

    Matrix features(n, static_cast<int>(feature_cols.size()), std::move(feature_values));
    LoadResult result{
        Graph::from_edges(n, std::move(features), std::move(edges),
                          densify(raw_sensitive, "sensitive"),
                          raw_labels.empty() ? std::vector<int>{}
                                             : densify(raw_labels, "label")),
        std::move(original_ids)};
    return result;
}

void save_graph_bundle(const Graph& graph, const std::string& dir, std::uint64_t seed,
                       const std::vector<std::string>& original_ids) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    {
        std::ofstream out(fs::path(dir) / "edges.csv");
        if (!out) throw DataError("cannot write edges.csv under " + dir);
        out << "src,dst\n";
        for (const Edge& e : graph.edges()) out << e.u << "," << e.v << "\n";
    }
    {
        std::ofstream out(fs::path(dir) / "features.csv");
        if (!out) throw DataError("cannot write features.csv under " + dir);
        out << "id";
        for (int j = 0; j < graph.feature_dim(); ++j) out << ",f" << j;
        out << ",sensitive";
        if (graph.has_labels()) out << ",label";
        out << "\n";
        out.precision(17);
        for (int i = 0; i < graph.n_nodes(); ++i) {
            out << i;
            for (int j = 0; j < graph.feature_dim(); ++j) {
                out << "," << graph.features()(i, j);
            }
            out << "," << graph.sensitive()[i];
            if (graph.has_labels()) out << "," << graph.labels()[i];
            out << "\n";
        }
    }
    {
        nlohmann::json manifest;
        manifest["format_version"] = kBundleFormatVersion;
        manifest["n_nodes"] = graph.n_nodes();
        manifest["n_edges"] = graph.n_edges();
        manifest["feature_dim"] = graph.feature_dim();
        manifest["num_groups"] = graph.num_groups();
        manifest["has_labels"] = graph.has_labels();
        manifest["seed"] = seed;
        manifest["sensitive_column"] = "sensitive";
        manifest["label_column"] = graph.has_labels() ? "label" : "";
        if (original_ids.empty()) {
            std::vector<std::string> ids(graph.n_nodes());
            for (int i = 0; i < graph.n_nodes(); ++i) ids[i] = std::to_string(i);
            manifest["id_map"] = ids;
        } else {
            manifest["id_map"] = original_ids;
        }
        std::ofstream out(fs::path(dir) / "manifest.json");
        if (!out) throw DataError("cannot write manifest.json under " + dir);
        out << manifest.dump(2) << "\n";
    }
}

LoadResult load_graph_bundle(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path manifest_path = fs::path(dir) / "manifest.json";
    std::ifstream manifest_in(manifest_path);
    if (!manifest_in) {
        throw DataError("cannot open bundle manifest: " + manifest_path.string());
    }
    nlohmann::json manifest;
    try {
        manifest_in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed manifest.json: " + std::string(e.what()));
    }
    if (manifest.value("format_version", -1) != kBundleFormatVersion) {
        throw DataError("unsupported bundle format version");
    }
    return load_graph((fs::path(dir) / "edges.csv").string(),
                      (fs::path(dir) / "features.csv").string(),
                      manifest.value("sensitive_column", "sensitive"),
                      manifest.value("label_column", ""));
}

namespace {

/// Largest-remainder rounding of n into parts proportional to fractions.
std::array<int, 3> exact_counts(int n, const std::array<double, 3>& fractions) {
    std::array<int, 3> counts{};
    std::array<double, 3> remainder{};
    int assigned = 0;
    for (int s = 0; s < 3; ++s) {
        const double want = fractions[s] * n;
        counts[s] = static_cast<int>(std::floor(want + 1e-9));
        remainder[s] = want - counts[s];
        assigned += counts[s];
    }
    while (assigned < n) {
        int best = 0;
        for (int s = 1; s < 3; ++s) {
            if (remainder[s] > remainder[best] + 1e-12) best = s;
        }
        counts[best] += 1;
        remainder[best] = -1.0;
        assigned += 1;
    }
    return counts;
}

void check_fractions(const std::array<double, 3>& fractions) {
    double sum = 0.0;
    for (double f : fractions) {
        if (f < 0.0) throw DataError("split fractions must be non-negative");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw DataError("split fractions must sum to 1");
    }
}

}  // namespace

DataSplit split_nodes(const Graph& graph, std::array<double, 3> fractions,
                      std::uint64_t seed) {
    check_fractions(fractions);
    const int n = graph.n_nodes();
    const std::array<int, 3> target = exact_counts(n, fractions);

    // Stratification cells by (sensitive, label).
    std::map<std::pair<int, int>, std::vector<int>> cells;
    for (int i = 0; i < n; ++i) {
        const int y = graph.has_labels() ? graph.labels()[i] : 0;
        cells[{graph.sensitive()[i], y}].push_back(i);
    }

    std::array<std::vector<int>, 3> parts;
    std::uint64_t cell_tag = 0;
    for (auto& [key, members] : cells) {
        Rng rng(derive_seed(seed, cell_tag++));
        rng.shuffle(members);
        const auto cell_counts = exact_counts(static_cast<int>(members.size()), fractions);
        std::size_t at = 0;
        for (int s = 0; s < 3; ++s) {
            for (int c = 0; c < cell_counts[s]; ++c) parts[s].push_back(members[at++]);
        }
    }

    // Per-cell rounding can leave the global sizes off by a node or two;
    // move the most recently assigned nodes between splits to fix up.
    for (int s = 0; s < 3; ++s) {
        while (static_cast<int>(parts[s].size()) > target[s]) {
            int deficit = -1;
            for (int t = 0; t < 3; ++t) {
                if (static_cast<int>(parts[t].size()) < target[t]) {
                    deficit = t;
                    break;
                }
            }
            parts[deficit].push_back(parts[s].back());
            parts[s].pop_back();
        }
    }

    DataSplit split;
    split.seed = seed;
    split.train = std::move(parts[0]);
    split.val = std::move(parts[1]);
    split.test = std::move(parts[2]);
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

LinkSplit split_edges_for_lp(const Graph& graph, std::array<double, 3> fractions,
                             double negative_ratio, std::uint64_t seed) {
    check_fractions(fractions);
    if (negative_ratio < 0.0) throw DataError("negative ratio must be >= 0");

    std::vector<int> positives;
    for (int id = 0; id < graph.n_edges(); ++id) {
        if (graph.edges()[id].u != graph.edges()[id].v) positives.push_back(id);
    }
    if (positives.empty()) throw DataError("graph has no edges to split");

    Rng rng(derive_seed(seed, 0));
    rng.shuffle(positives);
    const auto counts = exact_counts(static_cast<int>(positives.size()), fractions);
    if (counts[0] == 0) throw DataError("link split leaves no training positives");

    LinkSplit split;
    split.seed = seed;
    split.negative_ratio = negative_ratio;
    std::size_t at = 0;
    for (int c = 0; c < counts[0]; ++c) split.train_pos.push_back(positives[at++]);
    for (int c = 0; c < counts[1]; ++c) split.val_pos.push_back(positives[at++]);
    for (int c = 0; c < counts[2]; ++c) split.test_pos.push_back(positives[at++]);

    const auto needed = [&](int count) {
        return static_cast<long long>(std::llround(negative_ratio * count));
    };
    const long long total_needed =
        needed(counts[0]) + needed(counts[1]) + needed(counts[2]);

    const int n = graph.n_nodes();
    long long off_diag_edges = 0;
    for (const Edge& e : graph.edges()) off_diag_edges += e.u != e.v ? 1 : 0;
    const long long available =
        static_cast<long long>(n) * (n - 1) / 2 - off_diag_edges;
    if (total_needed > available) {
        throw DataError("requested negatives exceed available non-edges");
    }

    std::vector<Edge> negatives;
    negatives.reserve(total_needed);
    Rng neg_rng(derive_seed(seed, 1));
    if (available <= 4 * total_needed || n <= 64) {
        std::vector<Edge> pool;
        pool.reserve(available);
        for (int u = 0; u < n; ++u) {
            for (int v = u + 1; v < n; ++v) {
                if (!graph.has_edge(u, v)) pool.push_back({u, v});
            }
        }
        neg_rng.shuffle(pool);
        negatives.assign(pool.begin(), pool.begin() + total_needed);
    } else {
        std::set<Edge> seen;
        while (static_cast<long long>(negatives.size()) < total_needed) {
            int u = static_cast<int>(neg_rng.uniform_index(n));
            int v = static_cast<int>(neg_rng.uniform_index(n));
            if (u == v) continue;
            if (u > v) std::swap(u, v);
            const Edge e{u, v};
            if (graph.has_edge(u, v) || !seen.insert(e).second) continue;
            negatives.push_back(e);
        }
    }
    std::size_t neg_at = 0;
    for (long long c = 0; c < needed(counts[0]); ++c) {
        split.train_neg.push_back(negatives[neg_at++]);
    }
    for (long long c = 0; c < needed(counts[1]); ++c) {
        split.val_neg.push_back(negatives[neg_at++]);
    }
    for (long long c = 0; c < needed(counts[2]); ++c) {
        split.test_neg.push_back(negatives[neg_at++]);
    }
    return split;
}

}  // namespace fairgat
