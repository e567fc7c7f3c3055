#include "fairgat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <utility>

#include "fairgat/errors.hpp"

namespace fairgat {

NodePredictions make_predictions(const Matrix& soft, double threshold) {
    NodePredictions preds;
    preds.threshold = threshold;
    preds.soft = soft;
    preds.hard.resize(soft.rows());
    if (soft.cols() == 1) {
        for (std::size_t i = 0; i < soft.rows(); ++i) {
            preds.hard[i] = soft(i, 0) >= threshold ? 1 : 0;
        }
    } else {
        for (std::size_t i = 0; i < soft.rows(); ++i) {
            const auto row = soft.row(i);
            preds.hard[i] = static_cast<int>(
                std::max_element(row.begin(), row.end()) - row.begin());
        }
    }
    return preds;
}

namespace {

std::vector<int> group_of_node(const SensitivePartition& partition) {
    std::size_t n = 0;
    for (const auto& g : partition.groups) n += g.size();
    std::vector<int> out(n, -1);
    for (int g = 0; g < partition.num_groups; ++g) {
        for (int i : partition.groups[g]) out[i] = g;
    }
    return out;
}

std::vector<int> all_nodes(const SensitivePartition& partition) {
    std::size_t n = 0;
    for (const auto& g : partition.groups) n += g.size();
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

void require_binary_groups(const SensitivePartition& partition) {
    if (partition.num_groups != 2) {
        throw DataError("metric requires a binary sensitive attribute");
    }
}

}  // namespace

double delta_yhat(const NodePredictions& preds, const SensitivePartition& partition,
                  std::span<const int> nodes) {
    require_binary_groups(partition);
    const auto group = group_of_node(partition);
    const std::size_t f = preds.soft.cols();
    std::vector<double> mean0(f, 0.0), mean1(f, 0.0);
    std::size_t n0 = 0, n1 = 0;
    for (int i : nodes) {
        const auto row = preds.soft.row(i);
        if (group[i] == 0) {
            for (std::size_t j = 0; j < f; ++j) mean0[j] += row[j];
            ++n0;
        } else {
            for (std::size_t j = 0; j < f; ++j) mean1[j] += row[j];
            ++n1;
        }
    }
    if (n0 == 0 || n1 == 0) throw DataError("empty sensitive group in evaluation set");
    double acc = 0.0;
    for (std::size_t j = 0; j < f; ++j) {
        const double d = mean0[j] / static_cast<double>(n0) -
                         mean1[j] / static_cast<double>(n1);
        acc += d * d;
    }
    return std::sqrt(acc);
}

double delta_yhat(const NodePredictions& preds, const SensitivePartition& partition) {
    return delta_yhat(preds, partition, all_nodes(partition));
}

double statistical_parity(const NodePredictions& preds,
                          const SensitivePartition& partition,
                          std::span<const int> nodes) {
    require_binary_groups(partition);
    for (int i : nodes) {
        if (preds.hard[i] != 0 && preds.hard[i] != 1) {
            throw DataError("statistical parity requires binary hard labels");
        }
    }
    const auto group = group_of_node(partition);
    std::size_t pos[2] = {0, 0}, count[2] = {0, 0};
    for (int i : nodes) {
        count[group[i]] += 1;
        pos[group[i]] += preds.hard[i];
    }
    if (count[0] == 0 || count[1] == 0) {
        throw DataError("empty sensitive group in evaluation set");
    }
    return std::abs(static_cast<double>(pos[0]) / count[0] -
                    static_cast<double>(pos[1]) / count[1]);
}

double statistical_parity(const NodePredictions& preds,
                          const SensitivePartition& partition) {
    return statistical_parity(preds, partition, all_nodes(partition));
}

double statistical_parity_expected(const NodePredictions& preds,
                                   const SensitivePartition& partition) {
    require_binary_groups(partition);
    if (preds.soft.cols() != 1) {
        throw DataError("expected-label statistical parity requires scalar scores");
    }
    double mean[2] = {0.0, 0.0};
    for (int g = 0; g < 2; ++g) {
        for (int i : partition.groups[g]) mean[g] += preds.soft(i, 0);
        mean[g] /= static_cast<double>(partition.groups[g].size());
    }
    return std::abs(mean[0] - mean[1]);
}

double equal_opportunity(const NodePredictions& preds, const std::vector<int>& labels,
                         const SensitivePartition& partition,
                         std::span<const int> nodes) {
    require_binary_groups(partition);
    const auto group = group_of_node(partition);
    std::size_t tp[2] = {0, 0}, positives[2] = {0, 0};
    for (int i : nodes) {
        if (labels[i] != 1) continue;
        positives[group[i]] += 1;
        tp[group[i]] += preds.hard[i] == 1 ? 1 : 0;
    }
    if (positives[0] == 0 || positives[1] == 0) {
        throw DataError("EO undefined: a sensitive group has no positive labels");
    }
    return std::abs(static_cast<double>(tp[0]) / positives[0] -
                    static_cast<double>(tp[1]) / positives[1]);
}

double equal_opportunity(const NodePredictions& preds, const std::vector<int>& labels,
                         const SensitivePartition& partition) {
    return equal_opportunity(preds, labels, partition, all_nodes(partition));
}

double accuracy(const NodePredictions& preds, const std::vector<int>& labels,
                std::span<const int> nodes) {
    if (labels.size() != preds.hard.size()) {
        throw DataError("accuracy: label/prediction length mismatch");
    }
    if (nodes.empty()) throw DataError("accuracy over an empty set");
    std::size_t correct = 0;
    for (int i : nodes) correct += preds.hard[i] == labels[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

double accuracy(const NodePredictions& preds, const std::vector<int>& labels) {
    std::vector<int> ids(preds.hard.size());
    std::iota(ids.begin(), ids.end(), 0);
    return accuracy(preds, labels, ids);
}

DyadicGrouping make_dyadic_grouping(DyadicKind kind, std::span<const Edge> edges,
                                    std::span<const int> sensitive) {
    DyadicGrouping grouping;
    grouping.kind = kind;
    grouping.edge_groups.reserve(edges.size());
    if (kind == DyadicKind::Mixed) {
        grouping.num_groups = 2;
        for (const Edge& e : edges) {
            grouping.edge_groups.push_back(
                {sensitive[e.u] == sensitive[e.v] ? 0 : 1});
        }
        return grouping;
    }
    if (kind == DyadicKind::Group) {
        int max_group = 0;
        for (const Edge& e : edges) {
            std::vector<int> gs{sensitive[e.u]};
            if (sensitive[e.v] != sensitive[e.u]) gs.push_back(sensitive[e.v]);
            max_group = std::max({max_group, sensitive[e.u], sensitive[e.v]});
            grouping.edge_groups.push_back(std::move(gs));
        }
        grouping.num_groups = max_group + 1;
        return grouping;
    }
    // Subgroup: dense ids over the unordered endpoint pairs actually present.
    std::map<std::pair<int, int>, int> pair_ids;
    for (const Edge& e : edges) {
        const auto key = std::minmax(sensitive[e.u], sensitive[e.v]);
        const auto [it, _] = pair_ids.try_emplace(key, static_cast<int>(pair_ids.size()));
        grouping.edge_groups.push_back({it->second});
    }
    grouping.num_groups = static_cast<int>(pair_ids.size());
    return grouping;
}

double dyadic_dp(std::span<const double> edge_scores, const DyadicGrouping& grouping) {
    if (edge_scores.size() != grouping.edge_groups.size()) {
        throw DataError("dyadic_dp: score/grouping length mismatch");
    }
    std::vector<double> sum(grouping.num_groups, 0.0);
    std::vector<std::size_t> count(grouping.num_groups, 0);
    for (std::size_t e = 0; e < edge_scores.size(); ++e) {
        for (int g : grouping.edge_groups[e]) {
            sum[g] += edge_scores[e];
            count[g] += 1;
        }
    }
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (int g = 0; g < grouping.num_groups; ++g) {
        if (count[g] == 0) throw DataError("dyadic_dp: empty dyadic group");
        const double mean = sum[g] / static_cast<double>(count[g]);
        hi = std::max(hi, mean);
        lo = std::min(lo, mean);
    }
    return hi - lo;
}

double dyadic_eo(std::span<const int> edge_hard, std::span<const int> edge_truth,
                 const DyadicGrouping& grouping) {
    if (edge_hard.size() != grouping.edge_groups.size() ||
        edge_truth.size() != grouping.edge_groups.size()) {
        throw DataError("dyadic_eo: input/grouping length mismatch");
    }
    const int k = grouping.num_groups;
    std::vector<std::size_t> tp(k, 0), pos(k, 0), fp(k, 0), neg(k, 0);
    for (std::size_t e = 0; e < edge_hard.size(); ++e) {
        for (int g : grouping.edge_groups[e]) {
            if (edge_truth[e] == 1) {
                pos[g] += 1;
                tp[g] += edge_hard[e] == 1 ? 1 : 0;
            } else {
                neg[g] += 1;
                fp[g] += edge_hard[e] == 1 ? 1 : 0;
            }
        }
    }
    double tpr_hi = -1.0, tpr_lo = 2.0, fpr_hi = -1.0, fpr_lo = 2.0;
    for (int g = 0; g < k; ++g) {
        if (pos[g] == 0 || neg[g] == 0) {
            throw DataError("dyadic_eo: a group lacks positive or negative edges");
        }
        const double tpr = static_cast<double>(tp[g]) / static_cast<double>(pos[g]);
        const double fpr = static_cast<double>(fp[g]) / static_cast<double>(neg[g]);
        tpr_hi = std::max(tpr_hi, tpr);
        tpr_lo = std::min(tpr_lo, tpr);
        fpr_hi = std::max(fpr_hi, fpr);
        fpr_lo = std::min(fpr_lo, fpr);
    }
    return std::max(tpr_hi - tpr_lo, fpr_hi - fpr_lo);
}

const char* dyadic_kind_name(DyadicKind kind) {
    switch (kind) {
        case DyadicKind::Mixed: return "mixed";
        case DyadicKind::Group: return "group";
        case DyadicKind::Subgroup: return "subgroup";
    }
    return "unknown";
}

}  // namespace fairgat
