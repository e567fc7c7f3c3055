#pragma once

#include <span>
#include <vector>

#include "fairgat/graph.hpp"
#include "fairgat/matrix.hpp"

namespace fairgat {

/// Soft scores plus thresholded hard labels, rows aligned with graph nodes.
struct NodePredictions {
    Matrix soft;            // N x 1 probabilities, or N x C class probabilities
    std::vector<int> hard;  // 1{soft >= threshold} for binary, argmax otherwise
    double threshold = 0.5;
};

NodePredictions make_predictions(const Matrix& soft, double threshold = 0.5);

/// || mean(soft | s=0) - mean(soft | s=1) ||_2 over soft predictions.
double delta_yhat(const NodePredictions& preds, const SensitivePartition& partition);
double delta_yhat(const NodePredictions& preds, const SensitivePartition& partition,
                  std::span<const int> nodes);

/// | P(c=1 | s=0) - P(c=1 | s=1) | with empirical positive rates.
double statistical_parity(const NodePredictions& preds,
                          const SensitivePartition& partition);
double statistical_parity(const NodePredictions& preds,
                          const SensitivePartition& partition,
                          std::span<const int> nodes);

/// Statistical parity with expected hard labels, i.e. group means of the
/// soft scores; equals delta_yhat for scalar sigmoid outputs.
double statistical_parity_expected(const NodePredictions& preds,
                                   const SensitivePartition& partition);

/// | P(c=1 | y=1, s=0) - P(c=1 | y=1, s=1) |.
double equal_opportunity(const NodePredictions& preds, const std::vector<int>& labels,
                         const SensitivePartition& partition);
double equal_opportunity(const NodePredictions& preds, const std::vector<int>& labels,
                         const SensitivePartition& partition, std::span<const int> nodes);

double accuracy(const NodePredictions& preds, const std::vector<int>& labels);
double accuracy(const NodePredictions& preds, const std::vector<int>& labels,
                std::span<const int> nodes);

enum class DyadicKind { Mixed, Group, Subgroup };

/// Link-level sensitive grouping. Every evaluated edge is assigned to one or
/// more groups: mixed = intra vs inter; group = the sensitive group of each
/// endpoint (counted once per distinct endpoint group); subgroup = the
/// unordered endpoint pair.
struct DyadicGrouping {
    DyadicKind kind = DyadicKind::Mixed;
    std::vector<std::vector<int>> edge_groups;  // per evaluated edge
    int num_groups = 0;
};

DyadicGrouping make_dyadic_grouping(DyadicKind kind, std::span<const Edge> edges,
                                    std::span<const int> sensitive);

/// max_s mean score - min_s mean score over dyadic groups.
double dyadic_dp(std::span<const double> edge_scores, const DyadicGrouping& grouping);

/// max(dTPR, dFPR) over dyadic groups; requires each group to contain at
/// least one positive and one negative ground-truth edge.
double dyadic_eo(std::span<const int> edge_hard, std::span<const int> edge_truth,
                 const DyadicGrouping& grouping);

const char* dyadic_kind_name(DyadicKind kind);

}  // namespace fairgat
