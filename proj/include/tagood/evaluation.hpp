/*
 * Copyright 2026 The tagood Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TAGOOD_EVALUATION_HPP_
#define TAGOOD_EVALUATION_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tagood/graph.hpp"
#include "tagood/label_space.hpp"
#include "tagood/scoring.hpp"
#include "tagood/types.hpp"

namespace tagood {

// OOD is the positive class throughout. `is_ood[i]` labels `scores[i]`.

// Mann-Whitney statistic with midranks: P(s_ood > s_id) + P(tie) / 2.
double Auroc(std::span<const double> scores, const std::vector<bool>& is_ood);

// Average precision over distinct score thresholds, descending: the sum of
// (recall gain) x (precision) at each threshold. Tied scores enter together.
double Aupr(std::span<const double> scores, const std::vector<bool>& is_ood);

// FPR at the highest distinct-score threshold whose TPR reaches 0.95
// (predict OOD when score >= threshold).
double FprAt95Tpr(std::span<const double> scores, const std::vector<bool>& is_ood);

struct EvalSplit {
  std::vector<NodeId> test_id_nodes;   // ascending
  std::vector<NodeId> test_ood_nodes;  // ascending
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

// min(n_per_side, pool) nodes from each side, without replacement.
EvalSplit BuildEvalSplit(const TextAttributedGraph& g, const ClassSplit& split,
                         std::size_t n_per_side, std::uint64_t seed);

// Closed-world argmax over the first id_class_ids.size() columns (ties to the
// lowest column), scored on the test ID nodes.
double ZeroShotAccuracy(const RowMatrixXd& sim, const EvalSplit& split,
                        const std::vector<std::optional<ClassId>>& gold,
                        const std::vector<ClassId>& id_class_ids);

struct DetectionMetrics {
  double auroc = 0.0;
  double aupr = 0.0;
  double fpr95 = 0.0;
};

// Metrics over the split's test nodes, gathered from per-node `scores`.
DetectionMetrics EvaluateDetection(const VectorXd& scores, const EvalSplit& split);

struct EvalReport {
  double acc = 0.0;
  double auroc = 0.0;
  double aupr = 0.0;
  double fpr95 = 0.0;
  Scorer scorer = Scorer::kSumId;
  Regime regime = Regime::kAllLabels;
  std::uint64_t seed = 0;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;

  bool operator==(const EvalReport&) const = default;

  nlohmann::json ToJson() const;
  static EvalReport FromJson(const nlohmann::json& j);
};

// One row per (regime, scorer) with seed mean and sample standard deviation
// of each metric.
std::string AggregateResultsCsv(const std::vector<EvalReport>& reports);

// Recorded for parity with supervised baselines (20 x K train, 10 x K
// validation per side); the zero-shot path never reads them.
struct SupervisedProtocol {
  std::size_t train_per_class = 20;
  std::size_t validation_per_class = 10;
};

}  // namespace tagood

#endif  // TAGOOD_EVALUATION_HPP_
