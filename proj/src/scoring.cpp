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

#include "tagood/scoring.hpp"

#include <vector>

#include <Eigen/SparseCore>

namespace tagood {

std::string_view ToString(Scorer scorer) {
  switch (scorer) {
    case Scorer::kSumId: return "sum_id";
    case Scorer::kSumGap: return "sum_gap";
    case Scorer::kMaxGap: return "max_gap";
    case Scorer::kOodRatio: return "ood_ratio";
    case Scorer::kMsp: return "msp";
    case Scorer::kEnergy: return "energy";
    case Scorer::kEntropy: return "entropy";
  }
  return "unknown";
}

Scorer ParseScorer(std::string_view s) {
  for (Scorer sc : {Scorer::kSumId, Scorer::kSumGap, Scorer::kMaxGap, Scorer::kOodRatio,
                    Scorer::kMsp, Scorer::kEnergy, Scorer::kEntropy}) {
    if (ToString(sc) == s) return sc;
  }
  throw InputError("unknown scorer \"" + std::string(s) + "\"");
}

bool RequiresOodLabels(Scorer scorer) {
  return scorer == Scorer::kSumGap || scorer == Scorer::kMaxGap || scorer == Scorer::kOodRatio;
}

std::string_view ToString(Normalization n) {
  return n == Normalization::kSoftmax ? "softmax" : "shift_divide";
}

Normalization ParseNormalization(std::string_view s) {
  if (s == "softmax") return Normalization::kSoftmax;
  if (s == "shift_divide") return Normalization::kShiftDivide;
  throw InputError("unknown normalization \"" + std::string(s) + "\"");
}

void ScoreConfig::Validate() const {
  if (!(temperature > 0.0)) throw InputError("temperature must be > 0");
  if (!(epsilon > 0.0)) throw InputError("epsilon must be > 0");
  if (propagation) {
    if (!(propagation->alpha >= 0.0 && propagation->alpha <= 1.0)) {
      throw InputError("propagation alpha must lie in [0, 1]");
    }
    if (propagation->steps < 0) throw InputError("propagation steps must be >= 0");
  }
}

double ScoreProfile(const SimilarityProfile& p, const ScoreConfig& cfg) {
  switch (cfg.scorer) {
    case Scorer::kSumId: return ScoreSumId(p);
    case Scorer::kSumGap: return ScoreSumGap(p);
    case Scorer::kMaxGap: return ScoreMaxGap(p);
    case Scorer::kOodRatio: return ScoreOodRatio(p, cfg.epsilon);
    case Scorer::kMsp: return ScoreMsp(p);
    case Scorer::kEntropy: return ScoreEntropy(p);
    case Scorer::kEnergy: return ScoreEnergy(p.raw.head(p.k_id), cfg.temperature);
  }
  throw InputError("unknown scorer");
}

VectorXd PropagateScores(const TextAttributedGraph& g, const VectorXd& scores, double alpha,
                         int steps) {
  if (static_cast<std::size_t>(scores.size()) != g.node_count()) {
    throw InputError("propagation: score count does not match node count");
  }
  if (!scores.allFinite()) throw InputError("propagation: scores must be finite");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("propagation alpha must lie in [0, 1]");

  // Row-normalized adjacency; isolated nodes get a unit self-loop so they
  // keep their score.
  const auto n = static_cast<Eigen::Index>(g.node_count());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(g.adjacency().columns.size() + g.node_count());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto nbrs = g.neighbors(i);
    if (nbrs.empty()) {
      triplets.emplace_back(i, i, 1.0);
      continue;
    }
    const double w = 1.0 / static_cast<double>(nbrs.size());
    for (NodeId j : nbrs) triplets.emplace_back(i, j, w);
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> walk(n, n);
  walk.setFromTriplets(triplets.begin(), triplets.end());

  VectorXd current = scores;
  VectorXd next(n);
  for (int step = 0; step < steps; ++step) {
    next.noalias() = walk * current;
    next = alpha * current + (1.0 - alpha) * next;
    current.swap(next);
  }
  return current;
}

VectorXd ScoreAll(const RowMatrixXd& sim, Eigen::Index k_id, const ScoreConfig& cfg,
                  const TextAttributedGraph* graph) {
  cfg.Validate();
  if (k_id < 0 || k_id > sim.cols()) throw InputError("k_id out of range");
  if (RequiresOodLabels(cfg.scorer) && k_id == sim.cols()) {
    throw RegimeError(std::string(ToString(cfg.scorer)) +
                      " needs OOD labels in the label space; use msp, energy or entropy for the "
                      "id_only regime");
  }
  VectorXd scores(sim.rows());
  for (Eigen::Index i = 0; i < sim.rows(); ++i) {
    const auto profile = SimilarityProfile::Make(static_cast<NodeId>(i), sim.row(i).transpose(),
                                                 k_id, cfg.temperature, cfg.normalization);
    scores(i) = ScoreProfile(profile, cfg);
  }
  if (cfg.propagation && graph != nullptr) {
    scores = PropagateScores(*graph, scores, cfg.propagation->alpha, cfg.propagation->steps);
  }
  return scores;
}

}  // namespace tagood
