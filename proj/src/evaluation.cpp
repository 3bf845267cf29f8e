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

#include "tagood/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "tagood/error.hpp"
#include "tagood/random.hpp"
#include "tagood/text.hpp"

namespace tagood {

using nlohmann::json;

namespace {

struct Counts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

Counts CheckInputs(std::span<const double> scores, const std::vector<bool>& is_ood) {
  if (scores.size() != is_ood.size()) throw InputError("metric: scores and labels differ in length");
  Counts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw InputError("metric: non-finite score at " + std::to_string(i));
    is_ood[i] ? ++c.pos : ++c.neg;
  }
  return c;
}

// Indices sorted by descending score.
std::vector<std::size_t> DescendingOrder(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

// Calls visit(tp, fp) after each group of tied scores, walking thresholds
// from high to low.
template <typename Visit>
void SweepThresholds(std::span<const double> scores, const std::vector<bool>& is_ood, Visit visit) {
  const auto order = DescendingOrder(scores);
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) is_ood[order[i]] ? ++tp : ++fp;
    if (!visit(tp, fp)) return;
  }
}

}  // namespace

double Auroc(std::span<const double> scores, const std::vector<bool>& is_ood) {
  const Counts c = CheckInputs(scores, is_ood);
  if (c.pos == 0 || c.neg == 0) throw InputError("AUROC needs both ID and OOD samples");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;  // sum of 1-based midranks over positives
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (is_ood[order[k]]) rank_sum += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(c.pos);
  const double nn = static_cast<double>(c.neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double Aupr(std::span<const double> scores, const std::vector<bool>& is_ood) {
  const Counts c = CheckInputs(scores, is_ood);
  if (c.pos == 0) throw InputError("AUPR needs at least one OOD sample");
  double ap = 0.0;
  std::size_t prev_tp = 0;
  SweepThresholds(scores, is_ood, [&](std::size_t tp, std::size_t fp) {
    if (tp > prev_tp) {
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += precision * static_cast<double>(tp - prev_tp) / static_cast<double>(c.pos);
      prev_tp = tp;
    }
    return true;
  });
  return ap;
}

double FprAt95Tpr(std::span<const double> scores, const std::vector<bool>& is_ood) {
  const Counts c = CheckInputs(scores, is_ood);
  if (c.pos == 0 || c.neg == 0) throw InputError("FPR@95 needs both ID and OOD samples");
  double fpr = 1.0;
  SweepThresholds(scores, is_ood, [&](std::size_t tp, std::size_t fp) {
    // TPR >= 0.95 in integers.
    if (tp * 100 >= 95 * c.pos) {
      fpr = static_cast<double>(fp) / static_cast<double>(c.neg);
      return false;
    }
    return true;
  });
  return fpr;
}

EvalSplit BuildEvalSplit(const TextAttributedGraph& g, const ClassSplit& split,
                         std::size_t n_per_side, std::uint64_t seed) {
  if (!g.has_gold()) throw InputError("evaluation split needs gold class labels");
  std::vector<NodeId> id_pool;
  std::vector<NodeId> ood_pool;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const auto& c = g.gold_class()[i];
    if (!c) continue;
    if (split.is_id(*c)) id_pool.push_back(static_cast<NodeId>(i));
    if (split.is_ood(*c)) ood_pool.push_back(static_cast<NodeId>(i));
  }
  if (id_pool.empty()) throw InputError("evaluation split: ID pool is empty");
  if (ood_pool.empty()) throw InputError("evaluation split: OOD pool is empty");

  EvalSplit out;
  out.seed = seed;
  Rng rng(seed);
  auto draw = [&](const std::vector<NodeId>& pool, const char* side) {
    const std::size_t take = std::min(n_per_side, pool.size());
    if (take < n_per_side) {
      out.warnings.push_back(std::string(side) + " pool has " + std::to_string(pool.size()) +
                             " nodes, fewer than the requested " + std::to_string(n_per_side) +
                             "; using the whole pool");
    }
    std::vector<NodeId> picked;
    for (std::size_t i : SampleWithoutReplacement(pool.size(), take, rng)) picked.push_back(pool[i]);
    std::sort(picked.begin(), picked.end());
    return picked;
  };
  out.test_id_nodes = draw(id_pool, "ID");
  out.test_ood_nodes = draw(ood_pool, "OOD");
  return out;
}

double ZeroShotAccuracy(const RowMatrixXd& sim, const EvalSplit& split,
                        const std::vector<std::optional<ClassId>>& gold,
                        const std::vector<ClassId>& id_class_ids) {
  if (gold.empty()) throw InputError("accuracy needs gold class labels");
  const auto k_id = static_cast<Eigen::Index>(id_class_ids.size());
  if (k_id == 0 || sim.cols() < k_id) throw InputError("accuracy: similarity matrix lacks ID columns");
  if (split.test_id_nodes.empty()) throw InputError("accuracy: no test ID nodes");
  std::size_t correct = 0;
  for (NodeId v : split.test_id_nodes) {
    if (v < 0 || v >= sim.rows() || static_cast<std::size_t>(v) >= gold.size()) {
      throw InputError("accuracy: node " + std::to_string(v) + " outside the similarity matrix");
    }
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < k_id; ++k) {
      if (sim(v, k) > sim(v, best)) best = k;
    }
    const auto& g = gold[static_cast<std::size_t>(v)];
    if (g && *g == id_class_ids[static_cast<std::size_t>(best)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(split.test_id_nodes.size());
}

DetectionMetrics EvaluateDetection(const VectorXd& scores, const EvalSplit& split) {
  std::vector<double> s;
  std::vector<bool> y;
  auto gather = [&](const std::vector<NodeId>& nodes, bool ood) {
    for (NodeId v : nodes) {
      if (v < 0 || v >= scores.size()) {
        throw InputError("no score for test node " + std::to_string(v));
      }
      s.push_back(scores(v));
      y.push_back(ood);
    }
  };
  gather(split.test_id_nodes, false);
  gather(split.test_ood_nodes, true);
  return {Auroc(s, y), Aupr(s, y), FprAt95Tpr(s, y)};
}

json EvalReport::ToJson() const {
  return {{"acc", acc},
          {"auroc", auroc},
          {"aupr", aupr},
          {"fpr95", fpr95},
          {"scorer", std::string(ToString(scorer))},
          {"regime", std::string(ToString(regime))},
          {"seed", seed},
          {"n_id", n_id},
          {"n_ood", n_ood}};
}

EvalReport EvalReport::FromJson(const json& j) {
  EvalReport r;
  try {
    r.acc = j.at("acc").get<double>();
    r.auroc = j.at("auroc").get<double>();
    r.aupr = j.at("aupr").get<double>();
    r.fpr95 = j.at("fpr95").get<double>();
    r.scorer = ParseScorer(j.at("scorer").get<std::string>());
    r.regime = ParseRegime(j.at("regime").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.n_id = j.at("n_id").get<std::size_t>();
    r.n_ood = j.at("n_ood").get<std::size_t>();
  } catch (const json::exception& e) {
    throw InputError(std::string("eval report schema violation: ") + e.what());
  }
  for (double m : {r.acc, r.auroc, r.aupr, r.fpr95}) {
    if (!(m >= 0.0 && m <= 1.0)) throw InputError("eval report metric outside [0, 1]");
  }
  return r;
}

std::string AggregateResultsCsv(const std::vector<EvalReport>& reports) {
  struct Acc {
    std::vector<double> acc, auroc, aupr, fpr95;
  };
  std::vector<std::pair<Regime, Scorer>> order;
  std::map<std::pair<int, int>, Acc> cells;
  for (const auto& r : reports) {
    const auto key = std::make_pair(static_cast<int>(r.regime), static_cast<int>(r.scorer));
    if (!cells.count(key)) order.emplace_back(r.regime, r.scorer);
    auto& a = cells[key];
    a.acc.push_back(r.acc);
    a.auroc.push_back(r.auroc);
    a.aupr.push_back(r.aupr);
    a.fpr95.push_back(r.fpr95);
  }
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  auto stddev = [&](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
  };
  std::ostringstream out;
  out << "regime,scorer,n_seeds,acc_mean,acc_std,auroc_mean,auroc_std,aupr_mean,aupr_std,"
         "fpr95_mean,fpr95_std\n";
  for (const auto& [regime, scorer] : order) {
    const auto& a = cells[{static_cast<int>(regime), static_cast<int>(scorer)}];
    out << ToString(regime) << "," << ToString(scorer) << "," << a.acc.size();
    for (const auto* v : {&a.acc, &a.auroc, &a.aupr, &a.fpr95}) {
      out << "," << FormatDouble(mean(*v)) << "," << FormatDouble(stddev(*v));
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace tagood
