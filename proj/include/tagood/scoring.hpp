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

#ifndef TAGOOD_SCORING_HPP_
#define TAGOOD_SCORING_HPP_

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "tagood/error.hpp"
#include "tagood/graph.hpp"
#include "tagood/types.hpp"

namespace tagood {

// Every scorer is oriented so that a higher value means "more OOD".
enum class Scorer { kSumId, kSumGap, kMaxGap, kOodRatio, kMsp, kEnergy, kEntropy };

std::string_view ToString(Scorer scorer);
Scorer ParseScorer(std::string_view s);

// sum_gap, max_gap and ood_ratio compare ID mass against OOD mass and are
// undefined without OOD labels.
bool RequiresOodLabels(Scorer scorer);

enum class Normalization {
  kSoftmax,      // softmax(raw / tau)
  kShiftDivide,  // (raw - min) / sum(raw - min)
};

std::string_view ToString(Normalization n);
Normalization ParseNormalization(std::string_view s);

struct PropagationConfig {
  double alpha = 0.5;
  int steps = 2;
};

struct ScoreConfig {
  Scorer scorer = Scorer::kSumId;
  double temperature = 1.0;
  double epsilon = 1e-2;
  Normalization normalization = Normalization::kSoftmax;
  std::optional<PropagationConfig> propagation;

  void Validate() const;
};

template <typename Derived>
Vector<typename Derived::Scalar> Softmax(const Eigen::MatrixBase<Derived>& logits,
                                         typename Derived::Scalar temperature) {
  using Scalar = typename Derived::Scalar;
  if (!(temperature > Scalar(0))) throw InputError("temperature must be > 0");
  if (logits.size() == 0) throw InputError("softmax of empty vector");
  Vector<Scalar> z = logits.derived().template cast<Scalar>() / temperature;
  z.array() -= z.maxCoeff();
  z = z.array().exp().matrix();
  return z / z.sum();
}

template <typename Derived>
typename Derived::Scalar LogSumExp(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

// Turns raw cosines over the active label space into a probability vector.
template <typename Derived>
Vector<typename Derived::Scalar> NormalizeProfile(
    const Eigen::MatrixBase<Derived>& raw, typename Derived::Scalar temperature,
    Normalization normalization = Normalization::kSoftmax) {
  using Scalar = typename Derived::Scalar;
  if (raw.size() == 0) throw InputError("cannot normalize an empty similarity profile");
  if (!raw.allFinite()) throw InputError("similarity profile contains non-finite values");
  if (normalization == Normalization::kSoftmax) return Softmax(raw, temperature);
  if (!(temperature > Scalar(0))) throw InputError("temperature must be > 0");
  Vector<Scalar> shifted = raw.derived().array() - raw.minCoeff();
  const Scalar total = shifted.sum();
  if (!(total > Scalar(0))) {
    return Vector<Scalar>::Constant(raw.size(), Scalar(1) / static_cast<Scalar>(raw.size()));
  }
  return shifted / total;
}

template <typename Scalar>
struct BasicSimilarityProfile {
  NodeId node = 0;
  Vector<Scalar> raw;         // cosines, ID block first
  Vector<Scalar> normalized;  // probability vector over the same labels
  Eigen::Index k_id = 0;
  Scalar temperature = Scalar(1);

  static BasicSimilarityProfile Make(NodeId node, Vector<Scalar> raw, Eigen::Index k_id,
                                     Scalar temperature,
                                     Normalization normalization = Normalization::kSoftmax) {
    if (k_id < 0 || k_id > raw.size()) throw InputError("k_id out of range for profile");
    BasicSimilarityProfile p;
    p.node = node;
    p.normalized = NormalizeProfile(raw, temperature, normalization);
    p.raw = std::move(raw);
    p.k_id = k_id;
    p.temperature = temperature;
    return p;
  }

  Eigen::Index k_ood() const { return raw.size() - k_id; }
  auto id_mass() const { return normalized.head(k_id).sum(); }
  auto ood_mass() const { return normalized.tail(k_ood()).sum(); }
  // Softmax over the ID cosines alone; the post-hoc detectors' input.
  Vector<Scalar> id_distribution() const {
    if (k_id == 0) throw RegimeError("post-hoc scorers need at least one ID label");
    return Softmax(raw.head(k_id), temperature);
  }
};

using SimilarityProfile = BasicSimilarityProfile<double>;

namespace internal {

template <typename Scalar>
void RequireOod(const BasicSimilarityProfile<Scalar>& p, std::string_view scorer) {
  if (p.k_ood() == 0) {
    throw RegimeError(std::string(scorer) +
                      " needs OOD labels in the label space; use msp, energy or entropy for the "
                      "id_only regime");
  }
}

}  // namespace internal

// 1 - (normalized ID mass).
template <typename Scalar>
Scalar ScoreSumId(const BasicSimilarityProfile<Scalar>& p) {
  // Exact zero for an ID-only space rather than rounding residue.
  if (p.k_ood() == 0) return Scalar(0);
  return Scalar(1) - p.id_mass();
}

// OOD mass - ID mass.
template <typename Scalar>
Scalar ScoreSumGap(const BasicSimilarityProfile<Scalar>& p) {
  internal::RequireOod(p, "sum_gap");
  return p.ood_mass() - p.id_mass();
}

// Largest normalized OOD entry - largest normalized ID entry.
template <typename Scalar>
Scalar ScoreMaxGap(const BasicSimilarityProfile<Scalar>& p) {
  internal::RequireOod(p, "max_gap");
  if (p.k_id == 0) throw RegimeError("max_gap needs at least one ID label");
  return p.normalized.tail(p.k_ood()).maxCoeff() - p.normalized.head(p.k_id).maxCoeff();
}

// OOD mass / (ID mass + epsilon).
template <typename Scalar>
Scalar ScoreOodRatio(const BasicSimilarityProfile<Scalar>& p, Scalar epsilon) {
  internal::RequireOod(p, "ood_ratio");
  if (!(epsilon > Scalar(0))) throw InputError("epsilon must be > 0");
  return p.ood_mass() / (p.id_mass() + epsilon);
}

template <typename Scalar>
Scalar ScoreMsp(const BasicSimilarityProfile<Scalar>& p) {
  return Scalar(1) - p.id_distribution().maxCoeff();
}

template <typename Scalar>
Scalar ScoreEntropy(const BasicSimilarityProfile<Scalar>& p) {
  const Vector<Scalar> q = p.id_distribution();
  Scalar h = Scalar(0);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (q(i) > Scalar(0)) h -= q(i) * std::log(q(i));
  }
  return h;
}

// -tau * logsumexp(raw_id / tau).
template <typename Derived>
typename Derived::Scalar ScoreEnergy(const Eigen::MatrixBase<Derived>& raw_id,
                                     typename Derived::Scalar temperature) {
  using Scalar = typename Derived::Scalar;
  if (raw_id.size() == 0) throw RegimeError("energy needs at least one ID label");
  if (!(temperature > Scalar(0))) throw InputError("temperature must be > 0");
  return -temperature * LogSumExp((raw_id.derived() / temperature).eval());
}

double ScoreProfile(const SimilarityProfile& p, const ScoreConfig& cfg);

// s <- alpha * s + (1 - alpha) * D^-1 A s, `steps` synchronous sweeps.
// Isolated nodes keep their score.
VectorXd PropagateScores(const TextAttributedGraph& g, const VectorXd& scores, double alpha,
                         int steps);

// Per-node scores over an n x K similarity matrix whose first k_id columns are
// ID labels; propagation runs when configured and a graph is given.
VectorXd ScoreAll(const RowMatrixXd& sim, Eigen::Index k_id, const ScoreConfig& cfg,
                  const TextAttributedGraph* graph = nullptr);

}  // namespace tagood

#endif  // TAGOOD_SCORING_HPP_
