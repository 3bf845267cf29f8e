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

#include "tagood/synth.hpp"

#include <cmath>

#include <json.hpp>

#include "tagood/error.hpp"
#include "tagood/io.hpp"
#include "tagood/random.hpp"
#include "tagood/text.hpp"

namespace tagood {

namespace {

constexpr const char* kCoraNames[] = {"Case Based",           "Genetic Algorithms",
                                      "Neural Networks",      "Probabilistic Methods",
                                      "Reinforcement Learning", "Rule Learning",
                                      "Theory"};
// What an LLM might plausibly call each class above when it is unknown.
constexpr const char* kCoraPseudo[] = {"Analogical Reasoning",       "Evolutionary Computation",
                                       "Deep Learning",              "Bayesian Inference",
                                       "Sequential Decision Making", "Inductive Logic Programming",
                                       "Computational Learning Theory"};
constexpr std::size_t kNamedClasses = 7;

std::string Padded(std::size_t k) {
  std::string s = std::to_string(k + 1);
  return std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

std::vector<std::string> ClassNames(std::size_t classes) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < classes; ++k) {
    out.push_back(classes <= kNamedClasses ? kCoraNames[k] : "Topic " + Padded(k));
  }
  return out;
}

std::string PseudoName(std::size_t classes, std::size_t k) {
  return classes <= kNamedClasses ? kCoraPseudo[k] : "Emerging Area " + Padded(k);
}

VectorXd RandomUnit(std::size_t dim, Rng& rng) {
  VectorXd v(static_cast<Eigen::Index>(dim));
  do {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.Normal();
  } while (!(v.norm() > 0.0));
  return v.normalized();
}

}  // namespace

void SynthConfig::Validate() const {
  if (id_classes < ClassSplit::kMinIdClasses) {
    throw InputError("synth: need at least " + std::to_string(ClassSplit::kMinIdClasses) +
                     " ID classes");
  }
  if (classes <= id_classes) throw InputError("synth: classes must exceed id_classes");
  if (classes > 999) throw InputError("synth: at most 999 classes");
  if (n_per_class == 0) throw InputError("synth: n_per_class must be positive");
  for (double p : {intra_edge_prob, inter_edge_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("synth: edge probabilities must lie in [0, 1]");
  }
  if (!(centroid_cosine >= 0.0 && centroid_cosine < 1.0)) {
    throw InputError("synth: centroid cosine must lie in [0, 1)");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw InputError("synth: noise sigma must be finite and >= 0");
  }
  if (feature_dim < classes + 1) {
    throw InputError("synth: feature_dim must be at least classes + 1 (" +
                     std::to_string(classes + 1) + ")");
  }
}

SynthConfig SynthConfig::Degenerate(std::uint64_t seed) {
  SynthConfig c;
  c.centroid_cosine = 0.0;
  c.noise_sigma = 0.0;
  c.inter_edge_prob = 0.0;
  c.seed = seed;
  return c;
}

SynthFixture SynthTag(const SynthConfig& config) {
  config.Validate();
  Rng rng(DeriveSeed(config.seed, "synth"));
  const std::size_t K = config.classes;
  const auto d = static_cast<Eigen::Index>(config.feature_dim);

  // Orthonormal m, e_0..e_{K-1}; c_k = sqrt(s) m + sqrt(1 - s) e_k has unit
  // norm and pairwise cosine s.
  RowMatrixXd gauss(d, static_cast<Eigen::Index>(K + 1));
  for (Eigen::Index i = 0; i < gauss.rows(); ++i) {
    for (Eigen::Index j = 0; j < gauss.cols(); ++j) gauss(i, j) = rng.Normal();
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();
  RowMatrixXd centroids(static_cast<Eigen::Index>(K), d);
  const double a = std::sqrt(config.centroid_cosine);
  const double b = std::sqrt(1.0 - config.centroid_cosine);
  for (std::size_t k = 0; k < K; ++k) {
    centroids.row(static_cast<Eigen::Index>(k)) =
        (a * q.col(0) + b * q.col(static_cast<Eigen::Index>(k + 1))).transpose();
  }

  const auto names = ClassNames(K);
  const std::size_t n = config.n_per_class * K;
  std::vector<std::optional<ClassId>> gold(n);
  std::vector<std::string> texts(n);
  RowMatrixXd features(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i / config.n_per_class;
    gold[i] = static_cast<ClassId>(k);
    std::string kw = CaseFold(names[k]);
    texts[i] = "Document " + std::to_string(i) + ". A study of " + kw +
               ", with experiments and a discussion of open problems in " + kw + ".";
    for (Eigen::Index j = 0; j < d; ++j) {
      features(static_cast<Eigen::Index>(i), j) =
          centroids(static_cast<Eigen::Index>(k), j) + config.noise_sigma * rng.Normal();
    }
  }

  std::vector<TextAttributedGraph::Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      const bool same = u / config.n_per_class == v / config.n_per_class;
      const double p = same ? config.intra_edge_prob : config.inter_edge_prob;
      if (rng.Uniform() < p) edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }
  }

  SynthFixture fx;
  fx.graph = TextAttributedGraph::Build(n, edges, std::move(texts), gold);
  fx.features = EmbeddingMatrix(std::move(features));
  fx.centroids = EmbeddingMatrix(centroids, true);
  fx.class_names = names;

  std::vector<ClassId> id_ids;
  for (std::size_t k = 0; k < config.id_classes; ++k) id_ids.push_back(static_cast<ClassId>(k));
  fx.split = SplitClasses(fx.graph, id_ids);

  // Label space: ID centroids, real OOD centroids, then negative prompts that
  // sit near the class they negate.
  LabelSpaceSpec spec;
  std::vector<VectorXd> rows;
  for (std::size_t k = 0; k < config.id_classes; ++k) {
    spec.id.push_back({static_cast<ClassId>(k), names[k]});
    rows.push_back(centroids.row(static_cast<Eigen::Index>(k)).transpose());
  }
  for (std::size_t k = config.id_classes; k < K; ++k) {
    spec.ood.push_back({names[k], LabelOrigin::kReal});
    rows.push_back(centroids.row(static_cast<Eigen::Index>(k)).transpose());
  }
  for (std::size_t k = 0; k < config.id_classes; ++k) {
    spec.ood.push_back({names[k], LabelOrigin::kNegativePrompt});
    const VectorXd c = centroids.row(static_cast<Eigen::Index>(k)).transpose();
    rows.push_back((c + 1.0 * RandomUnit(config.feature_dim, rng)).normalized());
  }
  auto stack = [&](const std::vector<VectorXd>& rs) {
    RowMatrixXd m(static_cast<Eigen::Index>(rs.size()), d);
    for (std::size_t r = 0; r < rs.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = rs[r].transpose();
    return EmbeddingMatrix(std::move(m), true);
  };
  fx.labels = LabelSpace(spec, stack(rows));
  fx.id_labels = fx.labels.IdOnly();

  // Mock LLM: ID keywords answer with the ID name, OOD keywords with the
  // planted pseudo name.
  fx.mock.seed = config.seed;
  std::vector<std::string> bank_sentences = spec.Sentences();
  std::vector<VectorXd> bank_rows = rows;
  std::vector<VectorXd> pseudo_rows;
  for (std::size_t k = 0; k < K; ++k) {
    const bool is_id = k < config.id_classes;
    const std::string answer = is_id ? names[k] : PseudoName(K, k);
    fx.mock.rules.push_back({CaseFold(names[k]), answer});
    if (is_id) continue;
    fx.planted_pseudo_names.push_back(answer);
    const VectorXd c = centroids.row(static_cast<Eigen::Index>(k)).transpose();
    const VectorXd e = (c + 0.5 * RandomUnit(config.feature_dim, rng)).normalized();
    pseudo_rows.push_back(e);
    bank_sentences.push_back(spec.tmpl.Render(answer, false));
    bank_rows.push_back(e);
  }

  // Two clusters over the planted names, for runs that enable clustering.
  const std::size_t n_ood = fx.planted_pseudo_names.size();
  for (std::size_t c = 0; c < 2 && c < n_ood; ++c) {
    MockCluster cluster;
    cluster.name = "Cluster " + std::to_string(c + 1);
    cluster.description = "Generated labels grouped around planted OOD classes.";
    VectorXd sum = VectorXd::Zero(d);
    for (std::size_t j = c; j < n_ood; j += 2) {
      cluster.members.push_back(fx.planted_pseudo_names[j]);
      sum += pseudo_rows[j];
    }
    bank_sentences.push_back(spec.tmpl.Render(cluster.name, false));
    bank_rows.push_back(sum.normalized());
    fx.mock.clusters.push_back(std::move(cluster));
  }
  fx.bank = SentenceBank(std::move(bank_sentences), stack(bank_rows));
  return fx;
}

void WriteSynthFixture(const std::filesystem::path& dir, const SynthFixture& fx,
                       const SynthConfig& config) {
  std::filesystem::create_directories(dir);
  WriteFileAtomic(dir / SynthLayout::kGraph, SerializeGraphJson(fx.graph));
  SaveEmbeddings(dir / SynthLayout::kFeatures, fx.features);
  SaveLabelSpace(dir / SynthLayout::kLabels, fx.labels);
  SaveLabelSpace(dir / SynthLayout::kIdLabels, fx.id_labels);
  fx.bank.Save(dir / SynthLayout::kSentences, dir / SynthLayout::kSentenceEmbeddings);
  WriteFileAtomic(dir / SynthLayout::kMockTable, fx.mock.ToJson().dump(2) + "\n");
  std::string planted;
  for (const auto& p : fx.planted_pseudo_names) planted += p + "\n";
  WriteFileAtomic(dir / SynthLayout::kPlanted, planted);
  const nlohmann::json cfg = {{"n_per_class", config.n_per_class},
                              {"classes", config.classes},
                              {"id_classes", config.id_classes},
                              {"centroid_cosine", config.centroid_cosine},
                              {"intra_edge_prob", config.intra_edge_prob},
                              {"inter_edge_prob", config.inter_edge_prob},
                              {"noise_sigma", config.noise_sigma},
                              {"feature_dim", config.feature_dim},
                              {"seed", config.seed}};
  WriteFileAtomic(dir / SynthLayout::kConfig, cfg.dump(2) + "\n");
}

}  // namespace tagood
