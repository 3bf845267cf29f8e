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

#ifndef TAGOOD_SYNTH_HPP_
#define TAGOOD_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tagood/embed.hpp"
#include "tagood/graph.hpp"
#include "tagood/label_space.hpp"
#include "tagood/pseudo_ood.hpp"

namespace tagood {

// Stochastic block model with one block per class. Class c in [0, id_classes)
// is ID, the rest are OOD.
struct SynthConfig {
  std::size_t n_per_class = 60;
  std::size_t classes = 7;
  std::size_t id_classes = 3;
  double centroid_cosine = 0.3;  // pairwise cosine between class centroids, in [0, 1)
  double intra_edge_prob = 0.1;
  double inter_edge_prob = 0.01;
  double noise_sigma = 0.4;      // per-coordinate std of isotropic Gaussian noise
  std::size_t feature_dim = 32;  // needs >= classes + 1
  std::uint64_t seed = 0;

  void Validate() const;
  // Noise-free, orthogonal centroids, no inter-class edges.
  static SynthConfig Degenerate(std::uint64_t seed = 0);
};

struct SynthFixture {
  TextAttributedGraph graph;
  EmbeddingMatrix features;  // centroid + noise, one row per node
  EmbeddingMatrix centroids;  // one unit row per class
  ClassSplit split;
  std::vector<std::string> class_names;
  // ID labels + real OOD labels + one negative prompt per ID class, all
  // origins in one file.
  LabelSpace labels;
  LabelSpace id_labels;
  // Every sentence any stage may need to embed offline, including the
  // pseudo labels and clusters the mock LLM can produce.
  SentenceBank bank;
  MockTable mock;
  // What the mock LLM answers for each OOD class, indexed by OOD position.
  std::vector<std::string> planted_pseudo_names;
};

SynthFixture SynthTag(const SynthConfig& config);

// File names written by WriteSynthFixture.
struct SynthLayout {
  static constexpr const char* kGraph = "graph.json";
  static constexpr const char* kFeatures = "features.gemb";
  static constexpr const char* kLabels = "labels.json";
  static constexpr const char* kIdLabels = "labels_id.json";
  static constexpr const char* kSentences = "sentences.txt";
  static constexpr const char* kSentenceEmbeddings = "sentences.gemb";
  static constexpr const char* kMockTable = "mock_table.json";
  static constexpr const char* kPlanted = "planted_pseudo.txt";
  static constexpr const char* kConfig = "synth_config.json";
};

void WriteSynthFixture(const std::filesystem::path& dir, const SynthFixture& fixture,
                       const SynthConfig& config);

}  // namespace tagood

#endif  // TAGOOD_SYNTH_HPP_
