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

#ifndef TAGOOD_LABEL_SPACE_HPP_
#define TAGOOD_LABEL_SPACE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tagood/embed.hpp"
#include "tagood/error.hpp"
#include "tagood/types.hpp"

namespace tagood {

enum class LabelOrigin { kReal, kNegativePrompt, kLlmGenerated };

std::string_view ToString(LabelOrigin origin);
LabelOrigin ParseLabelOrigin(std::string_view s);

struct LabelTemplate {
  static constexpr std::string_view kPlaceholder = "{class}";

  std::string positive = "This paper belongs to {class}.";
  std::string negative = "This node does not belong to {class}.";

  // Each pattern must contain the placeholder exactly once.
  void Validate() const;
  std::string Render(std::string_view name, bool negated) const;
};

// Names are rendered in order. Duplicates under NameKey() and empty names
// are rejected.
std::vector<std::string> RenderLabels(const std::vector<std::string>& names,
                                      const LabelTemplate& tmpl, bool negative);

struct IdClassName {
  ClassId class_id = 0;
  std::string name;
};

struct OodName {
  std::string name;
  LabelOrigin origin = LabelOrigin::kReal;
};

// Names and template only; what the label-space JSON file holds.
struct LabelSpaceSpec {
  std::vector<IdClassName> id;
  std::vector<OodName> ood;
  LabelTemplate tmpl;

  // ID sentences first, then OOD sentences. A negative-prompt entry's name is
  // the ID class it negates and renders through the negative pattern.
  std::vector<std::string> Sentences() const;
  void Validate() const;
};

struct IdLabel {
  ClassId class_id = 0;
  std::string name;
  std::string sentence;
};

struct OodLabel {
  std::string name;
  std::string sentence;
  LabelOrigin origin = LabelOrigin::kReal;
};

// Active label space: ID block rows [0, k_id), OOD block rows [k_id, size).
class LabelSpace {
 public:
  LabelSpace() = default;
  LabelSpace(LabelSpaceSpec spec, EmbeddingMatrix sentence_embeddings);

  const LabelSpaceSpec& spec() const { return spec_; }
  std::size_t k_id() const { return spec_.id.size(); }
  std::size_t k_ood() const { return spec_.ood.size(); }
  std::size_t size() const { return k_id() + k_ood(); }

  std::vector<IdLabel> id_labels() const;
  std::vector<OodLabel> ood_labels() const;
  std::vector<std::string> id_names() const;
  std::vector<ClassId> id_class_ids() const;

  // Rows are L2-normalized.
  const EmbeddingMatrix& embeddings() const { return embeddings_; }
  EmbeddingMatrix id_embeddings() const;

  // Same ID block, OOD entries restricted to `origin`.
  LabelSpace WithOnly(LabelOrigin origin) const;
  LabelSpace IdOnly() const;
  bool HasOrigin(LabelOrigin origin) const;

 private:
  LabelSpaceSpec spec_;
  EmbeddingMatrix embeddings_;
};

LabelSpace BuildLabelSpace(const std::vector<IdClassName>& id,
                           const std::vector<std::string>& ood_names,
                           const std::vector<LabelOrigin>& origins,
                           const EmbeddingMatrix& sentence_embeddings,
                           const LabelTemplate& tmpl = {});

// Thrown when every generated label is filtered away. The caller should
// regenerate or fall back to the ID-only regime.
class PseudoLabelsExhausted : public Error {
 public:
  explicit PseudoLabelsExhausted(const std::string& what) : Error(ErrorKind::kInput, what) {}
};

struct PseudoFilterOptions {
  // Drop generated labels whose sentence cosine to any ID sentence is >= this.
  // nullopt disables the similarity rule.
  std::optional<double> max_id_similarity = 0.9;
  // Survivors kept; nullopt means min(kDefaultSubset, survivors).
  std::optional<std::size_t> subset_size;
  std::uint64_t seed = 0;

  static constexpr std::size_t kDefaultSubset = 10;
};

// Filters llm_generated entries only; other OOD entries pass through. Kept
// entries retain their original relative order.
LabelSpace FilterPseudoLabels(const LabelSpace& space, const PseudoFilterOptions& options);

// Detection regimes, each a view of one stored label space.
enum class Regime { kAllLabels, kIdOnly, kNegativePrompts, kPseudoOod };

std::string_view ToString(Regime regime);
Regime ParseRegime(std::string_view s);

// all_labels keeps real OOD entries, negative_prompts keeps negative prompts,
// pseudo_ood keeps llm_generated entries, id_only drops the OOD block.
// Throws when the regime's OOD entries are absent.
LabelSpace ActiveLabelSpace(const LabelSpace& space, Regime regime);

// Sentence -> embedding lookup table backed by a text file (one sentence per
// line) and a GEMB file with matching row order.
class SentenceBank {
 public:
  SentenceBank() = default;
  SentenceBank(std::vector<std::string> sentences, EmbeddingMatrix embeddings);

  static SentenceBank Load(const std::filesystem::path& sentences_path,
                           const std::filesystem::path& embeddings_path);
  void Save(const std::filesystem::path& sentences_path,
            const std::filesystem::path& embeddings_path) const;

  bool Contains(const std::string& sentence) const;
  // Rows for `sentences` in order; unknown sentences are an input error.
  EmbeddingMatrix Lookup(const std::vector<std::string>& sentences) const;

  const std::vector<std::string>& sentences() const { return sentences_; }
  const EmbeddingMatrix& embeddings() const { return embeddings_; }

 private:
  std::vector<std::string> sentences_;
  EmbeddingMatrix embeddings_;
};

// Runs `command <sentences.txt> <out.gemb>` and reads the result. The command
// must write one row per input line.
EmbeddingMatrix EmbedWithCommand(const std::string& command,
                                 const std::vector<std::string>& sentences);

std::string SerializeLabelSpaceJson(const LabelSpaceSpec& spec);
LabelSpaceSpec ParseLabelSpaceJson(const std::string& text);
LabelSpaceSpec LoadLabelSpaceSpec(const std::filesystem::path& json_path);

// The sentence embeddings live next to the JSON with a ".gemb" extension.
std::filesystem::path SiblingEmbeddingsPath(const std::filesystem::path& json_path);
LabelSpace LoadLabelSpace(const std::filesystem::path& json_path);
void SaveLabelSpace(const std::filesystem::path& json_path, const LabelSpace& space);

// SHA-256 over the canonical JSON and the GEMB bytes.
std::string Fingerprint(const LabelSpace& space);

}  // namespace tagood

#endif  // TAGOOD_LABEL_SPACE_HPP_
