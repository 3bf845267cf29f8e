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

#include "tagood/label_space.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "tagood/io.hpp"
#include "tagood/random.hpp"
#include "tagood/text.hpp"

namespace tagood {

using nlohmann::json;

std::string_view ToString(LabelOrigin origin) {
  switch (origin) {
    case LabelOrigin::kReal: return "real";
    case LabelOrigin::kNegativePrompt: return "negative_prompt";
    case LabelOrigin::kLlmGenerated: return "llm_generated";
  }
  return "unknown";
}

LabelOrigin ParseLabelOrigin(std::string_view s) {
  if (s == "real") return LabelOrigin::kReal;
  if (s == "negative_prompt") return LabelOrigin::kNegativePrompt;
  if (s == "llm_generated") return LabelOrigin::kLlmGenerated;
  throw InputError("unknown label origin \"" + std::string(s) + "\"");
}

namespace {

std::size_t CountOccurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

}  // namespace

void LabelTemplate::Validate() const {
  if (CountOccurrences(positive, kPlaceholder) != 1) {
    throw InputError("positive template must contain {class} exactly once: \"" + positive + "\"");
  }
  if (CountOccurrences(negative, kPlaceholder) != 1) {
    throw InputError("negative template must contain {class} exactly once: \"" + negative + "\"");
  }
}

std::string LabelTemplate::Render(std::string_view name, bool negated) const {
  std::string out = negated ? negative : positive;
  const std::size_t pos = out.find(kPlaceholder);
  if (pos == std::string::npos) throw InputError("template has no {class} placeholder");
  out.replace(pos, kPlaceholder.size(), name);
  return out;
}

std::vector<std::string> RenderLabels(const std::vector<std::string>& names,
                                      const LabelTemplate& tmpl, bool negative) {
  tmpl.Validate();
  if (names.empty()) throw InputError("no label names to render");
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  out.reserve(names.size());
  for (const auto& name : names) {
    const std::string key = NameKey(name);
    if (key.empty()) throw InputError("empty label name");
    if (!seen.insert(key).second) throw InputError("duplicate label name \"" + name + "\"");
    out.push_back(tmpl.Render(Trim(name), negative));
  }
  return out;
}

std::vector<std::string> LabelSpaceSpec::Sentences() const {
  std::vector<std::string> out;
  out.reserve(id.size() + ood.size());
  for (const auto& l : id) out.push_back(tmpl.Render(Trim(l.name), false));
  for (const auto& l : ood) {
    out.push_back(tmpl.Render(Trim(l.name), l.origin == LabelOrigin::kNegativePrompt));
  }
  return out;
}

void LabelSpaceSpec::Validate() const {
  tmpl.Validate();
  if (id.empty()) throw InputError("label space needs at least one ID label");
  std::set<std::string> id_keys;
  std::set<ClassId> class_ids;
  for (const auto& l : id) {
    const std::string key = NameKey(l.name);
    if (key.empty()) throw InputError("empty ID label name");
    if (!id_keys.insert(key).second) throw InputError("duplicate ID label name \"" + l.name + "\"");
    if (!class_ids.insert(l.class_id).second) {
      throw InputError("duplicate ID class id " + std::to_string(l.class_id));
    }
  }
  std::set<std::string> ood_keys;
  std::set<std::string> negated_keys;
  for (const auto& l : ood) {
    const std::string key = NameKey(l.name);
    if (key.empty()) throw InputError("empty OOD label name");
    if (l.origin == LabelOrigin::kNegativePrompt) {
      if (!id_keys.count(key)) {
        throw InputError("negative prompt \"" + l.name + "\" does not name an ID class");
      }
      if (!negated_keys.insert(key).second) {
        throw InputError("duplicate negative prompt for \"" + l.name + "\"");
      }
      continue;
    }
    if (id_keys.count(key)) {
      throw InputError("label name collision: OOD label \"" + l.name + "\" matches an ID label");
    }
    if (!ood_keys.insert(key).second) throw InputError("duplicate OOD label name \"" + l.name + "\"");
  }
}

LabelSpace::LabelSpace(LabelSpaceSpec spec, EmbeddingMatrix sentence_embeddings)
    : spec_(std::move(spec)) {
  spec_.Validate();
  if (static_cast<std::size_t>(sentence_embeddings.rows()) != size()) {
    throw InputError("label space has " + std::to_string(size()) + " sentences but " +
                     std::to_string(sentence_embeddings.rows()) + " embedding rows");
  }
  embeddings_ = sentence_embeddings.Normalized();
}

std::vector<IdLabel> LabelSpace::id_labels() const {
  const auto sentences = spec_.Sentences();
  std::vector<IdLabel> out;
  for (std::size_t i = 0; i < k_id(); ++i) {
    out.push_back({spec_.id[i].class_id, spec_.id[i].name, sentences[i]});
  }
  return out;
}

std::vector<OodLabel> LabelSpace::ood_labels() const {
  const auto sentences = spec_.Sentences();
  std::vector<OodLabel> out;
  for (std::size_t i = 0; i < k_ood(); ++i) {
    out.push_back({spec_.ood[i].name, sentences[k_id() + i], spec_.ood[i].origin});
  }
  return out;
}

std::vector<std::string> LabelSpace::id_names() const {
  std::vector<std::string> out;
  for (const auto& l : spec_.id) out.push_back(l.name);
  return out;
}

std::vector<ClassId> LabelSpace::id_class_ids() const {
  std::vector<ClassId> out;
  for (const auto& l : spec_.id) out.push_back(l.class_id);
  return out;
}

EmbeddingMatrix LabelSpace::id_embeddings() const {
  return embeddings_.Slice(0, static_cast<Eigen::Index>(k_id()));
}

LabelSpace LabelSpace::WithOnly(LabelOrigin origin) const {
  LabelSpaceSpec spec;
  spec.id = spec_.id;
  spec.tmpl = spec_.tmpl;
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < k_id(); ++i) rows.push_back(static_cast<Eigen::Index>(i));
  for (std::size_t i = 0; i < k_ood(); ++i) {
    if (spec_.ood[i].origin == origin) {
      spec.ood.push_back(spec_.ood[i]);
      rows.push_back(static_cast<Eigen::Index>(k_id() + i));
    }
  }
  RowMatrixXd m(static_cast<Eigen::Index>(rows.size()), embeddings_.dim());
  for (std::size_t r = 0; r < rows.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = embeddings_.row(rows[r]);
  return LabelSpace(std::move(spec), EmbeddingMatrix(std::move(m), true));
}

LabelSpace LabelSpace::IdOnly() const {
  LabelSpaceSpec spec;
  spec.id = spec_.id;
  spec.tmpl = spec_.tmpl;
  return LabelSpace(std::move(spec), id_embeddings());
}

bool LabelSpace::HasOrigin(LabelOrigin origin) const {
  return std::any_of(spec_.ood.begin(), spec_.ood.end(),
                     [&](const OodName& l) { return l.origin == origin; });
}

LabelSpace BuildLabelSpace(const std::vector<IdClassName>& id,
                           const std::vector<std::string>& ood_names,
                           const std::vector<LabelOrigin>& origins,
                           const EmbeddingMatrix& sentence_embeddings, const LabelTemplate& tmpl) {
  if (ood_names.size() != origins.size()) {
    throw InputError("OOD names and origins differ in length");
  }
  LabelSpaceSpec spec;
  spec.id = id;
  spec.tmpl = tmpl;
  for (std::size_t i = 0; i < ood_names.size(); ++i) spec.ood.push_back({ood_names[i], origins[i]});
  return LabelSpace(std::move(spec), sentence_embeddings);
}

LabelSpace FilterPseudoLabels(const LabelSpace& space, const PseudoFilterOptions& options) {
  if (!space.HasOrigin(LabelOrigin::kLlmGenerated)) {
    throw InputError("label space has no llm_generated labels to filter");
  }
  if (options.max_id_similarity &&
      !(*options.max_id_similarity > 0.0 && *options.max_id_similarity <= 1.0)) {
    throw InputError("max_id_similarity must lie in (0, 1]");
  }
  const auto& spec = space.spec();
  std::set<std::string> id_keys;
  for (const auto& l : spec.id) id_keys.insert(NameKey(CleanResponseLine(l.name)));

  const auto& emb = space.embeddings().data();
  const auto k_id = static_cast<Eigen::Index>(space.k_id());
  std::vector<std::size_t> survivors;  // indices into spec.ood
  std::vector<std::size_t> passthrough;
  for (std::size_t i = 0; i < spec.ood.size(); ++i) {
    if (spec.ood[i].origin != LabelOrigin::kLlmGenerated) {
      passthrough.push_back(i);
      continue;
    }
    if (id_keys.count(NameKey(CleanResponseLine(spec.ood[i].name)))) continue;
    if (options.max_id_similarity) {
      const auto row = emb.row(k_id + static_cast<Eigen::Index>(i));
      const double best = (emb.topRows(k_id) * row.transpose()).maxCoeff();
      if (best >= *options.max_id_similarity) continue;
    }
    survivors.push_back(i);
  }
  if (survivors.empty()) {
    throw PseudoLabelsExhausted(
        "all generated pseudo-OOD labels were filtered out; regenerate labels (more annotation "
        "nodes or a different seed), relax the similarity filter, or use the id_only regime");
  }

  const std::size_t want =
      std::min(options.subset_size.value_or(PseudoFilterOptions::kDefaultSubset), survivors.size());
  Rng rng(options.seed);
  std::vector<std::size_t> picks = SampleWithoutReplacement(survivors.size(), want, rng);
  std::sort(picks.begin(), picks.end());

  std::vector<std::size_t> keep = passthrough;
  for (std::size_t p : picks) keep.push_back(survivors[p]);
  std::sort(keep.begin(), keep.end());

  LabelSpaceSpec out;
  out.id = spec.id;
  out.tmpl = spec.tmpl;
  RowMatrixXd m(k_id + static_cast<Eigen::Index>(keep.size()), emb.cols());
  m.topRows(k_id) = emb.topRows(k_id);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.ood.push_back(spec.ood[keep[r]]);
    m.row(k_id + static_cast<Eigen::Index>(r)) = emb.row(k_id + static_cast<Eigen::Index>(keep[r]));
  }
  return LabelSpace(std::move(out), EmbeddingMatrix(std::move(m), true));
}

std::string_view ToString(Regime regime) {
  switch (regime) {
    case Regime::kAllLabels: return "all_labels";
    case Regime::kIdOnly: return "id_only";
    case Regime::kNegativePrompts: return "negative_prompts";
    case Regime::kPseudoOod: return "pseudo_ood";
  }
  return "unknown";
}

Regime ParseRegime(std::string_view s) {
  for (Regime r : {Regime::kAllLabels, Regime::kIdOnly, Regime::kNegativePrompts,
                   Regime::kPseudoOod}) {
    if (ToString(r) == s) return r;
  }
  throw InputError("unknown regime \"" + std::string(s) + "\"");
}

LabelSpace ActiveLabelSpace(const LabelSpace& space, Regime regime) {
  LabelOrigin origin = LabelOrigin::kReal;
  std::string missing;
  switch (regime) {
    case Regime::kIdOnly:
      return space.IdOnly();
    case Regime::kAllLabels:
      origin = LabelOrigin::kReal;
      missing = "all_labels regime needs OOD labels with origin \"real\"";
      break;
    case Regime::kNegativePrompts:
      origin = LabelOrigin::kNegativePrompt;
      missing = "negative_prompts regime needs OOD labels with origin \"negative_prompt\"";
      break;
    case Regime::kPseudoOod:
      origin = LabelOrigin::kLlmGenerated;
      missing = "pseudo_ood regime needs llm_generated labels; run genlabels first";
      break;
  }
  if (!space.HasOrigin(origin)) throw RegimeError(missing);
  return space.WithOnly(origin);
}

SentenceBank::SentenceBank(std::vector<std::string> sentences, EmbeddingMatrix embeddings)
    : sentences_(std::move(sentences)), embeddings_(std::move(embeddings)) {
  if (static_cast<std::size_t>(embeddings_.rows()) != sentences_.size()) {
    throw InputError("sentence bank: " + std::to_string(sentences_.size()) + " sentences but " +
                     std::to_string(embeddings_.rows()) + " embedding rows");
  }
}

SentenceBank SentenceBank::Load(const std::filesystem::path& sentences_path,
                                const std::filesystem::path& embeddings_path) {
  return SentenceBank(SplitLines(ReadFile(sentences_path)), LoadEmbeddings(embeddings_path));
}

void SentenceBank::Save(const std::filesystem::path& sentences_path,
                        const std::filesystem::path& embeddings_path) const {
  std::string text;
  for (const auto& s : sentences_) {
    if (s.find('\n') != std::string::npos) throw InputError("sentence contains a newline");
    text += s + "\n";
  }
  SaveEmbeddings(embeddings_path, embeddings_);
  WriteFileAtomic(sentences_path, text);
}

bool SentenceBank::Contains(const std::string& sentence) const {
  return std::find(sentences_.begin(), sentences_.end(), sentence) != sentences_.end();
}

EmbeddingMatrix SentenceBank::Lookup(const std::vector<std::string>& sentences) const {
  std::unordered_map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < sentences_.size(); ++i) {
    index.emplace(sentences_[i], static_cast<Eigen::Index>(i));
  }
  RowMatrixXd m(static_cast<Eigen::Index>(sentences.size()), embeddings_.dim());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    auto it = index.find(sentences[i]);
    if (it == index.end()) {
      throw InputError("sentence bank has no embedding for \"" + sentences[i] + "\"");
    }
    m.row(static_cast<Eigen::Index>(i)) = embeddings_.row(it->second);
  }
  return EmbeddingMatrix(std::move(m));
}

EmbeddingMatrix EmbedWithCommand(const std::string& command,
                                 const std::vector<std::string>& sentences) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() /
                       ("tagood-embed-" + Sha256Hex(command + std::to_string(::getpid())).substr(0, 16));
  fs::create_directories(dir);
  const fs::path in = dir / "sentences.txt";
  const fs::path out = dir / "embeddings.gemb";
  std::string text;
  for (const auto& s : sentences) text += s + "\n";
  WriteFileAtomic(in, text);
  const std::string full = command + " '" + in.string() + "' '" + out.string() + "'";
  const int rc = std::system(full.c_str());
  if (rc != 0) {
    fs::remove_all(dir);
    throw ExternalError("embedding command failed (status " + std::to_string(rc) + "): " + command);
  }
  EmbeddingMatrix m = LoadEmbeddings(out);
  fs::remove_all(dir);
  if (static_cast<std::size_t>(m.rows()) != sentences.size()) {
    throw ExternalError("embedding command returned " + std::to_string(m.rows()) + " rows for " +
                        std::to_string(sentences.size()) + " sentences");
  }
  return m;
}

std::string SerializeLabelSpaceJson(const LabelSpaceSpec& spec) {
  json id = json::array();
  for (const auto& l : spec.id) id.push_back({{"class_id", l.class_id}, {"name", l.name}});
  json ood = json::array();
  for (const auto& l : spec.ood) {
    ood.push_back({{"name", l.name}, {"origin", std::string(ToString(l.origin))}});
  }
  json doc = {{"id", std::move(id)},
              {"ood", std::move(ood)},
              {"template", {{"positive", spec.tmpl.positive}, {"negative", spec.tmpl.negative}}}};
  return doc.dump(2) + "\n";
}

LabelSpaceSpec ParseLabelSpaceJson(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("label-space JSON parse error: ") + e.what());
  }
  auto require = [](const json& obj, const char* key, const std::string& where) -> const json& {
    if (!obj.is_object() || !obj.contains(key)) {
      throw InputError("schema violation: missing field \"" + std::string(key) + "\" in " + where);
    }
    return obj.at(key);
  };
  LabelSpaceSpec spec;
  const json& id = require(doc, "id", "label space");
  if (!id.is_array()) throw InputError("schema violation: \"id\" must be an array");
  for (std::size_t i = 0; i < id.size(); ++i) {
    const std::string where = "id[" + std::to_string(i) + "]";
    const json& cid = require(id[i], "class_id", where);
    const json& name = require(id[i], "name", where);
    if (!cid.is_number_integer() || !name.is_string()) {
      throw InputError("schema violation: bad field types in " + where);
    }
    spec.id.push_back({cid.get<ClassId>(), name.get<std::string>()});
  }
  if (doc.contains("ood")) {
    const json& ood = doc.at("ood");
    if (!ood.is_array()) throw InputError("schema violation: \"ood\" must be an array");
    for (std::size_t i = 0; i < ood.size(); ++i) {
      const std::string where = "ood[" + std::to_string(i) + "]";
      const json& name = require(ood[i], "name", where);
      const json& origin = require(ood[i], "origin", where);
      if (!name.is_string() || !origin.is_string()) {
        throw InputError("schema violation: bad field types in " + where);
      }
      spec.ood.push_back({name.get<std::string>(), ParseLabelOrigin(origin.get<std::string>())});
    }
  }
  if (doc.contains("template")) {
    const json& t = doc.at("template");
    if (t.contains("positive")) spec.tmpl.positive = t.at("positive").get<std::string>();
    if (t.contains("negative")) spec.tmpl.negative = t.at("negative").get<std::string>();
  }
  spec.Validate();
  return spec;
}

LabelSpaceSpec LoadLabelSpaceSpec(const std::filesystem::path& json_path) {
  return ParseLabelSpaceJson(ReadFile(json_path));
}

std::filesystem::path SiblingEmbeddingsPath(const std::filesystem::path& json_path) {
  std::filesystem::path p = json_path;
  p.replace_extension(".gemb");
  return p;
}

LabelSpace LoadLabelSpace(const std::filesystem::path& json_path) {
  LabelSpaceSpec spec = LoadLabelSpaceSpec(json_path);
  const auto emb_path = SiblingEmbeddingsPath(json_path);
  if (!std::filesystem::exists(emb_path)) {
    throw InputError("label-space embeddings not found: " + emb_path.string());
  }
  return LabelSpace(std::move(spec), LoadEmbeddings(emb_path));
}

void SaveLabelSpace(const std::filesystem::path& json_path, const LabelSpace& space) {
  SaveEmbeddings(SiblingEmbeddingsPath(json_path), space.embeddings());
  WriteFileAtomic(json_path, SerializeLabelSpaceJson(space.spec()));
}

std::string Fingerprint(const LabelSpace& space) {
  return Sha256Hex(SerializeLabelSpaceJson(space.spec()) + SerializeGemb(space.embeddings()));
}

}  // namespace tagood
