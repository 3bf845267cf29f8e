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

#include <sstream>

#include "tagood/error.hpp"
#include "tagood/pseudo_ood.hpp"
#include "tagood/text.hpp"

namespace tagood {

namespace {

struct AnnotationTemplateText {
  std::string_view stock_description;  // empty: no description section
  std::vector<std::string_view> not_id_bullets;
};

const AnnotationTemplateText& TemplateText(PromptTemplate t) {
  static const AnnotationTemplateText kCora{
      "Cora dataset consists of scientific publications.",
      {"Use your general knowledge to determine the single most appropriate class name of a "
       "machine learning-related topic that is not already among the ID classes listed above.",
       "The new class should not be too specific nor too detailed, and it should be a "
       "commonly-seen broad topic in the machine learning-related field — avoid rare, "
       "niche, or overly obscure concepts.",
       "You may internally summarize or reason through the text.",
       "Your final output must be only the name of the generated class."}};
  static const AnnotationTemplateText kGeneral{
      "",
      {"Use your general knowledge to determine the single most appropriate class name that is "
       "not already among the ID classes listed above.",
       "You may internally summarize or reason through the text.",
       "Your final output must be only the name of the new class."}};
  static const AnnotationTemplateText kWikiCs{
      "WikiCS dataset is a Wikipedia-based dataset, comprising many computer science branches "
      "as classes characterized by high connectivity. Node features are extracted from the "
      "corresponding article texts.",
      {"Use your general knowledge to determine the single most appropriate class name of a "
       "topic in computer science and engineering that is not already among the ID classes "
       "listed above.",
       "The new class should not be too specific nor too detailed, and it should be a "
       "commonly-seen broad topic — avoid rare, niche, or overly obscure concepts.",
       "You may internally summarize or reason through the text.",
       "Your final output must be only the name of the generated class."}};
  static const AnnotationTemplateText kEle{
      "Ele-Computers dataset is extracted from the Amazon Electronics dataset.",
      {"Use your general knowledge to determine the single most appropriate class name of an "
       "electronic product that is not already among the ID classes listed above.",
       "The new class should not be too specific nor too detailed, and it should be an "
       "electronic product commonly seen.",
       "You may internally summarize or reason through the text.",
       "Your final output must be only the name of the generated class."}};
  switch (t) {
    case PromptTemplate::kCora: return kCora;
    case PromptTemplate::kCiteseerGeneral: return kGeneral;
    case PromptTemplate::kWikiCs: return kWikiCs;
    case PromptTemplate::kEleComputers: return kEle;
  }
  throw InputError("unknown prompt template");
}

constexpr std::string_view kAnnotationHeader =
    "You are a highly knowledgeable text-classification system.\n\n"
    "You have these in-distribution (ID) classes:\n";
constexpr std::string_view kObjectIntro = "Below is the text of a Paper:\n\"";
constexpr std::string_view kObjectOutro = "\"\n\nYour task is to classify this Paper";
constexpr std::string_view kClusterHeader =
    "You are a highly intelligent taxonomy generation system.\n\n"
    "You are given a list of items to be clustered:\n";

}  // namespace

std::string_view ToString(PromptTemplate t) {
  switch (t) {
    case PromptTemplate::kCora: return "cora";
    case PromptTemplate::kCiteseerGeneral: return "citeseer_general";
    case PromptTemplate::kWikiCs: return "wiki_cs";
    case PromptTemplate::kEleComputers: return "ele_computers";
  }
  return "unknown";
}

PromptTemplate ParsePromptTemplate(std::string_view s) {
  for (PromptTemplate t : {PromptTemplate::kCora, PromptTemplate::kCiteseerGeneral,
                           PromptTemplate::kWikiCs, PromptTemplate::kEleComputers}) {
    if (ToString(t) == s) return t;
  }
  throw InputError("unknown prompt template \"" + std::string(s) + "\"");
}

std::string RenderAnnotationPrompt(std::string_view node_text,
                                   const std::vector<std::string>& id_names,
                                   std::string_view dataset_blurb, PromptTemplate tmpl) {
  if (Trim(node_text).empty()) throw InputError("annotation prompt: empty node text");
  if (id_names.empty()) throw InputError("annotation prompt: no ID class names");
  const AnnotationTemplateText& text = TemplateText(tmpl);

  std::ostringstream out;
  out << kAnnotationHeader;
  for (const auto& name : id_names) out << "- " << name << "\n";
  out << "\n";
  const std::string_view description = dataset_blurb.empty() ? text.stock_description : dataset_blurb;
  if (!description.empty()) out << "Dataset description:\n" << description << "\n\n";
  out << kObjectIntro << node_text << kObjectOutro
      << " based on the following instructions:\n\n"
      << "1. If this Paper does not belong to any of the listed ID classes:\n";
  for (std::string_view bullet : text.not_id_bullets) out << "   - " << bullet << "\n";
  out << "\n"
      << "2. If this Paper does belong to one of the listed ID classes:\n"
      << "   - Your final output must be the exact name of that ID class listed above.\n\n"
      << "Important Notes:\n"
      << "- Do not select any class from the ID list unless the Paper clearly fits.\n"
      << "- Your response must be a single line containing only the class name — no "
         "punctuation, no extra text.\n\n"
      << "Answer:\n";
  return out.str();
}

std::string RenderClusteringPrompt(const std::vector<std::string>& labels, std::size_t num_clusters,
                                   const std::vector<std::string>& id_names) {
  if (labels.empty()) throw InputError("clustering prompt: no labels");
  if (num_clusters == 0 || num_clusters > labels.size()) {
    throw InputError("clustering prompt: num_clusters must lie in [1, " +
                     std::to_string(labels.size()) + "]");
  }
  std::ostringstream out;
  out << kClusterHeader;
  for (const auto& l : labels) out << "- " << l << "\n";
  out << "\nTask:\n"
      << "cluster the above things into " << num_clusters
      << " categories and specify their names,\n"
      << "requests:\n"
      << "The generated categories should be away from the below categories:\n";
  for (const auto& name : id_names) out << "- " << name << "\n";
  out << "\nplease generate one or two sentences to describe the above " << num_clusters
      << " things, respectively.\n\n"
      << "Answer:\n";
  return out.str();
}

std::string SingleLineReminder() {
  return "\nYour previous answer was not a single line. Reply with only the class name on a "
         "single line.\n";
}

std::string ClusterFormatReminder(std::string_view problem) {
  return "\nYour previous answer could not be used (" + std::string(problem) +
         "). Reply with exactly one line per category in the form \"<name>: <description>\", "
         "and keep every name different from the in-distribution categories above.\n";
}

std::optional<ParsedAnnotationPrompt> ParseAnnotationPrompt(std::string_view prompt) {
  if (!prompt.starts_with(kAnnotationHeader)) return std::nullopt;
  ParsedAnnotationPrompt parsed;
  std::size_t pos = kAnnotationHeader.size();
  while (pos < prompt.size() && prompt.substr(pos, 2) == "- ") {
    const std::size_t nl = prompt.find('\n', pos);
    if (nl == std::string_view::npos) return std::nullopt;
    parsed.id_names.emplace_back(prompt.substr(pos + 2, nl - pos - 2));
    pos = nl + 1;
  }
  const std::size_t begin = prompt.find(kObjectIntro, pos);
  const std::size_t end = prompt.rfind(kObjectOutro);
  if (begin == std::string_view::npos || end == std::string_view::npos ||
      end < begin + kObjectIntro.size()) {
    return std::nullopt;
  }
  parsed.node_text = std::string(prompt.substr(begin + kObjectIntro.size(),
                                               end - begin - kObjectIntro.size()));
  return parsed;
}

}  // namespace tagood
