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

#include "tagood/pseudo_ood.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <regex>
#include <set>
#include <thread>

#include "tagood/error.hpp"
#include "tagood/io.hpp"
#include "tagood/random.hpp"
#include "tagood/text.hpp"

namespace tagood {

using nlohmann::json;

json AnnotationRecord::ToJson() const {
  json j = {{"node", node}, {"raw_response", raw_response}, {"prompt_sha256", prompt_fingerprint}};
  if (const auto* m = std::get_if<MatchedId>(&decision)) {
    j["decision"] = {{"kind", "matched_id"}, {"index", m->index}};
  } else {
    j["decision"] = {{"kind", "generated_ood"}, {"name", std::get<GeneratedOod>(decision).name}};
  }
  return j;
}

AnnotationRecord AnnotationRecord::FromJson(const json& j) {
  AnnotationRecord r;
  r.node = j.at("node").get<NodeId>();
  r.raw_response = j.at("raw_response").get<std::string>();
  r.prompt_fingerprint = j.at("prompt_sha256").get<std::string>();
  const json& d = j.at("decision");
  if (d.at("kind") == "matched_id") {
    r.decision = MatchedId{d.at("index").get<std::size_t>()};
  } else {
    r.decision = GeneratedOod{d.at("name").get<std::string>()};
  }
  return r;
}

std::vector<NodeId> SampleAnnotationNodes(const TextAttributedGraph& g, std::size_t count,
                                          std::uint64_t seed) {
  if (count > g.node_count()) {
    throw InputError("cannot sample " + std::to_string(count) + " nodes from a graph of " +
                     std::to_string(g.node_count()));
  }
  Rng rng(seed);
  std::vector<NodeId> out;
  for (std::size_t i : SampleWithoutReplacement(g.node_count(), count, rng)) {
    out.push_back(static_cast<NodeId>(i));
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::vector<std::string> NonEmptyLines(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& line : SplitLines(text)) {
    std::string t = Trim(line);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

AnnotationRecord Annotate(LlmClient& client, NodeId node, const std::string& prompt,
                          const std::vector<std::string>& id_names) {
  const std::string tag = "annotate/" + std::to_string(node);
  AnnotationRecord rec;
  rec.node = node;
  rec.prompt_fingerprint = Sha256Hex(prompt);
  rec.raw_response = client.Complete(tag, prompt);

  auto lines = NonEmptyLines(rec.raw_response);
  if (lines.empty()) throw ExternalError("empty LLM response for node " + std::to_string(node));
  if (lines.size() > 1) {
    rec.raw_response = client.Complete(tag + "/retry", prompt + SingleLineReminder());
    lines = NonEmptyLines(rec.raw_response);
    if (lines.empty()) throw ExternalError("empty LLM response for node " + std::to_string(node));
    if (lines.size() > 1) {
      throw ExternalError("LLM answered node " + std::to_string(node) +
                          " with multiple lines after a re-prompt");
    }
  }
  const std::string answer = CollapseWhitespace(CleanResponseLine(lines.front()));
  if (answer.empty()) throw ExternalError("empty LLM answer for node " + std::to_string(node));

  const std::string key = NameKey(answer);
  for (std::size_t k = 0; k < id_names.size(); ++k) {
    if (NameKey(CleanResponseLine(id_names[k])) == key) {
      rec.decision = MatchedId{k};
      return rec;
    }
  }
  rec.decision = GeneratedOod{answer};
  return rec;
}

std::vector<AnnotationRecord> AnnotateNodes(LlmClient& client, const TextAttributedGraph& g,
                                            const std::vector<NodeId>& nodes,
                                            const std::vector<std::string>& id_names,
                                            std::string_view dataset_blurb, PromptTemplate tmpl,
                                            std::size_t concurrency) {
  std::vector<NodeId> order = nodes;
  std::sort(order.begin(), order.end());
  std::vector<std::string> prompts;
  prompts.reserve(order.size());
  for (NodeId v : order) prompts.push_back(RenderAnnotationPrompt(g.text(v), id_names, dataset_blurb, tmpl));

  std::vector<AnnotationRecord> records(order.size());
  const std::size_t workers =
      client.concurrent() ? std::clamp<std::size_t>(concurrency, 1, std::max<std::size_t>(order.size(), 1)) : 1;
  if (workers == 1) {
    for (std::size_t i = 0; i < order.size(); ++i) records[i] = Annotate(client, order[i], prompts[i], id_names);
    return records;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= order.size() || failed.load()) return;
      try {
        records[i] = Annotate(client, order[i], prompts[i], id_names);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return records;
}

std::vector<std::string> HarvestPseudoLabels(const std::vector<AnnotationRecord>& records) {
  struct Entry {
    std::string display;
    std::size_t count = 0;
  };
  std::map<std::string, Entry> by_key;
  for (const auto& r : records) {
    const auto* gen = std::get_if<GeneratedOod>(&r.decision);
    if (gen == nullptr) continue;
    const std::string key = NameKey(gen->name);
    if (key.empty()) continue;
    auto [it, inserted] = by_key.try_emplace(key, Entry{gen->name, 0});
    ++it->second.count;
  }
  std::vector<std::pair<std::string, Entry>> entries(by_key.begin(), by_key.end());
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second.count > b.second.count;  // map order already breaks ties by key
  });
  std::vector<std::string> out;
  for (const auto& [key, e] : entries) out.push_back(e.display);
  return out;
}

std::vector<LabelCluster> ParseClusterResponse(std::string_view response) {
  static const std::regex kMarker(R"(^(?:[-*+]|•|\d+[.)])\s*)");
  std::vector<LabelCluster> with_colon;
  std::vector<LabelCluster> bare;
  for (const auto& raw : SplitLines(response)) {
    std::string line = Trim(raw);
    if (line.empty()) continue;
    line = std::regex_replace(line, kMarker, "", std::regex_constants::format_first_only);
    for (std::size_t p = line.find("**"); p != std::string::npos; p = line.find("**")) line.erase(p, 2);
    line = Trim(line);
    if (line.empty() || NameKey(line) == "answer:") continue;
    const std::size_t colon = line.find(':');
    if (colon != std::string::npos) {
      std::string name = CollapseWhitespace(CleanResponseLine(line.substr(0, colon)));
      if (!name.empty()) with_colon.push_back({name, Trim(line.substr(colon + 1))});
    } else {
      std::string name = CollapseWhitespace(CleanResponseLine(line));
      if (!name.empty()) bare.push_back({name, ""});
    }
  }
  return with_colon.empty() ? bare : with_colon;
}

std::vector<LabelCluster> ClusterLabels(LlmClient& client, const std::vector<std::string>& labels,
                                        std::size_t num_clusters,
                                        const std::vector<std::string>& id_names) {
  const std::string prompt = RenderClusteringPrompt(labels, num_clusters, id_names);
  std::set<std::string> id_keys;
  for (const auto& n : id_names) id_keys.insert(NameKey(CleanResponseLine(n)));

  std::string problem;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string response = attempt == 0
                                     ? client.Complete("cluster", prompt)
                                     : client.Complete("cluster/retry", prompt + ClusterFormatReminder(problem));
    const auto clusters = ParseClusterResponse(response);
    problem.clear();
    if (clusters.size() != num_clusters) {
      problem = "expected " + std::to_string(num_clusters) + " categories, got " +
                std::to_string(clusters.size());
      continue;
    }
    std::set<std::string> seen;
    for (const auto& c : clusters) {
      const std::string key = NameKey(c.name);
      if (id_keys.count(key)) {
        problem = "category \"" + c.name + "\" is an in-distribution class";
        break;
      }
      if (!seen.insert(key).second) {
        problem = "category \"" + c.name + "\" appears twice";
        break;
      }
    }
    if (problem.empty()) return clusters;
  }
  throw ExternalError("clustering response unusable after a re-prompt: " + problem);
}

PseudoLabelResult GeneratePseudoLabels(const TextAttributedGraph& g, const LabelSpace& base,
                                       LlmClient& client, const SentenceEncoder& encode,
                                       const PseudoLabelConfig& config) {
  PseudoLabelResult result;
  const LabelSpace id_space = base.IdOnly();
  const std::vector<std::string> id_names = id_space.id_names();

  const std::size_t count = std::min(config.annotation_count, g.node_count());
  result.sampled = SampleAnnotationNodes(g, count, DeriveSeed(config.seed, "annotation_sample"));
  result.records = AnnotateNodes(client, g, result.sampled, id_names, config.dataset_blurb,
                                 config.prompt, config.concurrency);
  result.harvested = HarvestPseudoLabels(result.records);
  if (result.harvested.empty()) {
    throw PseudoLabelsExhausted(
        "the LLM matched every sampled node to an ID class, so no pseudo-OOD labels were "
        "generated; sample more nodes, change the seed, or use the id_only regime");
  }

  std::vector<std::string> names = result.harvested;
  if (config.num_clusters) {
    result.clusters = ClusterLabels(client, result.harvested, *config.num_clusters, id_names);
    names.clear();
    for (const auto& c : result.clusters) names.push_back(c.name);
  }

  LabelSpaceSpec spec = id_space.spec();
  for (const auto& n : names) spec.ood.push_back({n, LabelOrigin::kLlmGenerated});
  const auto sentences = spec.Sentences();
  const std::vector<std::string> ood_sentences(sentences.begin() + static_cast<std::ptrdiff_t>(id_space.k_id()),
                                               sentences.end());
  const EmbeddingMatrix ood_emb = encode(ood_sentences).Normalized();
  if (ood_emb.dim() != id_space.embeddings().dim()) {
    throw InputError("generated label embeddings have dim " + std::to_string(ood_emb.dim()) +
                     " but ID label embeddings have dim " + std::to_string(id_space.embeddings().dim()));
  }
  RowMatrixXd all(static_cast<Eigen::Index>(sentences.size()), ood_emb.dim());
  all << id_space.embeddings().data(), ood_emb.data();

  PseudoFilterOptions filter = config.filter;
  filter.seed = DeriveSeed(config.seed, "pseudo_subset");
  result.space = FilterPseudoLabels(LabelSpace(std::move(spec), EmbeddingMatrix(std::move(all), true)),
                                    filter);
  return result;
}

}  // namespace tagood
