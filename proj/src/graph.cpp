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

#include "tagood/graph.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "tagood/error.hpp"
#include "tagood/io.hpp"
#include "tagood/text.hpp"

namespace tagood {

using nlohmann::json;

TextAttributedGraph TextAttributedGraph::Build(std::size_t node_count, std::span<const Edge> edges,
                                               std::vector<std::string> texts,
                                               std::vector<std::optional<ClassId>> gold,
                                               bool input_directed) {
  if (texts.size() != node_count) {
    throw InputError("texts length " + std::to_string(texts.size()) + " != node count " +
                     std::to_string(node_count));
  }
  if (!gold.empty() && gold.size() != node_count) {
    throw InputError("class list length " + std::to_string(gold.size()) + " != node count " +
                     std::to_string(node_count));
  }
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (!IsValidUtf8(texts[i])) throw InputError("non-UTF-8 text at node " + std::to_string(i));
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] && *gold[i] < 0) throw InputError("negative class id at node " + std::to_string(i));
  }

  const auto n = static_cast<NodeId>(node_count);
  std::vector<Edge> both;
  both.reserve(2 * edges.size());
  for (const auto& [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n) {
      throw InputError("dangling endpoint in edge (" + std::to_string(u) + "," +
                       std::to_string(v) + ") with " + std::to_string(node_count) + " nodes");
    }
    if (u == v) continue;
    both.emplace_back(u, v);
    both.emplace_back(v, u);
  }
  std::sort(both.begin(), both.end());
  both.erase(std::unique(both.begin(), both.end()), both.end());

  TextAttributedGraph g;
  g.adjacency_.offsets.assign(node_count + 1, 0);
  g.adjacency_.columns.reserve(both.size());
  for (const auto& [u, v] : both) {
    ++g.adjacency_.offsets[static_cast<std::size_t>(u) + 1];
    g.adjacency_.columns.push_back(v);
  }
  for (std::size_t i = 0; i < node_count; ++i) {
    g.adjacency_.offsets[i + 1] += g.adjacency_.offsets[i];
  }
  g.texts_ = std::move(texts);
  g.gold_ = std::move(gold);
  g.input_directed_ = input_directed;
  return g;
}

std::span<const NodeId> TextAttributedGraph::neighbors(NodeId v) const {
  if (v < 0 || static_cast<std::size_t>(v) >= node_count()) {
    throw InputError("node id " + std::to_string(v) + " out of range");
  }
  const auto b = static_cast<std::size_t>(adjacency_.offsets[static_cast<std::size_t>(v)]);
  const auto e = static_cast<std::size_t>(adjacency_.offsets[static_cast<std::size_t>(v) + 1]);
  return std::span<const NodeId>(adjacency_.columns).subspan(b, e - b);
}

std::vector<ClassId> TextAttributedGraph::observed_classes() const {
  std::set<ClassId> seen;
  for (const auto& c : gold_) {
    if (c) seen.insert(*c);
  }
  return {seen.begin(), seen.end()};
}

void TextAttributedGraph::set_external_ids(std::vector<std::string> ids) {
  if (!ids.empty() && ids.size() != node_count()) {
    throw InputError("external id mapping size mismatch");
  }
  external_ids_ = std::move(ids);
}

namespace {

const json& RequireField(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw InputError("schema violation: missing field \"" + std::string(key) + "\" in " + where);
  }
  return obj.at(key);
}

NodeId ParseIndex(std::string_view token, const std::string& where) {
  NodeId value = 0;
  const auto* end = token.data() + token.size();
  const auto res = std::from_chars(token.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw InputError("expected base-10 integer, got \"" + std::string(token) + "\" at " + where);
  }
  return value;
}

}  // namespace

TextAttributedGraph ParseGraphJson(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("graph JSON parse error: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("schema violation: top level must be an object");
  const json& nodes = RequireField(doc, "nodes", "graph");
  const json& edges = RequireField(doc, "edges", "graph");
  const json& directed = RequireField(doc, "directed", "graph");
  if (!nodes.is_array()) throw InputError("schema violation: \"nodes\" must be an array");
  if (!edges.is_array()) throw InputError("schema violation: \"edges\" must be an array");
  if (!directed.is_boolean()) throw InputError("schema violation: \"directed\" must be a bool");

  const std::size_t n = nodes.size();
  bool int_ids = true;
  bool str_ids = true;
  for (std::size_t i = 0; i < n; ++i) {
    const json& id = RequireField(nodes[i], "id", "nodes[" + std::to_string(i) + "]");
    int_ids = int_ids && id.is_number_integer();
    str_ids = str_ids && id.is_string();
  }
  if (n > 0 && !int_ids && !str_ids) {
    throw InputError("schema violation: node ids must be all integers or all strings");
  }

  // External id -> position in `nodes`, then a dense order over positions.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (int_ids) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return nodes[a]["id"].get<std::int64_t>() < nodes[b]["id"].get<std::int64_t>();
    });
  }
  std::unordered_map<std::string, NodeId> dense_of;
  std::vector<std::string> external(n);
  std::vector<std::string> texts(n);
  std::vector<std::optional<ClassId>> gold(n);
  bool any_class = false;
  for (std::size_t d = 0; d < n; ++d) {
    const json& node = nodes[order[d]];
    const std::string where = "nodes[" + std::to_string(order[d]) + "]";
    const json& id = node["id"];
    external[d] = id.is_string() ? id.get<std::string>() : std::to_string(id.get<std::int64_t>());
    if (!dense_of.emplace(external[d], static_cast<NodeId>(d)).second) {
      throw InputError("schema violation: duplicate node id " + external[d]);
    }
    const json& text = RequireField(node, "text", where);
    if (!text.is_string()) throw InputError("schema violation: \"text\" must be a string in " + where);
    texts[d] = text.get<std::string>();
    if (node.contains("class") && !node["class"].is_null()) {
      if (!node["class"].is_number_integer()) {
        throw InputError("schema violation: \"class\" must be int or null in " + where);
      }
      gold[d] = node["class"].get<ClassId>();
      any_class = true;
    }
  }

  std::vector<TextAttributedGraph::Edge> edge_list;
  edge_list.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const json& e = edges[i];
    if (!e.is_array() || e.size() != 2) {
      throw InputError("schema violation: edges[" + std::to_string(i) + "] must be a pair");
    }
    NodeId ends[2];
    for (int k = 0; k < 2; ++k) {
      std::string key;
      if (int_ids && e[k].is_number_integer()) {
        key = std::to_string(e[k].get<std::int64_t>());
      } else if (str_ids && e[k].is_string()) {
        key = e[k].get<std::string>();
      } else {
        throw InputError("schema violation: edges[" + std::to_string(i) + "] endpoint type");
      }
      auto it = dense_of.find(key);
      if (it == dense_of.end()) {
        throw InputError("dangling endpoint " + key + " in edges[" + std::to_string(i) + "]");
      }
      ends[k] = it->second;
    }
    edge_list.emplace_back(ends[0], ends[1]);
  }

  auto g = TextAttributedGraph::Build(n, edge_list, std::move(texts),
                                      any_class ? std::move(gold) : std::vector<std::optional<ClassId>>{},
                                      directed.get<bool>());
  g.set_external_ids(std::move(external));
  return g;
}

TextAttributedGraph LoadGraphJson(const std::filesystem::path& path) {
  return ParseGraphJson(ReadFile(path));
}

TextAttributedGraph LoadGraphEdgeList(const std::filesystem::path& edges_path,
                                      const std::filesystem::path& texts_path,
                                      const std::optional<std::filesystem::path>& classes_path) {
  std::vector<std::string> texts = SplitLines(ReadFile(texts_path));
  const std::size_t n = texts.size();

  std::vector<TextAttributedGraph::Edge> edges;
  const auto edge_lines = SplitLines(ReadFile(edges_path));
  for (std::size_t i = 0; i < edge_lines.size(); ++i) {
    const std::string line = Trim(edge_lines[i]);
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ss(line);
    std::string a, b, extra;
    const std::string where = edges_path.string() + ":" + std::to_string(i + 1);
    if (!(ss >> a >> b) || (ss >> extra)) {
      throw InputError("schema violation: expected \"u v\" at " + where);
    }
    edges.emplace_back(ParseIndex(a, where), ParseIndex(b, where));
  }

  std::vector<std::optional<ClassId>> gold;
  if (classes_path) {
    const auto lines = SplitLines(ReadFile(*classes_path));
    if (lines.size() != n) {
      throw InputError("schema violation: classes file has " + std::to_string(lines.size()) +
                       " lines for " + std::to_string(n) + " nodes");
    }
    gold.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string t = Trim(lines[i]);
      if (t.empty() || t == "null") continue;
      gold[i] = ParseIndex(t, classes_path->string() + ":" + std::to_string(i + 1));
    }
  }
  return TextAttributedGraph::Build(n, edges, std::move(texts), std::move(gold), true);
}

TextAttributedGraph LoadGraph(const std::filesystem::path& path, GraphFormat format,
                              const std::optional<std::filesystem::path>& texts_path,
                              const std::optional<std::filesystem::path>& classes_path) {
  switch (format) {
    case GraphFormat::kJson:
      return LoadGraphJson(path);
    case GraphFormat::kEdgeList:
      if (!texts_path) throw InputError("edge-list format requires a texts file");
      return LoadGraphEdgeList(path, *texts_path, classes_path);
  }
  throw InputError("unknown graph format");
}

std::string SerializeGraphJson(const TextAttributedGraph& g) {
  json nodes = json::array();
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    json node = {{"id", static_cast<std::int64_t>(i)}, {"text", g.texts()[i]}};
    if (g.has_gold() && g.gold_class()[i]) {
      node["class"] = *g.gold_class()[i];
    } else {
      node["class"] = nullptr;
    }
    nodes.push_back(std::move(node));
  }
  json edges = json::array();
  for (std::size_t u = 0; u < g.node_count(); ++u) {
    for (NodeId v : g.neighbors(static_cast<NodeId>(u))) {
      if (static_cast<NodeId>(u) < v) edges.push_back({static_cast<NodeId>(u), v});
    }
  }
  json doc = {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"directed", false}};
  return doc.dump(1) + "\n";
}

std::string SerializeIdMapping(const TextAttributedGraph& g) {
  std::string out = "dense_id,external_id\n";
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    out += std::to_string(i) + "," +
           (g.external_ids().empty() ? std::to_string(i) : g.external_ids()[i]) + "\n";
  }
  return out;
}

std::vector<NodeId> KHopMembers(const TextAttributedGraph& g, NodeId center, int hops) {
  if (center < 0 || static_cast<std::size_t>(center) >= g.node_count()) {
    throw InputError("node id " + std::to_string(center) + " out of range");
  }
  if (hops < 0) throw InputError("hop count must be >= 0");
  std::vector<char> seen(g.node_count(), 0);
  std::vector<NodeId> members{center};
  seen[static_cast<std::size_t>(center)] = 1;
  std::size_t frontier_begin = 0;
  for (int depth = 0; depth < hops; ++depth) {
    const std::size_t frontier_end = members.size();
    if (frontier_begin == frontier_end) break;
    for (std::size_t i = frontier_begin; i < frontier_end; ++i) {
      for (NodeId w : g.neighbors(members[i])) {
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          members.push_back(w);
        }
      }
    }
    frontier_begin = frontier_end;
  }
  std::sort(members.begin(), members.end());
  return members;
}

SubgraphView KHopNeighborhood(const TextAttributedGraph& g, NodeId center, int hops,
                              const RowMatrixXd* positional) {
  SubgraphView view;
  view.center = center;
  view.members = KHopMembers(g, center, hops);

  std::unordered_map<NodeId, std::int64_t> local;
  for (std::size_t i = 0; i < view.members.size(); ++i) {
    local.emplace(view.members[i], static_cast<std::int64_t>(i));
  }
  view.induced.offsets.assign(view.members.size() + 1, 0);
  for (std::size_t i = 0; i < view.members.size(); ++i) {
    // Global neighbor lists are ascending and `members` is ascending, so the
    // local lists come out ascending too.
    for (NodeId w : g.neighbors(view.members[i])) {
      auto it = local.find(w);
      if (it != local.end()) view.induced.columns.push_back(it->second);
    }
    view.induced.offsets[i + 1] = static_cast<std::int64_t>(view.induced.columns.size());
  }

  if (positional != nullptr) {
    if (static_cast<std::size_t>(positional->rows()) != g.node_count()) {
      throw InputError("positional encodings must have one row per node");
    }
    RowMatrixXd pe(static_cast<Eigen::Index>(view.members.size()), positional->cols());
    for (std::size_t i = 0; i < view.members.size(); ++i) {
      pe.row(static_cast<Eigen::Index>(i)) = positional->row(view.members[i]);
    }
    view.positional_encoding = std::move(pe);
  }
  return view;
}

bool ClassSplit::is_id(ClassId c) const {
  return std::find(id_class_ids.begin(), id_class_ids.end(), c) != id_class_ids.end();
}

bool ClassSplit::is_ood(ClassId c) const {
  return std::find(ood_class_ids.begin(), ood_class_ids.end(), c) != ood_class_ids.end();
}

ClassSplit SplitClasses(const TextAttributedGraph& g, const std::vector<ClassId>& id_class_ids) {
  if (!g.has_gold()) throw InputError("class split requires gold class labels");
  if (id_class_ids.size() < ClassSplit::kMinIdClasses) {
    throw InputError("at least " + std::to_string(ClassSplit::kMinIdClasses) +
                     " ID classes are required, got " + std::to_string(id_class_ids.size()));
  }
  const std::vector<ClassId> observed = g.observed_classes();
  std::set<ClassId> id_set;
  for (ClassId c : id_class_ids) {
    if (!std::binary_search(observed.begin(), observed.end(), c)) {
      throw InputError("unknown class id " + std::to_string(c));
    }
    if (!id_set.insert(c).second) throw InputError("duplicate ID class id " + std::to_string(c));
  }
  ClassSplit split;
  split.id_class_ids = id_class_ids;
  for (ClassId c : observed) {
    if (!id_set.count(c)) split.ood_class_ids.push_back(c);
  }
  return split;
}

}  // namespace tagood
