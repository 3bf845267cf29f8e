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

#ifndef TAGOOD_GRAPH_HPP_
#define TAGOOD_GRAPH_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tagood/types.hpp"

namespace tagood {

struct CsrAdjacency {
  std::vector<std::int64_t> offsets;  // size n+1, offsets[0] == 0
  std::vector<NodeId> columns;
};

// Undirected text-attributed graph. Immutable once built; neighbor lists are
// sorted ascending, deduplicated and free of self-loops.
class TextAttributedGraph {
 public:
  using Edge = std::pair<NodeId, NodeId>;

  TextAttributedGraph() = default;

  // Builds and validates. Every edge is symmetrized regardless of
  // `input_directed`; the flag only records how the source described itself.
  // `gold` is empty or has one entry per node (nullopt for unlabeled nodes).
  static TextAttributedGraph Build(std::size_t node_count, std::span<const Edge> edges,
                                   std::vector<std::string> texts,
                                   std::vector<std::optional<ClassId>> gold = {},
                                   bool input_directed = false);

  std::size_t node_count() const { return texts_.size(); }
  std::size_t edge_count() const { return adjacency_.columns.size() / 2; }
  const CsrAdjacency& adjacency() const { return adjacency_; }
  std::span<const NodeId> neighbors(NodeId v) const;
  std::size_t degree(NodeId v) const { return neighbors(v).size(); }

  const std::vector<std::string>& texts() const { return texts_; }
  const std::string& text(NodeId v) const { return texts_.at(static_cast<std::size_t>(v)); }

  bool has_gold() const { return !gold_.empty(); }
  const std::vector<std::optional<ClassId>>& gold_class() const { return gold_; }
  // Distinct non-null gold classes, ascending.
  std::vector<ClassId> observed_classes() const;

  bool input_directed() const { return input_directed_; }

  // External id for each dense node id, as read from the source file.
  const std::vector<std::string>& external_ids() const { return external_ids_; }
  void set_external_ids(std::vector<std::string> ids);

 private:
  CsrAdjacency adjacency_;
  std::vector<std::string> texts_;
  std::vector<std::optional<ClassId>> gold_;
  std::vector<std::string> external_ids_;
  bool input_directed_ = false;
};

enum class GraphFormat { kJson, kEdgeList };

// JSON schema: {"nodes": [{"id", "text", "class"}], "edges": [[u, v]], "directed": bool}.
// Integer ids are mapped to dense ids in ascending order; string ids in order
// of appearance.
TextAttributedGraph ParseGraphJson(const std::string& json_text);
TextAttributedGraph LoadGraphJson(const std::filesystem::path& path);

// One "u v" pair per line, texts one line per node, optional classes file
// with one integer (or empty / "null") per line. Ids are already dense.
TextAttributedGraph LoadGraphEdgeList(const std::filesystem::path& edges_path,
                                      const std::filesystem::path& texts_path,
                                      const std::optional<std::filesystem::path>& classes_path = {});

TextAttributedGraph LoadGraph(const std::filesystem::path& path, GraphFormat format,
                              const std::optional<std::filesystem::path>& texts_path = {},
                              const std::optional<std::filesystem::path>& classes_path = {});

// Canonical JSON: dense ids, edges (u < v) ascending, "directed": false.
std::string SerializeGraphJson(const TextAttributedGraph& g);
// "dense_id,external_id" lines with a header.
std::string SerializeIdMapping(const TextAttributedGraph& g);

struct SubgraphView {
  NodeId center = 0;
  std::vector<NodeId> members;  // ascending global ids
  CsrAdjacency induced;         // over local indices into `members`
  std::optional<RowMatrixXd> positional_encoding;  // one row per member
};

// Nodes within `hops` of `center`. Positional encodings, when supplied, are
// sliced to the members and passed through untouched.
SubgraphView KHopNeighborhood(const TextAttributedGraph& g, NodeId center, int hops,
                              const RowMatrixXd* positional = nullptr);

// Members only; the hot path for mean pooling.
std::vector<NodeId> KHopMembers(const TextAttributedGraph& g, NodeId center, int hops);

struct ClassSplit {
  std::vector<ClassId> id_class_ids;
  std::vector<ClassId> ood_class_ids;

  static constexpr std::size_t kMinIdClasses = 3;

  bool is_id(ClassId c) const;
  bool is_ood(ClassId c) const;
};

// OOD classes are the observed gold classes not listed as ID, ascending.
ClassSplit SplitClasses(const TextAttributedGraph& g, const std::vector<ClassId>& id_class_ids);

}  // namespace tagood

#endif  // TAGOOD_GRAPH_HPP_
