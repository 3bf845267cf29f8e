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

#include <doctest.h>

#include <algorithm>
#include <deque>
#include <set>

#include "tagood/error.hpp"
#include "tagood/io.hpp"
#include "tagood/pseudo_ood.hpp"
#include "tagood/random.hpp"
#include "tagood/synth.hpp"
#include "tagood/text.hpp"
#include "test_util.hpp"

using namespace tagood;
using testutil::Catch;

namespace {

// Answers from a queue and remembers what it was asked.
class ScriptedClient : public LlmClient {
 public:
  explicit ScriptedClient(std::deque<std::string> answers) : answers_(std::move(answers)) {}
  std::string Complete(const std::string& tag, const std::string& prompt) override {
    tags.push_back(tag);
    prompts.push_back(prompt);
    if (answers_.empty()) throw ExternalError("script exhausted");
    std::string a = answers_.front();
    answers_.pop_front();
    return a;
  }
  std::vector<std::string> tags;
  std::vector<std::string> prompts;

 private:
  std::deque<std::string> answers_;
};

std::string Golden(const std::string& name) {
  return testutil::Slurp(std::filesystem::path(TAGOOD_GOLDEN_DIR) / name);
}

const std::vector<std::string> kCoraIds = {"Case Based", "Genetic Algorithms", "Neural Networks"};

TextAttributedGraph Chain(std::size_t n) {
  std::vector<TextAttributedGraph::Edge> edges;
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < n; ++i) {
    texts.push_back("node " + std::to_string(i));
    if (i + 1 < n) edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(i + 1));
  }
  return TextAttributedGraph::Build(n, edges, texts);
}

}  // namespace

TEST_CASE("annotation prompts match the golden files") {
  CHECK(RenderAnnotationPrompt("Evolving neural network controllers with a genetic search over weights.",
                               kCoraIds, "", PromptTemplate::kCora) == Golden("cora_annotation.txt"));
  CHECK(RenderAnnotationPrompt("Query optimization for relational databases using cost models.",
                               {"Agents", "AI", "DB"}, "", PromptTemplate::kCiteseerGeneral) ==
        Golden("citeseer_general_annotation.txt"));
  CHECK(RenderAnnotationPrompt("A journaling file system records pending changes before committing them.",
                               {"Computational linguistics", "Databases", "Operating systems"}, "",
                               PromptTemplate::kWikiCs) == Golden("wiki_cs_annotation.txt"));
  CHECK(RenderAnnotationPrompt("Wireless mouse with an ergonomic grip and a silent scroll wheel.",
                               {"Laptops", "Monitors", "Computer Accessories"}, "",
                               PromptTemplate::kEleComputers) == Golden("ele_computers_annotation.txt"));
  CHECK(RenderClusteringPrompt({"Mouse", "Keyboard", "Webcam", "Headphones"}, 2,
                               {"Laptops", "Monitors", "Computer Accessories"}) == Golden("clustering.txt"));
}

TEST_CASE("prompt details") {
  const std::string cora = RenderAnnotationPrompt("x", kCoraIds, "", PromptTemplate::kCora);
  CHECK(cora.find("single most appropriate class name of a machine learning-related topic") != std::string::npos);
  const std::string ele = RenderAnnotationPrompt("x", kCoraIds, "", PromptTemplate::kEleComputers);
  CHECK(ele.find("electronic product commonly seen") != std::string::npos);
  const std::string general = RenderAnnotationPrompt("x", kCoraIds, "", PromptTemplate::kCiteseerGeneral);
  CHECK(general.find("Dataset description") == std::string::npos);
  const std::string blurb = RenderAnnotationPrompt("x", kCoraIds, "A custom corpus.", PromptTemplate::kCiteseerGeneral);
  CHECK(blurb.find("Dataset description:\nA custom corpus.\n\n") != std::string::npos);

  CHECK(Catch([] { RenderAnnotationPrompt("  \n", kCoraIds, "", PromptTemplate::kCora); }).kind == ErrorKind::kInput);
  CHECK(Catch([] { RenderAnnotationPrompt("x", {}, "", PromptTemplate::kCora); }).thrown);
  CHECK(Catch([] { RenderClusteringPrompt({"a", "b"}, 3, kCoraIds); }).thrown);
  CHECK(Catch([] { RenderClusteringPrompt({"a", "b"}, 0, kCoraIds); }).thrown);
  CHECK(ParsePromptTemplate("wiki_cs") == PromptTemplate::kWikiCs);
  CHECK(Catch([] { ParsePromptTemplate("pubmed"); }).thrown);

  const auto parsed = ParseAnnotationPrompt(cora);
  REQUIRE(parsed);
  CHECK(parsed->node_text == "x");
  CHECK(parsed->id_names == kCoraIds);
  CHECK_FALSE(ParseAnnotationPrompt("hello"));
}

TEST_CASE("annotation node sampling") {
  const auto g = Chain(100);
  SUBCASE("count equal to n returns every node") {
    const auto all = SampleAnnotationNodes(Chain(12), 12, 3);
    std::vector<NodeId> expect(12);
    for (int i = 0; i < 12; ++i) expect[static_cast<std::size_t>(i)] = i;
    CHECK(all == expect);
  }
  SUBCASE("80 distinct ascending nodes, deterministic") {
    const auto a = SampleAnnotationNodes(g, 80, 11);
    CHECK(a.size() == 80);
    CHECK(std::set<NodeId>(a.begin(), a.end()).size() == 80);
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(a == SampleAnnotationNodes(g, 80, 11));
    CHECK(a != SampleAnnotationNodes(g, 80, 12));
  }
  SUBCASE("pinned draw") {
    // Sorted form of SampleWithoutReplacement(10, 4, Rng(42)) = [6, 0, 4, 7].
    CHECK(SampleAnnotationNodes(Chain(10), 4, 42) == std::vector<NodeId>{0, 4, 6, 7});
  }
  SUBCASE("too many") {
    CHECK(Catch([&] { SampleAnnotationNodes(g, 101, 0); }).kind == ErrorKind::kInput);
  }
}

TEST_CASE("annotation decisions") {
  SUBCASE("exact ID name") {
    ScriptedClient c({"Neural Networks"});
    const auto r = Annotate(c, 4, "p", kCoraIds);
    CHECK(r.decision == AnnotationDecision{MatchedId{2}});
    CHECK(c.tags == std::vector<std::string>{"annotate/4"});
    CHECK(r.prompt_fingerprint == Sha256Hex("p"));
  }
  SUBCASE("case and trailing punctuation still match") {
    ScriptedClient c({"  genetic algorithms.\n"});
    CHECK(Annotate(c, 0, "p", kCoraIds).decision == AnnotationDecision{MatchedId{1}});
  }
  SUBCASE("new name is generated OOD") {
    ScriptedClient c({"Computer Vision"});
    const auto r = Annotate(c, 1, "p", kCoraIds);
    CHECK(r.decision == AnnotationDecision{GeneratedOod{"Computer Vision"}});
    CHECK(r.raw_response == "Computer Vision");
  }
  SUBCASE("another ID list") {
    ScriptedClient c({"Databases."});
    CHECK(Annotate(c, 1, "p", {"Operating systems", "Databases"}).decision == AnnotationDecision{MatchedId{1}});
  }
  SUBCASE("multi-line answer is re-prompted once") {
    ScriptedClient c({"Let me think.\nRobotics", "Robotics"});
    const auto r = Annotate(c, 9, "p", kCoraIds);
    CHECK(r.decision == AnnotationDecision{GeneratedOod{"Robotics"}});
    CHECK(c.tags == std::vector<std::string>{"annotate/9", "annotate/9/retry"});
    CHECK(c.prompts[1] == "p" + SingleLineReminder());
  }
  SUBCASE("still multi-line after the re-prompt") {
    ScriptedClient c({"a\nb", "c\nd"});
    const auto e = Catch([&] { Annotate(c, 2, "p", kCoraIds); });
    CHECK(e.kind == ErrorKind::kExternal);
    CHECK(e.what.find("multiple lines") != std::string::npos);
  }
  SUBCASE("empty answer") {
    ScriptedClient c({"   \n\n"});
    CHECK(Catch([&] { Annotate(c, 2, "p", kCoraIds); }).kind == ErrorKind::kExternal);
  }
  SUBCASE("record JSON round trip") {
    ScriptedClient c({"Robotics"});
    const auto r = Annotate(c, 3, "p", kCoraIds);
    CHECK(AnnotationRecord::FromJson(r.ToJson()) == r);
    AnnotationRecord m{5, MatchedId{1}, "Genetic Algorithms", "abc"};
    CHECK(AnnotationRecord::FromJson(m.ToJson()) == m);
  }
}

TEST_CASE("harvesting generated names") {
  auto rec = [](std::string name) { return AnnotationRecord{0, GeneratedOod{std::move(name)}, "", ""}; };
  const std::vector<AnnotationRecord> recs = {rec("Robotics"), rec("robotics"), rec("NLP"),
                                              AnnotationRecord{1, MatchedId{0}, "", ""}};
  CHECK(HarvestPseudoLabels(recs) == std::vector<std::string>{"Robotics", "NLP"});
  // Frequency first, then name key.
  CHECK(HarvestPseudoLabels({rec("b"), rec("a"), rec("c"), rec("c")}) == std::vector<std::string>{"c", "a", "b"});
  CHECK(HarvestPseudoLabels({}).empty());
}

TEST_CASE("cluster responses") {
  const auto parsed = ParseClusterResponse("Answer:\n1. **Input Devices**: Mice and keyboards.\n- Audio: Headphones.\n");
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0] == LabelCluster{"Input Devices", "Mice and keyboards."});
  CHECK(parsed[1] == LabelCluster{"Audio", "Headphones."});
  CHECK(ParseClusterResponse("Alpha\nBeta\n").size() == 2);

  const std::vector<std::string> items = {"Mouse", "Keyboard", "Webcam"};
  SUBCASE("single cluster") {
    ScriptedClient c({"Peripherals: Things you plug in."});
    const auto out = ClusterLabels(c, items, 1, kCoraIds);
    CHECK(out == std::vector<LabelCluster>{{"Peripherals", "Things you plug in."}});
    CHECK(c.tags == std::vector<std::string>{"cluster"});
  }
  SUBCASE("an ID-named cluster triggers one re-prompt") {
    ScriptedClient c({"Neural Networks: x\nOther: y", "Input: x\nVideo: y"});
    const auto out = ClusterLabels(c, items, 2, kCoraIds);
    CHECK(out[0].name == "Input");
    REQUIRE(c.prompts.size() == 2);
    CHECK(c.tags[1] == "cluster/retry");
    CHECK(c.prompts[1].find("in-distribution class") != std::string::npos);
  }
  SUBCASE("wrong count twice is an error") {
    ScriptedClient c({"One: x", "One: x"});
    CHECK(Catch([&] { ClusterLabels(c, items, 2, kCoraIds); }).kind == ErrorKind::kExternal);
  }
}

TEST_CASE("mock LLM on a planted fixture") {
  SynthConfig cfg;
  cfg.seed = 4;
  const SynthFixture fx = SynthTag(cfg);
  MockLlmClient mock(fx.mock);

  PseudoLabelConfig pc;
  pc.annotation_count = 80;
  pc.seed = 4;
  pc.filter.max_id_similarity.reset();
  const auto encode = [&](const std::vector<std::string>& s) { return fx.bank.Lookup(s); };
  const auto result = GeneratePseudoLabels(fx.graph, fx.labels, mock, encode, pc);

  CHECK(result.records.size() == 80);
  CHECK(result.sampled == SampleAnnotationNodes(fx.graph, 80, DeriveSeed(4, "annotation_sample")));
  // Every generated name is planted, and each planted name shows up once
  // its class was sampled.
  const std::set<std::string> planted(fx.planted_pseudo_names.begin(), fx.planted_pseudo_names.end());
  std::set<std::string> sampled_ood;
  for (const auto& r : result.records) {
    const auto gold = fx.graph.gold_class()[static_cast<std::size_t>(r.node)];
    REQUIRE(gold);
    if (fx.split.is_ood(*gold)) {
      REQUIRE(std::holds_alternative<GeneratedOod>(r.decision));
      sampled_ood.insert(std::get<GeneratedOod>(r.decision).name);
    } else {
      REQUIRE(std::holds_alternative<MatchedId>(r.decision));
      CHECK(fx.labels.id_labels()[std::get<MatchedId>(r.decision).index].class_id == *gold);
    }
  }
  CHECK(std::set<std::string>(result.harvested.begin(), result.harvested.end()) == sampled_ood);
  for (const auto& n : sampled_ood) CHECK(planted.count(n) == 1);
  CHECK(sampled_ood.size() == planted.size());
  CHECK(result.space.HasOrigin(LabelOrigin::kLlmGenerated));
  CHECK(result.space.k_id() == fx.labels.k_id());

  SUBCASE("deterministic") {
    MockLlmClient again(fx.mock);
    const auto second = GeneratePseudoLabels(fx.graph, fx.labels, again, encode, pc);
    CHECK(second.records == result.records);
    CHECK(Fingerprint(second.space) == Fingerprint(result.space));
  }
  SUBCASE("clustering recovers the planted partition") {
    PseudoLabelConfig cc = pc;
    cc.num_clusters = fx.mock.clusters.size();
    MockLlmClient m2(fx.mock);
    const auto clustered = GeneratePseudoLabels(fx.graph, fx.labels, m2, encode, cc);
    REQUIRE(clustered.clusters.size() == fx.mock.clusters.size());
    for (std::size_t i = 0; i < fx.mock.clusters.size(); ++i) {
      CHECK(clustered.clusters[i].name == fx.mock.clusters[i].name);
    }
  }
}

TEST_CASE("mock table JSON and fallback answers") {
  MockTable t;
  t.seed = 9;
  t.rules = {{"robot", "Robotics"}};
  t.clusters = {{"Machines", "Robots.", {"Robotics"}}};
  CHECK(MockTable::FromJson(t.ToJson()).ToJson() == t.ToJson());
  CHECK(Catch([] { MockTable::FromJson(nlohmann::json::parse(R"({"rules":[{"keyword":1}]})")); }).kind ==
        ErrorKind::kInput);

  MockLlmClient a(t), b(t);
  const std::string p1 = RenderAnnotationPrompt("A ROBOT arm.", kCoraIds, "", PromptTemplate::kCora);
  CHECK(a.Complete("t", p1) == "Robotics");
  const std::string p2 = RenderAnnotationPrompt("Unrelated text.", kCoraIds, "", PromptTemplate::kCora);
  const std::string fallback = a.Complete("t", p2);
  CHECK(std::find(kCoraIds.begin(), kCoraIds.end(), fallback) != kCoraIds.end());
  CHECK(b.Complete("t", p2) == fallback);
  CHECK(Catch([&] { a.Complete("t", "gibberish"); }).kind == ErrorKind::kExternal);
}
