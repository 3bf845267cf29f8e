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

#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "tagood/embed.hpp"
#include "tagood/evaluation.hpp"
#include "tagood/io.hpp"
#include "tagood/label_space.hpp"
#include "tagood/synth.hpp"
#include "tagood/text.hpp"
#include "test_util.hpp"

using namespace tagood;
namespace fs = std::filesystem;
using testutil::Slurp;
using testutil::TempDir;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::Run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::string P(const fs::path& p) { return p.string(); }

// Synth fixture written by the CLI.
void Synth(const fs::path& dir, std::uint64_t seed, bool degenerate = false) {
  std::vector<std::string> args = {"synth", "--seed", std::to_string(seed), "--out", P(dir)};
  if (degenerate) args.push_back("--degenerate");
  const auto r = Cli(args);
  REQUIRE_MESSAGE(r.code == 0, r.err);
}

std::vector<std::string> Lines(const fs::path& p) { return SplitLines(Slurp(p)); }

std::map<std::string, double> MeanScoreBySide(const fs::path& csv, const SynthFixture& fx) {
  double id = 0, ood = 0;
  int nid = 0, nood = 0;
  const auto lines = Lines(csv);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::stringstream ss(lines[i]);
    std::string node, score;
    std::getline(ss, node, ',');
    std::getline(ss, score, ',');
    const auto gold = *fx.graph.gold_class()[std::stoul(node)];
    if (fx.split.is_id(gold)) {
      id += std::stod(score);
      ++nid;
    } else {
      ood += std::stod(score);
      ++nood;
    }
  }
  return {{"id", id / nid}, {"ood", ood / nood}};
}

class ScopedUnsetEnv {
 public:
  explicit ScopedUnsetEnv(const char* name) : name_(name) {
    if (const char* v = std::getenv(name)) saved_ = v;
    ::unsetenv(name);
  }
  ~ScopedUnsetEnv() {
    if (saved_) ::setenv(name_, saved_->c_str(), 1);
  }

 private:
  const char* name_;
  std::optional<std::string> saved_;
};

}  // namespace

TEST_CASE("ingest") {
  TempDir dir("cli-ingest");
  testutil::Write(dir / "in.json",
                  R"({"nodes": [{"id": "b", "text": "beta", "class": 1}, {"id": "a", "text": "alpha", "class": 0}],
                      "edges": [["a", "b"]], "directed": true})");
  auto r = Cli({"ingest", "--graph", P(dir / "in.json"), "--out", P(dir / "o1")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(dir / "o1" / "graph.json"));
  CHECK(fs::exists(dir / "o1" / "manifest_ingest.json"));
  CHECK(Slurp(dir / "o1" / "id_map.csv") == "dense_id,external_id\n0,b\n1,a\n");

  // Re-ingesting the canonical form is a fixed point.
  r = Cli({"ingest", "--graph", P(dir / "o1" / "graph.json"), "--out", P(dir / "o2")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  r = Cli({"ingest", "--graph", P(dir / "in.json"), "--out", P(dir / "o3")});
  CHECK(Slurp(dir / "o1" / "graph.json") == Slurp(dir / "o3" / "graph.json"));
  const auto g1 = LoadGraphJson(dir / "o1" / "graph.json");
  const auto g2 = LoadGraphJson(dir / "o2" / "graph.json");
  CHECK(g1.texts() == g2.texts());
  CHECK(g1.adjacency().columns == g2.adjacency().columns);

  SUBCASE("schema violation names the field") {
    testutil::Write(dir / "bad.json", R"({"nodes": [{"id": 0, "class": 0}], "edges": [], "directed": false})");
    const auto bad = Cli({"ingest", "--graph", P(dir / "bad.json"), "--out", P(dir / "o4")});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("\"text\"") != std::string::npos);
  }
  SUBCASE("missing file") {
    CHECK(Cli({"ingest", "--graph", P(dir / "nope.json"), "--out", P(dir / "o5")}).code == 2);
  }
  SUBCASE("unknown format and missing required flag") {
    CHECK(Cli({"ingest", "--graph", P(dir / "in.json"), "--format", "xml", "--out", P(dir / "o6")}).code == 2);
    CHECK(Cli({"ingest", "--graph", P(dir / "in.json")}).code == 2);
    CHECK(Cli({}).code == 2);
  }
}

TEST_CASE("genlabels, detect and eval on a synthetic fixture") {
  TempDir dir("cli-pipeline");
  const fs::path fix = dir / "fixture";
  Synth(fix, 3);
  SynthConfig cfg;
  cfg.seed = 3;
  const SynthFixture fx = SynthTag(cfg);
  const std::vector<std::string> node_inputs = {"--graph", P(fix / "graph.json"), "--features", P(fix / "features.gemb")};

  auto genlabels = [&](const fs::path& out, std::vector<std::string> extra) {
    std::vector<std::string> args = {"genlabels", "--graph", P(fix / "graph.json"), "--labels", P(fix / "labels.json"),
                                      "--bank", P(fix / "sentences.txt"), "--seed", "3", "--out", P(out)};
    args.insert(args.end(), extra.begin(), extra.end());
    return Cli(args);
  };

  const auto gen = genlabels(dir / "gen", {"--mock", "--mock-table", P(fix / "mock_table.json")});
  REQUIRE_MESSAGE(gen.code == 0, gen.err);
  const LabelSpace pseudo = LoadLabelSpace(dir / "gen" / "labels_pseudo.json");
  std::set<std::string> kept;
  for (const auto& l : pseudo.ood_labels()) {
    CHECK(l.origin == LabelOrigin::kLlmGenerated);
    kept.insert(l.name);
  }
  CHECK(kept == std::set<std::string>(fx.planted_pseudo_names.begin(), fx.planted_pseudo_names.end()));
  CHECK(Lines(dir / "gen" / "annotations.jsonl").size() == 80);
  CHECK(Lines(dir / "gen" / "transcript.jsonl").size() == 80);

  SUBCASE("replay is bit-identical") {
    const auto rep = genlabels(dir / "rep", {"--replay", P(dir / "gen" / "transcript.jsonl")});
    REQUIRE_MESSAGE(rep.code == 0, rep.err);
    CHECK(Slurp(dir / "rep" / "labels_pseudo.json") == Slurp(dir / "gen" / "labels_pseudo.json"));
    CHECK(Slurp(dir / "rep" / "labels_pseudo.gemb") == Slurp(dir / "gen" / "labels_pseudo.gemb"));
    CHECK(Slurp(dir / "rep" / "annotations.jsonl") == Slurp(dir / "gen" / "annotations.jsonl"));
    CHECK_FALSE(fs::exists(dir / "rep" / "transcript.jsonl"));
  }
  SUBCASE("live mode without a key fails before any work") {
    ScopedUnsetEnv unset("LLM_API_KEY");
    const auto live = genlabels(dir / "live", {});
    CHECK(live.code == 3);
    CHECK(live.err.find("LLM_API_KEY") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "live" / "transcript.jsonl"));
  }
  SUBCASE("mock and replay together") {
    CHECK(genlabels(dir / "both", {"--mock", "--replay", "x"}).code == 3);
  }

  auto detect = [&](const std::string& labels, const std::string& regime, const std::string& scorer) {
    std::vector<std::string> args = {"detect", "--labels", labels, "--regime", regime, "--scorer", scorer,
                                      "--out", P(dir / "det")};
    args.insert(args.end(), node_inputs.begin(), node_inputs.end());
    return Cli(args);
  };

  SUBCASE("detect and eval") {
    auto r = detect(P(fix / "labels.json"), "all_labels", "sum_id");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const fs::path sum_id = dir / "det" / "scores_all_labels_sum_id.csv";
    CHECK(Lines(sum_id).size() == fx.graph.node_count() + 1);
    CHECK(Lines(sum_id)[0] == "node_id,raw_score,scorer,regime");
    auto means = MeanScoreBySide(sum_id, fx);
    CHECK(means["ood"] > means["id"]);
    CHECK(fs::exists(dir / "det" / "manifest_detect_all_labels_sum_id.json"));

    r = detect(P(fix / "labels.json"), "id_only", "msp");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    means = MeanScoreBySide(dir / "det" / "scores_id_only_msp.csv", fx);
    CHECK(means["ood"] > means["id"]);

    r = detect(P(dir / "gen" / "labels_pseudo.json"), "pseudo_ood", "sum_id");
    REQUIRE_MESSAGE(r.code == 0, r.err);

    // sum_id is defined but constant without OOD labels; the gap scorers refuse.
    r = detect(P(fix / "labels.json"), "id_only", "sum_id");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    for (std::size_t i = 1; i < 5; ++i) CHECK(Lines(dir / "det" / "scores_id_only_sum_id.csv")[i].find(",0,sum_id,") != std::string::npos);
    r = detect(P(fix / "labels.json"), "id_only", "sum_gap");
    CHECK(r.code == 4);
    r = detect(P(fix / "labels.json"), "pseudo_ood", "sum_id");
    CHECK(r.code == 4);
    CHECK(r.err.find("run genlabels first") != std::string::npos);
    r = detect(P(fix / "labels.json"), "all_labels", "bogus");
    CHECK(r.code != 0);

    std::vector<std::string> ev = {"eval", "--labels", P(fix / "labels.json"), "--scores", P(sum_id),
                                   "--scores", P(dir / "det" / "scores_id_only_msp.csv"),
                                   "--scores", P(dir / "det" / "scores_pseudo_ood_sum_id.csv"),
                                   "--seed", "3", "--out", P(dir / "ev")};
    ev.insert(ev.end(), node_inputs.begin(), node_inputs.end());
    r = Cli(ev);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.err.find("warning:") != std::string::npos);  // pools smaller than 500
    const auto report = nlohmann::json::parse(Slurp(dir / "ev" / "eval_report.json"));
    REQUIRE(report.size() == 3);
    for (const auto& j : report) {
      const auto rep = EvalReport::FromJson(j);
      CHECK(rep.auroc > 0.5);
      CHECK(rep.n_id == 180);
      CHECK(rep.n_ood == 240);
    }
    CHECK(Lines(dir / "ev" / "results.csv").size() == 4);

    // Folding an earlier report back in appends its rows.
    r = Cli({"eval", "--merge", P(dir / "ev" / "eval_report.json"), "--merge", P(dir / "ev" / "eval_report.json"),
             "--out", P(dir / "ev2")});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto csv = Lines(dir / "ev2" / "results.csv");
    REQUIRE(csv.size() == 4);
    CHECK(csv[1].starts_with("all_labels,sum_id,2,"));
  }
  SUBCASE("config file precedence") {
    testutil::Write(dir / "cfg.json", R"({"regime": "id_only", "scorer": "msp", "tau": 0.5})");
    std::vector<std::string> args = {"detect", "--config", P(dir / "cfg.json"), "--labels", P(fix / "labels.json"),
                                      "--scorer", "energy", "--out", P(dir / "cfgout")};
    args.insert(args.end(), node_inputs.begin(), node_inputs.end());
    const auto r = Cli(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(fs::exists(dir / "cfgout" / "scores_id_only_energy.csv"));
    CHECK_FALSE(fs::exists(dir / "cfgout" / "scores_id_only_msp.csv"));
    const auto manifest = nlohmann::json::parse(Slurp(dir / "cfgout" / "manifest_detect_id_only_energy.json"));
    CHECK(manifest.at("config").get<std::string>().find("tau=0.5") != std::string::npos);

    testutil::Write(dir / "bad_cfg.json", "[1, 2]");
    args[2] = P(dir / "bad_cfg.json");
    CHECK(Cli(args).code == 2);
  }
  SUBCASE("a held lock refuses the run") {
    {
      OutputDirLock lock(dir / "locked");
      const auto r = detect(P(fix / "labels.json"), "all_labels", "sum_id");
      CHECK(r.code == 0);
      std::vector<std::string> args = {"detect", "--labels", P(fix / "labels.json"), "--out", P(dir / "locked")};
      args.insert(args.end(), node_inputs.begin(), node_inputs.end());
      const auto locked = Cli(args);
      CHECK(locked.code == 3);
      CHECK(locked.err.find("locked") != std::string::npos);
    }
    CHECK_FALSE(fs::exists(dir / "det" / ".tagood.lock"));
  }
}

TEST_CASE("eval on the noise-free fixture is perfect") {
  TempDir dir("cli-perfect");
  const fs::path fix = dir / "fixture";
  Synth(fix, 0, true);
  const std::vector<std::string> nodes = {"--graph", P(fix / "graph.json"), "--features", P(fix / "features.gemb")};
  std::vector<std::string> det = {"detect", "--labels", P(fix / "labels.json"), "--out", P(dir / "det")};
  det.insert(det.end(), nodes.begin(), nodes.end());
  auto r = Cli(det);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::vector<std::string> ev = {"eval", "--labels", P(fix / "labels.json"), "--scores",
                                 P(dir / "det" / "scores_all_labels_sum_id.csv"), "--out", P(dir / "ev")};
  ev.insert(ev.end(), nodes.begin(), nodes.end());
  r = Cli(ev);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto rep = EvalReport::FromJson(nlohmann::json::parse(Slurp(dir / "ev" / "eval_report.json")).at(0));
  CHECK(rep.acc == 1.0);
  CHECK(rep.auroc == 1.0);
  CHECK(rep.aupr == 1.0);
  CHECK(rep.fpr95 == 0.0);

  SUBCASE("an ID block covering every class leaves no OOD pool") {
    const SynthFixture fx = SynthTag(SynthConfig::Degenerate(0));
    std::vector<IdClassName> ids;
    for (std::size_t c = 0; c < fx.class_names.size(); ++c) ids.push_back({static_cast<ClassId>(c), fx.class_names[c]});
    const LabelSpace all_id = BuildLabelSpace(ids, {}, {}, fx.centroids);
    SaveLabelSpace(dir / "all_id.json", all_id);
    ev[2] = P(dir / "all_id.json");
    r = Cli(ev);
    CHECK(r.code == 2);
    CHECK(r.err.find("OOD pool is empty") != std::string::npos);
  }
  SUBCASE("eval with nothing to do") {
    CHECK(Cli({"eval", "--out", P(dir / "none")}).code == 3);
  }
}

TEST_CASE("viz") {
  TempDir dir("cli-viz");
  const fs::path fix = dir / "fixture";
  Synth(fix, 2);
  auto r = Cli({"genlabels", "--graph", P(fix / "graph.json"), "--labels", P(fix / "labels.json"), "--bank",
                P(fix / "sentences.txt"), "--mock", "--mock-table", P(fix / "mock_table.json"), "--seed", "2", "--out",
                P(dir / "gen")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  r = Cli({"viz", "--labels", P(fix / "labels.json"), "--labels", P(dir / "gen" / "labels_pseudo.json"), "--out",
           P(dir / "viz")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const LabelSpace a = LoadLabelSpace(fix / "labels.json");
  const LabelSpace b = LoadLabelSpace(dir / "gen" / "labels_pseudo.json");
  const auto rows = Lines(dir / "viz" / "label_coords.csv");
  CHECK(rows[0] == "label,origin,x,y");
  CHECK(rows.size() == 1 + a.size() + b.k_ood());
  CHECK(rows[1].find(",id,") != std::string::npos);

  SUBCASE("duplicates coincide and planar sets keep their distances") {
    // Five labels in the plane spanned by e0 and e1, one duplicated.
    RowMatrixXd e = RowMatrixXd::Zero(5, 6);
    e.row(0) << 1, 0, 0, 0, 0, 0;
    e.row(1) << 0, 1, 0, 0, 0, 0;
    e.row(2) << 0.6, 0.8, 0, 0, 0, 0;
    e.row(3) << 0.6, 0.8, 0, 0, 0, 0;
    e.row(4) << -1, 0, 0, 0, 0, 0;
    const LabelSpace s = BuildLabelSpace({{0, "A, with comma"}, {1, "B"}}, {"C", "D", "E"},
                                         std::vector<LabelOrigin>(3, LabelOrigin::kReal), EmbeddingMatrix(e, true));
    SaveLabelSpace(dir / "plane.json", s);
    r = Cli({"viz", "--labels", P(dir / "plane.json"), "--out", P(dir / "viz2")});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto lines = Lines(dir / "viz2" / "label_coords.csv");
    REQUIRE(lines.size() == 6);
    CHECK(lines[1].starts_with("\"A, with comma\",id,"));
    std::vector<std::pair<double, double>> xy;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto& l = lines[i];
      const auto p1 = l.rfind(',');
      const auto p0 = l.rfind(',', p1 - 1);
      xy.emplace_back(std::stod(l.substr(p0 + 1, p1 - p0 - 1)), std::stod(l.substr(p1 + 1)));
    }
    CHECK(xy[2] == xy[3]);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        const double d = std::hypot(xy[static_cast<std::size_t>(i)].first - xy[static_cast<std::size_t>(j)].first,
                                    xy[static_cast<std::size_t>(i)].second - xy[static_cast<std::size_t>(j)].second);
        CHECK(d == doctest::Approx((e.row(i) - e.row(j)).norm()).epsilon(1e-6));
      }
    }
  }
}
