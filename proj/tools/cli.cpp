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

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tagood/embed.hpp"
#include "tagood/error.hpp"
#include "tagood/evaluation.hpp"
#include "tagood/graph.hpp"
#include "tagood/io.hpp"
#include "tagood/label_space.hpp"
#include "tagood/pseudo_ood.hpp"
#include "tagood/random.hpp"
#include "tagood/scoring.hpp"
#include "tagood/synth.hpp"
#include "tagood/text.hpp"

namespace tagood::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
};

void AddCommon(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON file of option values (flags take precedence)");
  sub->add_option("--seed", c.seed, "Root seed; stages derive their own")->capture_default_str();
  sub->add_option("--out", c.out, "Output directory")->required();
}

// Records what a command read and how it was configured.
class Manifest {
 public:
  Manifest(std::string command, const CLI::App* sub) : command_(std::move(command)) {
    config_ = sub->config_to_str(true, false);
  }
  void Input(const std::string& role, const fs::path& path) {
    inputs_[role] = {{"path", path.string()}, {"sha256", Sha256File(path)}};
  }
  void Output(const fs::path& path) { outputs_.push_back(path.filename().string()); }
  void Note(const std::string& key, json value) { notes_[key] = std::move(value); }
  void Write(const fs::path& path) const {
    json j = {{"command", command_},
              {"config", config_},
              {"config_sha256", Sha256Hex(config_)},
              {"inputs", inputs_},
              {"outputs", outputs_}};
    if (!notes_.empty()) j["notes"] = notes_;
    WriteFileAtomic(path, j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::string config_;
  json inputs_ = json::object();
  json outputs_ = json::array();
  json notes_ = json::object();
};

// ---------------------------------------------------------------------------
// Shared loaders
// ---------------------------------------------------------------------------

struct NodeInputs {
  std::string graph;
  std::string features;
  std::string embeddings;
  int k_hops = 2;
  bool no_normalize = false;
};

void AddNodeInputs(CLI::App* sub, NodeInputs& n) {
  sub->add_option("--graph", n.graph, "Graph JSON")->required();
  sub->add_option("--features", n.features, "Node features to mean-pool over k-hop neighborhoods");
  sub->add_option("--embeddings", n.embeddings, "Precomputed node embeddings, used as-is");
  sub->add_option("--k-hops", n.k_hops, "Neighborhood radius for mean pooling")->capture_default_str();
  sub->add_flag("--no-normalize", n.no_normalize, "Skip L2 normalization of pooled embeddings");
}

EmbeddingMatrix EncodeFromInputs(const TextAttributedGraph& g, const NodeInputs& n, Manifest& m) {
  if (n.features.empty() == n.embeddings.empty()) {
    throw ConfigError("give exactly one of --features or --embeddings");
  }
  EncoderBackend backend;
  backend.hops = n.k_hops;
  backend.normalize = !n.no_normalize;
  fs::path path;
  if (!n.features.empty()) {
    path = n.features;
    m.Input("features", path);
  } else {
    backend.kind = EncoderBackend::Kind::kIngested;
    path = n.embeddings;
    m.Input("embeddings", path);
  }
  const EmbeddingMatrix x = LoadEmbeddings(path);
  if (static_cast<std::size_t>(x.rows()) != g.node_count()) {
    throw InputError(path.string() + " has " + std::to_string(x.rows()) + " rows but the graph has " +
                     std::to_string(g.node_count()) + " nodes");
  }
  return EncodeNodes(g, x, backend);
}

LabelSpace LoadLabels(const fs::path& path, Manifest& m, const std::string& role = "labels") {
  m.Input(role, path);
  m.Input(role + "_embeddings", SiblingEmbeddingsPath(path));
  return LoadLabelSpace(path);
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
  Common common;
  SynthConfig cfg;
  bool degenerate = false;
};

int RunSynth(const SynthArgs& a, const CLI::App* sub, std::ostream& out) {
  SynthConfig cfg = a.cfg;
  if (a.degenerate) {
    cfg.centroid_cosine = 0.0;
    cfg.noise_sigma = 0.0;
    cfg.inter_edge_prob = 0.0;
  }
  cfg.seed = a.common.seed;
  const fs::path dir = a.common.out;
  OutputDirLock lock(dir);
  Manifest m("synth", sub);
  const SynthFixture fx = SynthTag(cfg);
  WriteSynthFixture(dir, fx, cfg);
  m.Write(dir / "manifest_synth.json");
  out << "synth: " << fx.graph.node_count() << " nodes, " << fx.graph.edge_count() << " edges, "
      << fx.split.id_class_ids.size() << " ID / " << fx.split.ood_class_ids.size()
      << " OOD classes -> " << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

struct IngestArgs {
  Common common;
  std::string graph;
  std::string format = "json";
  std::string texts;
  std::string classes;
};

int RunIngest(const IngestArgs& a, const CLI::App* sub, std::ostream& out) {
  GraphFormat format;
  if (a.format == "json") {
    format = GraphFormat::kJson;
  } else if (a.format == "edgelist") {
    format = GraphFormat::kEdgeList;
  } else {
    throw InputError("unknown graph format \"" + a.format + "\" (json, edgelist)");
  }
  Manifest m("ingest", sub);
  m.Input("graph", a.graph);
  std::optional<fs::path> texts;
  std::optional<fs::path> classes;
  if (!a.texts.empty()) {
    texts = a.texts;
    m.Input("texts", *texts);
  }
  if (!a.classes.empty()) {
    classes = a.classes;
    m.Input("classes", *classes);
  }
  const TextAttributedGraph g = LoadGraph(a.graph, format, texts, classes);
  const fs::path dir = a.common.out;
  OutputDirLock lock(dir);
  WriteFileAtomic(dir / "graph.json", SerializeGraphJson(g));
  WriteFileAtomic(dir / "id_map.csv", SerializeIdMapping(g));
  m.Output("graph.json");
  m.Output("id_map.csv");
  m.Write(dir / "manifest_ingest.json");
  out << "ingest: " << g.node_count() << " nodes, " << g.edge_count() << " edges\n";
  return 0;
}

// ---------------------------------------------------------------------------
// genlabels
// ---------------------------------------------------------------------------

struct GenlabelsArgs {
  Common common;
  std::string graph;
  std::string labels;
  bool mock = false;
  std::string mock_table;
  std::string replay;
  std::size_t annotate_count = 80;
  std::string prompt_template = "cora";
  std::string blurb;
  std::size_t clusters = 0;
  bool no_filter = false;
  double filter_threshold = 0.9;
  std::size_t pseudo_count = 0;
  std::string bank;
  std::string embed_command;
  std::size_t concurrency = 4;
  std::string model;
  std::size_t max_calls = 200;
};

int RunGenlabels(const GenlabelsArgs& a, const CLI::App* sub, std::ostream& out) {
  if (a.mock && !a.replay.empty()) throw ConfigError("--mock and --replay are exclusive");
  LlmEndpoint endpoint;
  endpoint.ApplyEnvironment();
  if (!a.model.empty()) endpoint.model = a.model;
  endpoint.max_calls = a.max_calls;
  endpoint.max_concurrency = a.concurrency;
  const bool live = !a.mock && a.replay.empty();
  endpoint.mode = live ? LlmEndpoint::Mode::kLive : LlmEndpoint::Mode::kMock;
  endpoint.Validate();  // before any sampling
  if (a.bank.empty() == a.embed_command.empty()) {
    throw ConfigError("give exactly one of --bank or --embed-command to embed generated labels");
  }

  Manifest m("genlabels", sub);
  m.Input("graph", a.graph);
  const TextAttributedGraph g = LoadGraphJson(a.graph);
  const LabelSpace base = LoadLabels(a.labels, m);

  SentenceEncoder encode;
  if (!a.bank.empty()) {
    const fs::path txt = a.bank;
    const fs::path gemb = fs::path(a.bank).replace_extension(".gemb");
    m.Input("bank", txt);
    m.Input("bank_embeddings", gemb);
    auto bank = std::make_shared<SentenceBank>(SentenceBank::Load(txt, gemb));
    encode = [bank](const std::vector<std::string>& s) { return bank->Lookup(s); };
  } else {
    m.Note("embed_command", a.embed_command);
    encode = [cmd = a.embed_command](const std::vector<std::string>& s) {
      return EmbedWithCommand(cmd, s);
    };
  }

  std::unique_ptr<LlmClient> inner;
  std::string model = endpoint.model;
  if (!a.replay.empty()) {
    m.Input("replay", a.replay);
    inner = std::make_unique<ReplayLlmClient>(a.replay);
  } else if (a.mock) {
    MockTable table;
    if (!a.mock_table.empty()) {
      m.Input("mock_table", a.mock_table);
      table = MockTable::Load(a.mock_table);
    }
    inner = std::make_unique<MockLlmClient>(std::move(table));
    model = "mock";
  } else {
    inner = std::make_unique<HttpLlmClient>(endpoint);
  }

  PseudoLabelConfig cfg;
  cfg.annotation_count = a.annotate_count;
  cfg.seed = a.common.seed;
  cfg.prompt = ParsePromptTemplate(a.prompt_template);
  cfg.dataset_blurb = a.blurb;
  if (a.clusters > 0) cfg.num_clusters = a.clusters;
  if (a.no_filter) {
    cfg.filter.max_id_similarity.reset();
  } else {
    cfg.filter.max_id_similarity = a.filter_threshold;
  }
  if (a.pseudo_count > 0) cfg.filter.subset_size = a.pseudo_count;
  cfg.concurrency = a.concurrency;

  const fs::path dir = a.common.out;
  OutputDirLock lock(dir);
  PseudoLabelResult result;
  if (a.replay.empty()) {
    const fs::path transcript = dir / "transcript.jsonl";
    RecordingLlmClient recorder(*inner, transcript, model);
    result = GeneratePseudoLabels(g, base, recorder, encode, cfg);
    m.Output(transcript);
  } else {
    result = GeneratePseudoLabels(g, base, *inner, encode, cfg);
  }

  std::string records;
  for (const auto& r : result.records) records += r.ToJson().dump() + "\n";
  WriteFileAtomic(dir / "annotations.jsonl", records);
  SaveLabelSpace(dir / "labels_pseudo.json", result.space);
  m.Output("annotations.jsonl");
  m.Output("labels_pseudo.json");
  m.Output("labels_pseudo.gemb");
  m.Note("harvested", result.harvested);
  m.Note("label_space_fingerprint", Fingerprint(result.space));
  m.Write(dir / "manifest_genlabels.json");
  out << "genlabels: " << result.harvested.size() << " generated, " << result.space.k_ood()
      << " kept:";
  for (const auto& l : result.space.ood_labels()) out << " [" << l.name << "]";
  out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

struct ScoreArgs {
  std::string regime = "all_labels";
  std::string scorer = "sum_id";
  double tau = 1.0;
  double epsilon = 1e-2;
  std::string normalization = "softmax";
  double propagate_alpha = 0.5;
  int propagate_steps = 0;
};

struct DetectArgs {
  Common common;
  NodeInputs nodes;
  std::string labels;
  ScoreArgs score;
};

int RunDetect(const DetectArgs& a, const CLI::App* sub, std::ostream& out) {
  const Regime regime = ParseRegime(a.score.regime);
  ScoreConfig cfg;
  cfg.scorer = ParseScorer(a.score.scorer);
  cfg.temperature = a.score.tau;
  cfg.epsilon = a.score.epsilon;
  cfg.normalization = ParseNormalization(a.score.normalization);
  if (a.score.propagate_steps > 0) cfg.propagation = PropagationConfig{a.score.propagate_alpha, a.score.propagate_steps};
  cfg.Validate();

  Manifest m("detect", sub);
  m.Input("graph", a.nodes.graph);
  const TextAttributedGraph g = LoadGraphJson(a.nodes.graph);
  const LabelSpace stored = LoadLabels(a.labels, m);
  const LabelSpace active = ActiveLabelSpace(stored, regime);
  if (RequiresOodLabels(cfg.scorer) && active.k_ood() == 0) {
    throw RegimeError(std::string(ToString(cfg.scorer)) + " is undefined in the " +
                      std::string(ToString(regime)) + " regime");
  }
  const EmbeddingMatrix nodes = EncodeFromInputs(g, a.nodes, m);
  const RowMatrixXd sim = SimilarityMatrix(nodes, active.embeddings());
  const VectorXd scores = ScoreAll(sim, static_cast<Eigen::Index>(active.k_id()), cfg, &g);

  std::ostringstream csv;
  csv << "node_id,raw_score,scorer,regime\n";
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    csv << i << "," << FormatDouble(scores(i)) << "," << ToString(cfg.scorer) << "," << ToString(regime)
        << "\n";
  }
  const fs::path dir = a.common.out;
  OutputDirLock lock(dir);
  const std::string stem = std::string(ToString(regime)) + "_" + std::string(ToString(cfg.scorer));
  WriteFileAtomic(dir / ("scores_" + stem + ".csv"), csv.str());
  m.Output("scores_" + stem + ".csv");
  m.Note("active_label_space_fingerprint", Fingerprint(active));
  m.Write(dir / ("manifest_detect_" + stem + ".json"));
  out << "detect: " << scores.size() << " nodes scored with " << ToString(cfg.scorer) << " ("
      << ToString(regime) << ", " << active.k_id() << " ID + " << active.k_ood() << " OOD labels)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct ScoresFile {
  Scorer scorer;
  Regime regime;
  VectorXd scores;
};

ScoresFile ReadScores(const fs::path& path, std::size_t n) {
  const auto lines = SplitLines(ReadFile(path));
  if (lines.empty() || lines[0] != "node_id,raw_score,scorer,regime") {
    throw InputError(path.string() + ": expected header node_id,raw_score,scorer,regime");
  }
  ScoresFile f{Scorer::kSumId, Regime::kAllLabels, VectorXd::Constant(static_cast<Eigen::Index>(n), std::nan(""))};
  std::optional<std::pair<std::string, std::string>> tags;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> cols;
    std::stringstream ss(lines[i]);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() != 4) throw InputError(path.string() + ":" + std::to_string(i + 1) + ": expected 4 columns");
    std::size_t node = 0;
    double value = 0.0;
    try {
      std::size_t pos = 0;
      node = std::stoul(cols[0], &pos);
      if (pos != cols[0].size()) throw std::invalid_argument("node");
      value = std::stod(cols[1], &pos);
      if (pos != cols[1].size()) throw std::invalid_argument("score");
    } catch (const std::exception&) {
      throw InputError(path.string() + ":" + std::to_string(i + 1) + ": malformed row");
    }
    if (node >= n) throw InputError(path.string() + ": node " + std::to_string(node) + " not in graph");
    if (!tags) {
      tags = {cols[2], cols[3]};
      f.scorer = ParseScorer(cols[2]);
      f.regime = ParseRegime(cols[3]);
    } else if (tags->first != cols[2] || tags->second != cols[3]) {
      throw InputError(path.string() + ": mixed scorer/regime rows");
    }
    f.scores(static_cast<Eigen::Index>(node)) = value;
  }
  if (!tags) throw InputError(path.string() + ": no score rows");
  return f;
}

struct EvalArgs {
  Common common;
  NodeInputs nodes;
  std::string labels;
  std::vector<std::string> scores;
  std::vector<std::string> merge;
  std::size_t n_per_side = 500;
};

int RunEval(const EvalArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  Manifest m("eval", sub);
  std::vector<EvalReport> reports;
  for (std::size_t i = 0; i < a.merge.size(); ++i) {
    m.Input("merge_" + std::to_string(i), a.merge[i]);
    json doc;
    try {
      doc = json::parse(ReadFile(a.merge[i]));
    } catch (const json::parse_error& e) {
      throw InputError(a.merge[i] + ": " + e.what());
    }
    if (!doc.is_array()) throw InputError(a.merge[i] + ": expected a JSON array of reports");
    for (const auto& r : doc) reports.push_back(EvalReport::FromJson(r));
  }

  if (!a.scores.empty()) {
    m.Input("graph", a.nodes.graph);
    const TextAttributedGraph g = LoadGraphJson(a.nodes.graph);
    if (!g.has_gold()) throw InputError("eval needs gold class labels in the graph");
    const LabelSpace space = LoadLabels(a.labels, m).IdOnly();
    const ClassSplit split = SplitClasses(g, space.id_class_ids());
    const EvalSplit eval_split = BuildEvalSplit(g, split, a.n_per_side, DeriveSeed(a.common.seed, "eval_split"));
    for (const auto& w : eval_split.warnings) err << "warning: " << w << "\n";
    const EmbeddingMatrix nodes = EncodeFromInputs(g, a.nodes, m);
    const double acc =
        ZeroShotAccuracy(SimilarityMatrix(nodes, space.embeddings()), eval_split, g.gold_class(),
                         space.id_class_ids());
    for (std::size_t i = 0; i < a.scores.size(); ++i) {
      m.Input("scores_" + std::to_string(i), a.scores[i]);
      const ScoresFile f = ReadScores(a.scores[i], g.node_count());
      const DetectionMetrics dm = EvaluateDetection(f.scores, eval_split);
      EvalReport r;
      r.acc = acc;
      r.auroc = dm.auroc;
      r.aupr = dm.aupr;
      r.fpr95 = dm.fpr95;
      r.scorer = f.scorer;
      r.regime = f.regime;
      r.seed = a.common.seed;
      r.n_id = eval_split.test_id_nodes.size();
      r.n_ood = eval_split.test_ood_nodes.size();
      reports.push_back(r);
    }
    m.Note("warnings", eval_split.warnings);
  }
  if (reports.empty()) throw ConfigError("eval needs --scores or --merge inputs");

  json doc = json::array();
  for (const auto& r : reports) doc.push_back(r.ToJson());
  const fs::path dir = a.common.out;
  OutputDirLock lock(dir);
  WriteFileAtomic(dir / "eval_report.json", doc.dump(2) + "\n");
  WriteFileAtomic(dir / "results.csv", AggregateResultsCsv(reports));
  m.Output("eval_report.json");
  m.Output("results.csv");
  m.Write(dir / "manifest_eval.json");
  for (const auto& r : reports) {
    out << ToString(r.regime) << "/" << ToString(r.scorer) << " seed " << r.seed
        << ": acc=" << FormatDouble(r.acc) << " auroc=" << FormatDouble(r.auroc)
        << " aupr=" << FormatDouble(r.aupr) << " fpr95=" << FormatDouble(r.fpr95) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// viz
// ---------------------------------------------------------------------------

struct VizArgs {
  Common common;
  std::vector<std::string> labels;
};

int RunViz(const VizArgs& a, const CLI::App* sub, std::ostream& out) {
  Manifest m("viz", sub);
  std::vector<std::pair<std::string, std::string>> rows;  // name, origin
  std::vector<VectorXd> vecs;
  for (std::size_t f = 0; f < a.labels.size(); ++f) {
    const LabelSpace s = LoadLabels(a.labels[f], m, "labels_" + std::to_string(f));
    // The ID block is shared between files; take it once.
    const std::size_t first = f == 0 ? 0 : s.k_id();
    for (std::size_t i = first; i < s.size(); ++i) {
      if (i < s.k_id()) {
        rows.emplace_back(s.spec().id[i].name, "id");
      } else {
        const auto& o = s.spec().ood[i - s.k_id()];
        rows.emplace_back(o.name, std::string(ToString(o.origin)));
      }
      vecs.push_back(s.embeddings().row(static_cast<Eigen::Index>(i)).transpose());
    }
    if (f > 0 && vecs.size() > 0 && s.embeddings().dim() != vecs.front().size()) {
      throw InputError(a.labels[f] + ": embedding dimension differs from the first label file");
    }
  }
  if (rows.size() < 2) throw InputError("viz needs at least 2 labels");
  RowMatrixXd pts(static_cast<Eigen::Index>(vecs.size()), vecs.front().size());
  for (std::size_t i = 0; i < vecs.size(); ++i) pts.row(static_cast<Eigen::Index>(i)) = vecs[i].transpose();
  const RowMatrixXd xy = Project2d(EmbeddingMatrix(std::move(pts)), DeriveSeed(a.common.seed, "viz"));

  std::ostringstream csv;
  csv << "label,origin,x,y\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    csv << CsvField(rows[i].first) << "," << rows[i].second << "," << FormatDouble(xy(r, 0)) << ","
        << FormatDouble(xy(r, 1)) << "\n";
  }
  const fs::path dir = a.common.out;
  OutputDirLock lock(dir);
  WriteFileAtomic(dir / "label_coords.csv", csv.str());
  m.Output("label_coords.csv");
  m.Write(dir / "manifest_viz.json");
  out << "viz: " << rows.size() << " labels projected\n";
  return 0;
}

}  // namespace

std::vector<std::string> ExpandConfig(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (!path || args.empty()) return args;
  json doc;
  try {
    doc = json::parse(ReadFile(*path));
  } catch (const json::parse_error& e) {
    throw InputError(*path + ": " + e.what());
  }
  if (!doc.is_object()) throw InputError(*path + ": config must be a JSON object");

  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.starts_with(flag + "=");
    });
  };
  auto scalar = [&](const std::string& key, const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number() || v.is_boolean()) return v.dump();
    throw InputError(*path + ": unsupported value for \"" + key + "\"");
  };
  std::vector<std::string> injected;
  for (const auto& [key, value] : doc.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (flag == "--config" || given(flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back(flag);
    } else if (value.is_array()) {
      for (const auto& v : value) {
        injected.push_back(flag);
        injected.push_back(scalar(key, v));
      }
    } else {
      injected.push_back(flag);
      injected.push_back(scalar(key, value));
    }
  }
  std::vector<std::string> out{args.front()};
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

int Run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"tagood: zero-shot OOD detection on text-attributed graphs", "tagood"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic block-model fixture");
  AddCommon(synth_cmd, synth.common);
  synth_cmd->add_option("--n-per-class", synth.cfg.n_per_class)->capture_default_str();
  synth_cmd->add_option("--classes", synth.cfg.classes)->capture_default_str();
  synth_cmd->add_option("--id-classes", synth.cfg.id_classes)->capture_default_str();
  synth_cmd->add_option("--separation", synth.cfg.centroid_cosine, "Pairwise centroid cosine")
      ->capture_default_str();
  synth_cmd->add_option("--intra", synth.cfg.intra_edge_prob)->capture_default_str();
  synth_cmd->add_option("--inter", synth.cfg.inter_edge_prob)->capture_default_str();
  synth_cmd->add_option("--noise", synth.cfg.noise_sigma)->capture_default_str();
  synth_cmd->add_option("--dim", synth.cfg.feature_dim)->capture_default_str();
  synth_cmd->add_flag("--degenerate", synth.degenerate,
                      "Orthogonal centroids, no noise, no inter-class edges");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate a graph and write its canonical form");
  AddCommon(ingest_cmd, ingest.common);
  ingest_cmd->add_option("--graph", ingest.graph, "Graph JSON or edge list")->required();
  ingest_cmd->add_option("--format", ingest.format, "json or edgelist")->capture_default_str();
  ingest_cmd->add_option("--texts", ingest.texts, "Node texts, one per line (edgelist)");
  ingest_cmd->add_option("--classes", ingest.classes, "Gold classes, one per line (edgelist)");

  GenlabelsArgs gen;
  auto* gen_cmd = app.add_subcommand("genlabels", "Generate pseudo-OOD labels with an LLM");
  AddCommon(gen_cmd, gen.common);
  gen_cmd->add_option("--graph", gen.graph, "Graph JSON")->required();
  gen_cmd->add_option("--labels", gen.labels, "Label space whose ID block is used")->required();
  gen_cmd->add_flag("--mock", gen.mock, "Answer prompts offline from --mock-table");
  gen_cmd->add_option("--mock-table", gen.mock_table, "Keyword table for --mock");
  gen_cmd->add_option("--replay", gen.replay, "Serve responses from a transcript");
  gen_cmd->add_option("--annotate-count", gen.annotate_count, "Nodes sampled for annotation")
      ->capture_default_str();
  gen_cmd->add_option("--prompt-template", gen.prompt_template,
                      "cora, citeseer_general, wiki_cs or ele_computers")
      ->capture_default_str();
  gen_cmd->add_option("--blurb", gen.blurb, "Dataset description for the prompt");
  gen_cmd->add_option("--clusters", gen.clusters, "Cluster generated labels into N (0 = off)")
      ->capture_default_str();
  gen_cmd->add_flag("--no-filter", gen.no_filter, "Keep generated labels close to ID labels");
  gen_cmd->add_option("--filter-threshold", gen.filter_threshold)->capture_default_str();
  gen_cmd->add_option("--pseudo-count", gen.pseudo_count, "Generated labels kept (0 = up to 10)")
      ->capture_default_str();
  gen_cmd->add_option("--bank", gen.bank, "Sentence bank text file (embeddings in sibling .gemb)");
  gen_cmd->add_option("--embed-command", gen.embed_command, "Command run as CMD <in.txt> <out.gemb>");
  gen_cmd->add_option("--concurrency", gen.concurrency)->capture_default_str();
  gen_cmd->add_option("--model", gen.model, "Chat model name");
  gen_cmd->add_option("--max-calls", gen.max_calls)->capture_default_str();

  auto add_score = [](CLI::App* sub, ScoreArgs& s) {
    sub->add_option("--regime", s.regime, "all_labels, id_only, negative_prompts or pseudo_ood")
        ->capture_default_str();
    sub->add_option("--scorer", s.scorer, "sum_id, sum_gap, max_gap, ood_ratio, msp, energy, entropy")
        ->capture_default_str();
    sub->add_option("--tau", s.tau, "Softmax temperature")->capture_default_str();
    sub->add_option("--epsilon", s.epsilon, "ood_ratio stabilizer")->capture_default_str();
    sub->add_option("--normalization", s.normalization, "softmax or shift_divide")->capture_default_str();
    sub->add_option("--propagate-alpha", s.propagate_alpha)->capture_default_str();
    sub->add_option("--propagate-steps", s.propagate_steps, "0 disables propagation")->capture_default_str();
  };

  DetectArgs detect;
  auto* detect_cmd = app.add_subcommand("detect", "Score every node");
  AddCommon(detect_cmd, detect.common);
  AddNodeInputs(detect_cmd, detect.nodes);
  detect_cmd->add_option("--labels", detect.labels, "Label-space JSON")->required();
  add_score(detect_cmd, detect.score);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compute ACC, AUROC, AUPR and FPR@95");
  AddCommon(eval_cmd, eval.common);
  eval_cmd->add_option("--graph", eval.nodes.graph, "Graph JSON with gold classes");
  eval_cmd->add_option("--features", eval.nodes.features);
  eval_cmd->add_option("--embeddings", eval.nodes.embeddings);
  eval_cmd->add_option("--k-hops", eval.nodes.k_hops)->capture_default_str();
  eval_cmd->add_flag("--no-normalize", eval.nodes.no_normalize);
  eval_cmd->add_option("--labels", eval.labels, "Label space; its ID block defines the split");
  eval_cmd->add_option("--scores", eval.scores, "Scores CSV from detect (repeatable)");
  eval_cmd->add_option("--merge", eval.merge, "Earlier eval_report.json to fold in (repeatable)");
  eval_cmd->add_option("--n-per-side", eval.n_per_side, "Test nodes per side")->capture_default_str();

  VizArgs viz;
  auto* viz_cmd = app.add_subcommand("viz", "Project label embeddings to 2D");
  AddCommon(viz_cmd, viz.common);
  viz_cmd->add_option("--labels", viz.labels, "Label-space JSON (repeatable)")->required();

  try {
    args = ExpandConfig(args);
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? 0 : static_cast<int>(ErrorKind::kInput);
    }
    if (synth_cmd->parsed()) return RunSynth(synth, synth_cmd, out);
    if (ingest_cmd->parsed()) return RunIngest(ingest, ingest_cmd, out);
    if (gen_cmd->parsed()) return RunGenlabels(gen, gen_cmd, out);
    if (detect_cmd->parsed()) return RunDetect(detect, detect_cmd, out);
    if (eval_cmd->parsed()) {
      if (!eval.scores.empty() && (eval.nodes.graph.empty() || eval.labels.empty())) {
        throw ConfigError("eval with --scores needs --graph, --labels and node inputs");
      }
      return RunEval(eval, eval_cmd, out, err);
    }
    if (viz_cmd->parsed()) return RunViz(viz, viz_cmd, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kInput);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace tagood::cli
