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

#include <cstring>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "tagood/embed.hpp"
#include "test_util.hpp"

using namespace tagood;
using testutil::Catch;

namespace {

std::string GembHeader(std::uint32_t version, std::uint64_t rows, std::uint64_t dim) {
  std::string b = "GEMB";
  b.append(reinterpret_cast<const char*>(&version), 4);
  b.append(reinterpret_cast<const char*>(&rows), 8);
  b.append(reinterpret_cast<const char*>(&dim), 8);
  return b;
}

RowMatrixXd Random(Eigen::Index r, Eigen::Index c, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  RowMatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(gen);
  }
  return m;
}

// Energy lost when the centered rows are replaced by their 2D coordinates.
double ResidualEnergy(const RowMatrixXd& centered, const RowMatrixXd& coords) {
  return centered.squaredNorm() - coords.squaredNorm();
}

}  // namespace

TEST_CASE("GEMB round-trip is bit-identical") {
  RowMatrixXd m(2, 3);
  m << 1.5, -2.25, 0.125, 3.0, 4.0, -0.5;
  const EmbeddingMatrix e(m);
  const std::string bytes = SerializeGemb(e);
  CHECK(bytes.size() == 24 + 6 * 4);
  CHECK(bytes.substr(0, 4) == "GEMB");
  const auto back = ParseGemb(bytes);
  CHECK(back.data() == m);
  CHECK(SerializeGemb(back) == bytes);

  testutil::TempDir dir("embed");
  SaveEmbeddings(dir / "x.gemb", e);
  CHECK(LoadEmbeddings(dir / "x.gemb").data() == m);
}

TEST_CASE("GEMB format errors") {
  CHECK(Catch([] { ParseGemb("GEMX" + std::string(20, '\0')); }).what.find("magic") != std::string::npos);
  std::string three_rows = GembHeader(1, 4, 2) + std::string(3 * 2 * 4, '\0');
  CHECK(Catch([&] { ParseGemb(three_rows); }).what.find("truncated") != std::string::npos);
  CHECK(Catch([] { ParseGemb("GEMB\1\0"); }).what.find("truncated") != std::string::npos);
  CHECK(Catch([] { ParseGemb(GembHeader(2, 0, 0)); }).what.find("version") != std::string::npos);
  std::string nan_payload = GembHeader(1, 1, 2);
  const float vals[2] = {1.0f, std::numeric_limits<float>::quiet_NaN()};
  nan_payload.append(reinterpret_cast<const char*>(vals), 8);
  CHECK(Catch([&] { ParseGemb(nan_payload); }).what.find("(0,1)") != std::string::npos);
}

TEST_CASE("CSV embeddings") {
  CHECK(ParseEmbeddingCsv("1,2\n3,4\n").data()(1, 0) == 3.0);
  const auto c = Catch([] { ParseEmbeddingCsv("1,nan,3\n"); });
  REQUIRE(c.thrown);
  CHECK(c.what.find("(0,1)") != std::string::npos);
  CHECK(Catch([] { ParseEmbeddingCsv("1,2\n3\n"); }).thrown);
  testutil::TempDir dir("csv");
  testutil::Write(dir / "x.csv", "0.5,0.25\n");
  CHECK(LoadEmbeddings(dir / "x.csv").data()(0, 1) == 0.25);
}

TEST_CASE("normalized flag is checked") {
  RowMatrixXd m(1, 2);
  m << 3, 4;
  CHECK(Catch([&] { EmbeddingMatrix(m, true); }).thrown);
  CHECK(EmbeddingMatrix(m).Normalized().data()(0, 0) == doctest::Approx(0.6));
  RowMatrixXd z = RowMatrixXd::Zero(1, 2);
  CHECK(Catch([&] { EmbeddingMatrix(z).Normalized(); }).thrown);
}

TEST_CASE("cosine similarity") {
  Eigen::Vector2d x(1, 0), y(0, 1), w(-1, 0);
  CHECK(CosineSimilarity(x, y) == 0.0);
  CHECK(CosineSimilarity(Eigen::Vector2d(1, 2), Eigen::Vector2d(2, 4)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(CosineSimilarity(x, w) == -1.0);
  CHECK(Catch([&] { CosineSimilarity(x, Eigen::Vector2d::Zero()); }).thrown);
  CHECK(Catch([&] { CosineSimilarity(Eigen::VectorXd(x), Eigen::VectorXd(Eigen::Vector3d(1, 0, 0))); }).thrown);

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> pos(0.1, 10.0);
  for (int t = 0; t < 100; ++t) {
    const RowMatrixXd ab = Random(2, 6, gen);
    const double a = pos(gen), b = pos(gen);
    const Eigen::VectorXd u = ab.row(0).transpose(), v = ab.row(1).transpose();
    CHECK(std::abs(CosineSimilarity(u, v) - CosineSimilarity((a * u).eval(), (b * v).eval())) <= 1e-9);
  }
}

TEST_CASE("similarity matrix matches per-entry cosine") {
  std::mt19937_64 gen(7);
  const RowMatrixXd n = Random(5, 3, gen);
  const RowMatrixXd l = Random(4, 3, gen);
  const RowMatrixXd sim = SimilarityMatrix(EmbeddingMatrix(n), EmbeddingMatrix(l));
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index k = 0; k < 4; ++k) {
      const std::vector<double> a(n.row(i).data(), n.row(i).data() + 3);
      const std::vector<double> b(l.row(k).data(), l.row(k).data() + 3);
      CHECK(std::abs(sim(i, k) - oracle::Cosine(a, b)) <= 1e-12);
      CHECK(std::abs(sim(i, k)) <= 1.0);
    }
  }
  // self-similarity and orthonormal labels
  const RowMatrixXd eye = RowMatrixXd::Identity(3, 3);
  const RowMatrixXd s2 = SimilarityMatrix(EmbeddingMatrix(eye.topRows(1)), EmbeddingMatrix(eye));
  CHECK(s2(0, 0) == 1.0);
  CHECK(s2(0, 1) == 0.0);
  CHECK(Catch([&] { SimilarityMatrix(EmbeddingMatrix(n), EmbeddingMatrix(eye.leftCols(2))); }).thrown);
}

TEST_CASE("k-hop mean pooling") {
  std::vector<TextAttributedGraph::Edge> e{{0, 1}};
  const auto g = TextAttributedGraph::Build(3, e, {"a", "b", "c"});
  RowMatrixXd x(3, 3);
  x << 1, 0, 0, 0, 1, 0, 0, 0, 2;
  EncoderBackend b;
  b.hops = 1;
  const auto out = EncodeNodes(g, EmbeddingMatrix(x), b);
  const double h = 1.0 / std::sqrt(2.0);
  CHECK(out.data()(0, 0) == doctest::Approx(h));
  CHECK(out.data()(1, 1) == doctest::Approx(h));
  CHECK(out.data()(2, 2) == 1.0);  // isolated, own row normalized

  RowMatrixXd bad(2, 3);
  CHECK(Catch([&] { EncodeNodes(g, EmbeddingMatrix(bad.setOnes()), b); }).thrown);

  RowMatrixXd cancel(3, 2);
  cancel << 1, 0, -1, 0, 0, 1;
  CHECK(Catch([&] { EncodeNodes(g, EmbeddingMatrix(cancel), b); }).what.find("zero") != std::string::npos);

  b.kind = EncoderBackend::Kind::kIngested;
  const auto ing = EncodeNodes(g, EmbeddingMatrix(x), b);
  CHECK(ing.data()(2, 2) == 1.0);
  CHECK(ing.normalized());
}

TEST_CASE("mean pooling matches the BFS oracle on random graphs") {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 30;
    const auto edges = oracle::RandomEdges(n, 0.08, gen);
    std::vector<TextAttributedGraph::Edge> e(edges.begin(), edges.end());
    const auto g = TextAttributedGraph::Build(n, e, std::vector<std::string>(n, "t"));
    const RowMatrixXd x = Random(static_cast<Eigen::Index>(n), 4, gen);
    oracle::Rows rows;
    for (Eigen::Index i = 0; i < x.rows(); ++i) rows.emplace_back(x.row(i).data(), x.row(i).data() + 4);
    EncoderBackend b;
    b.hops = 2;
    const auto got = EncodeNodes(g, EmbeddingMatrix(x), b);
    const auto want = oracle::MeanPool(oracle::AdjSets(n, edges), rows, 2);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(got.row(static_cast<Eigen::Index>(i)).norm() - 1.0) <= 1e-6);
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(std::abs(got.data()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - want[i][j]) <= 1e-9);
      }
    }
  }
}

TEST_CASE("2D projection") {
  std::mt19937_64 gen(17);
  SUBCASE("planar points keep their distances") {
    const RowMatrixXd c2 = Random(12, 2, gen);
    const RowMatrixXd basis = Eigen::HouseholderQR<Eigen::MatrixXd>(Random(6, 2, gen)).householderQ();
    const RowMatrixXd pts = (c2 * basis.leftCols(2).transpose()).rowwise() + Random(1, 6, gen).row(0);
    const RowMatrixXd xy = Project2d(EmbeddingMatrix(pts));
    for (Eigen::Index i = 0; i < 12; ++i) {
      for (Eigen::Index j = 0; j < 12; ++j) {
        CHECK(std::abs((xy.row(i) - xy.row(j)).norm() - (pts.row(i) - pts.row(j)).norm()) <= 1e-6);
      }
    }
  }
  SUBCASE("duplicated points land on the same coordinates") {
    const RowMatrixXd half = Random(5, 4, gen);
    RowMatrixXd both(10, 4);
    both << half, half;
    const RowMatrixXd xy = Project2d(EmbeddingMatrix(both));
    CHECK((xy.topRows(5) - xy.bottomRows(5)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("top-2 subspace matches a Jacobi eigensolver") {
    for (int t = 0; t < 10; ++t) {
      const RowMatrixXd pts = Random(10, 8, gen);
      const RowMatrixXd centered = pts.rowwise() - pts.colwise().mean();
      const RowMatrixXd cov = centered.transpose() * centered / 10.0;
      oracle::Rows a(8, std::vector<double>(8));
      for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) a[i][j] = cov(i, j);
      }
      auto [eig, vecs] = oracle::Jacobi(a);
      std::vector<int> idx(8);
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](int x, int y) { return eig[x] > eig[y]; });
      RowMatrixXd top(8, 2);
      for (int i = 0; i < 8; ++i) {
        top(i, 0) = vecs[i][idx[0]];
        top(i, 1) = vecs[i][idx[1]];
      }
      const double oracle_resid = ResidualEnergy(centered, centered * top);
      const RowMatrixXd xy = Project2d(EmbeddingMatrix(pts), static_cast<std::uint64_t>(t));
      CHECK(std::abs(ResidualEnergy(centered, xy) - oracle_resid) <= 1e-4);
      // No random rank-2 projection captures more variance.
      for (int r = 0; r < 20; ++r) {
        const RowMatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(Random(8, 2, gen)).householderQ();
        CHECK((centered * q.leftCols(2)).squaredNorm() <= xy.squaredNorm() + 1e-9);
      }
    }
  }
  SUBCASE("fewer than two rows") {
    CHECK(Catch([&] { Project2d(EmbeddingMatrix(Random(1, 3, gen))); }).thrown);
  }
  SUBCASE("fixed seed is deterministic") {
    const RowMatrixXd pts = Random(7, 5, gen);
    CHECK(Project2d(EmbeddingMatrix(pts), 3) == Project2d(EmbeddingMatrix(pts), 3));
  }
}
