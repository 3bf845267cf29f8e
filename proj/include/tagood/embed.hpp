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

#ifndef TAGOOD_EMBED_HPP_
#define TAGOOD_EMBED_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>

#include "tagood/error.hpp"
#include "tagood/graph.hpp"
#include "tagood/random.hpp"
#include "tagood/types.hpp"

namespace tagood {

// Dense row-major embedding table. Values are always finite; when
// `normalized()` every row has unit Euclidean norm to within kNormTolerance.
template <typename Scalar>
class BasicEmbeddingMatrix {
 public:
  using MatrixType = RowMatrix<Scalar>;
  static constexpr double kNormTolerance = 1e-6;

  BasicEmbeddingMatrix() = default;

  explicit BasicEmbeddingMatrix(MatrixType data, bool normalized = false)
      : data_(std::move(data)), normalized_(normalized) {
    for (Eigen::Index r = 0; r < data_.rows(); ++r) {
      for (Eigen::Index c = 0; c < data_.cols(); ++c) {
        if (!std::isfinite(static_cast<double>(data_(r, c)))) {
          throw InputError("non-finite embedding value at (" + std::to_string(r) + "," +
                           std::to_string(c) + ")");
        }
      }
      if (normalized_ && std::abs(static_cast<double>(data_.row(r).norm()) - 1.0) > kNormTolerance) {
        throw InputError("row " + std::to_string(r) + " is flagged normalized but has norm " +
                         std::to_string(static_cast<double>(data_.row(r).norm())));
      }
    }
  }

  Eigen::Index rows() const { return data_.rows(); }
  Eigen::Index dim() const { return data_.cols(); }
  bool normalized() const { return normalized_; }
  const MatrixType& data() const { return data_; }
  auto row(Eigen::Index i) const { return data_.row(i); }

  // Copy with every row scaled to unit norm. Zero rows are an error.
  BasicEmbeddingMatrix Normalized() const {
    if (normalized_) return *this;
    MatrixType out = data_;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      const Scalar n = out.row(r).norm();
      if (!(n > Scalar(0))) throw InputError("cannot normalize zero row " + std::to_string(r));
      out.row(r) /= n;
    }
    return BasicEmbeddingMatrix(std::move(out), true);
  }

  // Rows [begin, begin + count) as a new table, keeping the flag.
  BasicEmbeddingMatrix Slice(Eigen::Index begin, Eigen::Index count) const {
    return BasicEmbeddingMatrix(data_.middleRows(begin, count), normalized_);
  }

 private:
  MatrixType data_;
  bool normalized_ = false;
};

using EmbeddingMatrix = BasicEmbeddingMatrix<double>;

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar CosineSimilarity(const Eigen::MatrixBase<DerivedA>& a,
                                           const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) {
    throw InputError("cosine similarity: dimension mismatch " + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()));
  }
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (!(na > Scalar(0)) || !(nb > Scalar(0))) throw InputError("cosine similarity of zero vector");
  const Scalar cos = a.cwiseProduct(b.template cast<Scalar>()).sum() / (na * nb);
  return std::clamp(cos, Scalar(-1), Scalar(1));
}

// Entry (i, k) is the cosine between node row i and label row k. When both
// sides are normalized this is a single matrix product.
template <typename Scalar>
RowMatrix<Scalar> SimilarityMatrix(const BasicEmbeddingMatrix<Scalar>& nodes,
                                   const BasicEmbeddingMatrix<Scalar>& labels) {
  if (nodes.dim() != labels.dim()) {
    throw InputError("similarity matrix: node dim " + std::to_string(nodes.dim()) +
                     " != label dim " + std::to_string(labels.dim()));
  }
  const BasicEmbeddingMatrix<Scalar> n = nodes.Normalized();
  const BasicEmbeddingMatrix<Scalar> l = labels.Normalized();
  RowMatrix<Scalar> sim = n.data() * l.data().transpose();
  return sim.cwiseMax(Scalar(-1)).cwiseMin(Scalar(1));
}

namespace internal {

// Leading eigenvector of a symmetric PSD matrix restricted to the orthogonal
// complement of `against` (columns). Returns a zero vector when the matrix
// vanishes on that complement.
template <typename Scalar>
Vector<Scalar> PowerIterate(const RowMatrix<Scalar>& cov, const RowMatrix<Scalar>& against,
                            Rng& rng) {
  const Eigen::Index d = cov.rows();
  auto project_out = [&](Vector<Scalar>& v) {
    for (Eigen::Index c = 0; c < against.cols(); ++c) {
      v -= against.col(c).dot(v) * against.col(c);
    }
  };
  Vector<Scalar> v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = static_cast<Scalar>(rng.Normal());
  project_out(v);
  if (!(v.norm() > Scalar(0))) return Vector<Scalar>::Zero(d);
  v.normalize();

  const Scalar scale = std::max(cov.cwiseAbs().maxCoeff(), std::numeric_limits<Scalar>::min());
  constexpr int kMaxIterations = 200000;
  for (int it = 0; it < kMaxIterations; ++it) {
    Vector<Scalar> w = cov * v;
    project_out(w);
    const Scalar wn = w.norm();
    if (wn <= scale * Scalar(1e-14)) {
      // Null direction: keep the orthogonalized start vector.
      return v;
    }
    w /= wn;
    const Scalar residual = (cov * w - (w.dot(cov * w)) * w).norm();
    v = w;
    if (residual <= scale * Scalar(1e-13)) break;
  }
  return v;
}

}  // namespace internal

// Coordinates of each row on the top two principal axes of the mean-centered
// rows. Axes come from power iteration with deflation, seeded for
// determinism; each axis is sign-fixed so its largest-magnitude entry is
// positive.
template <typename Scalar>
RowMatrix<Scalar> Project2d(const BasicEmbeddingMatrix<Scalar>& points, std::uint64_t seed = 0) {
  if (points.rows() < 2) throw InputError("2D projection needs at least 2 rows");
  RowMatrix<Scalar> centered = points.data().rowwise() - points.data().colwise().mean();
  const RowMatrix<Scalar> cov =
      (centered.transpose() * centered) / static_cast<Scalar>(points.rows());

  Rng rng(seed);
  RowMatrix<Scalar> axes(points.dim(), 0);
  for (int k = 0; k < 2 && k < points.dim(); ++k) {
    Vector<Scalar> v = internal::PowerIterate<Scalar>(cov, axes, rng);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < Scalar(0)) v = -v;
    axes.conservativeResize(Eigen::NoChange, k + 1);
    axes.col(k) = v;
  }
  RowMatrix<Scalar> coords = RowMatrix<Scalar>::Zero(points.rows(), 2);
  coords.leftCols(axes.cols()) = centered * axes;
  return coords;
}

// GEMB: "GEMB", u32 version, u64 rows, u64 dim, rows*dim f32, little-endian.
EmbeddingMatrix ParseGemb(std::string_view bytes);
std::string SerializeGemb(const EmbeddingMatrix& m);
// One row per line of comma-separated decimals.
EmbeddingMatrix ParseEmbeddingCsv(std::string_view text);

// ".csv" files use the CSV reader, everything else must be GEMB.
EmbeddingMatrix LoadEmbeddings(const std::filesystem::path& path);
void SaveEmbeddings(const std::filesystem::path& path, const EmbeddingMatrix& m);

struct EncoderBackend {
  enum class Kind { kIngested, kKHopMeanPool };
  Kind kind = Kind::kKHopMeanPool;
  int hops = 2;
  bool normalize = true;
};

// kKHopMeanPool: row i is the mean of `features` over the k-hop members of i.
// kIngested: `features` already holds per-node embeddings.
EmbeddingMatrix EncodeNodes(const TextAttributedGraph& g, const EmbeddingMatrix& features,
                            const EncoderBackend& backend);

}  // namespace tagood

#endif  // TAGOOD_EMBED_HPP_
