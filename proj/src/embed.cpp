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

#include "tagood/embed.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <vector>

#include "tagood/io.hpp"
#include "tagood/text.hpp"

namespace tagood {

namespace {

constexpr char kGembMagic[4] = {'G', 'E', 'M', 'B'};
constexpr std::uint32_t kGembVersion = 1;
constexpr std::size_t kGembHeaderSize = 4 + 4 + 8 + 8;

template <typename T>
T ReadLe(std::string_view bytes, std::size_t offset) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<U>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return std::bit_cast<T>(v);
}

template <typename T>
void AppendLe(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U v = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

}  // namespace

EmbeddingMatrix ParseGemb(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kGembMagic, 4) != 0) {
    throw InputError("GEMB magic mismatch");
  }
  if (bytes.size() < kGembHeaderSize) throw InputError("GEMB truncated header");
  const auto version = ReadLe<std::uint32_t>(bytes, 4);
  if (version != kGembVersion) throw InputError("unsupported GEMB version " + std::to_string(version));
  const auto rows = ReadLe<std::uint64_t>(bytes, 8);
  const auto dim = ReadLe<std::uint64_t>(bytes, 16);
  const std::size_t payload = bytes.size() - kGembHeaderSize;
  if (dim != 0 && rows > payload / 4 / dim) {
    throw InputError("GEMB truncated payload: header declares " + std::to_string(rows) + "x" +
                     std::to_string(dim) + " but only " + std::to_string(payload) + " bytes follow");
  }
  if (payload != rows * dim * 4) {
    throw InputError("GEMB payload size " + std::to_string(payload) + " does not match header " +
                     std::to_string(rows) + "x" + std::to_string(dim));
  }
  RowMatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  std::size_t off = kGembHeaderSize;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c, off += 4) {
      m(r, c) = static_cast<double>(ReadLe<float>(bytes, off));
    }
  }
  return EmbeddingMatrix(std::move(m));
}

std::string SerializeGemb(const EmbeddingMatrix& m) {
  std::string out(kGembMagic, 4);
  AppendLe<std::uint32_t>(out, kGembVersion);
  AppendLe<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  AppendLe<std::uint64_t>(out, static_cast<std::uint64_t>(m.dim()));
  out.reserve(out.size() + static_cast<std::size_t>(m.rows() * m.dim()) * 4);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.dim(); ++c) {
      const auto f = static_cast<float>(m.data()(r, c));
      if (!std::isfinite(f)) {
        throw InputError("value at (" + std::to_string(r) + "," + std::to_string(c) +
                         ") overflows float32");
      }
      AppendLe<float>(out, f);
    }
  }
  return out;
}

EmbeddingMatrix ParseEmbeddingCsv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  for (const std::string& raw : SplitLines(text)) {
    const std::string line = Trim(raw);
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) comma = line.size();
      const std::string cell = Trim(std::string_view(line).substr(start, comma - start));
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        // from_chars accepts "nan"/"inf"; anything else that fails is malformed.
        throw InputError("CSV embeddings: bad value \"" + cell + "\" at row " +
                         std::to_string(rows.size()) + ", col " + std::to_string(row.size()));
      }
      row.push_back(v);
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InputError("CSV embeddings: ragged row " + std::to_string(rows.size()));
    }
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.empty() ? 0 : rows.front().size());
  RowMatrixXd m(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return EmbeddingMatrix(std::move(m));
}

EmbeddingMatrix LoadEmbeddings(const std::filesystem::path& path) {
  const std::string bytes = ReadFile(path);
  if (path.extension() == ".csv") return ParseEmbeddingCsv(bytes);
  return ParseGemb(bytes);
}

void SaveEmbeddings(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  WriteFileAtomic(path, SerializeGemb(m));
}

EmbeddingMatrix EncodeNodes(const TextAttributedGraph& g, const EmbeddingMatrix& features,
                            const EncoderBackend& backend) {
  if (static_cast<std::size_t>(features.rows()) != g.node_count()) {
    throw InputError("encoder: " + std::to_string(features.rows()) + " feature rows for " +
                     std::to_string(g.node_count()) + " nodes");
  }
  if (backend.kind == EncoderBackend::Kind::kIngested) {
    return backend.normalize ? features.Normalized() : features;
  }

  RowMatrixXd pooled(features.rows(), features.dim());
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const auto members = KHopMembers(g, static_cast<NodeId>(i), backend.hops);
    VectorXd acc = VectorXd::Zero(features.dim());
    for (NodeId m : members) acc += features.row(m).transpose();
    acc /= static_cast<double>(members.size());
    if (backend.normalize) {
      const double n = acc.norm();
      if (!(n > 0.0)) throw InputError("zero-norm pooled embedding at node " + std::to_string(i));
      acc /= n;
    }
    pooled.row(static_cast<Eigen::Index>(i)) = acc.transpose();
  }
  return EmbeddingMatrix(std::move(pooled), backend.normalize);
}

}  // namespace tagood
