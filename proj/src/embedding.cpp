//  Copyright 2026 The herbvec Authors. All Rights Reserved.
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include "herbvec/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "herbvec/error.hpp"

namespace herbvec {

double cosine(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw DataError("cosine: dimension mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw UndefinedError("cosine: zero-norm vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

EmbeddingMatrix::EmbeddingMatrix(std::shared_ptr<const Vocabulary> vocab, Eigen::MatrixXd vectors)
    : vocab_(std::move(vocab)), vectors_(std::move(vectors)) {
  if (!vocab_) throw ConfigError("embedding: null vocabulary");
  if (static_cast<std::size_t>(vectors_.rows()) != vocab_->size())
    throw DataError("embedding: row count " + std::to_string(vectors_.rows()) +
                    " does not match vocabulary size " + std::to_string(vocab_->size()));
  if (vectors_.cols() < 1) throw DataError("embedding: dimension must be positive");
  if (!vectors_.allFinite()) throw DataError("embedding: non-finite entry");
  norms_ = vectors_.rowwise().norm();
}

Eigen::VectorXd EmbeddingMatrix::vector(HerbId id) const {
  if (id < 0 || id >= vectors_.rows()) throw NotFoundError("embedding: id out of range");
  return vectors_.row(id).transpose();
}

HerbId EmbeddingMatrix::lookup(std::string_view herb) const {
  auto id = vocab_->find(herb);
  if (!id) throw NotFoundError("unknown herb '" + std::string(herb) + "'");
  return *id;
}

double EmbeddingMatrix::similarity(HerbId a, HerbId b) const {
  return cosine(vector(a), vector(b));
}

std::vector<Neighbor> EmbeddingMatrix::rank_by_cosine(const Eigen::VectorXd& query, std::size_t k,
                                                      std::span<const HerbId> exclude) const {
  if (query.size() != vectors_.cols()) throw DataError("embedding: query dimension mismatch");
  const double qn = query.norm();
  if (qn == 0.0) throw UndefinedError("embedding: zero-norm query vector");
  const Eigen::VectorXd dots = vectors_ * query;

  std::vector<Neighbor> all;
  all.reserve(static_cast<std::size_t>(vectors_.rows()));
  for (HerbId id = 1; id < vectors_.rows(); ++id) {
    if (norms_[id] == 0.0) continue;
    if (std::find(exclude.begin(), exclude.end(), id) != exclude.end()) continue;
    all.push_back({id, std::clamp(dots[id] / (norms_[id] * qn), -1.0, 1.0)});
  }
  auto better = [](const Neighbor& x, const Neighbor& y) {
    return x.score != y.score ? x.score > y.score : x.id < y.id;
  };
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
  all.resize(k);
  return all;
}

std::vector<Neighbor> EmbeddingMatrix::nearest_neighbors(HerbId herb, std::size_t k) const {
  if (!vocab_->is_herb(herb)) throw NotFoundError("nearest_neighbors: not a herb id");
  if (k < 1) throw ConfigError("nearest_neighbors: k must be >= 1");
  const HerbId ex[] = {herb};
  return rank_by_cosine(vector(herb), k, ex);
}

std::vector<Neighbor> EmbeddingMatrix::analogy(HerbId a, HerbId b, HerbId c, std::size_t k) const {
  for (auto id : {a, b, c})
    if (!vocab_->is_herb(id)) throw NotFoundError("analogy: not a herb id");
  if (k < 1) throw ConfigError("analogy: k must be >= 1");
  const Eigen::VectorXd q = vector(b) - vector(a) + vector(c);
  const HerbId ex[] = {a, b, c};
  return rank_by_cosine(q, k, ex);
}

void save_text(const EmbeddingMatrix& emb, std::ostream& out) {
  const auto& m = emb.vectors();
  out << m.rows() << ' ' << m.cols() << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << emb.vocab().token(static_cast<HerbId>(i));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      auto res = std::to_chars(buf, buf + sizeof buf, m(i, j), std::chars_format::general, 17);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

namespace {

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& value) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

EmbeddingMatrix load_text(std::istream& in) {
  auto fail = [](std::size_t lineno, const std::string& msg) -> DataError {
    return DataError("embedding file line " + std::to_string(lineno) + ": " + msg);
  };
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw DataError("embedding file: empty input");
  ++lineno;
  auto header = fields(line);
  long long rows = 0, dim = 0;
  if (header.size() != 2 || !parse_number(header[0], rows) || !parse_number(header[1], dim) ||
      rows < 1 || dim < 1)
    throw fail(lineno, "expected header \"V d\" with positive integers");

  std::vector<std::string> herbs;
  std::vector<std::vector<double>> herb_rows;
  std::vector<double> unk_row(static_cast<std::size_t>(dim), 0.0);
  std::unordered_map<std::string, std::size_t> seen;

  long long read = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto f = fields(line);
    if (f.empty()) continue;
    if (read == rows) throw fail(lineno, "more rows than the header's " + std::to_string(rows));
    if (static_cast<long long>(f.size()) != dim + 1)
      throw fail(lineno, "expected token and " + std::to_string(dim) + " values, got " +
                             std::to_string(f.size()) + " fields");
    std::string tok(f[0]);
    if (!seen.emplace(tok, lineno).second) throw fail(lineno, "duplicate token '" + tok + "'");
    std::vector<double> row(static_cast<std::size_t>(dim));
    for (long long j = 0; j < dim; ++j) {
      double v = 0;
      if (!parse_number(f[static_cast<std::size_t>(j + 1)], v) || !std::isfinite(v))
        throw fail(lineno, "non-numeric value '" + std::string(f[static_cast<std::size_t>(j + 1)]) + "'");
      row[static_cast<std::size_t>(j)] = v;
    }
    if (tok == Vocabulary::kUnkToken) {
      unk_row = std::move(row);
    } else if (tok == Vocabulary::kBosToken || tok == Vocabulary::kEosToken) {
      throw fail(lineno, "sentinel token '" + tok + "' is not exportable");
    } else {
      herbs.push_back(std::move(tok));
      herb_rows.push_back(std::move(row));
    }
    ++read;
  }
  if (read != rows)
    throw fail(lineno, "header declares " + std::to_string(rows) + " rows but file has " +
                           std::to_string(read));

  auto vocab = std::make_shared<const Vocabulary>(Vocabulary::from_tokens(std::move(herbs)));
  Eigen::MatrixXd m(static_cast<Eigen::Index>(vocab->size()), dim);
  for (Eigen::Index j = 0; j < dim; ++j) m(0, j) = unk_row[static_cast<std::size_t>(j)];
  for (std::size_t i = 0; i < herb_rows.size(); ++i)
    for (Eigen::Index j = 0; j < dim; ++j)
      m(static_cast<Eigen::Index>(i + 1), j) = herb_rows[i][static_cast<std::size_t>(j)];
  return EmbeddingMatrix(std::move(vocab), std::move(m));
}

}  // namespace herbvec
