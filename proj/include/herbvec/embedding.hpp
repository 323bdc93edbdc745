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

#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "herbvec/corpus.hpp"

namespace herbvec {

/// dot(a, b) / (|a| |b|), clamped to [-1, 1]. Throws UndefinedError when
/// either vector has zero norm and DataError on a dimension mismatch.
double cosine(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

struct Neighbor {
  HerbId id;
  double score;

  bool operator==(const Neighbor&) const = default;
};

/// Herb vectors: one row per id in [0, vocab.size()), i.e. UNK plus every
/// herb. BOS/EOS never have rows here.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(std::shared_ptr<const Vocabulary> vocab, Eigen::MatrixXd vectors);

  const Vocabulary& vocab() const noexcept { return *vocab_; }
  std::shared_ptr<const Vocabulary> vocab_ptr() const noexcept { return vocab_; }
  const Eigen::MatrixXd& vectors() const noexcept { return vectors_; }
  Eigen::Index dim() const noexcept { return vectors_.cols(); }
  Eigen::Index rows() const noexcept { return vectors_.rows(); }

  Eigen::VectorXd vector(HerbId id) const;
  /// Throws NotFoundError for strings outside the vocabulary.
  HerbId lookup(std::string_view herb) const;

  double similarity(HerbId a, HerbId b) const;

  /// Top-k herbs by cosine to `herb`, excluding the query and UNK. Descending
  /// score, ties by ascending id. Herbs with zero vectors are skipped.
  std::vector<Neighbor> nearest_neighbors(HerbId herb, std::size_t k) const;

  /// Top-k herbs by cosine to v[b] - v[a] + v[c], excluding a, b, c and UNK.
  std::vector<Neighbor> analogy(HerbId a, HerbId b, HerbId c, std::size_t k) const;

  /// Ranks every herb (not UNK) against an arbitrary query vector.
  std::vector<Neighbor> rank_by_cosine(const Eigen::VectorXd& query, std::size_t k,
                                       std::span<const HerbId> exclude = {}) const;

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  Eigen::MatrixXd vectors_;
  Eigen::VectorXd norms_;
};

/// "V d" header followed by V lines "token v1 ... vd", 17 significant digits.
void save_text(const EmbeddingMatrix& emb, std::ostream& out);

/// Reads the text format. A "<unk>" row becomes the UNK vector (zero if
/// absent); every other token becomes a herb in file order. Errors name the
/// offending line.
EmbeddingMatrix load_text(std::istream& in);

}  // namespace herbvec
