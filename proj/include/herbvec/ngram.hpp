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
#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "herbvec/corpus.hpp"

namespace herbvec {

class BinaryWriter;
class BinaryReader;

enum class Direction { kForward, kBackward };

struct NgramConfig {
  double smoothing = 1.0;      // add-k constant
  bool unigram_term = false;   // optional fifth additive term, off by default
};

/// Bidirectional trigram counts over BOS BOS w1 .. wn EOS EOS.
///
/// Forward outcomes are herbs, UNK and EOS; backward outcomes are herbs, UNK
/// and BOS. Both sets have size V' = vocab.size() + 1, so every smoothed
/// conditional sums to one over its outcome set.
class NgramModel {
 public:
  NgramModel() = default;

  static NgramModel fit(const std::vector<Prescription>& corpus,
                        std::shared_ptr<const Vocabulary> vocab, NgramConfig config = {});

  const Vocabulary& vocab() const noexcept { return *vocab_; }
  std::shared_ptr<const Vocabulary> vocab_ptr() const noexcept { return vocab_; }
  const NgramConfig& config() const noexcept { return config_; }

  std::size_t outcome_count() const noexcept { return vocab_->size() + 1; }
  bool is_outcome(HerbId id, Direction dir) const noexcept;

  std::uint64_t unigram(HerbId a) const;
  std::uint64_t bigram(HerbId a, HerbId b) const;
  std::uint64_t trigram(HerbId a, HerbId b, HerbId c) const;
  std::uint64_t total_tokens() const noexcept { return total_tokens_; }

  /// Smoothed p(target | context). Forward: context precedes the target in
  /// corpus order (c1 c2 target). Backward: context follows it (target c1 c2).
  /// Non-outcome targets get probability zero.
  double prob(HerbId target, std::span<const HerbId> context, Direction dir) const;
  double prob_unigram(HerbId target) const;

  /// p(c|w[-1]) + p(c|w[-2],w[-1]) + p(c|w[+1]) + p(c|w[+1],w[+2]) around the
  /// blank, padding with BOS/EOS. With `open_end` the prescription is
  /// unfinished past the blank and the two right-context terms are dropped.
  double score_blank(const BlankedPrescription& q, HerbId candidate, bool open_end = false) const;

  /// score_blank for every id in [0, vocab.size()).
  Eigen::VectorXd scores(const BlankedPrescription& q, bool open_end = false) const;

  /// Argmax of score_blank over herbs (never UNK/BOS/EOS), ties by ascending
  /// id. `exclude_present` additionally skips herbs already in the context.
  HerbId predict_blank(const BlankedPrescription& q, bool exclude_present = false,
                       bool open_end = false) const;

  void save(BinaryWriter& w) const;
  static NgramModel load(BinaryReader& r, std::shared_ptr<const Vocabulary> vocab);

  bool operator==(const NgramModel& other) const;

 private:
  static std::uint64_t key(HerbId a, HerbId b) noexcept;
  static std::uint64_t key(HerbId a, HerbId b, HerbId c) noexcept;
  void rebuild_totals();

  std::shared_ptr<const Vocabulary> vocab_;
  NgramConfig config_;
  std::vector<std::uint64_t> unigram_;
  std::unordered_map<std::uint64_t, std::uint64_t> bigram_;
  std::unordered_map<std::uint64_t, std::uint64_t> trigram_;
  std::uint64_t total_tokens_ = 0;

  // Context marginals restricted to each direction's outcome set.
  std::vector<std::uint64_t> fwd_uni_total_;  // size 1; sum over forward outcomes
  std::vector<std::uint64_t> fwd_bi_total_;   // indexed by preceding id
  std::vector<std::uint64_t> bwd_bi_total_;   // indexed by following id
  std::unordered_map<std::uint64_t, std::uint64_t> fwd_tri_total_;
  std::unordered_map<std::uint64_t, std::uint64_t> bwd_tri_total_;
};

}  // namespace herbvec
