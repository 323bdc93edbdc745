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

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace herbvec {

using HerbId = std::int32_t;

struct RawPrescription {
  std::optional<std::string> name;
  std::vector<std::string> herbs;
  std::optional<std::string> source;
};

struct Diagnostic {
  std::size_t line = 0;  // 1-based; 0 when not tied to a line
  std::string message;
};

struct ParseResult {
  std::vector<RawPrescription> prescriptions;
  std::vector<Diagnostic> skipped;
};

/// Reads the line-oriented corpus format: optional "name<TAB>", herbs split on
/// ASCII whitespace or the ideographic comma, '#' comments. Lines with no herb
/// are reported in `skipped` and parsing continues.
ParseResult parse_corpus(std::istream& in, std::string_view source = {});

/// Splits a herb list the way corpus lines are split.
std::vector<std::string> split_herbs(std::string_view text);

void write_corpus(std::ostream& out, const std::vector<RawPrescription>& corpus);

std::unordered_map<std::string, std::size_t> count_tokens(
    const std::vector<RawPrescription>& corpus);

/// Maps each token seen fewer than `threshold` times onto the most popular
/// token (count >= threshold) that contains it as a contiguous substring.
/// Counts are taken once, before any replacement. Candidates are ranked by
/// count, then length, then lexicographic order.
std::vector<RawPrescription> project_rare_herbs(const std::vector<RawPrescription>& corpus,
                                                std::size_t threshold = 5);

/// Token inventory. Id layout: UNK = 0, herbs 1..H in descending count order,
/// then BOS = H + 1 and EOS = H + 2. Ids below size() are the predictable
/// outcomes (herbs plus UNK); BOS/EOS only exist for padding.
class Vocabulary {
 public:
  static constexpr HerbId kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";
  static constexpr std::string_view kBosToken = "<s>";
  static constexpr std::string_view kEosToken = "</s>";

  Vocabulary() = default;

  /// Builds from explicit herbs and counts; ids follow the given order.
  /// Throws DataError on duplicate or reserved tokens.
  static Vocabulary from_tokens(std::vector<std::string> herbs,
                                std::vector<std::size_t> counts = {},
                                std::size_t unk_count = 0);

  /// Herb count plus the UNK slot.
  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t num_herbs() const noexcept { return tokens_.size() - 1; }
  /// All ids including BOS/EOS.
  std::size_t num_ids() const noexcept { return tokens_.size() + 2; }

  HerbId unk() const noexcept { return kUnk; }
  HerbId bos() const noexcept { return static_cast<HerbId>(tokens_.size()); }
  HerbId eos() const noexcept { return static_cast<HerbId>(tokens_.size() + 1); }

  bool is_herb(HerbId id) const noexcept {
    return id > kUnk && static_cast<std::size_t>(id) < tokens_.size();
  }
  bool is_valid(HerbId id) const noexcept {
    return id >= 0 && static_cast<std::size_t>(id) < num_ids();
  }

  /// UNK for unknown strings.
  HerbId id(std::string_view token) const;
  std::optional<HerbId> find(std::string_view token) const;
  const std::string& token(HerbId id) const;
  std::size_t count(HerbId id) const;

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<std::size_t>& counts() const noexcept { return counts_; }

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && counts_ == other.counts_;
  }

 private:
  std::vector<std::string> tokens_{std::string(kUnkToken)};
  std::vector<std::size_t> counts_{0};
  std::unordered_map<std::string, HerbId> index_;
};

/// Retains tokens with count >= min_count, ids by descending count with ties
/// in lexicographic order. Throws ConfigError if nothing survives.
Vocabulary build_vocabulary(const std::vector<RawPrescription>& corpus, std::size_t min_count = 1);

/// Encoded prescription; never contains BOS/EOS.
using Prescription = std::vector<HerbId>;

Prescription encode(const RawPrescription& raw, const Vocabulary& vocab);
std::vector<Prescription> encode(const std::vector<RawPrescription>& corpus,
                                 const Vocabulary& vocab);
std::vector<std::string> decode(const Prescription& p, const Vocabulary& vocab);

struct SplitRatios {
  double train = 0.9;
  double dev = 0.05;
  double test = 0.05;
};

template <class T>
struct Partition {
  std::vector<T> train;
  std::vector<T> dev;
  std::vector<T> test;
};

/// Index-level split: dev and test get floor(ratio * n) items, train takes the
/// rest. Throws ConfigError if ratios are not positive or do not sum to 1.
Partition<std::size_t> split_indices(std::size_t n, const SplitRatios& ratios, std::uint64_t seed);

template <class T>
Partition<T> split(const std::vector<T>& corpus, const SplitRatios& ratios, std::uint64_t seed) {
  auto idx = split_indices(corpus.size(), ratios, seed);
  Partition<T> out;
  for (auto i : idx.train) out.train.push_back(corpus[i]);
  for (auto i : idx.dev) out.dev.push_back(corpus[i]);
  for (auto i : idx.test) out.test.push_back(corpus[i]);
  return out;
}

/// A prescription with one slot removed. `context` holds the remaining herbs in
/// order and the blank sits before context[blank]; blank == context.size()
/// places it at the end.
struct BlankedPrescription {
  std::vector<HerbId> context;
  std::size_t blank = 0;

  /// Reinserts `herb` at the blank.
  Prescription fill(HerbId herb) const;
};

struct PredictionItem {
  BlankedPrescription query;
  HerbId answer = Vocabulary::kUnk;
};

inline constexpr std::size_t kMinTestsetLength = 4;

/// Blanks position t of p. Requires t < p.size().
PredictionItem make_prediction_item(const Prescription& p, std::size_t t);

struct TestsetResult {
  std::vector<PredictionItem> items;
  std::vector<Diagnostic> warnings;
};

/// One item per prescription of length >= min_length, blank drawn uniformly
/// among its non-UNK positions.
TestsetResult make_prediction_testset(const std::vector<Prescription>& corpus, std::uint64_t seed,
                                      std::size_t min_length = kMinTestsetLength);

/// "h1 ___ h3 h4<TAB>answer" per line.
void write_testset(std::ostream& out, const std::vector<PredictionItem>& items,
                   const Vocabulary& vocab);
std::vector<PredictionItem> read_testset(std::istream& in, const Vocabulary& vocab);

}  // namespace herbvec
