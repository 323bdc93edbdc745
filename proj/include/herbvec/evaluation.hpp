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

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "herbvec/corpus.hpp"
#include "herbvec/embedding.hpp"
#include "herbvec/error.hpp"
#include "herbvec/ranking.hpp"

namespace herbvec {

struct BenchmarkPair {
  std::string herb1;
  std::string herb2;
  double score = 0.0;  // gold similarity in [1, 5]
};

using SimilarityBenchmark = std::vector<BenchmarkPair>;

struct AnnotationRow {
  std::string herb1;
  std::string herb2;
  std::vector<int> scores;  // one per annotator, each in [1, 5]

  double mean() const;
  /// Population standard deviation.
  double stddev() const;
};

using AnnotationSet = std::vector<AnnotationRow>;

/// Orders rows by ascending score spread (then mean, then pair), keeps the
/// first `keep`, and averages each row into a gold score. Throws ConfigError
/// when fewer than `keep` rows are supplied and DataError on invalid rows.
SimilarityBenchmark build_benchmark(const AnnotationSet& annotations, std::size_t keep = 80);

/// `n` distinct unordered herb pairs sampled uniformly without replacement.
std::vector<std::pair<HerbId, HerbId>> generate_candidate_pairs(const Vocabulary& vocab,
                                                                std::size_t n = 120,
                                                                std::uint64_t seed = 0);

/// Average ranks (1-based); ties share the mean of their rank range.
std::vector<double> average_ranks(std::span<const double> xs);

/// Pearson correlation of average ranks. Throws UndefinedError when either
/// input is constant and ConfigError on length mismatch or n < 2.
double spearman(std::span<const double> xs, std::span<const double> ys);

struct SimilarityResult {
  double rho = 0.0;
  std::size_t evaluated = 0;
  std::size_t total = 0;

  double coverage() const { return total ? static_cast<double>(evaluated) / static_cast<double>(total) : 0.0; }
};

/// Cosine per pair against gold scores. Pairs with an out-of-vocabulary herb
/// (or a zero vector) are dropped and reflected in coverage.
SimilarityResult eval_similarity(const EmbeddingMatrix& emb, const SimilarityBenchmark& benchmark);

/// Top-1 accuracy of `model.predict_blank` over `testset`.
template <class Model>
double eval_prediction(const Model& model, const std::vector<PredictionItem>& testset) {
  if (testset.empty()) throw ConfigError("eval_prediction: empty test set");
  std::size_t hits = 0;
  for (const auto& item : testset)
    if (model.predict_blank(item.query) == item.answer) ++hits;
  return static_cast<double>(hits) / static_cast<double>(testset.size());
}

/// Diagnostic: fraction of items whose answer is among the top-k herbs of
/// `model.scores`, skipping herbs already in the context.
template <class Model>
double eval_prediction_topk(const Model& model, const std::vector<PredictionItem>& testset,
                            std::size_t k) {
  if (testset.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& item : testset)
    for (const auto& n : top_k_herbs(model.scores(item.query), k, item.query.context))
      if (n.id == item.answer) {
        ++hits;
        break;
      }
  return static_cast<double>(hits) / static_cast<double>(testset.size());
}

/// TSV "herb1<TAB>herb2<TAB>score".
SimilarityBenchmark read_benchmark(std::istream& in);
void write_benchmark(std::ostream& out, const SimilarityBenchmark& benchmark);

/// TSV "herb1<TAB>herb2<TAB>s1<TAB>s2<TAB>s3" (at least two scores).
AnnotationSet read_annotations(std::istream& in);

struct EvalReport {
  std::string model;
  double rho = 0.0;
  double coverage = 0.0;
  double accuracy = 0.0;
  std::size_t n = 0;
  bool has_rho = false;
  bool has_accuracy = false;
};

/// {"model", "rho", "coverage", "accuracy", "n"}; absent metrics are null.
std::string to_json(const EvalReport& report);

}  // namespace herbvec
