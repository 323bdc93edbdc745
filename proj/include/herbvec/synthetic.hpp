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
#include <string>
#include <vector>

#include "herbvec/corpus.hpp"
#include "herbvec/evaluation.hpp"

namespace herbvec {

/// Corpus with planted cluster structure: each prescription picks a cluster
/// and draws distinct herbs from it with probability `intra`, otherwise from
/// the other clusters. Within a cluster, herb j has popularity 1/(j+1)^exponent
/// (exponent 0 gives uniform draws).
struct PlantedConfig {
  int clusters = 10;
  int herbs_per_cluster = 20;
  std::size_t prescriptions = 5000;
  std::size_t min_length = 6;
  std::size_t max_length = 10;
  double intra = 0.9;
  double popularity_exponent = 1.0;
  std::uint64_t seed = 0;
};

struct PlantedCorpus {
  PlantedConfig config;
  std::vector<RawPrescription> prescriptions;

  static std::string herb_name(int cluster, int index);
  /// Cluster of a herb name produced by herb_name, or -1.
  static int cluster_of(const std::string& herb);
};

PlantedCorpus make_planted_corpus(const PlantedConfig& config);

/// Gold 5 for same-cluster pairs and 1 otherwise; `intra_pairs` and
/// `inter_pairs` distinct pairs of each kind, sampled with `seed`.
SimilarityBenchmark make_planted_benchmark(const PlantedConfig& config, std::size_t intra_pairs,
                                           std::size_t inter_pairs, std::uint64_t seed);

}  // namespace herbvec
