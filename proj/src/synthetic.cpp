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

#include "herbvec/synthetic.hpp"

#include <cmath>
#include <set>

#include "herbvec/error.hpp"
#include "herbvec/rng.hpp"

namespace herbvec {

std::string PlantedCorpus::herb_name(int cluster, int index) {
  return "c" + std::to_string(cluster) + "h" + std::to_string(index);
}

int PlantedCorpus::cluster_of(const std::string& herb) {
  if (herb.size() < 4 || herb[0] != 'c') return -1;
  auto h = herb.find('h');
  if (h == std::string::npos || h < 2) return -1;
  try {
    return std::stoi(herb.substr(1, h - 1));
  } catch (const std::exception&) {
    return -1;
  }
}

PlantedCorpus make_planted_corpus(const PlantedConfig& c) {
  if (c.clusters < 2 || c.herbs_per_cluster < 1) throw ConfigError("planted: need >= 2 clusters of >= 1 herb");
  if (c.min_length < 1 || c.min_length > c.max_length) throw ConfigError("planted: bad length range");
  if (c.max_length > static_cast<std::size_t>(c.herbs_per_cluster * c.clusters))
    throw ConfigError("planted: prescriptions longer than the herb inventory");
  if (!(c.intra >= 0 && c.intra <= 1)) throw ConfigError("planted: intra must lie in [0, 1]");

  std::vector<double> cumulative(static_cast<std::size_t>(c.herbs_per_cluster));
  double acc = 0;
  for (int j = 0; j < c.herbs_per_cluster; ++j) {
    acc += std::pow(static_cast<double>(j + 1), -c.popularity_exponent);
    cumulative[static_cast<std::size_t>(j)] = acc;
  }
  Rng rng(c.seed);
  auto draw_index = [&] {
    const double u = uniform01(rng) * acc;
    int j = 0;
    while (j + 1 < c.herbs_per_cluster && cumulative[static_cast<std::size_t>(j)] <= u) ++j;
    return j;
  };

  PlantedCorpus out;
  out.config = c;
  out.prescriptions.reserve(c.prescriptions);
  for (std::size_t p = 0; p < c.prescriptions; ++p) {
    const int cluster = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(c.clusters)));
    const std::size_t len =
        c.min_length + static_cast<std::size_t>(uniform_index(rng, c.max_length - c.min_length + 1));
    std::set<std::pair<int, int>> used;
    RawPrescription rx;
    while (rx.herbs.size() < len) {
      int k = cluster;
      if (uniform01(rng) >= c.intra) {
        k = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(c.clusters - 1)));
        if (k >= cluster) ++k;
      }
      const int j = draw_index();
      if (!used.insert({k, j}).second) continue;
      rx.herbs.push_back(PlantedCorpus::herb_name(k, j));
    }
    out.prescriptions.push_back(std::move(rx));
  }
  return out;
}

SimilarityBenchmark make_planted_benchmark(const PlantedConfig& c, std::size_t intra_pairs,
                                           std::size_t inter_pairs, std::uint64_t seed) {
  Rng rng(seed);
  std::set<std::pair<std::string, std::string>> seen;
  SimilarityBenchmark out;
  auto herb = [&](int k) {
    return std::make_pair(k, static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(c.herbs_per_cluster))));
  };
  auto add = [&](std::size_t want, bool same) {
    std::size_t got = 0, attempts = 0;
    while (got < want) {
      if (++attempts > 1000000) throw ConfigError("planted benchmark: not enough distinct pairs");
      const int k1 = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(c.clusters)));
      int k2 = k1;
      if (!same) {
        k2 = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(c.clusters - 1)));
        if (k2 >= k1) ++k2;
      }
      auto a = herb(k1), b = herb(k2);
      if (a == b) continue;
      auto s1 = PlantedCorpus::herb_name(a.first, a.second);
      auto s2 = PlantedCorpus::herb_name(b.first, b.second);
      if (!seen.insert(s1 < s2 ? std::make_pair(s1, s2) : std::make_pair(s2, s1)).second) continue;
      out.push_back({s1, s2, same ? 5.0 : 1.0});
      ++got;
    }
  };
  add(intra_pairs, true);
  add(inter_pairs, false);
  return out;
}

}  // namespace herbvec
