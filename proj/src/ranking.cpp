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

#include "herbvec/ranking.hpp"

#include <algorithm>

namespace herbvec {

namespace {

bool excluded(std::span<const HerbId> exclude, HerbId id) {
  return std::find(exclude.begin(), exclude.end(), id) != exclude.end();
}

}  // namespace

std::vector<Neighbor> top_k_herbs(const Eigen::VectorXd& scores, std::size_t k,
                                  std::span<const HerbId> exclude) {
  std::vector<Neighbor> all;
  all.reserve(static_cast<std::size_t>(scores.size()));
  for (HerbId id = 1; id < static_cast<HerbId>(scores.size()); ++id)
    if (!excluded(exclude, id)) all.push_back({id, scores[id]});
  auto better = [](const Neighbor& a, const Neighbor& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  };
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
  all.resize(k);
  return all;
}

HerbId argmax_herb(const Eigen::VectorXd& scores, std::span<const HerbId> exclude) {
  HerbId best = Vocabulary::kUnk;
  for (HerbId id = 1; id < static_cast<HerbId>(scores.size()); ++id) {
    if (excluded(exclude, id)) continue;
    if (best == Vocabulary::kUnk || scores[id] > scores[best]) best = id;
  }
  return best;
}

}  // namespace herbvec
