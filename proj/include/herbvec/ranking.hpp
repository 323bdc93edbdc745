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
#include <span>
#include <vector>

#include "herbvec/corpus.hpp"
#include "herbvec/embedding.hpp"

namespace herbvec {

/// Top-k herb ids (1..scores.size()-1, never UNK) by descending score, ties by
/// ascending id, skipping `exclude`.
std::vector<Neighbor> top_k_herbs(const Eigen::VectorXd& scores, std::size_t k,
                                  std::span<const HerbId> exclude = {});

/// Best herb under the same ordering; UNK if every herb is excluded.
HerbId argmax_herb(const Eigen::VectorXd& scores, std::span<const HerbId> exclude = {});

}  // namespace herbvec
