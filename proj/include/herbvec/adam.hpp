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
#include <map>
#include <string_view>

#include "herbvec/corpus.hpp"

namespace herbvec {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// Moments for one parameter group. `step` counts updates applied to the
/// group and drives bias correction.
struct AdamState {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;
  std::int64_t step = 0;

  AdamState() = default;
  AdamState(Eigen::Index rows, Eigen::Index cols)
      : m(Eigen::MatrixXd::Zero(rows, cols)), v(Eigen::MatrixXd::Zero(rows, cols)) {}
};

/// Gradient rows keyed by id; ordered so updates are applied deterministically.
using SparseRows = std::map<HerbId, Eigen::VectorXd>;

/// m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;
/// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).
/// Throws TrainingError naming `group` on a non-finite gradient.
void adam_update(Eigen::Ref<Eigen::MatrixXd> params, const Eigen::Ref<const Eigen::MatrixXd>& grads,
                 AdamState& state, const AdamConfig& config, std::string_view group);

/// Same rule restricted to the rows present in `grads`; moments of other rows
/// are left untouched (lazy Adam).
void adam_update_rows(Eigen::MatrixXd& params, const SparseRows& grads, AdamState& state,
                      const AdamConfig& config, std::string_view group);

}  // namespace herbvec
