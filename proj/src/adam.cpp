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

#include "herbvec/adam.hpp"

#include <cmath>
#include <string>

#include "herbvec/error.hpp"

namespace herbvec {

void AdamConfig::validate() const {
  if (!(lr > 0)) throw ConfigError("adam: learning rate must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw ConfigError("adam: betas must lie in [0, 1)");
  if (!(eps >= 0)) throw ConfigError("adam: eps must be >= 0");
}

namespace {

template <class P, class G, class M>
void apply(P&& theta, const G& g, M&& m, M&& v, double bc1, double bc2, const AdamConfig& c) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
  theta.array() -= c.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
}

}  // namespace

void adam_update(Eigen::Ref<Eigen::MatrixXd> params, const Eigen::Ref<const Eigen::MatrixXd>& grads,
                 AdamState& state, const AdamConfig& c, std::string_view group) {
  if (params.rows() != grads.rows() || params.cols() != grads.cols())
    throw ConfigError("adam: gradient shape mismatch for '" + std::string(group) + "'");
  if (!grads.allFinite()) throw TrainingError("adam: non-finite gradient in '" + std::string(group) + "'");
  if (state.m.size() == 0) state = AdamState(params.rows(), params.cols());
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  apply(params, grads, state.m, state.v, bc1, bc2, c);
}

void adam_update_rows(Eigen::MatrixXd& params, const SparseRows& grads, AdamState& state,
                      const AdamConfig& c, std::string_view group) {
  if (state.m.size() == 0) state = AdamState(params.rows(), params.cols());
  for (const auto& [row, g] : grads) {
    if (row < 0 || row >= params.rows() || g.size() != params.cols())
      throw ConfigError("adam: sparse gradient shape mismatch for '" + std::string(group) + "'");
    if (!g.allFinite())
      throw TrainingError("adam: non-finite gradient in '" + std::string(group) + "' row " +
                          std::to_string(row));
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (const auto& [row, g] : grads) {
    Eigen::VectorXd m = state.m.row(row).transpose();
    Eigen::VectorXd v = state.v.row(row).transpose();
    Eigen::VectorXd theta = params.row(row).transpose();
    apply(theta, g, m, v, bc1, bc2, c);
    params.row(row) = theta.transpose();
    state.m.row(row) = m.transpose();
    state.v.row(row) = v.transpose();
  }
}

}  // namespace herbvec
