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
#include <vector>

#include "herbvec/adam.hpp"
#include "herbvec/corpus.hpp"
#include "herbvec/embedding.hpp"
#include "herbvec/rng.hpp"

namespace herbvec {

class BinaryWriter;
class BinaryReader;
struct TrainConfig;

struct CbowConfig {
  Eigen::Index dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  double noise_power = 0.75;
  std::uint64_t init_seed = 0;
};

/// Noise over ids [0, vocab.size()) proportional to count^power.
class NoiseDistribution {
 public:
  NoiseDistribution() = default;
  NoiseDistribution(const Vocabulary& vocab, double power = 0.75);

  const std::vector<double>& probabilities() const noexcept { return probs_; }
  HerbId sample(Rng& rng) const;

 private:
  std::vector<double> probs_;
  std::vector<double> cumulative_;
};

/// k draws from `noise`, redrawing whenever `forbidden` comes up.
std::vector<HerbId> sample_negatives(const NoiseDistribution& noise, std::size_t k, HerbId forbidden,
                                     Rng& rng);

/// Up to `window` ids on each side of position t, truncated at the edges.
std::vector<HerbId> context_of(std::span<const HerbId> prescription, std::size_t t, std::size_t window);

struct CbowParams {
  Eigen::MatrixXd input;   // V x d, exported as the embedding
  Eigen::MatrixXd output;  // V x d
};

struct CbowGradients {
  double loss = 0.0;
  SparseRows input;
  SparseRows output;
};

/// L = -log s(u_t . h) - sum_j log s(-u_j . h), h = mean of context input rows.
/// Gradients cover only the rows involved.
CbowGradients ns_loss_and_grads(const CbowParams& params, std::span<const HerbId> context,
                                HerbId target, std::span<const HerbId> negatives);

class CbowModel {
 public:
  CbowModel() = default;

  /// Input rows ~ U(-0.5/d, 0.5/d), output rows zero.
  static CbowModel init(std::shared_ptr<const Vocabulary> vocab, CbowConfig config = {});

  const Vocabulary& vocab() const noexcept { return *vocab_; }
  std::shared_ptr<const Vocabulary> vocab_ptr() const noexcept { return vocab_; }
  const CbowConfig& config() const noexcept { return config_; }
  const CbowParams& params() const noexcept { return params_; }
  CbowParams& params() noexcept { return params_; }
  const NoiseDistribution& noise() const noexcept { return noise_; }

  /// Windowed CBOW pass over every (prescription, position) with a non-empty
  /// context, shuffled, one sparse Adam step per batch. Returns mean loss.
  double train_epoch(const std::vector<Prescription>& train, const TrainConfig& config, Rng& rng);

  /// u_c . h with h the mean input vector of every context herb (the whole
  /// prescription, not a window). All zeros for an empty context.
  Eigen::VectorXd scores(const BlankedPrescription& q) const;

  /// Argmax of scores over herbs not already present; ties by ascending id.
  HerbId predict_blank(const BlankedPrescription& q) const;

  EmbeddingMatrix embedding() const { return EmbeddingMatrix(vocab_, params_.input); }

  void save(BinaryWriter& w) const;
  static CbowModel load(BinaryReader& r, std::shared_ptr<const Vocabulary> vocab);

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  CbowConfig config_;
  CbowParams params_;
  NoiseDistribution noise_;
  AdamState adam_input_;
  AdamState adam_output_;
};

}  // namespace herbvec
