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

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "herbvec/adam.hpp"
#include "herbvec/corpus.hpp"
#include "herbvec/error.hpp"
#include "herbvec/evaluation.hpp"
#include "herbvec/rng.hpp"

namespace herbvec {

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 32;
  int max_epochs = 50;
  int patience = 3;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;  // global L2 clip per batch; recurrent models only

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double dev_accuracy = 0.0;
};

/// Tracks the running best dev accuracy. A "failure to increase" is any epoch
/// whose accuracy is not strictly above the best so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Records an epoch result; returns true when training should stop.
  bool update(int epoch, double accuracy) {
    if (best_epoch_ == 0 || accuracy > best_) {
      best_ = accuracy;
      best_epoch_ = epoch;
      stale_ = 0;
    } else {
      ++stale_;
    }
    return stale_ >= patience_;
  }

  bool improved_at(int epoch) const { return best_epoch_ == epoch; }
  int best_epoch() const noexcept { return best_epoch_; }
  double best() const noexcept { return best_; }

 private:
  int patience_;
  int best_epoch_ = 0;
  int stale_ = 0;
  double best_ = 0.0;
};

template <class Model>
struct FitResult {
  Model model;  // snapshot from the best dev epoch
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_accuracy = 0.0;
};

/// Generic training loop. `Model` provides
///   double train_epoch(const std::vector<Prescription>&, const TrainConfig&, Rng&)
///   HerbId predict_blank(const BlankedPrescription&) const
/// and is copyable. One Rng seeded from config.seed drives every epoch.
template <class Model>
FitResult<Model> fit(Model model, const std::vector<Prescription>& train,
                     const std::vector<PredictionItem>& dev, const TrainConfig& config) {
  config.validate();
  if (dev.empty()) throw ConfigError("fit: development set is empty");
  Rng rng(config.seed);
  EarlyStopping stopper(config.patience);
  FitResult<Model> result{model, {}, 0, 0.0};
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double loss = model.train_epoch(train, config, rng);
    if (!std::isfinite(loss)) throw TrainingError("fit: non-finite loss in epoch " + std::to_string(epoch));
    const double acc = eval_prediction(model, dev);
    result.history.push_back({epoch, loss, acc});
    const bool stop = stopper.update(epoch, acc);
    if (stopper.improved_at(epoch)) result.model = model;
    if (stop) break;
  }
  result.best_epoch = stopper.best_epoch();
  result.best_accuracy = stopper.best();
  return result;
}

}  // namespace herbvec
