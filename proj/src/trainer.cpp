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

#include "herbvec/trainer.hpp"

namespace herbvec {

void TrainConfig::validate() const {
  adam.validate();
  if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  if (max_epochs < 1) throw ConfigError("train: max epochs must be >= 1");
  if (patience < 1) throw ConfigError("train: patience must be >= 1");
  if (!(clip_norm > 0)) throw ConfigError("train: clip norm must be positive");
}

}  // namespace herbvec
