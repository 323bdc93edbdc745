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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "herbvec/cbow.hpp"
#include "herbvec/embedding.hpp"
#include "herbvec/error.hpp"
#include "herbvec/lsa.hpp"
#include "herbvec/neural_lm.hpp"
#include "herbvec/ngram.hpp"

namespace herbvec {

using TrainedModel = std::variant<NgramModel, LsaModel, CbowModel, NeuralLm>;

enum class ModelTag : std::uint32_t { kNgram = 1, kLsa = 2, kCbow = 3, kNeural = 4 };

ModelTag tag_of(const TrainedModel& m);

/// "ngram", "lsa", "cbow", "rnnlm" or "pllm".
std::string kind_of(const TrainedModel& m);

const Vocabulary& vocab_of(const TrainedModel& m);

/// Embedding dimension; 0 for the n-gram model.
long dims_of(const TrainedModel& m);

/// Herb vectors, or nullopt for the n-gram model.
std::optional<EmbeddingMatrix> embeddings_of(const TrainedModel& m);

HerbId predict_blank(const TrainedModel& m, const BlankedPrescription& q);

/// One score per id in [0, vocab.size()) for a blank appended after the last
/// herb of `draft` (the next-herb position of an unfinished prescription).
Eigen::VectorXd next_herb_scores(const TrainedModel& m, const std::vector<HerbId>& draft);

/// The model's own prediction for that position, skipping herbs in the draft.
HerbId predict_next(const TrainedModel& m, const std::vector<HerbId>& draft);

struct CheckpointMeta {
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();  // free-form record
};

struct Checkpoint {
  TrainedModel model;
  CheckpointMeta meta;
};

inline constexpr std::string_view kCheckpointMagic{"HERBVEC\0", 8};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// magic | u32 version | u32 tag | config JSON | u64 seed | vocabulary |
/// model payload | u32 CRC-32 of everything before it. Little-endian.
std::vector<std::uint8_t> serialize_checkpoint(const TrainedModel& model, const CheckpointMeta& meta);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path,
                     const CheckpointMeta& meta = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Loads and requires a specific model type; throws CheckpointError on a tag mismatch.
template <class Model>
Model load_checkpoint_as(const std::filesystem::path& path) {
  auto ck = load_checkpoint(path);
  if (auto* m = std::get_if<Model>(&ck.model)) return std::move(*m);
  throw CheckpointError("checkpoint: '" + path.string() + "' holds a " + kind_of(ck.model) +
                        " model, not the requested type");
}

}  // namespace herbvec
