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
#include <string_view>
#include <vector>

#include "herbvec/adam.hpp"
#include "herbvec/corpus.hpp"
#include "herbvec/embedding.hpp"
#include "herbvec/rng.hpp"

namespace herbvec {

class BinaryWriter;
class BinaryReader;
struct TrainConfig;

/// Standard GRU:
///   z = s(Wz x + Uz h + bz),  r = s(Wr x + Ur h + br)
///   g = tanh(Wh x + Uh (r . h) + bh),  h' = (1 - z) . h + z . g
struct GruCell {
  Eigen::MatrixXd wz, uz, wr, ur, wh, uh;  // W*: hidden x input, U*: hidden x hidden
  Eigen::VectorXd bz, br, bh;

  static GruCell zeros(Eigen::Index input, Eigen::Index hidden);
  Eigen::Index input_size() const noexcept { return wz.cols(); }
  Eigen::Index hidden_size() const noexcept { return wz.rows(); }
};

/// Calls f(name, a.x, b.x) for every parameter of two same-shaped cells.
template <class A, class B, class F>
void visit_cells(A& a, B& b, F&& f) {
  f("wz", a.wz, b.wz);
  f("uz", a.uz, b.uz);
  f("bz", a.bz, b.bz);
  f("wr", a.wr, b.wr);
  f("ur", a.ur, b.ur);
  f("br", a.br, b.br);
  f("wh", a.wh, b.wh);
  f("uh", a.uh, b.uh);
  f("bh", a.bh, b.bh);
}

Eigen::VectorXd gru_step(const GruCell& cell, const Eigen::VectorXd& h_prev, const Eigen::VectorXd& x);

enum class LmMode : std::uint8_t { kRnnlm = 0, kPllm = 1 };

std::string_view to_string(LmMode mode);

struct NeuralLmParams {
  LmMode mode = LmMode::kPllm;
  Eigen::MatrixXd embedding;  // vocab.num_ids() x d; includes BOS/EOS rows
  GruCell forward;
  GruCell backward;
  Eigen::MatrixXd out_w;  // vocab.size() x 2*hidden
  Eigen::VectorXd out_b;  // vocab.size()

  Eigen::Index dim() const noexcept { return embedding.cols(); }
  Eigen::Index hidden() const noexcept { return forward.hidden_size(); }
  Eigen::Index outputs() const noexcept { return out_w.rows(); }
};

struct NeuralLmGradients {
  double loss = 0.0;
  SparseRows embedding;
  GruCell forward;
  GruCell backward;
  Eigen::MatrixXd out_w;
  Eigen::VectorXd out_b;

  static NeuralLmGradients zeros_like(const NeuralLmParams& p);
  void add(const NeuralLmGradients& other);
  void scale(double s);
  double squared_norm() const;
};

/// Ids fed to the forward and backward GRUs for a blanked prescription.
/// PLLM: the context with the blank spliced out, read in both directions.
/// RNNLM: BOS + herbs left of the blank, and EOS + herbs right of it reversed.
struct EncoderInputs {
  std::vector<HerbId> forward;
  std::vector<HerbId> backward;
};

EncoderInputs encoder_inputs(LmMode mode, const BlankedPrescription& q, const Vocabulary& vocab);

/// h_c = [final forward state; final backward state], zero initial states.
Eigen::VectorXd encode(const NeuralLmParams& params, const EncoderInputs& inputs);

/// PLLM encoding of `p` with position t blanked. Throws ConfigError when no
/// herb remains after splicing.
Eigen::VectorXd encode_pllm(const NeuralLmParams& params, const Prescription& p, std::size_t t);
Eigen::VectorXd encode_rnnlm(const NeuralLmParams& params, const Prescription& p, std::size_t t,
                             const Vocabulary& vocab);

/// W_o h_c + b_o.
Eigen::VectorXd logits(const NeuralLmParams& params, const Eigen::VectorXd& hc);

/// Max-subtracted softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// Cross-entropy of `target` with exact gradients by backpropagation through time.
NeuralLmGradients loss_and_grads(const NeuralLmParams& params, const BlankedPrescription& q,
                                 HerbId target, const Vocabulary& vocab);
NeuralLmGradients loss_and_grads(const NeuralLmParams& params, const Prescription& p, std::size_t t,
                                 const Vocabulary& vocab);

struct NeuralLmConfig {
  LmMode mode = LmMode::kPllm;
  Eigen::Index dim = 100;
  Eigen::Index hidden = 100;
  std::uint64_t init_seed = 0;
};

class NeuralLm {
 public:
  NeuralLm() = default;

  /// Dense weights ~ U(-0.08, 0.08), biases zero, embeddings ~ U(-0.5/d, 0.5/d).
  static NeuralLm init(std::shared_ptr<const Vocabulary> vocab, NeuralLmConfig config = {});

  const Vocabulary& vocab() const noexcept { return *vocab_; }
  std::shared_ptr<const Vocabulary> vocab_ptr() const noexcept { return vocab_; }
  const NeuralLmConfig& config() const noexcept { return config_; }
  LmMode mode() const noexcept { return params_.mode; }
  const NeuralLmParams& params() const noexcept { return params_; }
  NeuralLmParams& params() noexcept { return params_; }

  /// One pass over every (prescription, position) of prescriptions with at
  /// least two herbs, shuffled, averaged per batch, clipped to
  /// config.clip_norm, one Adam step per batch. Returns mean loss.
  double train_epoch(const std::vector<Prescription>& train, const TrainConfig& config, Rng& rng);

  /// Logits for every id in [0, vocab.size()). An empty PLLM context encodes
  /// to the zero vector, so the scores reduce to the output bias.
  Eigen::VectorXd scores(const BlankedPrescription& q) const;

  /// Argmax over herbs not already present; ties by ascending id.
  HerbId predict_blank(const BlankedPrescription& q) const;

  EmbeddingMatrix embedding() const;

  void save(BinaryWriter& w) const;
  static NeuralLm load(BinaryReader& r, std::shared_ptr<const Vocabulary> vocab);

 private:
  void apply(const NeuralLmGradients& g, const TrainConfig& config);

  std::shared_ptr<const Vocabulary> vocab_;
  NeuralLmConfig config_;
  NeuralLmParams params_;
  AdamState adam_embedding_;
  std::vector<AdamState> adam_dense_;
};

}  // namespace herbvec
