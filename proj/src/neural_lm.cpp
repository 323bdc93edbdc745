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

#include "herbvec/neural_lm.hpp"

#include <algorithm>
#include <cmath>

#include "herbvec/error.hpp"
#include "herbvec/ranking.hpp"
#include "herbvec/serialize.hpp"
#include "herbvec/trainer.hpp"

namespace herbvec {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& a) {
  return (1.0 + (-a.array()).exp()).inverse().matrix();
}

struct StepTrace {
  HerbId id;
  Eigen::VectorXd h_prev, z, r, g, h;
};

Eigen::VectorXd run_gru(const GruCell& cell, const Eigen::MatrixXd& embedding,
                        std::span<const HerbId> ids, std::vector<StepTrace>* trace) {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(cell.hidden_size());
  if (trace) trace->clear();
  for (auto id : ids) {
    const Eigen::VectorXd x = embedding.row(id).transpose();
    Eigen::VectorXd z = sigmoid(cell.wz * x + cell.uz * h + cell.bz);
    Eigen::VectorXd r = sigmoid(cell.wr * x + cell.ur * h + cell.br);
    Eigen::VectorXd g = (cell.wh * x + cell.uh * r.cwiseProduct(h) + cell.bh).array().tanh().matrix();
    Eigen::VectorXd next = (1.0 - z.array()).matrix().cwiseProduct(h) + z.cwiseProduct(g);
    if (trace) trace->push_back({id, h, std::move(z), std::move(r), std::move(g), next});
    h = std::move(next);
  }
  return h;
}

void accumulate(SparseRows& rows, HerbId id, const Eigen::VectorXd& g) {
  auto [it, inserted] = rows.try_emplace(id, g);
  if (!inserted) it->second += g;
}

// Backpropagates dh (gradient w.r.t. the final state) through a recorded run.
void backprop_gru(const GruCell& cell, const Eigen::MatrixXd& embedding,
                  const std::vector<StepTrace>& trace, Eigen::VectorXd dh, GruCell& grad,
                  SparseRows& embedding_grad) {
  for (auto it = trace.rbegin(); it != trace.rend(); ++it) {
    const auto& s = *it;
    const Eigen::VectorXd x = embedding.row(s.id).transpose();
    const Eigen::VectorXd dz = dh.cwiseProduct(s.g - s.h_prev);
    const Eigen::VectorXd dg = dh.cwiseProduct(s.z);
    Eigen::VectorXd dh_prev = dh.cwiseProduct((1.0 - s.z.array()).matrix());

    const Eigen::VectorXd da_g = dg.cwiseProduct((1.0 - s.g.array().square()).matrix());
    const Eigen::VectorXd rh = s.r.cwiseProduct(s.h_prev);
    grad.wh.noalias() += da_g * x.transpose();
    grad.uh.noalias() += da_g * rh.transpose();
    grad.bh += da_g;
    Eigen::VectorXd dx = cell.wh.transpose() * da_g;
    const Eigen::VectorXd drh = cell.uh.transpose() * da_g;
    const Eigen::VectorXd dr = drh.cwiseProduct(s.h_prev);
    dh_prev += drh.cwiseProduct(s.r);

    const Eigen::VectorXd da_z = dz.cwiseProduct(s.z).cwiseProduct((1.0 - s.z.array()).matrix());
    const Eigen::VectorXd da_r = dr.cwiseProduct(s.r).cwiseProduct((1.0 - s.r.array()).matrix());
    grad.wz.noalias() += da_z * x.transpose();
    grad.uz.noalias() += da_z * s.h_prev.transpose();
    grad.bz += da_z;
    grad.wr.noalias() += da_r * x.transpose();
    grad.ur.noalias() += da_r * s.h_prev.transpose();
    grad.br += da_r;
    dx.noalias() += cell.wz.transpose() * da_z + cell.wr.transpose() * da_r;
    dh_prev.noalias() += cell.uz.transpose() * da_z + cell.ur.transpose() * da_r;

    accumulate(embedding_grad, s.id, dx);
    dh = std::move(dh_prev);
  }
}

void fill_uniform(Eigen::MatrixXd& m, Rng& rng, double r) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = uniform(rng, -r, r);
}

GruCell random_cell(Eigen::Index input, Eigen::Index hidden, Rng& rng) {
  GruCell c = GruCell::zeros(input, hidden);
  for (auto* m : {&c.wz, &c.uz, &c.wr, &c.ur, &c.wh, &c.uh}) fill_uniform(*m, rng, 0.08);
  return c;
}

void write_cell(BinaryWriter& w, const GruCell& c) {
  for (auto* m : {&c.wz, &c.uz, &c.wr, &c.ur, &c.wh, &c.uh}) w.matrix(*m);
  for (auto* b : {&c.bz, &c.br, &c.bh}) w.vector(*b);
}

GruCell read_cell(BinaryReader& r) {
  GruCell c;
  for (auto* m : {&c.wz, &c.uz, &c.wr, &c.ur, &c.wh, &c.uh}) *m = r.matrix();
  for (auto* b : {&c.bz, &c.br, &c.bh}) *b = r.vector();
  return c;
}

bool cell_shape_ok(const GruCell& c, Eigen::Index in, Eigen::Index hid) {
  for (auto* m : {&c.wz, &c.wr, &c.wh})
    if (m->rows() != hid || m->cols() != in) return false;
  for (auto* m : {&c.uz, &c.ur, &c.uh})
    if (m->rows() != hid || m->cols() != hid) return false;
  for (auto* b : {&c.bz, &c.br, &c.bh})
    if (b->size() != hid) return false;
  return true;
}

}  // namespace

GruCell GruCell::zeros(Eigen::Index input, Eigen::Index hidden) {
  GruCell c;
  for (auto* m : {&c.wz, &c.wr, &c.wh}) *m = Eigen::MatrixXd::Zero(hidden, input);
  for (auto* m : {&c.uz, &c.ur, &c.uh}) *m = Eigen::MatrixXd::Zero(hidden, hidden);
  for (auto* b : {&c.bz, &c.br, &c.bh}) *b = Eigen::VectorXd::Zero(hidden);
  return c;
}

Eigen::VectorXd gru_step(const GruCell& cell, const Eigen::VectorXd& h_prev, const Eigen::VectorXd& x) {
  if (x.size() != cell.input_size() || h_prev.size() != cell.hidden_size())
    throw ConfigError("gru_step: dimension mismatch");
  const Eigen::VectorXd z = sigmoid(cell.wz * x + cell.uz * h_prev + cell.bz);
  const Eigen::VectorXd r = sigmoid(cell.wr * x + cell.ur * h_prev + cell.br);
  const Eigen::VectorXd g =
      (cell.wh * x + cell.uh * r.cwiseProduct(h_prev) + cell.bh).array().tanh().matrix();
  return (1.0 - z.array()).matrix().cwiseProduct(h_prev) + z.cwiseProduct(g);
}

std::string_view to_string(LmMode mode) { return mode == LmMode::kPllm ? "pllm" : "rnnlm"; }

NeuralLmGradients NeuralLmGradients::zeros_like(const NeuralLmParams& p) {
  NeuralLmGradients g;
  g.forward = GruCell::zeros(p.dim(), p.hidden());
  g.backward = GruCell::zeros(p.dim(), p.hidden());
  g.out_w = Eigen::MatrixXd::Zero(p.out_w.rows(), p.out_w.cols());
  g.out_b = Eigen::VectorXd::Zero(p.out_b.size());
  return g;
}

void NeuralLmGradients::add(const NeuralLmGradients& o) {
  loss += o.loss;
  for (const auto& [id, v] : o.embedding) accumulate(embedding, id, v);
  auto sum = [](auto, auto& a, const auto& b) { a += b; };
  visit_cells(forward, o.forward, sum);
  visit_cells(backward, o.backward, sum);
  out_w += o.out_w;
  out_b += o.out_b;
}

void NeuralLmGradients::scale(double s) {
  loss *= s;
  for (auto& [id, v] : embedding) v *= s;
  auto mul = [s](auto, auto& a, auto&) { a *= s; };
  visit_cells(forward, forward, mul);
  visit_cells(backward, backward, mul);
  out_w *= s;
  out_b *= s;
}

double NeuralLmGradients::squared_norm() const {
  double total = 0.0;
  for (const auto& [id, v] : embedding) total += v.squaredNorm();
  auto add_sq = [&total](auto, const auto& a, const auto&) { total += a.squaredNorm(); };
  visit_cells(forward, forward, add_sq);
  visit_cells(backward, backward, add_sq);
  return total + out_w.squaredNorm() + out_b.squaredNorm();
}

EncoderInputs encoder_inputs(LmMode mode, const BlankedPrescription& q, const Vocabulary& vocab) {
  if (q.blank > q.context.size()) throw ConfigError("encoder_inputs: blank position out of range");
  EncoderInputs in;
  const auto blank = static_cast<std::ptrdiff_t>(q.blank);
  if (mode == LmMode::kPllm) {
    in.forward = q.context;
    in.backward.assign(q.context.rbegin(), q.context.rend());
  } else {
    in.forward.push_back(vocab.bos());
    in.forward.insert(in.forward.end(), q.context.begin(), q.context.begin() + blank);
    in.backward.push_back(vocab.eos());
    in.backward.insert(in.backward.end(), q.context.rbegin(),
                       q.context.rbegin() + static_cast<std::ptrdiff_t>(q.context.size()) - blank);
  }
  return in;
}

Eigen::VectorXd encode(const NeuralLmParams& params, const EncoderInputs& inputs) {
  const Eigen::Index hid = params.hidden();
  Eigen::VectorXd hc(2 * hid);
  hc.head(hid) = run_gru(params.forward, params.embedding, inputs.forward, nullptr);
  hc.tail(hid) = run_gru(params.backward, params.embedding, inputs.backward, nullptr);
  return hc;
}

Eigen::VectorXd encode_pllm(const NeuralLmParams& params, const Prescription& p, std::size_t t) {
  if (p.size() < 2) throw ConfigError("encode_pllm: prescription has no context herb");
  const auto item = make_prediction_item(p, t);
  return encode(params, {item.query.context, {item.query.context.rbegin(), item.query.context.rend()}});
}

Eigen::VectorXd encode_rnnlm(const NeuralLmParams& params, const Prescription& p, std::size_t t,
                             const Vocabulary& vocab) {
  const auto item = make_prediction_item(p, t);
  return encode(params, encoder_inputs(LmMode::kRnnlm, item.query, vocab));
}

Eigen::VectorXd logits(const NeuralLmParams& params, const Eigen::VectorXd& hc) {
  if (hc.size() != params.out_w.cols()) throw ConfigError("logits: context vector dimension mismatch");
  return params.out_w * hc + params.out_b;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& l) {
  const Eigen::ArrayXd e = (l.array() - l.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

NeuralLmGradients loss_and_grads(const NeuralLmParams& params, const BlankedPrescription& q,
                                 HerbId target, const Vocabulary& vocab) {
  if (target < 0 || target >= params.outputs()) throw ConfigError("loss_and_grads: target is not an output id");
  const auto in = encoder_inputs(params.mode, q, vocab);
  if (params.mode == LmMode::kPllm && in.forward.empty())
    throw ConfigError("loss_and_grads: PLLM item has no context herb");

  std::vector<StepTrace> fwd, bwd;
  const Eigen::Index hid = params.hidden();
  Eigen::VectorXd hc(2 * hid);
  hc.head(hid) = run_gru(params.forward, params.embedding, in.forward, &fwd);
  hc.tail(hid) = run_gru(params.backward, params.embedding, in.backward, &bwd);

  const Eigen::VectorXd l = logits(params, hc);
  const double m = l.maxCoeff();
  const double lse = m + std::log((l.array() - m).exp().sum());

  NeuralLmGradients g = NeuralLmGradients::zeros_like(params);
  g.loss = lse - l[target];
  Eigen::VectorXd dl = (l.array() - lse).exp().matrix();
  dl[target] -= 1.0;
  g.out_w.noalias() = dl * hc.transpose();
  g.out_b = dl;
  const Eigen::VectorXd dhc = params.out_w.transpose() * dl;
  backprop_gru(params.forward, params.embedding, fwd, dhc.head(hid), g.forward, g.embedding);
  backprop_gru(params.backward, params.embedding, bwd, dhc.tail(hid), g.backward, g.embedding);
  return g;
}

NeuralLmGradients loss_and_grads(const NeuralLmParams& params, const Prescription& p, std::size_t t,
                                 const Vocabulary& vocab) {
  const auto item = make_prediction_item(p, t);
  return loss_and_grads(params, item.query, item.answer, vocab);
}

NeuralLm NeuralLm::init(std::shared_ptr<const Vocabulary> vocab, NeuralLmConfig config) {
  if (!vocab) throw ConfigError("neural_lm: null vocabulary");
  if (config.dim < 1 || config.hidden < 1) throw ConfigError("neural_lm: dim and hidden must be >= 1");
  NeuralLm m;
  m.vocab_ = std::move(vocab);
  m.config_ = config;
  Rng rng(config.init_seed);
  auto& p = m.params_;
  p.mode = config.mode;
  p.embedding.resize(static_cast<Eigen::Index>(m.vocab_->num_ids()), config.dim);
  fill_uniform(p.embedding, rng, 0.5 / static_cast<double>(config.dim));
  p.forward = random_cell(config.dim, config.hidden, rng);
  p.backward = random_cell(config.dim, config.hidden, rng);
  p.out_w.resize(static_cast<Eigen::Index>(m.vocab_->size()), 2 * config.hidden);
  fill_uniform(p.out_w, rng, 0.08);
  p.out_b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.vocab_->size()));
  return m;
}

void NeuralLm::apply(const NeuralLmGradients& g, const TrainConfig& tc) {
  adam_update_rows(params_.embedding, g.embedding, adam_embedding_, tc.adam, "embedding");
  if (adam_dense_.empty()) adam_dense_.resize(20);
  std::size_t slot = 0;
  auto step = [&](std::string_view name, auto& param, const auto& grad) {
    adam_update(param, grad, adam_dense_[slot++], tc.adam, name);
  };
  visit_cells(params_.forward, g.forward, step);
  visit_cells(params_.backward, g.backward, step);
  step("out_w", params_.out_w, g.out_w);
  step("out_b", params_.out_b, g.out_b);
}

double NeuralLm::train_epoch(const std::vector<Prescription>& train, const TrainConfig& tc, Rng& rng) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> examples;
  for (std::size_t p = 0; p < train.size(); ++p)
    if (train[p].size() >= 2)
      for (std::size_t t = 0; t < train[p].size(); ++t)
        examples.emplace_back(static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(t));
  if (examples.empty()) throw ConfigError("neural_lm: no prescription with at least two herbs");
  shuffle(examples, rng);

  double total_loss = 0.0;
  for (std::size_t start = 0; start < examples.size(); start += tc.batch_size) {
    const std::size_t end = std::min(examples.size(), start + tc.batch_size);
    NeuralLmGradients batch = NeuralLmGradients::zeros_like(params_);
    for (std::size_t e = start; e < end; ++e) {
      const auto g = loss_and_grads(params_, train[examples[e].first], examples[e].second, *vocab_);
      if (!std::isfinite(g.loss))
        throw TrainingError("neural_lm: non-finite loss at example " + std::to_string(e));
      batch.add(g);
    }
    total_loss += batch.loss;
    batch.scale(1.0 / static_cast<double>(end - start));
    const double norm = std::sqrt(batch.squared_norm());
    if (norm > tc.clip_norm) batch.scale(tc.clip_norm / norm);
    apply(batch, tc);
  }
  return total_loss / static_cast<double>(examples.size());
}

Eigen::VectorXd NeuralLm::scores(const BlankedPrescription& q) const {
  return logits(params_, encode(params_, encoder_inputs(params_.mode, q, *vocab_)));
}

HerbId NeuralLm::predict_blank(const BlankedPrescription& q) const {
  return argmax_herb(scores(q), q.context);
}

EmbeddingMatrix NeuralLm::embedding() const {
  return EmbeddingMatrix(vocab_, params_.embedding.topRows(static_cast<Eigen::Index>(vocab_->size())));
}

void NeuralLm::save(BinaryWriter& w) const {
  w.u8(static_cast<std::uint8_t>(params_.mode));
  w.u64(static_cast<std::uint64_t>(config_.dim));
  w.u64(static_cast<std::uint64_t>(config_.hidden));
  w.u64(config_.init_seed);
  w.matrix(params_.embedding);
  write_cell(w, params_.forward);
  write_cell(w, params_.backward);
  w.matrix(params_.out_w);
  w.vector(params_.out_b);
}

NeuralLm NeuralLm::load(BinaryReader& r, std::shared_ptr<const Vocabulary> vocab) {
  NeuralLm m;
  m.vocab_ = std::move(vocab);
  const auto mode = r.u8();
  if (mode > 1) throw CheckpointError("checkpoint: unknown neural mode");
  m.config_.mode = static_cast<LmMode>(mode);
  m.config_.dim = static_cast<Eigen::Index>(r.u64());
  m.config_.hidden = static_cast<Eigen::Index>(r.u64());
  m.config_.init_seed = r.u64();
  auto& p = m.params_;
  p.mode = m.config_.mode;
  p.embedding = r.matrix();
  p.forward = read_cell(r);
  p.backward = read_cell(r);
  p.out_w = r.matrix();
  p.out_b = r.vector();
  const auto d = m.config_.dim, h = m.config_.hidden;
  const auto v = static_cast<Eigen::Index>(m.vocab_->size());
  if (p.embedding.rows() != static_cast<Eigen::Index>(m.vocab_->num_ids()) || p.embedding.cols() != d ||
      !cell_shape_ok(p.forward, d, h) || !cell_shape_ok(p.backward, d, h) || p.out_w.rows() != v ||
      p.out_w.cols() != 2 * h || p.out_b.size() != v)
    throw CheckpointError("checkpoint: neural parameter shapes do not match vocabulary/config");
  return m;
}

}  // namespace herbvec
