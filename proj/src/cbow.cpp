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

#include "herbvec/cbow.hpp"

#include <algorithm>
#include <cmath>

#include "herbvec/error.hpp"
#include "herbvec/ranking.hpp"
#include "herbvec/serialize.hpp"
#include "herbvec/trainer.hpp"

namespace herbvec {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// -log sigmoid(x), stable for large |x|.
double neg_log_sigmoid(double x) { return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x)); }

void accumulate(SparseRows& rows, HerbId id, const Eigen::VectorXd& g) {
  auto [it, inserted] = rows.try_emplace(id, g);
  if (!inserted) it->second += g;
}

}  // namespace

NoiseDistribution::NoiseDistribution(const Vocabulary& vocab, double power) {
  probs_.assign(vocab.size(), 0.0);
  double total = 0.0;
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    probs_[id] = std::pow(static_cast<double>(vocab.count(static_cast<HerbId>(id))), power);
    total += probs_[id];
  }
  if (total == 0.0) {
    // No counts (e.g. a vocabulary read back from an embedding file): uniform over herbs.
    for (std::size_t id = 1; id < probs_.size(); ++id) probs_[id] = 1.0;
    total = static_cast<double>(probs_.size() - 1);
  }
  cumulative_.resize(probs_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    probs_[i] /= total;
    acc += probs_[i];
    cumulative_[i] = acc;
  }
}

HerbId NoiseDistribution::sample(Rng& rng) const {
  const double u = uniform01(rng) * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  auto idx = static_cast<std::size_t>(it - cumulative_.begin());
  if (idx >= probs_.size()) {
    idx = probs_.size() - 1;
    while (idx > 0 && probs_[idx] == 0.0) --idx;
  }
  return static_cast<HerbId>(idx);
}

std::vector<HerbId> sample_negatives(const NoiseDistribution& noise, std::size_t k, HerbId forbidden,
                                     Rng& rng) {
  if (k < 1) throw ConfigError("sample_negatives: k must be >= 1");
  const auto& p = noise.probabilities();
  double mass = 1.0;
  if (forbidden >= 0 && static_cast<std::size_t>(forbidden) < p.size()) mass -= p[static_cast<std::size_t>(forbidden)];
  if (!(mass > 1e-12)) throw ConfigError("sample_negatives: no noise mass outside the forbidden id");
  std::vector<HerbId> out;
  out.reserve(k);
  while (out.size() < k) {
    auto id = noise.sample(rng);
    if (id != forbidden) out.push_back(id);
  }
  return out;
}

std::vector<HerbId> context_of(std::span<const HerbId> p, std::size_t t, std::size_t window) {
  if (t >= p.size()) throw ConfigError("context_of: position out of range");
  std::vector<HerbId> out;
  const std::size_t lo = t > window ? t - window : 0;
  const std::size_t hi = std::min(p.size(), t + window + 1);
  for (std::size_t i = lo; i < hi; ++i)
    if (i != t) out.push_back(p[i]);
  return out;
}

CbowGradients ns_loss_and_grads(const CbowParams& params, std::span<const HerbId> context,
                                HerbId target, std::span<const HerbId> negatives) {
  if (context.empty()) throw ConfigError("ns_loss_and_grads: empty context");
  const Eigen::Index d = params.input.cols();
  Eigen::VectorXd h = Eigen::VectorXd::Zero(d);
  for (auto c : context) h += params.input.row(c).transpose();
  h /= static_cast<double>(context.size());

  CbowGradients g;
  Eigen::VectorXd dh = Eigen::VectorXd::Zero(d);
  auto term = [&](HerbId id, double label) {
    const Eigen::VectorXd u = params.output.row(id).transpose();
    const double s = u.dot(h);
    g.loss += neg_log_sigmoid(label > 0 ? s : -s);
    const double coeff = sigmoid(s) - label;  // dL/ds
    accumulate(g.output, id, coeff * h);
    dh += coeff * u;
  };
  term(target, 1.0);
  for (auto n : negatives) term(n, 0.0);

  const Eigen::VectorXd per_context = dh / static_cast<double>(context.size());
  for (auto c : context) accumulate(g.input, c, per_context);
  return g;
}

CbowModel CbowModel::init(std::shared_ptr<const Vocabulary> vocab, CbowConfig config) {
  if (!vocab) throw ConfigError("cbow: null vocabulary");
  if (config.dim < 1 || config.window < 1 || config.negatives < 1)
    throw ConfigError("cbow: dim, window and negatives must be >= 1");
  CbowModel m;
  m.vocab_ = std::move(vocab);
  m.config_ = config;
  const auto v = static_cast<Eigen::Index>(m.vocab_->size());
  Rng rng(config.init_seed);
  const double r = 0.5 / static_cast<double>(config.dim);
  m.params_.input.resize(v, config.dim);
  for (Eigen::Index i = 0; i < v; ++i)
    for (Eigen::Index j = 0; j < config.dim; ++j) m.params_.input(i, j) = uniform(rng, -r, r);
  m.params_.output = Eigen::MatrixXd::Zero(v, config.dim);
  m.noise_ = NoiseDistribution(*m.vocab_, config.noise_power);
  return m;
}

double CbowModel::train_epoch(const std::vector<Prescription>& train, const TrainConfig& tc, Rng& rng) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> examples;
  for (std::size_t p = 0; p < train.size(); ++p)
    if (train[p].size() >= 2)
      for (std::size_t t = 0; t < train[p].size(); ++t)
        examples.emplace_back(static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(t));
  if (examples.empty()) throw ConfigError("cbow: no training example has a context");
  shuffle(examples, rng);

  double total_loss = 0.0;
  for (std::size_t start = 0; start < examples.size(); start += tc.batch_size) {
    const std::size_t end = std::min(examples.size(), start + tc.batch_size);
    SparseRows gin, gout;
    for (std::size_t e = start; e < end; ++e) {
      const auto& p = train[examples[e].first];
      const std::size_t t = examples[e].second;
      const auto ctx = context_of(p, t, config_.window);
      const auto neg = sample_negatives(noise_, config_.negatives, p[t], rng);
      auto g = ns_loss_and_grads(params_, ctx, p[t], neg);
      total_loss += g.loss;
      for (auto& [id, v] : g.input) accumulate(gin, id, v);
      for (auto& [id, v] : g.output) accumulate(gout, id, v);
    }
    const double scale = 1.0 / static_cast<double>(end - start);
    for (auto& [id, v] : gin) v *= scale;
    for (auto& [id, v] : gout) v *= scale;
    adam_update_rows(params_.input, gin, adam_input_, tc.adam, "cbow.input");
    adam_update_rows(params_.output, gout, adam_output_, tc.adam, "cbow.output");
  }
  return total_loss / static_cast<double>(examples.size());
}

Eigen::VectorXd CbowModel::scores(const BlankedPrescription& q) const {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(params_.input.cols());
  if (q.context.empty()) return Eigen::VectorXd::Zero(params_.output.rows());
  for (auto id : q.context) h += params_.input.row(id).transpose();
  h /= static_cast<double>(q.context.size());
  return params_.output * h;
}

HerbId CbowModel::predict_blank(const BlankedPrescription& q) const {
  return argmax_herb(scores(q), q.context);
}

void CbowModel::save(BinaryWriter& w) const {
  w.u64(static_cast<std::uint64_t>(config_.dim));
  w.u64(config_.window);
  w.u64(config_.negatives);
  w.f64(config_.noise_power);
  w.u64(config_.init_seed);
  w.matrix(params_.input);
  w.matrix(params_.output);
}

CbowModel CbowModel::load(BinaryReader& r, std::shared_ptr<const Vocabulary> vocab) {
  CbowModel m;
  m.vocab_ = std::move(vocab);
  m.config_.dim = static_cast<Eigen::Index>(r.u64());
  m.config_.window = static_cast<std::size_t>(r.u64());
  m.config_.negatives = static_cast<std::size_t>(r.u64());
  m.config_.noise_power = r.f64();
  m.config_.init_seed = r.u64();
  m.params_.input = r.matrix();
  m.params_.output = r.matrix();
  const auto v = static_cast<Eigen::Index>(m.vocab_->size());
  if (m.params_.input.rows() != v || m.params_.output.rows() != v ||
      m.params_.input.cols() != m.config_.dim || m.params_.output.cols() != m.config_.dim)
    throw CheckpointError("checkpoint: CBOW matrices do not match vocabulary/dimension");
  m.noise_ = NoiseDistribution(*m.vocab_, m.config_.noise_power);
  return m;
}

}  // namespace herbvec
