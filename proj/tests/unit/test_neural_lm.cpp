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

#include <cmath>
#include <random>

#include "doctest.h"

#include "herbvec/error.hpp"
#include "herbvec/neural_lm.hpp"
#include "herbvec/trainer.hpp"
#include "support/oracles.hpp"

using namespace herbvec;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

NeuralLm random_model(LmMode mode, std::size_t herbs, Eigen::Index d, Eigen::Index h, std::uint64_t seed) {
  NeuralLmConfig cfg;
  cfg.mode = mode;
  cfg.dim = d;
  cfg.hidden = h;
  cfg.init_seed = seed;
  auto m = NeuralLm::init(oracle::tiny_vocab(herbs), cfg);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0, 0.5);
  auto& p = m.params();
  auto fill = [&](auto& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(gen);
  };
  fill(p.embedding);
  fill(p.out_w);
  fill(p.out_b);
  visit_cells(p.forward, p.backward, [&](const char*, auto& a, auto& b) {
    fill(a);
    fill(b);
  });
  return m;
}

}  // namespace

TEST_CASE("GRU step") {
  SUBCASE("zero weights halve the state") {
    const auto cell = GruCell::zeros(2, 3);
    VectorXd h(3);
    h << 1, -2, 4;
    CHECK((gru_step(cell, h, VectorXd::Ones(2)) - 0.5 * h).norm() < 1e-15);
    CHECK(gru_step(cell, VectorXd::Zero(3), VectorXd::Ones(2)).norm() == 0.0);
  }
  SUBCASE("scalar case by hand") {
    auto cell = GruCell::zeros(1, 1);
    cell.wz(0, 0) = 0.3, cell.uz(0, 0) = -0.2, cell.bz[0] = 0.1;
    cell.wr(0, 0) = 0.7, cell.ur(0, 0) = 0.4, cell.br[0] = -0.3;
    cell.wh(0, 0) = -0.5, cell.uh(0, 0) = 0.9, cell.bh[0] = 0.2;
    const double x = 1.5, hp = -0.6;
    const double z = sigmoid(0.3 * x - 0.2 * hp + 0.1);
    const double r = sigmoid(0.7 * x + 0.4 * hp - 0.3);
    const double g = std::tanh(-0.5 * x + 0.9 * (r * hp) + 0.2);
    const double want = (1 - z) * hp + z * g;
    CHECK(gru_step(cell, VectorXd::Constant(1, hp), VectorXd::Constant(1, x))[0] == doctest::Approx(want).epsilon(1e-15));
  }
}

TEST_CASE("encoder inputs") {
  auto vocab = oracle::tiny_vocab(5);
  const BlankedPrescription q{{1, 2, 3}, 1};  // 1 _ 2 3
  SUBCASE("PLLM splices out the blank") {
    const auto in = encoder_inputs(LmMode::kPllm, q, *vocab);
    CHECK(in.forward == std::vector<HerbId>{1, 2, 3});
    CHECK(in.backward == std::vector<HerbId>{3, 2, 1});
  }
  SUBCASE("RNNLM reads each side towards the blank") {
    const auto in = encoder_inputs(LmMode::kRnnlm, q, *vocab);
    CHECK(in.forward == std::vector<HerbId>{vocab->bos(), 1});
    CHECK(in.backward == std::vector<HerbId>{vocab->eos(), 3, 2});
    const auto first = encoder_inputs(LmMode::kRnnlm, {{1, 2}, 0}, *vocab);
    CHECK(first.forward == std::vector<HerbId>{vocab->bos()});
    const auto last = encoder_inputs(LmMode::kRnnlm, {{1, 2}, 2}, *vocab);
    CHECK(last.backward == std::vector<HerbId>{vocab->eos()});
  }
}

TEST_CASE("encoders") {
  const auto m = random_model(LmMode::kPllm, 5, 3, 4, 1);
  const auto& p = m.params();
  SUBCASE("shape and minimal case") {
    const auto hc = encode_pllm(p, {1, 2}, 0);
    CHECK(hc.size() == 8);
    const VectorXd x = p.embedding.row(2).transpose();
    CHECK((hc.head(4) - gru_step(p.forward, VectorXd::Zero(4), x)).norm() < 1e-14);
    CHECK((hc.tail(4) - gru_step(p.backward, VectorXd::Zero(4), x)).norm() < 1e-14);
    CHECK_THROWS_AS(encode_pllm(p, {1}, 0), ConfigError);
  }
  SUBCASE("the blank position does not change the PLLM encoding") {
    const Prescription pr = {1, 2, 3, 4};
    const auto a = encode(p, encoder_inputs(LmMode::kPllm, {{1, 2, 4}, 2}, m.vocab()));
    const auto b = encode(p, encoder_inputs(LmMode::kPllm, {{1, 2, 4}, 0}, m.vocab()));
    CHECK((a - b).norm() == 0.0);
    CHECK((logits(p, a) - logits(p, b)).norm() == 0.0);
    CHECK((encode_pllm(p, pr, 2) - a).norm() == 0.0);
  }
  SUBCASE("order sensitivity") {
    const auto a = encode_pllm(p, {1, 2, 3, 4, 5}, 0);
    const auto b = encode_pllm(p, {1, 2, 4, 3, 5}, 0);
    CHECK((a - b).norm() > 1e-6);
  }
  SUBCASE("RNNLM equals chained steps") {
    const Prescription pr = {1, 2, 3, 4, 5};
    const auto rm = random_model(LmMode::kRnnlm, 5, 3, 4, 2);
    const auto& rp = rm.params();
    VectorXd hf = VectorXd::Zero(4), hb = VectorXd::Zero(4);
    for (HerbId id : {rm.vocab().bos(), 1, 2}) hf = gru_step(rp.forward, hf, rp.embedding.row(id).transpose());
    for (HerbId id : {rm.vocab().eos(), 5, 4}) hb = gru_step(rp.backward, hb, rp.embedding.row(id).transpose());
    const auto hc = encode_rnnlm(rp, pr, 2, rm.vocab());
    CHECK((hc.head(4) - hf).norm() < 1e-14);
    CHECK((hc.tail(4) - hb).norm() < 1e-14);
  }
}

TEST_CASE("softmax") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal(0, 5);
  for (int i = 0; i < 20; ++i) {
    VectorXd z(7);
    for (auto& x : z) x = normal(gen);
    const auto s = softmax(z);
    CHECK(s.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((softmax(z.array() + 123.0) - s).cwiseAbs().maxCoeff() < 1e-12);
  }
  VectorXd big(2);
  big << 1000, 0;
  CHECK(softmax(big)[0] == doctest::Approx(1.0));
}

TEST_CASE("neural LM loss and gradients") {
  SUBCASE("zero parameters give ln V") {
    NeuralLmConfig cfg;
    cfg.dim = 3;
    cfg.hidden = 2;
    auto m = NeuralLm::init(oracle::tiny_vocab(6), cfg);
    auto& p = m.params();
    p.out_w.setZero();
    CHECK(loss_and_grads(p, {1, 2, 3}, 1, m.vocab()).loss == doctest::Approx(std::log(7.0)));
    CHECK((m.scores({{1, 3}, 1}).array() == 0.0).all());
  }
  for (auto mode : {LmMode::kRnnlm, LmMode::kPllm}) {
    CAPTURE(to_string(mode));
    auto m = random_model(mode, 6, 4, 3, 11);
    auto& p = m.params();
    const Prescription pr = {2, 0, 5, 2};
    const auto g = loss_and_grads(p, pr, 1, m.vocab());
    auto loss = [&] { return loss_and_grads(p, pr, 1, m.vocab()).loss; };
    SUBCASE("finite differences") {
      for (Eigen::Index r = 0; r < p.embedding.rows(); ++r)
        for (Eigen::Index c = 0; c < p.embedding.cols(); ++c) {
          const auto it = g.embedding.find(static_cast<HerbId>(r));
          const double analytic = it == g.embedding.end() ? 0.0 : it->second[c];
          CHECK(oracle::relative_error(analytic, oracle::central_difference(loss, p.embedding(r, c))) < 1e-4);
        }
      auto check_all = [&](auto& param, const auto& grad) {
        for (Eigen::Index i = 0; i < param.size(); ++i)
          CHECK(oracle::relative_error(grad.data()[i], oracle::central_difference(loss, param.data()[i])) < 1e-4);
      };
      check_all(p.out_w, g.out_w);
      check_all(p.out_b, g.out_b);
      visit_cells(p.forward, g.forward, [&](const char*, auto& a, const auto& b) { check_all(a, b); });
      visit_cells(p.backward, g.backward, [&](const char*, auto& a, const auto& b) { check_all(a, b); });
    }
    SUBCASE("untouched embedding rows get no gradient") {
      for (const auto& [id, row] : g.embedding) CHECK((id == 2 || id == 0 || id == 5 || id == m.vocab().bos() ||
                                                       id == m.vocab().eos()));
      CHECK(g.embedding.count(1) == 0);
      CHECK(g.embedding.count(3) == 0);
    }
  }
}

TEST_CASE("neural LM prediction") {
  const auto m = random_model(LmMode::kPllm, 8, 3, 3, 5);
  const BlankedPrescription q{{2, 4, 6}, 1};
  const auto s = m.scores(q);
  HerbId best = 0;
  for (HerbId c = 1; c <= 8; ++c)
    if (c != 2 && c != 4 && c != 6 && (best == 0 || s[c] > s[best])) best = c;
  CHECK(m.predict_blank(q) == best);
  CHECK(m.predict_blank(q) == m.predict_blank(q));
  SUBCASE("empty PLLM context falls back to the output bias") {
    CHECK((m.scores({{}, 0}) - m.params().out_b).norm() == 0.0);
  }
  SUBCASE("embedding view") {
    const auto e = m.embedding();
    CHECK(e.rows() == 9);
    CHECK(e.dim() == 3);
    CHECK(e.vectors() == m.params().embedding.topRows(9));
  }
}

TEST_CASE("neural LM training") {
  std::vector<Prescription> train;
  for (int i = 0; i < 40; ++i) {
    train.push_back({1, 2, 3});
    train.push_back({4, 5, 6});
  }
  for (auto mode : {LmMode::kRnnlm, LmMode::kPllm}) {
    NeuralLmConfig cfg;
    cfg.mode = mode;
    cfg.dim = 8;
    cfg.hidden = 8;
    cfg.init_seed = 1;
    auto a = NeuralLm::init(oracle::tiny_vocab(6), cfg), b = a;
    TrainConfig tc;
    tc.adam.lr = 0.02;
    tc.batch_size = 8;
    Rng ra(3), rb(3);
    const double first = a.train_epoch(train, tc, ra);
    double last = first;
    for (int e = 0; e < 15; ++e) last = a.train_epoch(train, tc, ra);
    for (int e = 0; e < 16; ++e) b.train_epoch(train, tc, rb);
    CHECK(last < first);
    CHECK(a.params().out_w == b.params().out_w);
    CHECK(a.predict_blank({{1, 3}, 1}) == 2);
    CHECK(a.predict_blank({{4, 5}, 2}) == 6);
  }
}
