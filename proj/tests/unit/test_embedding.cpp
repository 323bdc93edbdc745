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

#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"

#include "herbvec/embedding.hpp"
#include "herbvec/error.hpp"
#include "herbvec/ranking.hpp"
#include "support/oracles.hpp"

using namespace herbvec;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

EmbeddingMatrix random_embedding(std::size_t herbs, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  MatrixXd m(static_cast<Eigen::Index>(herbs + 1), d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(gen);
  m.row(0).setZero();
  return EmbeddingMatrix(oracle::tiny_vocab(herbs), m);
}

double naive_cosine(const VectorXd& a, const VectorXd& b) {
  double dot = 0, na = 0, nb = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

/// Brute force: score every other herb, sort by (score desc, id asc).
std::vector<Neighbor> brute_rank(const EmbeddingMatrix& e, const VectorXd& q, std::vector<HerbId> skip,
                                 std::size_t k) {
  std::vector<Neighbor> all;
  for (HerbId id = 1; id < static_cast<HerbId>(e.rows()); ++id)
    if (std::find(skip.begin(), skip.end(), id) == skip.end())
      all.push_back({id, naive_cosine(q, e.vectors().row(id).transpose())});
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace

TEST_CASE("cosine") {
  VectorXd v(3);
  v << 1, 2, 3;
  CHECK(cosine(v, v) == doctest::Approx(1.0));
  CHECK(cosine(VectorXd::Unit(3, 0), VectorXd::Unit(3, 1)) == 0.0);
  VectorXd a(2), b(2);
  a << 1, 2;
  b << 2, 1;
  CHECK(cosine(a, b) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK_THROWS_AS(cosine(VectorXd::Zero(3), v), UndefinedError);
}

TEST_CASE("nearest neighbours") {
  SUBCASE("duplicate vector is the top neighbour") {
    MatrixXd m(4, 2);
    m << 0, 0, 1, 0, 1, 0, 0, 1;
    EmbeddingMatrix e(oracle::tiny_vocab(3), m);
    const auto n = e.nearest_neighbors(1, 1);
    REQUIRE(n.size() == 1);
    CHECK(n[0].id == 2);
    CHECK(n[0].score == doctest::Approx(1.0));
    CHECK(e.nearest_neighbors(1, 10).size() == 2);
  }
  SUBCASE("matches a brute-force scan") {
    const auto e = random_embedding(10, 4, 1);
    for (HerbId q = 1; q <= 10; ++q) {
      const auto got = e.nearest_neighbors(q, 10);
      const auto want = brute_rank(e, e.vectors().row(q).transpose(), {q}, 10);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].id == want[i].id);
        CHECK(got[i].score == doctest::Approx(want[i].score).epsilon(1e-12));
      }
    }
  }
  SUBCASE("unknown herb") {
    const auto e = random_embedding(3, 2, 2);
    CHECK_THROWS_WITH_AS(e.lookup("nope"), "unknown herb 'nope'", NotFoundError);
  }
}

TEST_CASE("analogy") {
  SUBCASE("exact offset ranks first") {
    MatrixXd m(5, 2);
    m << 0, 0, 1, 0, 1, 1, 0, 1, 0, 2;  // v4 = v2 - v1 + v3
    EmbeddingMatrix e(oracle::tiny_vocab(4), m);
    const auto r = e.analogy(1, 2, 3, 1);
    REQUIRE(r.size() == 1);
    CHECK(r[0].id == 4);
  }
  SUBCASE("matches a brute-force scan") {
    const auto e = random_embedding(8, 3, 3);
    const VectorXd q = e.vectors().row(2) - e.vectors().row(1) + e.vectors().row(3);
    const auto got = e.analogy(1, 2, 3, 5);
    const auto want = brute_rank(e, q, {1, 2, 3}, 5);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].id == want[i].id);
  }
}

TEST_CASE("embedding text format") {
  const auto e = random_embedding(5, 3, 4);
  std::stringstream io;
  save_text(e, io);
  const auto back = load_text(io);
  CHECK(back.vocab().tokens() == e.vocab().tokens());
  for (HerbId a = 1; a <= 5; ++a)
    for (HerbId b = 1; b <= 5; ++b) CHECK(std::abs(back.similarity(a, b) - e.similarity(a, b)) < 1e-8);

  SUBCASE("row count mismatch") {
    std::istringstream in("2 3\na 1 2 3\nb 1 2 3\nc 1 2 3\n");
    CHECK_THROWS_AS(load_text(in), DataError);
  }
  SUBCASE("empty file") {
    std::istringstream in("");
    CHECK_THROWS_AS(load_text(in), DataError);
  }
  SUBCASE("bad number and wrong width") {
    std::istringstream bad("1 2\na 1 x\n");
    CHECK_THROWS_AS(load_text(bad), DataError);
    std::istringstream narrow("1 2\na 1\n");
    CHECK_THROWS_AS(load_text(narrow), DataError);
  }
}

TEST_CASE("embedding matrix validation") {
  CHECK_THROWS_AS(EmbeddingMatrix(oracle::tiny_vocab(3), MatrixXd::Zero(3, 2)), DataError);
  MatrixXd m = MatrixXd::Ones(4, 2);
  m(2, 1) = std::nan("");
  CHECK_THROWS(EmbeddingMatrix(oracle::tiny_vocab(3), m));
}

TEST_CASE("top_k_herbs ordering") {
  VectorXd s(6);
  s << 100, 0.5, 0.9, 0.9, 0.1, 0.9;
  const HerbId skip[] = {5};
  const auto top = top_k_herbs(s, 3, skip);
  REQUIRE(top.size() == 3);
  CHECK(top[0].id == 2);  // UNK never returned, ties by id
  CHECK(top[1].id == 3);
  CHECK(top[2].id == 1);
  CHECK(argmax_herb(s) == 2);
  const HerbId all[] = {1, 2, 3, 4, 5};
  CHECK(argmax_herb(s, all) == Vocabulary::kUnk);
}
