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
#include <Eigen/SparseCore>
#include <cstdint>
#include <memory>
#include <vector>

#include "herbvec/corpus.hpp"
#include "herbvec/embedding.hpp"

namespace herbvec {

class BinaryWriter;
class BinaryReader;

/// Herb-by-prescription occurrence counts; rows are ids in [0, vocab.size()).
using CountMatrix = Eigen::SparseMatrix<double>;

CountMatrix build_count_matrix(const std::vector<Prescription>& corpus, std::size_t num_rows);

struct SvdFactors {
  Eigen::MatrixXd u;   // m x k, orthonormal columns
  Eigen::VectorXd s;   // k, descending, >= 0
  Eigen::MatrixXd vt;  // k x n, orthonormal rows
  std::vector<double> residuals;  // |A v_i - s_i u_i| per triplet
  int iterations = 0;
};

struct SvdOptions {
  double tol = 1e-10;       // residual bound relative to s_1
  int max_iters = 1000;
  std::uint64_t seed = 0;
  Eigen::Index oversample = 10;
};

/// Top-k singular triplets by randomized subspace iteration with a
/// Rayleigh-Ritz step per sweep. Stops once every retained triplet satisfies
/// |A v_i - s_i u_i| <= tol * s_1; throws ConvergenceError carrying the
/// residuals otherwise. Each U column is signed so its largest-magnitude
/// entry is positive.
SvdFactors truncated_svd(const CountMatrix& a, Eigen::Index k, const SvdOptions& opts = {});
SvdFactors truncated_svd(const Eigen::MatrixXd& a, Eigen::Index k, const SvdOptions& opts = {});

/// Rows of U * diag(S).
EmbeddingMatrix herb_vectors(const SvdFactors& f, std::shared_ptr<const Vocabulary> vocab);

struct LsaConfig {
  Eigen::Index rank = 20;
  SvdOptions svd;
};

/// LSA baseline. Blank prediction ranks herbs by cosine to the mean vector of
/// the context herbs, skipping herbs already present.
class LsaModel {
 public:
  explicit LsaModel(EmbeddingMatrix embedding, LsaConfig config = {})
      : embedding_(std::move(embedding)), config_(config) {}

  static LsaModel fit(const std::vector<Prescription>& corpus,
                      std::shared_ptr<const Vocabulary> vocab, LsaConfig config = {});

  const Vocabulary& vocab() const noexcept { return embedding_.vocab(); }
  std::shared_ptr<const Vocabulary> vocab_ptr() const noexcept { return embedding_.vocab_ptr(); }
  const EmbeddingMatrix& embedding() const noexcept { return embedding_; }
  const LsaConfig& config() const noexcept { return config_; }

  Eigen::VectorXd scores(const BlankedPrescription& q) const;
  HerbId predict_blank(const BlankedPrescription& q) const;

  void save(BinaryWriter& w) const;
  static LsaModel load(BinaryReader& r, std::shared_ptr<const Vocabulary> vocab);

 private:
  EmbeddingMatrix embedding_;
  LsaConfig config_;
};

}  // namespace herbvec
