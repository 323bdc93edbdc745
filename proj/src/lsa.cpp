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

#include "herbvec/lsa.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "herbvec/error.hpp"
#include "herbvec/ranking.hpp"
#include "herbvec/rng.hpp"
#include "herbvec/serialize.hpp"

namespace herbvec {

CountMatrix build_count_matrix(const std::vector<Prescription>& corpus, std::size_t num_rows) {
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t p = 0; p < corpus.size(); ++p)
    for (auto id : corpus[p]) {
      if (id < 0 || static_cast<std::size_t>(id) >= num_rows)
        throw DataError("build_count_matrix: id outside the herb rows");
      entries.emplace_back(id, static_cast<int>(p), 1.0);
    }
  CountMatrix m(static_cast<Eigen::Index>(num_rows), static_cast<Eigen::Index>(corpus.size()));
  m.setFromTriplets(entries.begin(), entries.end());  // duplicates accumulate
  return m;
}

namespace {

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& x) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  return qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
}

template <class Matrix>
SvdFactors subspace_svd(const Matrix& a, Eigen::Index k, const SvdOptions& opts) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (k < 1 || k > std::min(m, n)) throw ConfigError("truncated_svd: need 1 <= k <= min(rows, cols)");
  if (!(opts.tol > 0)) throw ConfigError("truncated_svd: tol must be positive");
  if (opts.max_iters < 1) throw ConfigError("truncated_svd: max_iters must be >= 1");

  const Eigen::Index block = std::min(k + std::max<Eigen::Index>(opts.oversample, 0), std::min(m, n));
  Rng rng(opts.seed);
  Eigen::MatrixXd omega(n, block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i) omega(i, j) = uniform(rng, -1.0, 1.0);

  Eigen::MatrixXd q = orthonormalize(a * omega);
  SvdFactors f;
  for (int it = 1; it <= opts.max_iters; ++it) {
    const Eigen::MatrixXd w = orthonormalize(a.transpose() * q);
    q = orthonormalize(a * w);

    // Rayleigh-Ritz on B^T = A^T Q (n x block).
    const Eigen::MatrixXd bt = a.transpose() * q;
    Eigen::JacobiSVD<Eigen::MatrixXd> small(bt, Eigen::ComputeThinU | Eigen::ComputeThinV);
    f.s = small.singularValues().head(k);
    f.u = q * small.matrixV().leftCols(k);
    Eigen::MatrixXd v = small.matrixU().leftCols(k);

    const Eigen::MatrixXd r = a * v - f.u * f.s.asDiagonal();
    f.residuals.resize(static_cast<std::size_t>(k));
    bool converged = true;
    const double bound = opts.tol * f.s[0];
    for (Eigen::Index i = 0; i < k; ++i) {
      f.residuals[static_cast<std::size_t>(i)] = r.col(i).norm();
      if (f.residuals[static_cast<std::size_t>(i)] > bound) converged = false;
    }
    f.iterations = it;
    if (!converged) continue;

    for (Eigen::Index i = 0; i < k; ++i) {
      Eigen::Index arg;
      f.u.col(i).cwiseAbs().maxCoeff(&arg);
      if (f.u(arg, i) < 0) {
        f.u.col(i) *= -1.0;
        v.col(i) *= -1.0;
      }
    }
    f.vt = v.transpose();
    return f;
  }
  double worst = *std::max_element(f.residuals.begin(), f.residuals.end());
  throw ConvergenceError("truncated_svd: no convergence after " + std::to_string(opts.max_iters) +
                             " iterations (worst residual " + std::to_string(worst) + ")",
                         f.residuals);
}

}  // namespace

SvdFactors truncated_svd(const CountMatrix& a, Eigen::Index k, const SvdOptions& opts) {
  return subspace_svd(a, k, opts);
}

SvdFactors truncated_svd(const Eigen::MatrixXd& a, Eigen::Index k, const SvdOptions& opts) {
  return subspace_svd(a, k, opts);
}

EmbeddingMatrix herb_vectors(const SvdFactors& f, std::shared_ptr<const Vocabulary> vocab) {
  return EmbeddingMatrix(std::move(vocab), f.u * f.s.asDiagonal());
}

LsaModel LsaModel::fit(const std::vector<Prescription>& corpus,
                       std::shared_ptr<const Vocabulary> vocab, LsaConfig config) {
  const auto m = build_count_matrix(corpus, vocab->size());
  const Eigen::Index rank = std::min({config.rank, m.rows(), m.cols()});
  auto factors = truncated_svd(m, rank, config.svd);
  return LsaModel(herb_vectors(factors, std::move(vocab)), config);
}

Eigen::VectorXd LsaModel::scores(const BlankedPrescription& q) const {
  const auto& vecs = embedding_.vectors();
  Eigen::VectorXd h = Eigen::VectorXd::Zero(vecs.cols());
  for (auto id : q.context) h += vecs.row(id).transpose();
  if (!q.context.empty()) h /= static_cast<double>(q.context.size());

  Eigen::VectorXd s = Eigen::VectorXd::Zero(vecs.rows());
  const double hn = h.norm();
  if (hn == 0.0) return s;
  const Eigen::VectorXd dots = vecs * h;
  for (Eigen::Index i = 0; i < vecs.rows(); ++i) {
    const double rn = vecs.row(i).norm();
    if (rn > 0.0) s[i] = std::clamp(dots[i] / (rn * hn), -1.0, 1.0);
  }
  return s;
}

HerbId LsaModel::predict_blank(const BlankedPrescription& q) const {
  return argmax_herb(scores(q), q.context);
}

void LsaModel::save(BinaryWriter& w) const {
  w.u64(static_cast<std::uint64_t>(config_.rank));
  w.matrix(embedding_.vectors());
}

LsaModel LsaModel::load(BinaryReader& r, std::shared_ptr<const Vocabulary> vocab) {
  LsaConfig cfg;
  cfg.rank = static_cast<Eigen::Index>(r.u64());
  auto m = r.matrix();
  try {
    return LsaModel(EmbeddingMatrix(std::move(vocab), std::move(m)), cfg);
  } catch (const DataError& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace herbvec
