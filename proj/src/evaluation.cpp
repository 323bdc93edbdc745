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

#include "herbvec/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_set>

#include "json.hpp"

#include "herbvec/error.hpp"
#include "herbvec/rng.hpp"

namespace herbvec {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.back() == ' ' || f.back() == '\r')) f.pop_back();
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
  }
  return out;
}

bool skip_line(const std::string& line) {
  auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

std::pair<std::string, std::string> unordered_key(const std::string& a, const std::string& b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

struct IntStats {
  long long n = 0, sum = 0, sumsq = 0;
  // n^2 * variance, exact
  long long scaled_var() const { return n * sumsq - sum * sum; }
};

IntStats stats_of(const AnnotationRow& r) {
  IntStats s;
  for (int x : r.scores) {
    ++s.n;
    s.sum += x;
    s.sumsq += static_cast<long long>(x) * x;
  }
  return s;
}

}  // namespace

double AnnotationRow::mean() const {
  if (scores.empty()) return 0.0;
  return static_cast<double>(std::accumulate(scores.begin(), scores.end(), 0LL)) /
         static_cast<double>(scores.size());
}

double AnnotationRow::stddev() const {
  if (scores.empty()) return 0.0;
  auto s = stats_of(*this);
  return std::sqrt(static_cast<double>(s.scaled_var())) / static_cast<double>(s.n);
}

SimilarityBenchmark build_benchmark(const AnnotationSet& annotations, std::size_t keep) {
  if (annotations.size() < keep)
    throw ConfigError("build_benchmark: " + std::to_string(annotations.size()) +
                      " annotated pairs, need at least " + std::to_string(keep));
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : annotations) {
    if (r.scores.size() < 2) throw DataError("build_benchmark: need at least two annotator scores");
    for (int x : r.scores)
      if (x < 1 || x > 5) throw DataError("build_benchmark: score outside [1, 5]");
    if (r.herb1 == r.herb2) throw DataError("build_benchmark: self pair '" + r.herb1 + "'");
    if (!seen.insert(unordered_key(r.herb1, r.herb2)).second)
      throw DataError("build_benchmark: duplicate pair " + r.herb1 + "/" + r.herb2);
  }

  std::vector<const AnnotationRow*> order;
  for (const auto& r : annotations) order.push_back(&r);
  // Integer cross-multiplication keeps equal spreads exactly equal.
  std::stable_sort(order.begin(), order.end(), [](const AnnotationRow* a, const AnnotationRow* b) {
    const auto sa = stats_of(*a), sb = stats_of(*b);
    const long long va = sa.scaled_var() * sb.n * sb.n;
    const long long vb = sb.scaled_var() * sa.n * sa.n;
    if (va != vb) return va < vb;
    const long long ma = sa.sum * sb.n, mb = sb.sum * sa.n;
    if (ma != mb) return ma < mb;
    return std::tie(a->herb1, a->herb2) < std::tie(b->herb1, b->herb2);
  });

  SimilarityBenchmark out;
  for (std::size_t i = 0; i < keep; ++i) out.push_back({order[i]->herb1, order[i]->herb2, order[i]->mean()});
  return out;
}

std::vector<std::pair<HerbId, HerbId>> generate_candidate_pairs(const Vocabulary& vocab,
                                                                std::size_t n, std::uint64_t seed) {
  const std::uint64_t h = vocab.num_herbs();
  if (h < 2) throw ConfigError("generate_candidate_pairs: need at least two herbs");
  const std::uint64_t total = h * (h - 1) / 2;
  if (n > total)
    throw ConfigError("generate_candidate_pairs: " + std::to_string(n) + " pairs requested but only " +
                      std::to_string(total) + " exist");

  // Pair index p in [0, total) <-> (i, j) with 1 <= i < j <= h.
  auto decode = [h](std::uint64_t p) {
    std::uint64_t i = 0;
    while (p >= h - 1 - i) {
      p -= h - 1 - i;
      ++i;
    }
    return std::make_pair(static_cast<HerbId>(i + 1), static_cast<HerbId>(i + 2 + p));
  };

  Rng rng(seed);
  std::vector<std::uint64_t> picked;
  if (total <= 4 * n + 1024) {
    std::vector<std::uint64_t> all(total);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto j = i + uniform_index(rng, total - i);
      std::swap(all[i], all[j]);
    }
    picked.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
  } else {
    std::unordered_set<std::uint64_t> taken;
    while (picked.size() < n) {
      auto p = uniform_index(rng, total);
      if (taken.insert(p).second) picked.push_back(p);
    }
  }
  std::vector<std::pair<HerbId, HerbId>> out;
  out.reserve(n);
  for (auto p : picked) out.push_back(decode(p));
  return out;
}

std::vector<double> average_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ConfigError("spearman: length mismatch");
  if (xs.size() < 2) throw ConfigError("spearman: need at least two observations");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedError("spearman: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

SimilarityResult eval_similarity(const EmbeddingMatrix& emb, const SimilarityBenchmark& benchmark) {
  if (benchmark.empty()) throw ConfigError("eval_similarity: empty benchmark");
  SimilarityResult res;
  res.total = benchmark.size();
  std::vector<double> model, gold;
  for (const auto& pair : benchmark) {
    auto a = emb.vocab().find(pair.herb1);
    auto b = emb.vocab().find(pair.herb2);
    if (!a || !b) continue;
    const auto va = emb.vector(*a), vb = emb.vector(*b);
    if (va.norm() == 0.0 || vb.norm() == 0.0) continue;
    model.push_back(cosine(va, vb));
    gold.push_back(pair.score);
  }
  res.evaluated = model.size();
  if (res.evaluated < 2)
    throw DataError("eval_similarity: fewer than two benchmark pairs are covered by the embeddings");
  res.rho = spearman(model, gold);
  return res;
}

SimilarityBenchmark read_benchmark(std::istream& in) {
  SimilarityBenchmark out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    auto f = split_tabs(line);
    double score = 0;
    if (f.size() != 3 || f[0].empty() || f[1].empty() ||
        std::from_chars(f[2].data(), f[2].data() + f[2].size(), score).ec != std::errc())
      throw DataError("benchmark line " + std::to_string(lineno) + ": expected herb1<TAB>herb2<TAB>score");
    out.push_back({f[0], f[1], score});
  }
  return out;
}

void write_benchmark(std::ostream& out, const SimilarityBenchmark& benchmark) {
  char buf[64];
  for (const auto& p : benchmark) {
    auto res = std::to_chars(buf, buf + sizeof buf, p.score);
    out << p.herb1 << '\t' << p.herb2 << '\t' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf))
        << '\n';
  }
}

AnnotationSet read_annotations(std::istream& in) {
  AnnotationSet out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    auto f = split_tabs(line);
    if (f.size() < 4)
      throw DataError("annotation line " + std::to_string(lineno) + ": expected herb1, herb2 and >= 2 scores");
    AnnotationRow row{f[0], f[1], {}};
    for (std::size_t i = 2; i < f.size(); ++i) {
      int v = 0;
      auto res = std::from_chars(f[i].data(), f[i].data() + f[i].size(), v);
      if (res.ec != std::errc() || res.ptr != f[i].data() + f[i].size() || v < 1 || v > 5)
        throw DataError("annotation line " + std::to_string(lineno) + ": score '" + f[i] +
                        "' is not an integer in [1, 5]");
      row.scores.push_back(v);
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::string to_json(const EvalReport& r) {
  nlohmann::json j;
  j["model"] = r.model;
  j["rho"] = r.has_rho ? nlohmann::json(r.rho) : nlohmann::json(nullptr);
  j["coverage"] = r.has_rho ? nlohmann::json(r.coverage) : nlohmann::json(nullptr);
  j["accuracy"] = r.has_accuracy ? nlohmann::json(r.accuracy) : nlohmann::json(nullptr);
  j["n"] = r.n;
  return j.dump();
}

}  // namespace herbvec
