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

#include "herbvec/ngram.hpp"

#include <algorithm>

#include "herbvec/error.hpp"
#include "herbvec/serialize.hpp"

namespace herbvec {

namespace {

constexpr int kIdBits = 21;
constexpr std::uint64_t kIdMask = (std::uint64_t{1} << kIdBits) - 1;

template <class Map>
std::uint64_t lookup(const Map& m, std::uint64_t k) {
  auto it = m.find(k);
  return it == m.end() ? 0 : it->second;
}

template <class Map>
void write_sorted(BinaryWriter& w, const Map& m) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> entries(m.begin(), m.end());
  std::sort(entries.begin(), entries.end());
  w.u64(entries.size());
  for (auto [k, v] : entries) {
    w.u64(k);
    w.u64(v);
  }
}

template <class Map>
Map read_map(BinaryReader& r) {
  Map m;
  auto n = r.u64();
  if (n > r.remaining() / 16) throw CheckpointError("checkpoint: truncated n-gram table");
  m.reserve(static_cast<std::size_t>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    auto k = r.u64();
    m[k] = r.u64();
  }
  return m;
}

}  // namespace

std::uint64_t NgramModel::key(HerbId a, HerbId b) noexcept {
  return (static_cast<std::uint64_t>(a) << kIdBits) | static_cast<std::uint64_t>(b);
}

std::uint64_t NgramModel::key(HerbId a, HerbId b, HerbId c) noexcept {
  return (static_cast<std::uint64_t>(a) << (2 * kIdBits)) |
         (static_cast<std::uint64_t>(b) << kIdBits) | static_cast<std::uint64_t>(c);
}

bool NgramModel::is_outcome(HerbId id, Direction dir) const noexcept {
  if (id >= 0 && static_cast<std::size_t>(id) < vocab_->size()) return true;
  return id == (dir == Direction::kForward ? vocab_->eos() : vocab_->bos());
}

NgramModel NgramModel::fit(const std::vector<Prescription>& corpus,
                           std::shared_ptr<const Vocabulary> vocab, NgramConfig config) {
  if (!vocab) throw ConfigError("ngram: null vocabulary");
  if (vocab->num_ids() > kIdMask) throw ConfigError("ngram: vocabulary too large");
  if (!(config.smoothing >= 0)) throw ConfigError("ngram: smoothing must be >= 0");
  NgramModel m;
  m.vocab_ = std::move(vocab);
  m.config_ = config;
  m.unigram_.assign(m.vocab_->num_ids(), 0);

  const HerbId bos = m.vocab_->bos();
  const HerbId eos = m.vocab_->eos();
  std::vector<HerbId> padded;
  for (const auto& p : corpus) {
    padded.clear();
    padded.push_back(bos);
    padded.push_back(bos);
    for (auto id : p) {
      if (!m.vocab_->is_valid(id) || id == bos || id == eos)
        throw DataError("ngram: prescription contains an invalid id");
      padded.push_back(id);
    }
    padded.push_back(eos);
    padded.push_back(eos);
    for (std::size_t i = 0; i < padded.size(); ++i) {
      ++m.unigram_[static_cast<std::size_t>(padded[i])];
      if (i + 1 < padded.size()) ++m.bigram_[key(padded[i], padded[i + 1])];
      if (i + 2 < padded.size()) ++m.trigram_[key(padded[i], padded[i + 1], padded[i + 2])];
    }
    m.total_tokens_ += padded.size();
  }
  m.rebuild_totals();
  return m;
}

void NgramModel::rebuild_totals() {
  const std::size_t n = vocab_->num_ids();
  fwd_uni_total_.assign(1, 0);
  fwd_bi_total_.assign(n, 0);
  bwd_bi_total_.assign(n, 0);
  fwd_tri_total_.clear();
  bwd_tri_total_.clear();
  for (std::size_t id = 0; id < n; ++id)
    if (is_outcome(static_cast<HerbId>(id), Direction::kForward)) fwd_uni_total_[0] += unigram_[id];
  for (auto [k, c] : bigram_) {
    auto a = static_cast<HerbId>(k >> kIdBits);
    auto b = static_cast<HerbId>(k & kIdMask);
    if (is_outcome(b, Direction::kForward)) fwd_bi_total_[static_cast<std::size_t>(a)] += c;
    if (is_outcome(a, Direction::kBackward)) bwd_bi_total_[static_cast<std::size_t>(b)] += c;
  }
  for (auto [k, c] : trigram_) {
    auto a = static_cast<HerbId>(k >> (2 * kIdBits));
    auto b = static_cast<HerbId>((k >> kIdBits) & kIdMask);
    auto d = static_cast<HerbId>(k & kIdMask);
    if (is_outcome(d, Direction::kForward)) fwd_tri_total_[key(a, b)] += c;
    if (is_outcome(a, Direction::kBackward)) bwd_tri_total_[key(b, d)] += c;
  }
}

std::uint64_t NgramModel::unigram(HerbId a) const {
  if (!vocab_->is_valid(a)) return 0;
  return unigram_[static_cast<std::size_t>(a)];
}

std::uint64_t NgramModel::bigram(HerbId a, HerbId b) const {
  if (!vocab_->is_valid(a) || !vocab_->is_valid(b)) return 0;
  return lookup(bigram_, key(a, b));
}

std::uint64_t NgramModel::trigram(HerbId a, HerbId b, HerbId c) const {
  if (!vocab_->is_valid(a) || !vocab_->is_valid(b) || !vocab_->is_valid(c)) return 0;
  return lookup(trigram_, key(a, b, c));
}

double NgramModel::prob(HerbId target, std::span<const HerbId> context, Direction dir) const {
  if (context.empty() || context.size() > 2) throw ConfigError("ngram: context must have 1 or 2 ids");
  for (auto id : context)
    if (!vocab_->is_valid(id)) throw ConfigError("ngram: invalid context id");
  if (!is_outcome(target, dir)) return 0.0;

  std::uint64_t joint = 0, total = 0;
  const bool fwd = dir == Direction::kForward;
  if (context.size() == 1) {
    const auto c = context[0];
    joint = fwd ? bigram(c, target) : bigram(target, c);
    total = (fwd ? fwd_bi_total_ : bwd_bi_total_)[static_cast<std::size_t>(c)];
  } else if (fwd) {
    joint = trigram(context[0], context[1], target);
    total = lookup(fwd_tri_total_, key(context[0], context[1]));
  } else {
    joint = trigram(target, context[0], context[1]);
    total = lookup(bwd_tri_total_, key(context[0], context[1]));
  }
  const double k = config_.smoothing;
  const double denom = static_cast<double>(total) + k * static_cast<double>(outcome_count());
  if (denom == 0.0) return 1.0 / static_cast<double>(outcome_count());
  return (static_cast<double>(joint) + k) / denom;
}

double NgramModel::prob_unigram(HerbId target) const {
  if (!is_outcome(target, Direction::kForward)) return 0.0;
  const double k = config_.smoothing;
  const double denom = static_cast<double>(fwd_uni_total_[0]) + k * static_cast<double>(outcome_count());
  if (denom == 0.0) return 1.0 / static_cast<double>(outcome_count());
  return (static_cast<double>(unigram(target)) + k) / denom;
}

double NgramModel::score_blank(const BlankedPrescription& q, HerbId candidate, bool open_end) const {
  const auto n = q.context.size();
  const auto t = q.blank;
  if (t > n) throw ConfigError("ngram: blank position out of range");
  auto at = [&](std::ptrdiff_t i) -> HerbId {
    if (i < 0) return vocab_->bos();
    if (static_cast<std::size_t>(i) >= n) return vocab_->eos();
    return q.context[static_cast<std::size_t>(i)];
  };
  const auto ti = static_cast<std::ptrdiff_t>(t);
  const HerbId l1 = at(ti - 1), l2 = at(ti - 2);
  const HerbId left1[] = {l1};
  const HerbId left2[] = {l2, l1};
  double s = prob(candidate, left1, Direction::kForward) + prob(candidate, left2, Direction::kForward);
  if (!open_end) {
    const HerbId r1 = at(ti), r2 = at(ti + 1);
    const HerbId right1[] = {r1};
    const HerbId right2[] = {r1, r2};
    s += prob(candidate, right1, Direction::kBackward) + prob(candidate, right2, Direction::kBackward);
  }
  if (config_.unigram_term) s += prob_unigram(candidate);
  return s;
}

Eigen::VectorXd NgramModel::scores(const BlankedPrescription& q, bool open_end) const {
  Eigen::VectorXd s(static_cast<Eigen::Index>(vocab_->size()));
  for (Eigen::Index id = 0; id < s.size(); ++id) s[id] = score_blank(q, static_cast<HerbId>(id), open_end);
  return s;
}

HerbId NgramModel::predict_blank(const BlankedPrescription& q, bool exclude_present,
                                 bool open_end) const {
  const auto s = scores(q, open_end);
  HerbId best = Vocabulary::kUnk;
  double best_score = 0.0;
  for (HerbId id = 1; id < static_cast<HerbId>(s.size()); ++id) {
    if (exclude_present && std::find(q.context.begin(), q.context.end(), id) != q.context.end())
      continue;
    if (best == Vocabulary::kUnk || s[id] > best_score) {
      best = id;
      best_score = s[id];
    }
  }
  return best;
}

void NgramModel::save(BinaryWriter& w) const {
  w.f64(config_.smoothing);
  w.u8(config_.unigram_term ? 1 : 0);
  w.u64(total_tokens_);
  w.u64s(unigram_);
  write_sorted(w, bigram_);
  write_sorted(w, trigram_);
}

NgramModel NgramModel::load(BinaryReader& r, std::shared_ptr<const Vocabulary> vocab) {
  NgramModel m;
  m.vocab_ = std::move(vocab);
  m.config_.smoothing = r.f64();
  m.config_.unigram_term = r.u8() != 0;
  m.total_tokens_ = r.u64();
  m.unigram_ = r.u64s();
  if (m.unigram_.size() != m.vocab_->num_ids())
    throw CheckpointError("checkpoint: unigram table does not match vocabulary");
  m.bigram_ = read_map<decltype(m.bigram_)>(r);
  m.trigram_ = read_map<decltype(m.trigram_)>(r);
  m.rebuild_totals();
  return m;
}

bool NgramModel::operator==(const NgramModel& o) const {
  return *vocab_ == *o.vocab_ && config_.smoothing == o.config_.smoothing &&
         config_.unigram_term == o.config_.unigram_term && total_tokens_ == o.total_tokens_ &&
         unigram_ == o.unigram_ && bigram_ == o.bigram_ && trigram_ == o.trigram_;
}

}  // namespace herbvec
