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

#include "herbvec/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "herbvec/error.hpp"
#include "herbvec/rng.hpp"

namespace herbvec {

namespace {

constexpr std::string_view kIdeographicComma = "\xE3\x80\x81";  // "、"
constexpr std::string_view kBlankMarker = "___";

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_ascii_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_ascii_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::string> split_herbs(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    if (is_ascii_space(text[i])) {
      flush();
      ++i;
    } else if (text.substr(i, kIdeographicComma.size()) == kIdeographicComma) {
      flush();
      i += kIdeographicComma.size();
    } else {
      current.push_back(text[i]);
      ++i;
    }
  }
  flush();
  return out;
}

ParseResult parse_corpus(std::istream& in, std::string_view source) {
  ParseResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view body = line;
    if (lineno == 1 && body.substr(0, 3) == "\xEF\xBB\xBF") body.remove_prefix(3);
    if (trim(body).empty()) continue;
    if (body.front() == '#') continue;

    RawPrescription rx;
    if (auto tab = body.find('\t'); tab != std::string_view::npos) {
      auto name = trim(body.substr(0, tab));
      if (!name.empty()) rx.name = std::string(name);
      body = body.substr(tab + 1);
    }
    rx.herbs = split_herbs(body);
    if (rx.herbs.empty()) {
      result.skipped.push_back({lineno, "empty herb list"});
      continue;
    }
    if (!source.empty()) rx.source = std::string(source);
    result.prescriptions.push_back(std::move(rx));
  }
  return result;
}

void write_corpus(std::ostream& out, const std::vector<RawPrescription>& corpus) {
  for (const auto& rx : corpus) {
    if (rx.name) out << *rx.name << '\t';
    for (std::size_t i = 0; i < rx.herbs.size(); ++i) {
      if (i) out << ' ';
      out << rx.herbs[i];
    }
    out << '\n';
  }
}

std::unordered_map<std::string, std::size_t> count_tokens(
    const std::vector<RawPrescription>& corpus) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& rx : corpus)
    for (const auto& h : rx.herbs) ++counts[h];
  return counts;
}

std::vector<RawPrescription> project_rare_herbs(const std::vector<RawPrescription>& corpus,
                                                std::size_t threshold) {
  const auto counts = count_tokens(corpus);

  std::vector<std::pair<std::string, std::size_t>> popular;
  for (const auto& [tok, c] : counts)
    if (c >= threshold) popular.emplace_back(tok, c);
  // Best candidate first, so the first superstring found wins.
  std::sort(popular.begin(), popular.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
    return a.first < b.first;
  });

  std::unordered_map<std::string, std::string> mapping;
  for (const auto& [tok, c] : counts) {
    if (c >= threshold) continue;
    for (const auto& [cand, cc] : popular) {
      if (cand.size() > tok.size() && cand.find(tok) != std::string::npos) {
        mapping.emplace(tok, cand);
        break;
      }
    }
  }

  std::vector<RawPrescription> out = corpus;
  for (auto& rx : out)
    for (auto& h : rx.herbs)
      if (auto it = mapping.find(h); it != mapping.end()) h = it->second;
  return out;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> herbs, std::vector<std::size_t> counts,
                                   std::size_t unk_count) {
  if (counts.empty()) counts.assign(herbs.size(), 0);
  if (counts.size() != herbs.size()) throw DataError("vocabulary: token/count length mismatch");
  Vocabulary v;
  v.tokens_.reserve(herbs.size() + 1);
  v.counts_[0] = unk_count;
  for (std::size_t i = 0; i < herbs.size(); ++i) {
    auto& tok = herbs[i];
    if (tok.empty()) throw DataError("vocabulary: empty token");
    if (tok == kUnkToken || tok == kBosToken || tok == kEosToken)
      throw DataError("vocabulary: reserved token '" + tok + "'");
    auto id = static_cast<HerbId>(v.tokens_.size());
    if (!v.index_.emplace(tok, id).second) throw DataError("vocabulary: duplicate token '" + tok + "'");
    v.tokens_.push_back(std::move(tok));
    v.counts_.push_back(counts[i]);
  }
  return v;
}

std::optional<HerbId> Vocabulary::find(std::string_view token) const {
  if (auto it = index_.find(std::string(token)); it != index_.end()) return it->second;
  return std::nullopt;
}

HerbId Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnk); }

const std::string& Vocabulary::token(HerbId id) const {
  static const std::string bos_token(kBosToken), eos_token(kEosToken);
  if (id == bos()) return bos_token;
  if (id == eos()) return eos_token;
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw NotFoundError("vocabulary: id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::size_t Vocabulary::count(HerbId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= counts_.size()) return 0;
  return counts_[static_cast<std::size_t>(id)];
}

Vocabulary build_vocabulary(const std::vector<RawPrescription>& corpus, std::size_t min_count) {
  const auto counts = count_tokens(corpus);
  std::vector<std::pair<std::string, std::size_t>> kept;
  std::size_t unk = 0;
  for (const auto& [tok, c] : counts) {
    if (c >= min_count)
      kept.emplace_back(tok, c);
    else
      unk += c;
  }
  if (kept.empty())
    throw ConfigError("build_vocabulary: no token reaches min_count=" + std::to_string(min_count));
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> toks;
  std::vector<std::size_t> cs;
  for (auto& [t, c] : kept) {
    toks.push_back(t);
    cs.push_back(c);
  }
  return Vocabulary::from_tokens(std::move(toks), std::move(cs), unk);
}

Prescription encode(const RawPrescription& raw, const Vocabulary& vocab) {
  Prescription p;
  p.reserve(raw.herbs.size());
  for (const auto& h : raw.herbs) p.push_back(vocab.id(h));
  return p;
}

std::vector<Prescription> encode(const std::vector<RawPrescription>& corpus,
                                 const Vocabulary& vocab) {
  std::vector<Prescription> out;
  out.reserve(corpus.size());
  for (const auto& rx : corpus) out.push_back(encode(rx, vocab));
  return out;
}

std::vector<std::string> decode(const Prescription& p, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(p.size());
  for (auto id : p) out.push_back(vocab.token(id));
  return out;
}

Partition<std::size_t> split_indices(std::size_t n, const SplitRatios& r, std::uint64_t seed) {
  if (!(r.train > 0 && r.dev > 0 && r.test > 0))
    throw ConfigError("split: ratios must be positive");
  if (std::abs(r.train + r.dev + r.test - 1.0) > 1e-9)
    throw ConfigError("split: ratios must sum to 1");

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  shuffle(idx, rng);

  // 1e-9 absorbs products like 0.29 * 100 = 28.999999999999996.
  auto take = [n](double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
  };
  const std::size_t n_dev = take(r.dev);
  const std::size_t n_test = take(r.test);

  Partition<std::size_t> out;
  out.dev.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_dev));
  out.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_dev),
                  idx.begin() + static_cast<std::ptrdiff_t>(n_dev + n_test));
  out.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_dev + n_test), idx.end());
  return out;
}

Prescription BlankedPrescription::fill(HerbId herb) const {
  Prescription p = context;
  p.insert(p.begin() + static_cast<std::ptrdiff_t>(blank), herb);
  return p;
}

PredictionItem make_prediction_item(const Prescription& p, std::size_t t) {
  if (t >= p.size()) throw ConfigError("make_prediction_item: blank position out of range");
  PredictionItem item;
  item.answer = p[t];
  item.query.blank = t;
  item.query.context.reserve(p.size() - 1);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (i != t) item.query.context.push_back(p[i]);
  return item;
}

TestsetResult make_prediction_testset(const std::vector<Prescription>& corpus, std::uint64_t seed,
                                      std::size_t min_length) {
  TestsetResult out;
  Rng rng(seed);
  for (const auto& p : corpus) {
    if (p.size() < min_length) continue;
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] != Vocabulary::kUnk) positions.push_back(i);
    if (positions.empty()) continue;
    auto t = positions[uniform_index(rng, positions.size())];
    out.items.push_back(make_prediction_item(p, t));
  }
  if (out.items.empty())
    out.warnings.push_back({0, "no prescription with at least " + std::to_string(min_length) +
                                   " herbs; test set is empty"});
  return out;
}

void write_testset(std::ostream& out, const std::vector<PredictionItem>& items,
                   const Vocabulary& vocab) {
  for (const auto& item : items) {
    const auto& q = item.query;
    for (std::size_t i = 0; i <= q.context.size(); ++i) {
      if (i == q.blank) out << (i ? " " : "") << kBlankMarker;
      if (i < q.context.size()) out << (i || q.blank == 0 ? " " : "") << vocab.token(q.context[i]);
    }
    out << '\t' << vocab.token(item.answer) << '\n';
  }
}

std::vector<PredictionItem> read_testset(std::istream& in, const Vocabulary& vocab) {
  std::vector<PredictionItem> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    auto tab = line.rfind('\t');
    if (tab == std::string::npos)
      throw DataError("testset line " + std::to_string(lineno) + ": missing <TAB>answer");
    auto answer = std::string(trim(std::string_view(line).substr(tab + 1)));
    auto tokens = split_herbs(std::string_view(line).substr(0, tab));
    PredictionItem item;
    std::size_t blanks = 0;
    for (const auto& tok : tokens) {
      if (tok == kBlankMarker) {
        item.query.blank = item.query.context.size();
        ++blanks;
      } else {
        item.query.context.push_back(vocab.id(tok));
      }
    }
    if (blanks != 1 || answer.empty())
      throw DataError("testset line " + std::to_string(lineno) + ": expected exactly one ___ and an answer");
    item.answer = vocab.id(answer);
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace herbvec
