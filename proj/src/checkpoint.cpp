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

#include "herbvec/checkpoint.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>

#include "herbvec/ranking.hpp"
#include "herbvec/serialize.hpp"

namespace herbvec {

void BinaryWriter::vocabulary(const Vocabulary& vocab) {
  u64(vocab.num_herbs());
  u64(vocab.count(Vocabulary::kUnk));
  for (HerbId id = 1; id < static_cast<HerbId>(vocab.size()); ++id) {
    str(vocab.token(id));
    u64(vocab.count(id));
  }
}

Vocabulary BinaryReader::vocabulary() {
  const auto n = u64();
  if (n > remaining() / 16) throw CheckpointError("checkpoint: truncated vocabulary");
  const auto unk = u64();
  std::vector<std::string> tokens;
  std::vector<std::size_t> counts;
  tokens.reserve(static_cast<std::size_t>(n));
  counts.reserve(static_cast<std::size_t>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    tokens.push_back(str());
    counts.push_back(static_cast<std::size_t>(u64()));
  }
  try {
    return Vocabulary::from_tokens(std::move(tokens), std::move(counts), static_cast<std::size_t>(unk));
  } catch (const DataError& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
}

namespace {

template <class... Fs>
struct Overload : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overload(Fs...) -> Overload<Fs...>;

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

ModelTag tag_of(const TrainedModel& m) {
  return std::visit(Overload{[](const NgramModel&) { return ModelTag::kNgram; },
                             [](const LsaModel&) { return ModelTag::kLsa; },
                             [](const CbowModel&) { return ModelTag::kCbow; },
                             [](const NeuralLm&) { return ModelTag::kNeural; }},
                    m);
}

std::string kind_of(const TrainedModel& m) {
  return std::visit(Overload{[](const NgramModel&) { return std::string("ngram"); },
                             [](const LsaModel&) { return std::string("lsa"); },
                             [](const CbowModel&) { return std::string("cbow"); },
                             [](const NeuralLm& n) { return std::string(to_string(n.mode())); }},
                    m);
}

const Vocabulary& vocab_of(const TrainedModel& m) {
  return std::visit([](const auto& x) -> const Vocabulary& { return x.vocab(); }, m);
}

long dims_of(const TrainedModel& m) {
  return std::visit(Overload{[](const NgramModel&) { return 0L; },
                             [](const LsaModel& x) { return static_cast<long>(x.embedding().dim()); },
                             [](const CbowModel& x) { return static_cast<long>(x.config().dim); },
                             [](const NeuralLm& x) { return static_cast<long>(x.config().dim); }},
                    m);
}

std::optional<EmbeddingMatrix> embeddings_of(const TrainedModel& m) {
  return std::visit(Overload{[](const NgramModel&) -> std::optional<EmbeddingMatrix> { return std::nullopt; },
                             [](const LsaModel& x) -> std::optional<EmbeddingMatrix> { return x.embedding(); },
                             [](const CbowModel& x) -> std::optional<EmbeddingMatrix> { return x.embedding(); },
                             [](const NeuralLm& x) -> std::optional<EmbeddingMatrix> { return x.embedding(); }},
                    m);
}

HerbId predict_blank(const TrainedModel& m, const BlankedPrescription& q) {
  return std::visit([&](const auto& x) { return x.predict_blank(q); }, m);
}

Eigen::VectorXd next_herb_scores(const TrainedModel& m, const std::vector<HerbId>& draft) {
  const BlankedPrescription q{draft, draft.size()};
  return std::visit(Overload{[&](const NgramModel& x) { return x.scores(q, /*open_end=*/true); },
                             [&](const auto& x) { return x.scores(q); }},
                    m);
}

HerbId predict_next(const TrainedModel& m, const std::vector<HerbId>& draft) {
  const BlankedPrescription q{draft, draft.size()};
  return std::visit(Overload{[&](const NgramModel& x) { return x.predict_blank(q, true, true); },
                             [&](const auto& x) { return x.predict_blank(q); }},
                    m);
}

std::vector<std::uint8_t> serialize_checkpoint(const TrainedModel& model, const CheckpointMeta& meta) {
  BinaryWriter w;
  w.raw(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(tag_of(model)));
  nlohmann::json config = meta.config;
  config["model"] = kind_of(model);
  config["dims"] = dims_of(model);
  config["seed"] = meta.seed;
  w.str(config.dump());
  w.u64(meta.seed);
  w.vocabulary(vocab_of(model));
  std::visit([&](const auto& x) { x.save(w); }, model);
  auto bytes = w.bytes();
  const auto crc = crc_of(bytes);
  for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
  return bytes;
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kCheckpointMagic.size() + 4 + 4 + 4)
    throw CheckpointError("checkpoint: truncated file");
  if (std::string_view(reinterpret_cast<const char*>(bytes.data()), kCheckpointMagic.size()) != kCheckpointMagic)
    throw CheckpointError("checkpoint: bad magic (not a herbvec checkpoint)");

  const auto body = bytes.first(bytes.size() - 4);
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body.size() + static_cast<std::size_t>(i)]) << (8 * i);

  BinaryReader r(body);
  r.raw(kCheckpointMagic.size());
  const auto version = r.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint: unsupported format version " + std::to_string(version));
  if (crc_of(body) != stored) throw CheckpointError("checkpoint: checksum mismatch (file corrupted)");

  const auto tag = r.u32();
  Checkpoint ck{NgramModel{}, {}};
  try {
    ck.meta.config = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad config record: ") + e.what());
  }
  ck.meta.seed = r.u64();
  auto vocab = std::make_shared<const Vocabulary>(r.vocabulary());
  switch (static_cast<ModelTag>(tag)) {
    case ModelTag::kNgram: ck.model = NgramModel::load(r, vocab); break;
    case ModelTag::kLsa: ck.model = LsaModel::load(r, vocab); break;
    case ModelTag::kCbow: ck.model = CbowModel::load(r, vocab); break;
    case ModelTag::kNeural: ck.model = NeuralLm::load(r, vocab); break;
    default: throw CheckpointError("checkpoint: unknown model type tag " + std::to_string(tag));
  }
  if (!r.done()) throw CheckpointError("checkpoint: trailing bytes after model payload");
  return ck;
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path, const CheckpointMeta& meta) {
  const auto bytes = serialize_checkpoint(model, meta);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("checkpoint: cannot write '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("checkpoint: write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace herbvec
