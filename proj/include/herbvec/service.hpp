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

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "herbvec/checkpoint.hpp"

namespace httplib {
class Server;
}

namespace herbvec {

struct ModelEntry {
  std::string name;
  TrainedModel model;
  CheckpointMeta meta;
};

/// Immutable set of loaded models; entries sorted by name.
struct ModelSnapshot {
  std::vector<ModelEntry> models;

  const ModelEntry* find(const std::string& name) const;
};

struct SuggestRequest {
  std::string model;
  std::vector<std::string> herbs;
  std::size_t k = 5;
};

struct Suggestion {
  std::string herb;
  double score = 0.0;
};

struct SuggestResponse {
  std::vector<Suggestion> suggestions;
  std::vector<std::string> warnings;
  std::string model;
};

struct ModelInfo {
  std::string name;
  std::string type;
  long dims = 0;
  nlohmann::json metadata;
};

/// Prescription-completion engine. Requests read a snapshot taken under a
/// mutex and never observe a partially loaded model set; reload() swaps in a
/// new snapshot wholesale.
class AssistantService {
 public:
  AssistantService() : snapshot_(std::make_shared<const ModelSnapshot>()) {}

  void reload(ModelSnapshot snapshot);
  /// Loads (name, checkpoint path) pairs into a fresh snapshot.
  void load(const std::vector<std::pair<std::string, std::filesystem::path>>& checkpoints);
  std::shared_ptr<const ModelSnapshot> snapshot() const;

  /// Ranks candidates for a blank appended after the last draft herb. Unknown
  /// herbs become UNK with a warning. Throws NotFoundError for an unknown
  /// model and ConfigError when k < 1.
  SuggestResponse suggest(const SuggestRequest& request) const;

  std::vector<ModelInfo> list_models() const;

  /// Herbs starting with `prefix`, by descending corpus count then
  /// lexicographically, at most k. Union over the loaded vocabularies.
  std::vector<std::string> complete_herb(const std::string& prefix, std::size_t k) const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const ModelSnapshot> snapshot_;
};

/// HTTP status plus JSON body, independent of any socket.
struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

ApiResponse api_models(const AssistantService& service);
ApiResponse api_suggest(const AssistantService& service, const std::string& body);
ApiResponse api_herbs(const AssistantService& service, const std::string& prefix, const std::string& k);

/// GET /api/models, POST /api/suggest, GET /api/herbs; optional static mount.
void register_routes(httplib::Server& server, const AssistantService& service,
                     const std::optional<std::filesystem::path>& static_dir = std::nullopt);

/// Blocks serving the routes above; throws Error when the address cannot be bound.
void serve(const AssistantService& service, const std::string& host, int port,
           const std::optional<std::filesystem::path>& static_dir = std::nullopt);

}  // namespace herbvec
