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

#include "herbvec/service.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "httplib.h"

#include "herbvec/ranking.hpp"

namespace herbvec {

const ModelEntry* ModelSnapshot::find(const std::string& name) const {
  auto it = std::lower_bound(models.begin(), models.end(), name,
                             [](const ModelEntry& e, const std::string& n) { return e.name < n; });
  return it != models.end() && it->name == name ? &*it : nullptr;
}

void AssistantService::reload(ModelSnapshot snapshot) {
  std::sort(snapshot.models.begin(), snapshot.models.end(),
            [](const ModelEntry& a, const ModelEntry& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < snapshot.models.size(); ++i)
    if (snapshot.models[i].name == snapshot.models[i - 1].name)
      throw ConfigError("service: duplicate model name '" + snapshot.models[i].name + "'");
  auto next = std::make_shared<const ModelSnapshot>(std::move(snapshot));
  std::lock_guard lock(mutex_);
  snapshot_ = std::move(next);
}

void AssistantService::load(const std::vector<std::pair<std::string, std::filesystem::path>>& checkpoints) {
  ModelSnapshot snap;
  for (const auto& [name, path] : checkpoints) {
    auto ck = load_checkpoint(path);
    snap.models.push_back({name, std::move(ck.model), std::move(ck.meta)});
  }
  reload(std::move(snap));
}

std::shared_ptr<const ModelSnapshot> AssistantService::snapshot() const {
  std::lock_guard lock(mutex_);
  return snapshot_;
}

SuggestResponse AssistantService::suggest(const SuggestRequest& req) const {
  if (req.k < 1) throw ConfigError("k must be >= 1");
  const auto snap = snapshot();
  const auto* entry = snap->find(req.model);
  if (!entry) throw NotFoundError("unknown model '" + req.model + "'");

  const auto& vocab = vocab_of(entry->model);
  SuggestResponse resp;
  resp.model = entry->name;
  std::vector<HerbId> draft;
  for (const auto& h : req.herbs) {
    const auto id = vocab.find(h);
    if (!id) resp.warnings.push_back("unknown herb '" + h + "' treated as " + std::string(Vocabulary::kUnkToken));
    draft.push_back(id.value_or(Vocabulary::kUnk));
  }
  const auto scores = next_herb_scores(entry->model, draft);
  for (const auto& n : top_k_herbs(scores, req.k, draft)) {
    if (!std::isfinite(n.score)) throw TrainingError("model produced a non-finite score");
    resp.suggestions.push_back({vocab.token(n.id), n.score});
  }
  return resp;
}

std::vector<ModelInfo> AssistantService::list_models() const {
  const auto snap = snapshot();
  std::vector<ModelInfo> out;
  for (const auto& e : snap->models) out.push_back({e.name, kind_of(e.model), dims_of(e.model), e.meta.config});
  return out;
}

std::vector<std::string> AssistantService::complete_herb(const std::string& prefix, std::size_t k) const {
  if (k < 1) throw ConfigError("k must be >= 1");
  const auto snap = snapshot();
  std::map<std::string, std::size_t> merged;
  for (const auto& e : snap->models) {
    const auto& v = vocab_of(e.model);
    for (HerbId id = 1; id < static_cast<HerbId>(v.size()); ++id) {
      const auto& tok = v.token(id);
      if (tok.compare(0, prefix.size(), prefix) != 0) continue;
      auto& c = merged[tok];
      c = std::max(c, v.count(id));
    }
  }
  std::vector<std::pair<std::string, std::size_t>> hits(merged.begin(), merged.end());
  std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < hits.size() && i < k; ++i) out.push_back(hits[i].first);
  return out;
}

namespace {

ApiResponse error(int status, const std::string& message) { return {status, {{"error", message}}}; }

}  // namespace

ApiResponse api_models(const AssistantService& service) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : service.list_models())
    arr.push_back({{"name", m.name}, {"type", m.type}, {"dims", m.dims}, {"metadata", m.metadata}});
  return {200, arr};
}

ApiResponse api_suggest(const AssistantService& service, const std::string& body) {
  SuggestRequest req;
  try {
    const auto j = nlohmann::json::parse(body);
    if (!j.is_object()) return error(422, "request body must be a JSON object");
    if (!j.contains("model") || !j["model"].is_string()) return error(422, "'model' must be a string");
    req.model = j["model"].get<std::string>();
    if (j.contains("herbs")) {
      if (!j["herbs"].is_array()) return error(422, "'herbs' must be an array of strings");
      for (const auto& h : j["herbs"]) {
        if (!h.is_string()) return error(422, "'herbs' must be an array of strings");
        req.herbs.push_back(h.get<std::string>());
      }
    }
    if (j.contains("k")) {
      if (!j["k"].is_number_integer()) return error(422, "'k' must be an integer");
      const auto k = j["k"].get<long long>();
      if (k < 1) return error(422, "'k' must be >= 1");
      req.k = static_cast<std::size_t>(k);
    }
  } catch (const nlohmann::json::exception& e) {
    return error(422, std::string("invalid JSON: ") + e.what());
  }

  try {
    const auto resp = service.suggest(req);
    nlohmann::json out;
    out["model"] = resp.model;
    out["warnings"] = resp.warnings;
    out["suggestions"] = nlohmann::json::array();
    for (const auto& s : resp.suggestions) out["suggestions"].push_back({{"herb", s.herb}, {"score", s.score}});
    return {200, out};
  } catch (const NotFoundError& e) {
    return error(404, e.what());
  } catch (const ConfigError& e) {
    return error(422, e.what());
  } catch (const std::exception& e) {
    return error(500, e.what());
  }
}

ApiResponse api_herbs(const AssistantService& service, const std::string& prefix, const std::string& k_text) {
  long long k = 10;
  if (!k_text.empty()) {
    auto res = std::from_chars(k_text.data(), k_text.data() + k_text.size(), k);
    if (res.ec != std::errc() || res.ptr != k_text.data() + k_text.size() || k < 1)
      return error(422, "'k' must be a positive integer");
  }
  try {
    return {200, service.complete_herb(prefix, static_cast<std::size_t>(k))};
  } catch (const std::exception& e) {
    return error(500, e.what());
  }
}

void register_routes(httplib::Server& server, const AssistantService& service,
                     const std::optional<std::filesystem::path>& static_dir) {
  auto send = [](httplib::Response& res, const ApiResponse& api) {
    res.status = api.status;
    res.set_content(api.body.dump(), "application/json");
  };
  server.Get("/api/models", [&service, send](const httplib::Request&, httplib::Response& res) {
    send(res, api_models(service));
  });
  server.Post("/api/suggest", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, api_suggest(service, req.body));
  });
  server.Get("/api/herbs", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, api_herbs(service, req.get_param_value("prefix"), req.get_param_value("k")));
  });
  server.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send(res, error(500, what));
  });
  if (static_dir && !server.set_mount_point("/", static_dir->string()))
    throw ConfigError("cannot serve static files from '" + static_dir->string() + "'");
}

void serve(const AssistantService& service, const std::string& host, int port,
           const std::optional<std::filesystem::path>& static_dir) {
  httplib::Server server;
  register_routes(server, service, static_dir);
  if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace herbvec
