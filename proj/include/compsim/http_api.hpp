// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

// JSON-over-HTTP front end for SimService. Routes live under /api/v1; see
// docs/api.md for the schemas.

#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "compsim/edit.hpp"
#include "compsim/service.hpp"

namespace compsim {

inline constexpr int kApiVersion = 1;

// Wire form of an edit command: {"instance_id", "operation", "config"} plus
// "selector"/"name" for symbolic targets. Undo payloads serialize as
// {"operation": "add", "instance_id": id, "restore": true} and cannot be
// parsed back. command_from_json throws ServiceError (400) on bad input.
nlohmann::json command_to_json(const EditCommand& cmd);
EditCommand command_from_json(const nlohmann::json& j);
nlohmann::json outcome_to_json(const EditResponse& response);

// Scene graph listing: nodes with ids, names, boxes and selection flags.
nlohmann::json scene_to_json(const SceneSnapshot& snapshot);

class HttpApi {
 public:
  explicit HttpApi(SimService& service);
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  // Binds `host:port` (port 0 picks a free one) and serves on a background
  // thread. Returns the bound port; throws std::runtime_error on failure.
  int start(const std::string& host, int port);
  // Serves on the calling thread until stop() is called from elsewhere.
  void serve(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace compsim
