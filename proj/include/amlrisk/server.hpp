/*
 * Copyright 2026 The amlrisk Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include "amlrisk/service.hpp"

namespace httplib {
class Server;
}

namespace amlrisk::service {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path reports_dir;  // leaderboard.csv is served from here
  std::string token;  // when set, requests need "Authorization: Bearer <token>"
};

/// HTTP front end over a ModelService. Every response that depends on a model is
/// produced from a single artifact snapshot and stamped with its version.
class HttpServer {
 public:
  HttpServer(ModelService& service, ServerOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and starts serving on a background thread; returns the bound port.
  /// Throws IoError when the address cannot be bound.
  int start();
  /// Serves on the calling thread until stop() is called from elsewhere.
  void run();
  void stop();
  int port() const noexcept { return port_; }

 private:
  void bind();
  void routes();

  ModelService& service_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace amlrisk::service
