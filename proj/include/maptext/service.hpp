#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>

#include "maptext/pipeline.hpp"

namespace maptext::service {

struct Options {
  std::size_t max_pixels = 16'000'000;
  std::chrono::milliseconds ttl = std::chrono::minutes(30);
  // Served at "/" when set (the browser UI build output).
  std::filesystem::path static_dir;
  PipelineConfig defaults{};
};

// HTTP/JSON session service for interactive tuning:
//   POST  /sessions                      upload an image, 201 + {id, ...}
//   GET   /sessions/{id}                 config, run state, stage ETags
//   GET   /sessions/{id}/params          current config
//   PATCH /sessions/{id}/params          merge partial config and recompute
//   POST  /sessions/{id}/run             recompute stale stages
//   GET   /sessions/{id}/stages/{s}.png  stage plane, ETag = fingerprint
//   GET   /sessions/{id}/export          tar: config.json, summary.json, stages/*.png
//   GET   /healthz
class TuningServer {
 public:
  explicit TuningServer(Options options = {});
  ~TuningServer();
  TuningServer(const TuningServer&) = delete;
  TuningServer& operator=(const TuningServer&) = delete;

  // Port 0 picks a free port. Returns the bound port or throws IoError.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  // listen() on a background thread; returns once the server accepts.
  void start();
  void stop();

  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace maptext::service
