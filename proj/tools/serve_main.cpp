#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>

#include "maptext/config_io.hpp"
#include "maptext/error.hpp"
#include "maptext/service.hpp"

namespace {

maptext::service::TuningServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive tuning service for the map text pipeline"};
  std::string host = "127.0.0.1";
  int port = 8080;
  long long ttl_seconds = 1800;
  std::string static_dir, config_file;
  std::size_t max_pixels = 16'000'000;
  app.add_option("--host", host)->envname("MAPTEXT_HOST")->capture_default_str();
  app.add_option("--port", port)->envname("MAPTEXT_PORT")->capture_default_str();
  app.add_option("--ttl", ttl_seconds, "Idle session lifetime in seconds")->envname("MAPTEXT_TTL")->capture_default_str();
  app.add_option("--static-dir", static_dir, "Serve the UI from this directory")->envname("MAPTEXT_STATIC_DIR");
  app.add_option("--max-pixels", max_pixels)->envname("MAPTEXT_MAX_PIXELS")->capture_default_str();
  app.add_option("--config", config_file, "Default pipeline config for new sessions")->envname("MAPTEXT_CONFIG");
  CLI11_PARSE(app, argc, argv);

  try {
    maptext::service::Options opts;
    opts.max_pixels = max_pixels;
    opts.ttl = std::chrono::seconds(ttl_seconds);
    opts.static_dir = static_dir;
    if (!config_file.empty()) opts.defaults = maptext::config::load(config_file);
    maptext::service::TuningServer server(opts);
    const int bound = server.bind(host, port);
    std::cerr << "listening on " << host << ':' << bound << '\n';
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.listen();
    g_server = nullptr;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
