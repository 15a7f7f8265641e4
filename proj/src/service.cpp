#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "maptext/service.hpp"

#include <iomanip>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "maptext/archive.hpp"
#include "maptext/config_io.hpp"
#include "maptext/ingest.hpp"

namespace maptext::service {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Snapshot {
  PipelineConfig config;
  std::shared_ptr<const StageSet> stages;
  bool ran = false;
};

struct Session {
  std::string id;
  // Serializes writers; readers only touch `snapshot` under `state`.
  std::mutex writer;
  mutable std::mutex state;
  std::shared_ptr<const Snapshot> snapshot;
  Clock::time_point created;
  Clock::time_point touched;

  std::shared_ptr<const Snapshot> read() const {
    std::lock_guard lock(state);
    return snapshot;
  }
  void publish(std::shared_ptr<const Snapshot> next) {
    std::lock_guard lock(state);
    snapshot = std::move(next);
  }
};

std::string etag_of(Fingerprint fp) {
  std::ostringstream out;
  out << '"' << std::hex << std::setw(16) << std::setfill('0') << fp << '"';
  return out.str();
}

std::string new_session_id() {
  static std::mutex mutex;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mutex);
  std::ostringstream out;
  out << std::hex << std::setfill('0') << std::setw(16) << rng() << std::setw(16) << rng();
  return out.str();
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message, const json& extra = json::object()) {
  json body = {{"error", message}};
  body.update(extra);
  send_json(res, status, body);
}

json summary_json(const StageSummary& s) {
  return {{"validity", s.validity},
          {"iterations", s.iterations},
          {"converged", s.converged},
          {"centers", s.centers},
          {"mcc_components", s.mcc_components},
          {"mcc_area", s.mcc_area},
          {"output_components", s.output_components},
          {"output_area", s.output_area}};
}

json stage_tags(const StageSet& s) {
  json tags = json::object();
  for (Stage st : kAllStages)
    tags[std::string(stage_name(st))] = s.has(st) ? json(etag_of(s.fingerprint(st))) : json(nullptr);
  return tags;
}

bool is_validation_error(Errc c) {
  switch (c) {
    case Errc::SchemaError:
    case Errc::ThresholdOutOfRange:
    case Errc::InvalidArgument:
    case Errc::EvenWindow:
    case Errc::WindowTooLarge:
    case Errc::IndexOutOfRange:
    case Errc::BadBlockSize: return true;
    default: return false;
  }
}

}  // namespace

struct TuningServer::Impl {
  Options options;
  httplib::Server server;
  std::thread thread;
  mutable std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;

  explicit Impl(Options o) : options(std::move(o)) {
    server.set_payload_max_length(512u << 20);
    routes();
  }

  void expire_idle() {
    const auto now = Clock::now();
    std::lock_guard lock(sessions_mutex);
    for (auto it = sessions.begin(); it != sessions.end();) {
      bool expired;
      {
        std::lock_guard state(it->second->state);
        expired = now - it->second->touched > options.ttl;
      }
      it = expired ? sessions.erase(it) : std::next(it);
    }
  }

  std::shared_ptr<Session> find(const std::string& id) {
    expire_idle();
    std::lock_guard lock(sessions_mutex);
    const auto it = sessions.find(id);
    if (it == sessions.end()) return nullptr;
    std::lock_guard state(it->second->state);
    it->second->touched = Clock::now();
    return it->second;
  }

  json describe(const Session& s) const {
    const auto snap = s.read();
    return {{"id", s.id},
            {"width", snap->stages->i_rgb.width()},
            {"height", snap->stages->i_rgb.height()},
            {"config", config::to_json(snap->config)},
            {"ran", snap->ran},
            {"stages", stage_tags(*snap->stages)}};
  }

  // Finds the first patch key that fails on its own, for field-level 422s.
  json offending_field(const PipelineConfig& base, const json& patch, int w, int h) const {
    for (const auto& [key, value] : patch.items()) {
      try {
        config::merge(base, json{{key, value}}).validate_for(w, h);
      } catch (const Error&) {
        return key;
      }
    }
    return nullptr;
  }

  // Recomputes under the session's writer lock and publishes the result.
  json recompute(Session& s, const PipelineConfig& cfg) {
    const auto snap = s.read();
    Refresh r = refresh(*snap->stages, cfg);
    json changed = json::array();
    for (Stage st : r.recomputed) changed.push_back(std::string(stage_name(st)));
    auto next = std::make_shared<Snapshot>();
    next->config = cfg;
    next->stages = std::make_shared<const StageSet>(std::move(r.stages));
    next->ran = true;
    json report = {{"changed", changed},
                   {"summary", summary_json(next->stages->summary)},
                   {"config", config::to_json(cfg)},
                   {"stages", stage_tags(*next->stages)}};
    s.publish(std::move(next));
    return report;
  }

  void routes() {
    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}});
    });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string& body = req.has_file("image") ? req.get_file_value("image").content : req.body;
      RgbImage img;
      try {
        img = ingest::decode_image(
            std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
      } catch (const Error& e) {
        send_error(res, e.code() == Errc::UnsupportedFormat ? 415 : 400, e.what());
        return;
      }
      if (img.size() > options.max_pixels) {
        send_error(res, 413, "image has " + std::to_string(img.size()) + " pixels; limit is " +
                                 std::to_string(options.max_pixels));
        return;
      }
      auto session = std::make_shared<Session>();
      session->id = new_session_id();
      session->created = session->touched = Clock::now();
      auto snap = std::make_shared<Snapshot>();
      snap->config = options.defaults;
      auto stages = std::make_shared<StageSet>();
      stages->i_rgb = std::move(img);
      stages->fingerprints[0] = image_fingerprint(stages->i_rgb);
      snap->stages = std::move(stages);
      session->snapshot = std::move(snap);
      {
        std::lock_guard lock(sessions_mutex);
        sessions[session->id] = session;
      }
      res.set_header("Location", "/sessions/" + session->id);
      send_json(res, 201, describe(*session));
    });

    server.Get(R"(/sessions/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown session");
      send_json(res, 200, describe(*s));
    });

    server.Get(R"(/sessions/([0-9a-f]+)/params)", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown session");
      send_json(res, 200, config::to_json(s->read()->config));
    });

    server.Patch(R"(/sessions/([0-9a-f]+)/params)", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown session");
      json patch;
      try {
        patch = json::parse(req.body);
      } catch (const json::parse_error& e) {
        return send_error(res, 400, std::string("body is not JSON: ") + e.what());
      }
      std::lock_guard writer(s->writer);
      const auto snap = s->read();
      const int w = snap->stages->i_rgb.width();
      const int h = snap->stages->i_rgb.height();
      PipelineConfig next;
      try {
        next = config::merge(snap->config, patch);
        next.validate_for(w, h);
      } catch (const Error& e) {
        if (!is_validation_error(e.code())) throw;
        return send_error(res, 422, e.what(), {{"field", patch.is_object() ? offending_field(snap->config, patch, w, h) : json(nullptr)}});
      }
      try {
        send_json(res, 200, recompute(*s, next));
      } catch (const Error& e) {
        send_error(res, is_validation_error(e.code()) ? 422 : 500, e.what(), {{"stage", e.stage()}});
      }
    });

    server.Post(R"(/sessions/([0-9a-f]+)/run)", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown session");
      std::lock_guard writer(s->writer);
      try {
        send_json(res, 200, recompute(*s, s->read()->config));
      } catch (const Error& e) {
        send_error(res, is_validation_error(e.code()) ? 422 : 500, e.what(), {{"stage", e.stage()}});
      }
    });

    server.Get(R"(/sessions/([0-9a-f]+)/stages/([a-z_]+)\.png)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 auto s = find(req.matches[1]);
                 if (!s) return send_error(res, 404, "unknown session");
                 const auto stage = stage_from_name(req.matches[2].str());
                 if (!stage) return send_error(res, 404, "unknown stage " + req.matches[2].str());
                 const auto snap = s->read();
                 if (!snap->ran) return send_error(res, 409, "no run has completed for this session");
                 const std::string tag = etag_of(snap->stages->fingerprint(*stage));
                 res.set_header("ETag", tag);
                 res.set_header("Cache-Control", "no-cache");
                 if (req.get_header_value("If-None-Match") == tag) {
                   res.status = 304;
                   return;
                 }
                 const auto png = *stage == Stage::Rgb ? ingest::encode_png(snap->stages->i_rgb)
                                                       : ingest::encode_png(snap->stages->gray_view(*stage));
                 res.status = 200;
                 res.set_content(std::string(png.begin(), png.end()), "image/png");
               });

    server.Get(R"(/sessions/([0-9a-f]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown session");
      const auto snap = s->read();
      if (!snap->ran) return send_error(res, 409, "no run has completed for this session");
      std::vector<archive::Entry> entries;
      const std::string cfg = config::to_json(snap->config).dump(2) + "\n";
      entries.push_back({"config.json", {cfg.begin(), cfg.end()}});
      json summary = summary_json(snap->stages->summary);
      summary["stages"] = stage_tags(*snap->stages);
      const std::string sum = summary.dump(2) + "\n";
      entries.push_back({"summary.json", {sum.begin(), sum.end()}});
      for (Stage st : kAllStages) {
        auto png = st == Stage::Rgb ? ingest::encode_png(snap->stages->i_rgb)
                                    : ingest::encode_png(snap->stages->gray_view(st));
        entries.push_back({"stages/" + std::string(stage_name(st)) + ".png", std::move(png)});
      }
      const auto tar = archive::write_tar(entries);
      res.set_header("Content-Disposition", "attachment; filename=\"maptext-" + s->id + ".tar\"");
      res.status = 200;
      res.set_content(std::string(tar.begin(), tar.end()), "application/x-tar");
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      } catch (...) {
        send_error(res, 500, "internal error");
      }
    });

    if (!options.static_dir.empty()) server.set_mount_point("/", options.static_dir.string());
  }
};

TuningServer::TuningServer(Options options) : impl_(std::make_unique<Impl>(std::move(options))) {}

TuningServer::~TuningServer() { stop(); }

int TuningServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::IoError, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void TuningServer::listen() { impl_->server.listen_after_bind(); }

void TuningServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void TuningServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::size_t TuningServer::session_count() const {
  impl_->expire_idle();
  std::lock_guard lock(impl_->sessions_mutex);
  return impl_->sessions.size();
}

}  // namespace maptext::service
