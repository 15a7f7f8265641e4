#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <doctest.h>

#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "maptext/archive.hpp"
#include "maptext/cli.hpp"
#include "maptext/config_io.hpp"
#include "maptext/ingest.hpp"
#include "maptext/service.hpp"
#include "maptext/synthetic.hpp"
#include "test_util.hpp"

using namespace maptext;
using nlohmann::json;

namespace {

struct Harness {
  service::TuningServer server;
  int port;
  httplib::Client client;

  explicit Harness(service::Options o = {})
      : server(std::move(o)), port(server.bind("127.0.0.1", 0)), client("127.0.0.1", port) {
    server.start();
    client.set_read_timeout(60, 0);
  }

  std::string create(const std::vector<std::uint8_t>& bytes) {
    auto res = client.Post("/sessions", std::string(bytes.begin(), bytes.end()), "application/octet-stream");
    REQUIRE(res);
    REQUIRE(res->status == 201);
    return json::parse(res->body).at("id");
  }

  httplib::Result patch(const std::string& id, const json& body) {
    return client.Patch("/sessions/" + id + "/params", body.dump(), "application/json");
  }
};

synthetic::Map fixture_map(std::uint64_t seed = 3) {
  synthetic::Options o;
  o.width = 210;
  o.height = 150;
  o.glyphs = 10;
  o.horizontal_roads = 2;
  o.vertical_roads = 2;
  o.lake = std::pair{31, 19};
  o.seed = seed;
  return synthetic::generate(o);
}

service::Options fixture_options() {
  service::Options o;
  o.defaults = synthetic::fixture_config();
  return o;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "maptext");
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

}  // namespace

TEST_CASE("health and session creation") {
  Harness h(fixture_options());
  auto health = h.client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);

  const synthetic::Map map = fixture_map();
  const auto png = ingest::encode_png(map.image);
  auto res = h.client.Post("/sessions", std::string(png.begin(), png.end()), "image/png");
  REQUIRE(res);
  CHECK(res->status == 201);
  const json created = json::parse(res->body);
  const std::string id = created.at("id");
  CHECK(id.size() == 32);
  CHECK(created.at("width") == 210);
  CHECK(created.at("ran") == false);

  auto got = h.client.Get("/sessions/" + id);
  REQUIRE(got);
  CHECK(got->status == 200);
  CHECK(json::parse(got->body).at("config") == config::to_json(synthetic::fixture_config()));
  auto params = h.client.Get("/sessions/" + id + "/params");
  CHECK(json::parse(params->body) == config::to_json(synthetic::fixture_config()));

  CHECK(h.create(png) != id);
  CHECK(h.server.session_count() == 2);

  SUBCASE("multipart upload") {
    httplib::MultipartFormDataItems items{{"image", std::string(png.begin(), png.end()), "map.png", "image/png"}};
    auto mp = h.client.Post("/sessions", items);
    REQUIRE(mp);
    CHECK(mp->status == 201);
  }

  SUBCASE("rejected uploads") {
    auto text = h.client.Post("/sessions", "plain words", "text/plain");
    REQUIRE(text);
    CHECK(text->status == 415);
    auto cut = h.client.Post("/sessions", std::string(png.begin(), png.begin() + 60), "image/png");
    REQUIRE(cut);
    CHECK(cut->status == 400);
  }

  SUBCASE("unknown session") {
    CHECK(h.client.Get("/sessions/deadbeef")->status == 404);
    CHECK(h.client.Get("/sessions/deadbeef/stages/i_f.png")->status == 404);
    CHECK(h.patch("deadbeef", json::object())->status == 404);
  }
}

TEST_CASE("pixel limit") {
  service::Options o;
  o.max_pixels = 100;
  Harness h(o);
  const auto png = ingest::encode_png(RgbImage(20, 20, {1, 2, 3}));
  auto res = h.client.Post("/sessions", std::string(png.begin(), png.end()), "image/png");
  REQUIRE(res);
  CHECK(res->status == 413);
}

TEST_CASE("parameter updates recompute only downstream stages") {
  Harness h(fixture_options());
  const synthetic::Map map = fixture_map();
  const std::string id = h.create(ingest::encode_png(map.image));

  auto first = h.patch(id, {{"area_threshold", 400}});
  REQUIRE(first);
  REQUIRE(first->status == 200);
  CHECK(json::parse(first->body).at("changed").size() == 7);

  auto second = h.patch(id, {{"area_threshold", 410}});
  REQUIRE(second);
  REQUIRE(second->status == 200);
  const json report = json::parse(second->body);
  CHECK(report.at("changed") == json::array({"i_mcc", "i_o", "i_f"}));
  CHECK(report.at("config").at("area_threshold") == 410);

  auto same = h.patch(id, {{"area_threshold", 410}});
  CHECK(json::parse(same->body).at("changed").empty());
  auto rerun = h.client.Post("/sessions/" + id + "/run", "", "application/json");
  CHECK(json::parse(rerun->body).at("changed").empty());

  SUBCASE("bound violations are field errors") {
    auto bad = h.patch(id, {{"area_threshold", 210 * 150}});
    REQUIRE(bad);
    CHECK(bad->status == 422);
    const json body = json::parse(bad->body);
    CHECK(body.at("field") == "area_threshold");
    CHECK(body.at("error").get<std::string>().find("0 < T < m*n") != std::string::npos);

    auto schema = h.patch(id, {{"fcm", {{"k", "many"}}}});
    CHECK(schema->status == 422);
    CHECK(json::parse(schema->body).at("field") == "fcm");
    CHECK(h.patch(id, {{"unknown", 1}})->status == 422);
    auto garbled = h.client.Patch("/sessions/" + id + "/params", "{not json", "application/json");
    CHECK(garbled->status == 400);

    auto still = h.client.Get("/sessions/" + id + "/params");
    CHECK(json::parse(still->body).at("area_threshold") == 410);
  }
}

TEST_CASE("stage images and caching") {
  Harness h(fixture_options());
  const synthetic::Map map = fixture_map(8);
  const std::string id = h.create(ingest::encode_png(map.image));

  CHECK(h.client.Get("/sessions/" + id + "/stages/i_f.png")->status == 409);
  CHECK(h.client.Get("/sessions/" + id + "/export")->status == 409);
  REQUIRE(h.client.Post("/sessions/" + id + "/run", "", "application/json")->status == 200);

  const StageSet golden = run_pipeline(map.image, synthetic::fixture_config());
  for (Stage st : kAllStages) {
    auto res = h.client.Get("/sessions/" + id + "/stages/" + std::string(stage_name(st)) + ".png");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    const RgbImage img = ingest::decode_image(std::span(reinterpret_cast<const std::uint8_t*>(res->body.data()), res->body.size()));
    if (st == Stage::Rgb)
      CHECK(img == map.image);
    else
      CHECK(to_grayscale(img) == golden.gray_view(st));
  }
  CHECK(h.client.Get("/sessions/" + id + "/stages/i_zz.png")->status == 404);

  auto first = h.client.Get("/sessions/" + id + "/stages/i_o.png");
  const std::string tag = first->get_header_value("ETag");
  CHECK_FALSE(tag.empty());
  auto cached = h.client.Get("/sessions/" + id + "/stages/i_o.png", {{"If-None-Match", tag}});
  REQUIRE(cached);
  CHECK(cached->status == 304);
  CHECK(cached->get_header_value("ETag") == tag);

  REQUIRE(h.patch(id, {{"bg_color", 0}})->status == 200);
  CHECK(h.client.Get("/sessions/" + id + "/stages/i_o.png", {{"If-None-Match", tag}})->status == 304);
  const std::string f_tag = h.client.Get("/sessions/" + id + "/stages/i_f.png")->get_header_value("ETag");
  REQUIRE(h.patch(id, {{"bg_color", 255}})->status == 200);
  CHECK(h.client.Get("/sessions/" + id + "/stages/i_f.png", {{"If-None-Match", f_tag}})->status == 200);
}

TEST_CASE("service output matches the command line") {
  testutil::TempDir dir;
  Harness h(fixture_options());
  const synthetic::Map map = fixture_map(5);
  ingest::save_image(map.image, dir / "map.png");
  const std::string id = h.create(ingest::read_file(dir / "map.png"));
  REQUIRE(h.patch(id, {{"area_threshold", 12}, {"grid", {{"passes", {3, 5}}}}})->status == 200);

  auto f = h.client.Get("/sessions/" + id + "/stages/i_f.png");
  REQUIRE(f->status == 200);

  config::save(config::merge(synthetic::fixture_config(), {{"area_threshold", 12}, {"grid", {{"passes", {3, 5}}}}}),
               dir / "cfg.json");
  REQUIRE(run_cli({"extract", "--input", (dir / "map.png").string(), "--config", (dir / "cfg.json").string(), "--out",
                   (dir / "cli.png").string()}) == 0);
  const auto cli_bytes = ingest::read_file(dir / "cli.png");
  CHECK(std::string(cli_bytes.begin(), cli_bytes.end()) == f->body);

  SUBCASE("export round-trips through the CLI") {
    auto ex = h.client.Get("/sessions/" + id + "/export");
    REQUIRE(ex);
    REQUIRE(ex->status == 200);
    const auto entries = archive::read_tar(std::span(reinterpret_cast<const std::uint8_t*>(ex->body.data()), ex->body.size()));
    std::set<std::string> names;
    for (const auto& e : entries) names.insert(e.name);
    CHECK(names.size() == 10);
    CHECK(names.count("config.json") == 1);
    CHECK(names.count("summary.json") == 1);
    int stage_entries = 0;
    for (const auto& n : names) stage_entries += n.rfind("stages/", 0) == 0;
    CHECK(stage_entries == 8);

    for (const auto& e : entries)
      if (e.name == "config.json") ingest::write_file_atomic(dir / "exported.json", e.data);
    REQUIRE(run_cli({"extract", "--input", (dir / "map.png").string(), "--config", (dir / "exported.json").string(),
                     "--out", (dir / "again.png").string()}) == 0);
    for (const auto& e : entries)
      if (e.name == "stages/i_f.png") CHECK(ingest::read_file(dir / "again.png") == e.data);
  }
}

TEST_CASE("idle sessions expire") {
  service::Options o = fixture_options();
  o.ttl = std::chrono::milliseconds(300);
  Harness h(o);
  const std::string id = h.create(ingest::encode_png(fixture_map().image));
  CHECK(h.client.Get("/sessions/" + id)->status == 200);
  std::this_thread::sleep_for(std::chrono::milliseconds(600));
  CHECK(h.client.Get("/sessions/" + id)->status == 404);
  CHECK(h.server.session_count() == 0);
}

TEST_CASE("readers see whole snapshots during updates") {
  Harness h(fixture_options());
  const synthetic::Map map = fixture_map(11);
  const std::string id = h.create(ingest::encode_png(map.image));
  REQUIRE(h.patch(id, {{"area_threshold", 4}})->status == 200);

  std::set<std::string> allowed;
  for (long long t : {4, 30}) {
    PipelineConfig c = synthetic::fixture_config();
    c.area_threshold = t;
    const auto png = ingest::encode_png(run_pipeline(map.image, c).i_f);
    allowed.insert(std::string(png.begin(), png.end()));
  }

  std::atomic<bool> done{false};
  std::atomic<int> bad{0}, reads{0};
  std::thread reader([&] {
    httplib::Client c("127.0.0.1", h.port);
    while (!done) {
      auto r = c.Get("/sessions/" + id + "/stages/i_f.png");
      if (!r || r->status != 200 || !allowed.count(r->body)) ++bad;
      ++reads;
    }
  });
  for (int i = 0; i < 6; ++i) REQUIRE(h.patch(id, {{"area_threshold", i % 2 ? 4 : 30}})->status == 200);
  done = true;
  reader.join();
  CHECK(bad == 0);
  CHECK(reads > 0);
}
