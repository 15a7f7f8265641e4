// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "maptext/cli.hpp"
#include "maptext/config_io.hpp"
#include "maptext/eval.hpp"
#include "maptext/fcm.hpp"
#include "maptext/gridfilter.hpp"
#include "maptext/ingest.hpp"
#include "maptext/morphology.hpp"
#include "maptext/pipeline.hpp"
#include "maptext/service.hpp"
#include "maptext/synthetic.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace maptext;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int n, const std::string& title, double limit_seconds, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const bool in_time = secs < limit_seconds;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::ostringstream line;
  line << (pass ? "PASS" : "FAIL") << "  criterion " << n << "  " << title << ": " << o.detail;
  line.setf(std::ios::fixed);
  line.precision(limit_seconds < 0.01 ? 6 : 3);
  line << " [" << secs << " s, limit " << limit_seconds << " s" << (in_time ? "" : ", TOO SLOW") << "]";
  std::cout << line.str() << std::endl;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

// 1 ----------------------------------------------------------------------
Outcome accuracy_arithmetic() {
  const double a = eval::accuracy({97, 3, 0, 100});
  return {a == 0.985, "accuracy(97,3,0,100) = " + fmt(a)};
}

// 2 ----------------------------------------------------------------------
Outcome fcm_correctness() {
  std::mt19937_64 rng(2024);
  int monotone_bad = 0, sum_bad = 0, bound_bad = 0;
  double worst_sum = 0;
  for (int d = 0; d < 100; ++d) {
    const int k = 1 + static_cast<int>(rng() % 4);
    const int n = std::max(k, 1 + static_cast<int>(rng() % 500));
    // Mixture of up to k tight-ish groups plus uniform noise.
    std::vector<double> modes(k);
    for (auto& m : modes) m = std::uniform_real_distribution<double>(0, 255)(rng);
    std::vector<double> points(n);
    for (auto& p : points) {
      if (rng() % 4 == 0) {
        p = std::uniform_real_distribution<double>(0, 255)(rng);
      } else {
        p = std::normal_distribution<double>(modes[rng() % k], 6.0)(rng);
      }
    }
    fcm::FcmConfig cfg;
    cfg.k = k;
    cfg.fuzzifier = 1.5 + std::uniform_real_distribution<double>(0, 2.0)(rng);
    cfg.seed = rng();
    const fcm::ClusterResult r = fcm::cluster(points, cfg);

    const auto& h = r.model.validity_history;
    for (std::size_t i = 1; i < h.size(); ++i)
      if (h[i] > h[i - 1] * (1.0 + 1e-12)) ++monotone_bad;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double dev = std::abs(r.u.column_sum(i) - 1.0);
      worst_sum = std::max(worst_sum, dev);
      if (dev > 1e-9) ++sum_bad;
    }
    const auto [lo, hi] = std::minmax_element(points.begin(), points.end());
    std::uniform_real_distribution<double> centre(*lo, *hi);
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> c(k);
      for (auto& v : c) v = centre(rng);
      const double j = oracle::optimal_objective(c, points, cfg.fuzzifier);
      if (r.model.validity > j * (1.0 + 1e-12)) {
        ++bound_bad;
        break;
      }
    }
  }
  std::ostringstream d;
  d << "100 datasets; J_m increases: " << monotone_bad << ", column sums off by >1e-9: " << sum_bad
    << " (worst " << worst_sum << "), beaten by random centers: " << bound_bad;
  return {monotone_bad == 0 && sum_bad == 0 && bound_bad == 0, d.str()};
}

// 3 ----------------------------------------------------------------------
Outcome membership_oracle() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> x(-100, 100), m(1.1, 5.0);
  double worst = 0;
  int singular = 0;
  for (int t = 0; t < 10000; ++t) {
    const int k = 1 + static_cast<int>(rng() % 6);
    std::vector<double> c(k);
    for (auto& v : c) v = x(rng);
    if (t % 5 == 0 && k > 1) c[1] = c[0];  // duplicate centers
    double p = x(rng);
    if (t % 3 == 0) {
      p = c[rng() % k];
      ++singular;
    }
    const double fm = m(rng);
    const std::vector<double> pts{p};
    const fcm::PartitionMatrix u = fcm::memberships(pts, c, fm);
    const auto expect = oracle::membership(p, c, fm);
    for (int i = 0; i < k; ++i) worst = std::max(worst, std::abs(u(i, 0) - expect[i]));
  }
  return {worst <= 1e-12, "10^4 triples (" + std::to_string(singular) + " zero-distance), max |diff| = " + fmt(worst)};
}

// 4 ----------------------------------------------------------------------
Outcome grid_rule_oracle() {
  int mismatches = 0, true_count = 0;
  for (unsigned p = 0; p < 512; ++p) {
    std::vector<std::uint8_t> b(9);
    for (int i = 0; i < 9; ++i) b[i] = (p >> i) & 1u;
    const bool expect = oracle::block_has_line(b, 3);
    true_count += expect;
    if (grid::block_is_line(b, 3) != expect) ++mismatches;
  }
  std::mt19937_64 rng(5);
  int random_mismatches = 0;
  std::vector<std::uint8_t> b(25);
  for (int t = 0; t < 100000; ++t) {
    const unsigned bits = static_cast<unsigned>(rng());
    const bool dense = t % 2;
    for (int i = 0; i < 25; ++i) b[i] = dense ? ((bits >> i) & 1u) | ((rng() % 4) != 0) : (bits >> i) & 1u;
    if (grid::block_is_line(b, 5) != oracle::block_has_line(b, 5)) ++random_mismatches;
  }
  constexpr int kGolden = 282;
  std::ostringstream d;
  d << "3x3 mismatches " << mismatches << "/512, true blocks " << true_count << " (golden " << kGolden
    << "), 5x5 mismatches " << random_mismatches << "/100000";
  return {mismatches == 0 && random_mismatches == 0 && true_count == kGolden, d.str()};
}

// 5 ----------------------------------------------------------------------
bool labeling_matches(const BinaryMask& m, int conn) {
  const morph::Labeling got = morph::label_components(m, static_cast<morph::Connectivity>(conn));
  const oracle::FloodLabeling expect = oracle::flood_fill(m, conn);
  if (got.labels != expect.labels || got.stats.size() != expect.areas.size()) return false;
  for (std::size_t i = 0; i < got.stats.size(); ++i) {
    const auto& b = expect.boxes[i];
    if (got.stats[i].area != expect.areas[i] || !(got.stats[i].bbox == morph::BBox{b[0], b[1], b[2], b[3]}))
      return false;
  }
  return true;
}

Outcome cc_oracle() {
  int bad_small = 0, bad_random = 0;
  for (unsigned p = 0; p < (1u << 16); ++p) {
    BinaryMask m(4, 4);
    for (int i = 0; i < 16; ++i) m.pixels()[i] = (p >> i) & 1u;
    for (int conn : {4, 8})
      if (!labeling_matches(m, conn)) ++bad_small;
  }
  std::mt19937_64 rng(31);
  for (int t = 0; t < 10000; ++t) {
    const BinaryMask m = oracle::random_mask(32, 32, 0.2 + 0.5 * (t % 6) / 5.0, rng);
    for (int conn : {4, 8})
      if (!labeling_matches(m, conn)) ++bad_random;
  }
  std::ostringstream d;
  d << "4x4 exhaustive mismatches " << bad_small << "/131072, 32x32 random mismatches " << bad_random << "/20000";
  return {bad_small == 0 && bad_random == 0, d.str()};
}

// 6 ----------------------------------------------------------------------
Outcome prewitt_oracle() {
  std::mt19937_64 rng(64);
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const BinaryMask m = oracle::random_mask(8, 8, 0.1 + 0.8 * (t % 9) / 8.0, rng);
    if (morph::prewitt_edges(m) != oracle::prewitt(m)) ++bad;
  }
  return {bad == 0, "mismatches " + std::to_string(bad) + "/1000 random 8x8 masks"};
}

// 7 ----------------------------------------------------------------------
Outcome end_to_end_fixture() {
  const PipelineConfig cfg = synthetic::fixture_config();
  std::size_t road_px = 0, road_kept = 0, halo_px = 0, halo_kept = 0, ink_px = 0, ink_kept = 0;
  eval::ConfusionMatrix total;
  double worst_acc = 1.0;
  for (int i = 0; i < 20; ++i) {
    synthetic::Options o;
    o.seed = 1000 + static_cast<std::uint64_t>(i);
    if (i % 4 == 0) o.lake = std::pair{61, 40};
    const synthetic::Map map = synthetic::generate(o);
    const StageSet s = run_pipeline(map.image, cfg);

    BinaryMask near_glyph(map.image.width(), map.image.height());
    for (const morph::BBox& c : map.glyph_cells)
      for (int y = c.min_y; y <= c.max_y; ++y)
        for (int x = c.min_x; x <= c.max_x; ++x) near_glyph.at(x, y) = 1;

    for (int y = 0; y < s.i_o.height(); ++y)
      for (int x = 0; x < s.i_o.width(); ++x) {
        const bool kept = s.i_o.at(x, y);
        if (map.road_pixels.at(x, y)) {
          ++road_px;
          road_kept += kept;
        }
        if (map.glyph_ink.at(x, y)) {
          ++ink_px;
          ink_kept += kept;
        }
        // Edge response of roads: pixels next to a road and away from glyphs.
        bool by_road = false;
        for (int dy = -1; dy <= 1 && !by_road; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            if (map.road_pixels.clamped(x + dx, y + dy)) by_road = true;
        if (by_road && !near_glyph.at(x, y)) {
          ++halo_px;
          halo_kept += kept;
        }
      }
    const eval::ConfusionMatrix cm = eval::score_mask(s.i_o, map.truth);
    total += cm;
    worst_acc = std::min(worst_acc, eval::accuracy(cm));
  }
  std::ostringstream d;
  d << "20 maps 600x400; road pixels kept " << road_kept << "/" << road_px << ", road halo kept " << halo_kept << "/"
    << halo_px << ", glyph pixels kept " << ink_kept << "/" << ink_px << ", tp=" << total.tp << " fn=" << total.fn
    << " fp=" << total.fp << " tn=" << total.tn << ", worst accuracy " << fmt(worst_acc);
  return {road_kept == 0 && halo_kept == 0 && ink_kept == ink_px && worst_acc == 1.0 && eval::accuracy(total) == 1.0,
          d.str()};
}

// 8 ----------------------------------------------------------------------
Outcome reference_replay() {
  synthetic::Options o;
  o.width = 600;
  o.height = 400;
  o.lake = std::pair{121, 79};
  o.seed = 42;
  const synthetic::Map map = synthetic::generate(o);

  PipelineConfig fig2;
  fig2.fcm.k = 2;
  fig2.area_threshold = 2000;
  PipelineConfig fig3 = fig2;
  fig3.area_threshold = 400;
  fig3.grid = {{3}};
  fig3.cc_grid_repeats = {{410, {{}}}};

  std::ostringstream d;
  bool ok = true;
  for (const auto& [name, cfg] : {std::pair{"T=2000", fig2}, std::pair{"T=400 -> grid -> T=410", fig3}}) {
    const StageSet s = run_pipeline(map.image, cfg);
    const bool shrink = is_subset(s.i_mcc, s.i_d) && is_subset(s.i_o, s.i_mcc);
    ok = ok && shrink && s.i_d.width() == 600 && s.i_d.height() == 400;
    d << name << ": |i_d|=" << foreground_count(s.i_d) << " >= |i_mcc|=" << foreground_count(s.i_mcc)
      << " >= |i_o|=" << foreground_count(s.i_o) << (shrink ? " nested" : " NOT nested") << "; ";
  }
  return {ok, d.str()};
}

// 9 ----------------------------------------------------------------------
PipelineConfig mutate(PipelineConfig c, const std::string& what, std::mt19937_64& rng) {
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
  if (what == "denoise_window") c.denoise_window = std::array{1, 3, 5}[pick(3)];
  if (what == "fcm.k") c.fcm.k = 2 + pick(3);
  if (what == "fcm.fuzzifier") c.fcm.fuzzifier = 1.5 + 0.25 * pick(6);
  if (what == "fcm.seed") c.fcm.seed = rng() % 1000;
  if (what == "selection") c.selection = pick(2) ? fcm::Selection::darkest() : fcm::Selection::cluster(0);
  if (what == "se")
    c.se = std::array{morph::StructuringElement::point(), morph::StructuringElement::cross(3),
                      morph::StructuringElement::rectangle(3, 3)}[pick(3)];
  if (what == "dilate_iterations") c.dilate_iterations = 1 + pick(2);
  if (what == "connectivity") c.connectivity = pick(2) ? morph::Connectivity::Four : morph::Connectivity::Eight;
  if (what == "area_threshold") c.area_threshold = 1 + pick(600);
  if (what == "grid") c.grid = std::array{grid::GridSpec{{3}}, grid::GridSpec{{3, 5}}, grid::GridSpec{{}},
                                          grid::GridSpec{{5}, true}}[pick(4)];
  if (what == "cc_grid_repeats") {
    c.cc_grid_repeats.clear();
    for (int i = pick(3); i > 0; --i) c.cc_grid_repeats.push_back({1 + pick(500), grid::GridSpec{{3}}});
  }
  if (what == "bg_color") c.bg_color = static_cast<Intensity>(pick(256));
  return c;
}

Outcome determinism_and_cache() {
  synthetic::Options o;
  o.width = 300;
  o.height = 200;
  o.glyphs = 16;
  o.lake = std::pair{40, 31};
  o.seed = 9;
  const synthetic::Map map = synthetic::generate(o);

  const std::vector<std::string> params{"denoise_window", "fcm.k",           "fcm.fuzzifier", "fcm.seed",
                                        "selection",      "se",              "dilate_iterations",
                                        "connectivity",   "area_threshold",  "grid",
                                        "cc_grid_repeats", "bg_color"};
  std::mt19937_64 rng(123);
  PipelineConfig cfg = synthetic::fixture_config();
  StageSet cur = run_pipeline(map.image, cfg);
  int rerun_bad = 0;
  for (int i = 0; i < 50; ++i) {
    const std::string& p = params[rng() % params.size()];
    const PipelineConfig next = mutate(cfg, p, rng);
    const StageSet partial = rerun_from_stage(cur, next, p);
    const StageSet full = run_pipeline(map.image, next);
    if (!partial.same_planes(full)) ++rerun_bad;
    cfg = next;
    cur = partial;
  }

  testutil::TempDir dir;
  ingest::save_image(map.image, dir / "map.png");
  service::Options so;
  service::TuningServer server(so);
  const int port = server.bind("127.0.0.1", 0);
  server.start();
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(120, 0);
  const auto png = ingest::read_file(dir / "map.png");
  auto created = client.Post("/sessions", std::string(png.begin(), png.end()), "image/png");
  if (!created || created->status != 201) return {false, "service refused the upload"};
  const std::string id = json::parse(created->body).at("id");

  int cli_bad = 0;
  PipelineConfig shared = synthetic::fixture_config();
  for (int i = 0; i < 10; ++i) {
    const std::string& p = params[rng() % params.size()];
    shared = mutate(shared, p, rng);
    const auto cfg_path = dir / ("cfg" + std::to_string(i) + ".json");
    config::save(shared, cfg_path);
    const auto out_path = dir / ("out" + std::to_string(i) + ".png");
    std::vector<std::string> args{"maptext", "extract", "--input", (dir / "map.png").string(), "--config",
                                  cfg_path.string(), "--out", out_path.string()};
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);

    auto patched = client.Patch("/sessions/" + id + "/params", config::to_json(shared).dump(), "application/json");
    auto served = client.Get("/sessions/" + id + "/stages/i_f.png");
    if (code != 0 || !patched || patched->status != 200 || !served || served->status != 200) {
      ++cli_bad;
      continue;
    }
    const auto cli_bytes = ingest::read_file(out_path);
    if (std::string(cli_bytes.begin(), cli_bytes.end()) != served->body) ++cli_bad;
  }
  server.stop();

  std::ostringstream d;
  d << "rerun vs full run mismatches " << rerun_bad << "/50, CLI vs service i_f mismatches " << cli_bad << "/10";
  return {rerun_bad == 0 && cli_bad == 0, d.str()};
}

}  // namespace

int main() {
  criterion(1, "accuracy arithmetic", 0.001, accuracy_arithmetic);
  criterion(2, "FCM correctness", 10, fcm_correctness);
  criterion(3, "membership oracle", 10, membership_oracle);
  criterion(4, "grid-rule oracle", 1, grid_rule_oracle);
  criterion(5, "connected-component oracle", 60, cc_oracle);
  criterion(6, "Prewitt oracle", 10, prewitt_oracle);
  criterion(7, "end-to-end fixture", 30, end_to_end_fixture);
  criterion(8, "reference-parameter replay", 60, reference_replay);
  criterion(9, "determinism and cache", 120, determinism_and_cache);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures;
}
