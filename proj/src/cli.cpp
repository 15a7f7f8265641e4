#include "maptext/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>

#include "maptext/config_io.hpp"
#include "maptext/eval.hpp"
#include "maptext/ingest.hpp"
#include "maptext/pipeline.hpp"
#include "maptext/synthetic.hpp"

namespace maptext::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Thrown for usage problems discovered after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SourceFlags {
  std::string input;
  std::optional<double> lat, lon;
  std::optional<int> zoom;
  int map_width = 600;
  int map_height = 400;
  std::string url_template;
  int timeout_ms = 10000;
  int retries = 0;
  std::string cache_dir;

  void add(CLI::App& app, bool with_input) {
    if (with_input) app.add_option("--input", input, "Map image (PNG, JPEG, PGM/PPM)");
    app.add_option("--lat", lat, "Latitude for --url-template");
    app.add_option("--lon", lon, "Longitude for --url-template");
    app.add_option("--zoom", zoom, "Zoom level for --url-template");
    app.add_option("--map-width", map_width, "Requested map width")->capture_default_str();
    app.add_option("--map-height", map_height, "Requested map height")->capture_default_str();
    app.add_option("--url-template", url_template, "URL with {lat} {lon} {zoom} {w} {h} placeholders");
    app.add_option("--timeout-ms", timeout_ms, "HTTP timeout")->capture_default_str();
    app.add_option("--retries", retries, "Extra attempts on network failure")->capture_default_str();
    app.add_option("--cache-dir", cache_dir, "Fetch cache (default: $MAPTEXT_CACHE_DIR)");
  }

  ingest::MapRequest request() const {
    if (!lat || !lon || !zoom || url_template.empty())
      throw UsageError("--lat, --lon, --zoom and --url-template are required together");
    ingest::MapRequest req{*lat, *lon, *zoom, map_width, map_height, url_template};
    try {
      req.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    return req;
  }

  ingest::FetchOptions fetch_options() const {
    ingest::FetchOptions o;
    o.timeout = std::chrono::milliseconds(timeout_ms);
    o.retries = retries;
    o.cache_dir = cache_dir.empty() ? ingest::cache_dir_from_env() : fs::path(cache_dir);
    return o;
  }

  RgbImage load() const {
    if (!input.empty()) return ingest::load_image(input);
    if (lat || lon || zoom || !url_template.empty()) return ingest::fetch_map(request(), fetch_options());
    throw UsageError("give --input or --lat/--lon/--zoom with --url-template");
  }
};

struct PipelineFlags {
  std::string config_file;
  std::optional<int> clusters;
  std::optional<double> fuzzifier;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> selection;
  std::optional<int> denoise;
  std::optional<std::string> se;
  std::optional<int> dilate_iterations;
  std::optional<int> connectivity;
  std::optional<long long> threshold;
  std::optional<std::string> grid;
  std::optional<std::string> rounds;
  std::optional<int> bg;

  void add(CLI::App& app) {
    app.add_option("--config", config_file, "Pipeline config JSON; flags override it");
    app.add_option("--clusters", clusters, "FCM cluster count K");
    app.add_option("--fuzzifier", fuzzifier, "FCM fuzzifier m (> 1)");
    app.add_option("--seed", seed, "Seed for FCM center initialization");
    app.add_option("--selection", selection, "darkest | brightest | index:K");
    app.add_option("--denoise", denoise, "Median window (odd >= 3; 0 or 1 disables)");
    app.add_option("--se", se, "Structuring element: WxH rectangle, crossN, or point");
    app.add_option("--dilate-iterations", dilate_iterations, "Dilation repeats");
    app.add_option("--connectivity", connectivity, "4 or 8");
    auto* t = app.add_option("--threshold", threshold, "Area threshold T (0 < T < m*n)");
    app.add_option("--grid", grid, "Grid passes: 3, 5, 3,5 or none");
    auto* r = app.add_option("--rounds", rounds, "Rounds \"T1:g1;T2:g2\", e.g. \"400:3;410:none\"");
    r->excludes(t);
    app.add_option("--bg", bg, "Background intensity for the regenerated image");
  }

  PipelineConfig resolve() const {
    try {
      return resolve_unchecked();
    } catch (const Error& e) {
      if (e.code() == Errc::IoError) throw;
      throw e.with_stage("config");
    }
  }

  PipelineConfig resolve_unchecked() const {
    PipelineConfig cfg = config_file.empty() ? PipelineConfig{} : config::load(config_file);
    if (clusters) cfg.fcm.k = *clusters;
    if (fuzzifier) cfg.fcm.fuzzifier = *fuzzifier;
    if (seed) cfg.fcm.seed = *seed;
    if (selection) cfg.selection = config::parse_selection(*selection);
    if (denoise) cfg.denoise_window = *denoise;
    if (se) cfg.se = parse_se(*se);
    if (dilate_iterations) cfg.dilate_iterations = *dilate_iterations;
    if (connectivity) {
      if (*connectivity != 4 && *connectivity != 8) throw UsageError("--connectivity must be 4 or 8");
      cfg.connectivity = static_cast<morph::Connectivity>(*connectivity);
    }
    if (threshold) cfg.area_threshold = *threshold;
    if (grid) cfg.grid = config::parse_grid(*grid);
    if (rounds) {
      const auto rs = config::parse_rounds(*rounds);
      cfg.area_threshold = rs.front().area_threshold;
      cfg.grid = rs.front().grid;
      cfg.cc_grid_repeats.assign(rs.begin() + 1, rs.end());
    }
    if (bg) {
      if (*bg < 0 || *bg > 255) throw UsageError("--bg must be in [0,255]");
      cfg.bg_color = static_cast<Intensity>(*bg);
    }
    cfg.validate();
    return cfg;
  }

  static morph::StructuringElement parse_se(const std::string& text) {
    if (text == "point") return morph::StructuringElement::point();
    if (text.rfind("cross", 0) == 0) return morph::StructuringElement::cross(std::stoi(text.substr(5)));
    const auto x = text.find('x');
    if (x == std::string::npos) throw UsageError("--se must be WxH, crossN or point");
    return morph::StructuringElement::rectangle(std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1)));
  }
};

json summary_line(const StageSet& s) {
  return {{"component_count", s.summary.output_components},
          {"foreground_area", s.summary.output_area},
          {"mcc_component_count", s.summary.mcc_components},
          {"mcc_foreground_area", s.summary.mcc_area},
          {"validity", s.summary.validity},
          {"iterations", s.summary.iterations},
          {"converged", s.summary.converged}};
}

void dump_stages(const StageSet& s, const fs::path& dir) {
  fs::create_directories(dir);
  ingest::save_image(s.i_rgb, dir / "i_rgb.png");
  for (Stage st : kAllStages)
    if (st != Stage::Rgb) ingest::save_image(s.gray_view(st), dir / (std::string(stage_name(st)) + ".png"));
}

std::vector<long long> parse_t_list(const std::string& text) {
  std::vector<long long> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad threshold '" + item + "' in --t-list");
    }
  }
  return out;
}

// A:B:STEP, end-exclusive.
std::vector<long long> parse_t_range(const std::string& text) {
  long long a = 0, b = 0, step = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !in.eof())
    throw UsageError("--t-range must be A:B:STEP");
  if (step <= 0) throw UsageError("--t-range STEP must be positive");
  std::vector<long long> out;
  for (long long t = a; t < b; t += step) out.push_back(t);
  return out;
}

BinaryMask load_mask(const fs::path& path) {
  return apply_threshold(to_grayscale(ingest::load_image(path)), 127, Polarity::Above);
}

struct EvalFlags {
  std::string truth;
  std::string pred_stages;
  std::string run_config;
  std::string input;
  double iou = 0.5;
  bool pixel = false;
};

eval::ConfusionMatrix score_one(const EvalFlags& f, const eval::GroundTruth& truth, const fs::path& pred_dir,
                                const fs::path& input) {
  BinaryMask predicted;
  if (!f.run_config.empty()) {
    predicted = run_pipeline(ingest::load_image(input), config::load(f.run_config)).i_o;
  } else {
    predicted = load_mask(pred_dir / "i_o.png");
  }
  return f.pixel ? eval::score_pixels(predicted, truth) : eval::score_mask(predicted, truth, f.iou);
}

int cmd_eval(const EvalFlags& f, std::ostream& out) {
  if (f.pred_stages.empty() == f.run_config.empty()) throw UsageError("give exactly one of --pred-stages or --run-config");
  if (!(f.iou > 0.0 && f.iou <= 1.0)) throw UsageError("--iou must be in (0, 1]");

  if (!fs::is_directory(f.truth)) {
    const eval::GroundTruth truth = eval::load_truth(f.truth);
    if (!f.run_config.empty() && f.input.empty()) throw UsageError("--run-config needs --input");
    const eval::ConfusionMatrix cm = score_one(f, truth, f.pred_stages, f.input);
    const double acc = eval::accuracy(cm);
    json report = eval::report_json(cm);
    report["accuracy"] = acc;
    out << report.dump() << '\n';
    return kOk;
  }

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(f.truth))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(Errc::EmptyMatrix, "no truth files in " + f.truth);

  eval::ConfusionMatrix total;
  out << "image,tp,fn,fp,tn,accuracy\n";
  for (const fs::path& file : files) {
    eval::GroundTruth truth;
    try {
      truth = eval::load_truth(file);
    } catch (const Error& e) {
      throw Error(e.code(), file.filename().string() + ": " + e.what());
    }
    const std::string stem = file.stem().string();
    const fs::path input = fs::path(f.truth) / truth.image;
    const eval::ConfusionMatrix cm = score_one(f, truth, fs::path(f.pred_stages) / stem, input);
    total += cm;
    out << stem << ',' << cm.tp << ',' << cm.fn << ',' << cm.fp << ',' << cm.tn << ','
        << (cm.total() ? json(eval::accuracy(cm)).dump() : std::string("")) << '\n';
  }
  out << "TOTAL," << total.tp << ',' << total.fn << ',' << total.fp << ',' << total.tn << ','
      << json(eval::accuracy(total)).dump() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Extract text regions from map images"};
  app.require_subcommand(1);

  SourceFlags source;
  PipelineFlags pipeline;
  std::string out_path, dump_dir;
  auto* extract = app.add_subcommand("extract", "Run the full pipeline on one image");
  source.add(*extract, true);
  pipeline.add(*extract);
  extract->add_option("--out", out_path, "Where to write the regenerated text image (i_f)");
  extract->add_option("--dump-stages", dump_dir, "Directory for all eight stage PNGs");

  SourceFlags sweep_source;
  PipelineFlags sweep_pipeline;
  std::string t_range, t_list, out_dir;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run the pipeline for several area thresholds");
  sweep_source.add(*sweep, true);
  sweep_pipeline.add(*sweep);
  auto* range_opt = sweep->add_option("--t-range", t_range, "A:B:STEP, end exclusive");
  sweep->add_option("--t-list", t_list, "Comma-separated thresholds")->excludes(range_opt);
  sweep->add_option("--out-dir", out_dir, "Directory for sweep.csv and per-T images");
  sweep->add_option("--jobs", jobs, "Parallel thresholds")->capture_default_str();

  EvalFlags eval_flags;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against ground truth");
  eval_cmd->add_option("--truth", eval_flags.truth, "Truth JSON file, or a directory of them")->required();
  eval_cmd->add_option("--pred-stages", eval_flags.pred_stages, "Directory holding i_o.png (per image in dir mode)");
  eval_cmd->add_option("--run-config", eval_flags.run_config, "Run the pipeline with this config instead");
  eval_cmd->add_option("--input", eval_flags.input, "Image for --run-config in single-file mode");
  eval_cmd->add_option("--iou", eval_flags.iou, "Minimum IoU for a text match")->capture_default_str();
  eval_cmd->add_flag("--pixel", eval_flags.pixel, "Score pixels instead of components");

  SourceFlags fetch_source;
  std::string fetch_out;
  auto* fetch = app.add_subcommand("fetch", "Download a static map image");
  fetch_source.add(*fetch, false);
  fetch->add_option("--out", fetch_out, "Output image path")->required();

  synthetic::Options synth_opts;
  std::string synth_out, synth_truth, synth_config;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic map with ground truth");
  synth->add_option("--seed", synth_opts.seed)->capture_default_str();
  synth->add_option("--width", synth_opts.width)->capture_default_str();
  synth->add_option("--height", synth_opts.height)->capture_default_str();
  synth->add_option("--glyphs", synth_opts.glyphs)->capture_default_str();
  synth->add_option("--roads-h", synth_opts.horizontal_roads)->capture_default_str();
  synth->add_option("--roads-v", synth_opts.vertical_roads)->capture_default_str();
  synth->add_option("--out", synth_out, "Map image path")->required();
  synth->add_option("--truth", synth_truth, "Ground-truth JSON path");
  synth->add_option("--config-out", synth_config, "Write the pipeline config the corpus is built for");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (*extract) {
      const PipelineConfig cfg = pipeline.resolve();
      if (out_path.empty() && dump_dir.empty()) throw UsageError("give --out and/or --dump-stages");
      const RgbImage img = source.load();
      const StageSet stages = run_pipeline(img, cfg);
      if (!out_path.empty()) ingest::save_image(stages.i_f, out_path);
      if (!dump_dir.empty()) dump_stages(stages, dump_dir);
      out << summary_line(stages).dump() << '\n';
      return kOk;
    }

    if (*sweep) {
      const PipelineConfig cfg = sweep_pipeline.resolve();
      const std::vector<long long> ts = !t_range.empty() ? parse_t_range(t_range) : parse_t_list(t_list);
      if (ts.empty()) throw UsageError("no thresholds to sweep; give --t-range or --t-list");
      const RgbImage img = sweep_source.load();
      const long long pixels = static_cast<long long>(img.width()) * img.height();
      for (long long t : ts)
        if (t <= 0 || t >= pixels)
          err << "warning: T=" << t << " violates 0 < T < m*n (m*n=" << pixels << ")\n";
      const auto entries = threshold_sweep(img, cfg, ts, jobs);

      std::ostringstream csv;
      csv << "T,component_count,foreground_area\n";
      std::size_t ok = 0;
      if (!out_dir.empty()) fs::create_directories(out_dir);
      for (const SweepEntry& e : entries) {
        if (!e.error.empty()) {
          err << "T=" << e.t << " failed: " << e.error << '\n';
          continue;
        }
        ++ok;
        csv << e.t << ',' << e.component_count << ',' << e.foreground_area << '\n';
        if (!out_dir.empty()) {
          ingest::save_image(*e.i_f, fs::path(out_dir) / ("i_f_T" + std::to_string(e.t) + ".png"));
          ingest::save_image(mask_to_gray(*e.i_mcc), fs::path(out_dir) / ("i_mcc_T" + std::to_string(e.t) + ".png"));
        }
      }
      out << csv.str();
      if (!out_dir.empty()) {
        std::ofstream f(fs::path(out_dir) / "sweep.csv");
        f << csv.str();
      }
      return ok == 0 ? kRuntimeError : kOk;
    }

    if (*eval_cmd) return cmd_eval(eval_flags, out);

    if (*fetch) {
      const RgbImage img = ingest::fetch_map(fetch_source.request(), fetch_source.fetch_options());
      ingest::save_image(img, fetch_out);
      out << json{{"width", img.width()}, {"height", img.height()}, {"url", ingest::expand_url(fetch_source.request())}}.dump()
          << '\n';
      return kOk;
    }

    if (*synth) {
      const synthetic::Map map = synthetic::generate(synth_opts);
      ingest::save_image(map.image, synth_out);
      if (!synth_truth.empty()) {
        eval::GroundTruth truth = map.truth;
        truth.image = fs::path(synth_out).filename().string();
        std::ofstream(synth_truth) << eval::truth_to_json(truth).dump(2) << '\n';
      }
      if (!synth_config.empty()) config::save(synthetic::fixture_config(), synth_config);
      out << json{{"glyphs", map.glyph_cells.size()}, {"roads", map.road_rows.size() + map.road_columns.size()}}.dump()
          << '\n';
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    const bool usage =
        e.code() == Errc::ThresholdOutOfRange || e.code() == Errc::WindowTooLarge || e.stage() == "config";
    err << "error";
    if (!e.stage().empty()) err << " [" << e.stage() << "]";
    err << ": " << to_string(e.code()) << ": " << e.what() << '\n';
    return usage ? kUsageError : kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace maptext::cli
