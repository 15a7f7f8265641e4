#include "maptext/pipeline.hpp"

#include <algorithm>
#include <future>
#include <mutex>

#include "maptext/config_io.hpp"

namespace maptext {

namespace {

constexpr std::array<std::string_view, kStageCount> kNames{"i_rgb", "i_gray", "i_mask", "i_e",
                                                           "i_d",   "i_mcc",  "i_o",    "i_f"};

constexpr std::size_t idx(Stage s) { return static_cast<std::size_t>(s); }

// FNV-1a, 64 bit.
Fingerprint fnv1a(const void* data, std::size_t len, Fingerprint h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

Fingerprint nonzero(Fingerprint h) { return h == 0 ? 1 : h; }

// Runs `fn`, tagging any untagged library error with the stage name.
template <typename Fn>
void in_stage(Stage s, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(std::string(stage_name(s)));
  }
}

// Computes stages [from, last] in place; stages before `from` must be valid.
void compute_range(StageSet& s, const PipelineConfig& cfg, const std::array<Fingerprint, kStageCount>& fps,
                   Stage from, Stage last = Stage::Final) {
  for (std::size_t i = idx(from); i <= idx(last); ++i) {
    const Stage stage = kAllStages[i];
    in_stage(stage, [&] {
      switch (stage) {
        case Stage::Rgb:
          break;
        case Stage::Gray:
          s.i_gray = to_grayscale(s.i_rgb);
          if (cfg.denoise_window > 1) s.i_gray = median_denoise(s.i_gray, cfg.denoise_window);
          break;
        case Stage::Mask: {
          fcm::Segmentation seg = fcm::segment(s.i_gray, cfg.fcm, cfg.selection);
          s.i_mask = std::move(seg.mask);
          s.summary.validity = seg.model.validity;
          s.summary.iterations = seg.model.iterations;
          s.summary.converged = seg.model.converged;
          s.summary.centers = seg.model.centers;
          break;
        }
        case Stage::Edge:
          s.i_e = morph::prewitt_edges(s.i_mask);
          break;
        case Stage::Dilated:
          s.i_d = morph::dilate(s.i_e, cfg.se, cfg.dilate_iterations);
          break;
        case Stage::Mcc: {
          const morph::Labeling lab = morph::label_components(s.i_d, cfg.connectivity);
          s.i_mcc = morph::filter_components(lab.labels, lab.stats, cfg.area_threshold);
          s.summary.mcc_components = static_cast<std::size_t>(
              std::count_if(lab.stats.begin(), lab.stats.end(), [&](const morph::ComponentStats& c) {
                return static_cast<long long>(c.area) >= cfg.area_threshold;
              }));
          s.summary.mcc_area = foreground_count(s.i_mcc);
          break;
        }
        case Stage::Output: {
          BinaryMask cur = grid::grid_filter(s.i_mcc, cfg.grid);
          for (const Round& r : cfg.cc_grid_repeats) {
            const morph::Labeling lab = morph::label_components(cur, cfg.connectivity);
            cur = grid::grid_filter(morph::filter_components(lab.labels, lab.stats, r.area_threshold), r.grid);
          }
          s.i_o = std::move(cur);
          s.summary.output_components = morph::label_components(s.i_o, cfg.connectivity).stats.size();
          s.summary.output_area = foreground_count(s.i_o);
          break;
        }
        case Stage::Final:
          s.i_f = regenerate_text(s.i_o, s.i_gray, cfg.bg_color);
          break;
      }
    });
    s.fingerprints[i] = fps[i];
  }
  for (std::size_t i = idx(last) + 1; i < kStageCount; ++i) s.fingerprints[i] = 0;
}

void validate_with_stage(const PipelineConfig& cfg, int width, int height) {
  try {
    cfg.validate_for(width, height);
  } catch (const Error& e) {
    if (e.code() == Errc::ThresholdOutOfRange) throw e.with_stage(std::string(stage_name(Stage::Mcc)));
    if (e.code() == Errc::WindowTooLarge) throw e.with_stage(std::string(stage_name(Stage::Gray)));
    throw e.with_stage("config");
  }
}

}  // namespace

std::string_view stage_name(Stage stage) { return kNames[idx(stage)]; }

std::optional<Stage> stage_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStageCount; ++i)
    if (kNames[i] == name) return kAllStages[i];
  return std::nullopt;
}

std::vector<Round> PipelineConfig::rounds() const {
  std::vector<Round> out{{area_threshold, grid}};
  out.insert(out.end(), cc_grid_repeats.begin(), cc_grid_repeats.end());
  return out;
}

void PipelineConfig::validate() const {
  fcm.validate();
  if (selection.kind == fcm::Selection::Kind::Index && (selection.index < 0 || selection.index >= fcm.k))
    throw Error(Errc::IndexOutOfRange, "selection index " + std::to_string(selection.index) + " outside [0, " +
                                           std::to_string(fcm.k) + ")");
  if (denoise_window < 0 || (denoise_window > 1 && (denoise_window < 3 || denoise_window % 2 == 0)))
    throw Error(Errc::EvenWindow, "denoise_window must be 0, 1 or an odd value >= 3");
  if (dilate_iterations < 1) throw Error(Errc::InvalidArgument, "dilate_iterations must be >= 1");
  if (connectivity != morph::Connectivity::Four && connectivity != morph::Connectivity::Eight)
    throw Error(Errc::InvalidArgument, "connectivity must be 4 or 8");
  for (const Round& r : rounds()) {
    r.grid.validate();
    if (r.area_threshold <= 0)
      throw Error(Errc::ThresholdOutOfRange,
                  "area threshold T=" + std::to_string(r.area_threshold) + " violates 0 < T < m*n");
  }
}

void PipelineConfig::validate_for(int width, int height) const {
  validate();
  const long long pixels = static_cast<long long>(width) * height;
  for (const Round& r : rounds()) morph::check_area_threshold(r.area_threshold, pixels);
  if (denoise_window > std::min(width, height))
    throw Error(Errc::WindowTooLarge, "denoise_window exceeds image size");
}

Fingerprint image_fingerprint(const RgbImage& img) {
  const int dims[2] = {img.width(), img.height()};
  Fingerprint h = fnv1a(dims, sizeof dims);
  h = fnv1a(img.pixels().data(), img.size() * sizeof(Rgb), h);
  return nonzero(h);
}

std::array<Fingerprint, kStageCount> stage_fingerprints(const PipelineConfig& cfg, Fingerprint source) {
  std::array<Fingerprint, kStageCount> out{};
  out[0] = nonzero(source);
  for (std::size_t i = 1; i < kStageCount; ++i) {
    const std::string text = std::string(kNames[i]) + config::slice(cfg, kAllStages[i]).dump();
    out[i] = nonzero(fnv1a(text.data(), text.size(), fnv1a(&out[i - 1], sizeof(Fingerprint))));
  }
  return out;
}

GrayImage StageSet::gray_view(Stage s) const {
  switch (s) {
    case Stage::Rgb: return to_grayscale(i_rgb);
    case Stage::Gray: return i_gray;
    case Stage::Mask: return mask_to_gray(i_mask);
    case Stage::Edge: return mask_to_gray(i_e);
    case Stage::Dilated: return mask_to_gray(i_d);
    case Stage::Mcc: return mask_to_gray(i_mcc);
    case Stage::Output: return mask_to_gray(i_o);
    case Stage::Final: return i_f;
  }
  return {};
}

bool StageSet::same_planes(const StageSet& o) const {
  return fingerprints == o.fingerprints && i_rgb == o.i_rgb && i_gray == o.i_gray && i_mask == o.i_mask &&
         i_e == o.i_e && i_d == o.i_d && i_mcc == o.i_mcc && i_o == o.i_o && i_f == o.i_f;
}

GrayImage regenerate_text(const BinaryMask& mask, const GrayImage& gray, Intensity bg) {
  if (!mask.same_shape(gray)) throw Error(Errc::DimensionMismatch, "regenerate_text: mask and gray differ in size");
  GrayImage out(gray.width(), gray.height(), bg);
  auto m = mask.pixels();
  auto g = gray.pixels();
  auto o = out.pixels();
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) o[i] = g[i];
  return out;
}

StageSet run_pipeline(const RgbImage& img, const PipelineConfig& cfg) {
  validate_with_stage(cfg, img.width(), img.height());
  StageSet s;
  s.i_rgb = img;
  compute_range(s, cfg, stage_fingerprints(cfg, image_fingerprint(img)), Stage::Rgb);
  return s;
}

Stage first_stage_for_parameter(std::string_view p) {
  if (p == "denoise_window") return Stage::Gray;
  if (p == "fcm" || p == "selection" || p.rfind("fcm.", 0) == 0) return Stage::Mask;
  if (p == "se" || p == "dilate_iterations") return Stage::Dilated;
  if (p == "connectivity" || p == "area_threshold") return Stage::Mcc;
  if (p == "grid" || p == "cc_grid_repeats") return Stage::Output;
  if (p == "bg_color") return Stage::Final;
  throw Error(Errc::InvalidArgument, "unknown pipeline parameter '" + std::string(p) + "'");
}

StageSet rerun_from_stage(const StageSet& stages, const PipelineConfig& cfg, std::string_view changed) {
  const Stage from = first_stage_for_parameter(changed);
  validate_with_stage(cfg, stages.i_rgb.width(), stages.i_rgb.height());
  const auto fps = stage_fingerprints(cfg, stages.fingerprint(Stage::Rgb));
  for (std::size_t i = 0; i < idx(from); ++i) {
    if (stages.fingerprints[i] != fps[i])
      throw Error(Errc::StaleStageSet, std::string(kNames[i]) + " does not match the configuration; '" +
                                           std::string(changed) + "' is not the only change");
  }
  StageSet out = stages;
  compute_range(out, cfg, fps, from);
  return out;
}

Refresh refresh(const StageSet& stages, const PipelineConfig& cfg) {
  if (!stages.has(Stage::Rgb)) throw Error(Errc::StaleStageSet, "stage set has no source image");
  validate_with_stage(cfg, stages.i_rgb.width(), stages.i_rgb.height());
  const auto fps = stage_fingerprints(cfg, stages.fingerprint(Stage::Rgb));
  std::size_t first = kStageCount;
  for (std::size_t i = 0; i < kStageCount; ++i) {
    if (stages.fingerprints[i] != fps[i]) {
      first = i;
      break;
    }
  }
  Refresh r{stages, {}};
  if (first == kStageCount) return r;
  compute_range(r.stages, cfg, fps, kAllStages[first]);
  for (std::size_t i = first; i < kStageCount; ++i) r.recomputed.push_back(kAllStages[i]);
  return r;
}

std::vector<SweepEntry> threshold_sweep(const RgbImage& img, const PipelineConfig& cfg,
                                        const std::vector<long long>& t_values, int jobs) {
  cfg.validate();
  StageSet base;
  base.i_rgb = img;
  const auto base_fps = stage_fingerprints(cfg, image_fingerprint(img));
  compute_range(base, cfg, base_fps, Stage::Rgb, Stage::Dilated);

  std::vector<SweepEntry> entries(t_values.size());
  auto run_one = [&](std::size_t i) {
    SweepEntry& e = entries[i];
    e.t = t_values[i];
    try {
      PipelineConfig c = cfg;
      c.area_threshold = t_values[i];
      StageSet s = rerun_from_stage(base, c, "area_threshold");
      e.component_count = s.summary.mcc_components;
      e.foreground_area = s.summary.mcc_area;
      e.i_mcc = std::move(s.i_mcc);
      e.i_f = std::move(s.i_f);
    } catch (const Error& err) {
      e.error = err.what();
    }
  };

  const std::size_t workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || entries.size() < 2) {
    for (std::size_t i = 0; i < entries.size(); ++i) run_one(i);
    return entries;
  }
  std::mutex next_mutex;
  std::size_t next = 0;
  std::vector<std::future<void>> pool;
  for (std::size_t w = 0; w < std::min(workers, entries.size()); ++w) {
    pool.push_back(std::async(std::launch::async, [&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard lock(next_mutex);
          if (next >= entries.size()) return;
          i = next++;
        }
        run_one(i);
      }
    }));
  }
  for (auto& f : pool) f.get();
  return entries;
}

}  // namespace maptext
