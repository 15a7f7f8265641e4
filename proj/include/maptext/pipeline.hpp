#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maptext/fcm.hpp"
#include "maptext/gridfilter.hpp"
#include "maptext/morphology.hpp"
#include "maptext/raster.hpp"

namespace maptext {

// Pipeline planes in dependency order.
enum class Stage { Rgb, Gray, Mask, Edge, Dilated, Mcc, Output, Final };
inline constexpr std::size_t kStageCount = 8;
inline constexpr std::array<Stage, kStageCount> kAllStages{Stage::Rgb,     Stage::Gray, Stage::Mask,   Stage::Edge,
                                                           Stage::Dilated, Stage::Mcc,  Stage::Output, Stage::Final};

// "i_rgb", "i_gray", ... "i_f".
std::string_view stage_name(Stage stage);
std::optional<Stage> stage_from_name(std::string_view name);

struct Round {
  long long area_threshold = 410;
  grid::GridSpec grid{};
  friend bool operator==(const Round&, const Round&) = default;
};

struct PipelineConfig {
  fcm::FcmConfig fcm{};
  fcm::Selection selection = fcm::Selection::darkest();
  // 0 or 1 disables denoising; otherwise an odd median window >= 3.
  int denoise_window = 3;
  morph::StructuringElement se = morph::StructuringElement::rectangle(3, 3);
  int dilate_iterations = 1;
  morph::Connectivity connectivity = morph::Connectivity::Eight;
  long long area_threshold = 2000;
  grid::GridSpec grid{};
  // Extra label/filter/grid rounds applied after the first one.
  std::vector<Round> cc_grid_repeats;
  Intensity bg_color = 255;

  std::vector<Round> rounds() const;
  // Checks everything that does not depend on the image.
  void validate() const;
  // Also checks every round's threshold against 0 < T < width*height.
  void validate_for(int width, int height) const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

using Fingerprint = std::uint64_t;

Fingerprint image_fingerprint(const RgbImage& img);
// Each entry hashes its stage's config slice together with the upstream entry.
std::array<Fingerprint, kStageCount> stage_fingerprints(const PipelineConfig& cfg, Fingerprint source);

struct StageSummary {
  double validity = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> centers;
  std::size_t mcc_components = 0;
  std::size_t mcc_area = 0;
  std::size_t output_components = 0;
  std::size_t output_area = 0;
};

struct StageSet {
  RgbImage i_rgb;
  GrayImage i_gray;
  BinaryMask i_mask, i_e, i_d, i_mcc, i_o;
  GrayImage i_f;
  // 0 marks an absent stage.
  std::array<Fingerprint, kStageCount> fingerprints{};
  StageSummary summary;

  bool has(Stage s) const { return fingerprints[static_cast<std::size_t>(s)] != 0; }
  Fingerprint fingerprint(Stage s) const { return fingerprints[static_cast<std::size_t>(s)]; }
  // Display rendering: masks as 0/255, rgb converted through to_grayscale.
  GrayImage gray_view(Stage s) const;

  // Planes and fingerprints only; summary is derived data.
  bool same_planes(const StageSet& other) const;
};

StageSet run_pipeline(const RgbImage& img, const PipelineConfig& cfg);

// Output = gray where mask is set, bg elsewhere.
GrayImage regenerate_text(const BinaryMask& mask, const GrayImage& gray, Intensity bg);

// Earliest stage a named parameter feeds ("area_threshold", "fcm.k", "se", ...).
Stage first_stage_for_parameter(std::string_view parameter);

// Recomputes stages from the one `changed` feeds onward. Throws
// StaleStageSet when any upstream fingerprint disagrees with `cfg`.
StageSet rerun_from_stage(const StageSet& stages, const PipelineConfig& cfg, std::string_view changed);

struct Refresh {
  StageSet stages;
  std::vector<Stage> recomputed;
};

// Recomputes every stage whose fingerprint disagrees with `cfg`.
Refresh refresh(const StageSet& stages, const PipelineConfig& cfg);

struct SweepEntry {
  long long t = 0;
  std::size_t component_count = 0;  // components kept by the first filter
  std::size_t foreground_area = 0;  // i_mcc foreground, before gridding
  std::optional<GrayImage> i_f;
  std::optional<BinaryMask> i_mcc;
  std::string error;  // empty on success
};

// One entry per t; stages up to i_d are computed once and shared. Errors are
// recorded per entry. Nothing is auto-selected.
std::vector<SweepEntry> threshold_sweep(const RgbImage& img, const PipelineConfig& cfg,
                                        const std::vector<long long>& t_values, int jobs = 1);

}  // namespace maptext
