#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "maptext/morphology.hpp"

namespace maptext::eval {

enum class Label { Text, NonText };

struct Region {
  morph::BBox bbox;  // inclusive pixel coordinates
  Label label = Label::Text;
};

struct GroundTruth {
  std::string image;
  int width = 0;
  int height = 0;
  std::vector<Region> regions;
};

struct ConfusionMatrix {
  std::size_t tp = 0, fn = 0, fp = 0, tn = 0;

  std::size_t total() const noexcept { return tp + fn + fp + tn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp, fn += o.fn, fp += o.fp, tn += o.tn;
    return *this;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Intersection over union of inclusive pixel boxes.
double iou(const morph::BBox& a, const morph::BBox& b);
bool overlaps(const morph::BBox& a, const morph::BBox& b);

// Component-level scoring. Text regions are visited in index order and each
// claims the best still-unclaimed component with IoU >= iou_min (ties go to
// the lower component id): TP, otherwise FN. A component whose IoU with every
// text region is below iou_min is spurious; each non-text region touched by a
// spurious component is one FP, every other non-text region is a TN.
ConfusionMatrix match_components(const morph::LabelMatrix& labels, const std::vector<morph::ComponentStats>& stats,
                                 const GroundTruth& truth, double iou_min = 0.5);

// Labels `predicted` (8-connected) and scores it with match_components.
ConfusionMatrix score_mask(const BinaryMask& predicted, const GroundTruth& truth, double iou_min = 0.5);

// Pixel-level alternative: every pixel inside a text region is TP/FN by the
// predicted mask, every pixel inside a non-text region FP/TN.
ConfusionMatrix score_pixels(const BinaryMask& predicted, const GroundTruth& truth);

// (tp+tn)/total. Throws EmptyMatrix when total is 0.
double accuracy(const ConfusionMatrix& cm);

// {image, width, height, regions:[{x0,y0,x1,y1,label}]}, label "text" or
// "non-text". Schema errors name the offending region index.
GroundTruth truth_from_json(const nlohmann::json& doc);
nlohmann::json truth_to_json(const GroundTruth& truth);
GroundTruth load_truth(const std::filesystem::path& path);

// {tp,fn,fp,tn,accuracy}; accuracy is null when the matrix is empty.
nlohmann::json report_json(const ConfusionMatrix& cm);

}  // namespace maptext::eval
