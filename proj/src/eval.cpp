#include "maptext/eval.hpp"

#include <algorithm>
#include <fstream>

namespace maptext::eval {

using nlohmann::json;

double iou(const morph::BBox& a, const morph::BBox& b) {
  const long long ix = std::min(a.max_x, b.max_x) - std::max(a.min_x, b.min_x) + 1;
  const long long iy = std::min(a.max_y, b.max_y) - std::max(a.min_y, b.min_y) + 1;
  if (ix <= 0 || iy <= 0) return 0.0;
  const long long inter = ix * iy;
  return static_cast<double>(inter) / static_cast<double>(a.area() + b.area() - inter);
}

bool overlaps(const morph::BBox& a, const morph::BBox& b) {
  return a.min_x <= b.max_x && b.min_x <= a.max_x && a.min_y <= b.max_y && b.min_y <= a.max_y;
}

ConfusionMatrix match_components(const morph::LabelMatrix& labels, const std::vector<morph::ComponentStats>& stats,
                                 const GroundTruth& truth, double iou_min) {
  if (labels.width() != truth.width || labels.height() != truth.height)
    throw Error(Errc::DimensionMismatch, "prediction is " + std::to_string(labels.width()) + "x" +
                                             std::to_string(labels.height()) + ", truth is " +
                                             std::to_string(truth.width) + "x" + std::to_string(truth.height));
  if (!(iou_min > 0.0 && iou_min <= 1.0)) throw Error(Errc::InvalidArgument, "iou_min must be in (0, 1]");

  ConfusionMatrix cm;
  std::vector<bool> claimed(stats.size(), false);
  std::vector<bool> near_text(stats.size(), false);

  for (const Region& r : truth.regions) {
    if (r.label != Label::Text) continue;
    std::size_t best = stats.size();
    double best_iou = 0.0;
    for (std::size_t c = 0; c < stats.size(); ++c) {
      const double v = iou(r.bbox, stats[c].bbox);
      if (v < iou_min) continue;
      near_text[c] = true;
      if (!claimed[c] && (best == stats.size() || v > best_iou)) {
        best = c;
        best_iou = v;
      }
    }
    if (best < stats.size()) {
      claimed[best] = true;
      ++cm.tp;
    } else {
      ++cm.fn;
    }
  }

  for (const Region& r : truth.regions) {
    if (r.label != Label::NonText) continue;
    bool hit = false;
    for (std::size_t c = 0; c < stats.size() && !hit; ++c) hit = !near_text[c] && overlaps(r.bbox, stats[c].bbox);
    ++(hit ? cm.fp : cm.tn);
  }
  return cm;
}

ConfusionMatrix score_mask(const BinaryMask& predicted, const GroundTruth& truth, double iou_min) {
  const morph::Labeling lab = morph::label_components(predicted, morph::Connectivity::Eight);
  return match_components(lab.labels, lab.stats, truth, iou_min);
}

ConfusionMatrix score_pixels(const BinaryMask& predicted, const GroundTruth& truth) {
  if (predicted.width() != truth.width || predicted.height() != truth.height)
    throw Error(Errc::DimensionMismatch, "prediction and truth differ in size");
  ConfusionMatrix cm;
  for (const Region& r : truth.regions) {
    for (int y = r.bbox.min_y; y <= r.bbox.max_y; ++y) {
      for (int x = r.bbox.min_x; x <= r.bbox.max_x; ++x) {
        const bool on = predicted.at(x, y) != 0;
        if (r.label == Label::Text)
          ++(on ? cm.tp : cm.fn);
        else
          ++(on ? cm.fp : cm.tn);
      }
    }
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(Errc::EmptyMatrix, "confusion matrix is empty; nothing to score");
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

GroundTruth truth_from_json(const json& doc) {
  auto fail = [](const std::string& msg) -> void { throw Error(Errc::SchemaError, msg); };
  if (!doc.is_object()) fail("truth must be a JSON object");
  for (const char* key : {"width", "height", "regions"})
    if (!doc.contains(key)) fail(std::string("truth is missing '") + key + "'");
  GroundTruth t;
  if (doc.contains("image")) {
    if (!doc["image"].is_string()) fail("'image' must be a string");
    t.image = doc["image"].get<std::string>();
  }
  if (!doc["width"].is_number_integer() || !doc["height"].is_number_integer()) fail("width/height must be integers");
  t.width = doc["width"].get<int>();
  t.height = doc["height"].get<int>();
  if (t.width <= 0 || t.height <= 0) fail("width/height must be positive");
  if (!doc["regions"].is_array()) fail("'regions' must be an array");

  const json& regions = doc["regions"];
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const std::string where = "regions[" + std::to_string(i) + "]";
    const json& r = regions[i];
    if (!r.is_object()) fail(where + " must be an object");
    Region region;
    int* coords[4] = {&region.bbox.min_x, &region.bbox.min_y, &region.bbox.max_x, &region.bbox.max_y};
    const char* names[4] = {"x0", "y0", "x1", "y1"};
    for (int k = 0; k < 4; ++k) {
      if (!r.contains(names[k]) || !r[names[k]].is_number_integer())
        fail(where + "." + names[k] + " must be an integer");
      *coords[k] = r[names[k]].get<int>();
    }
    if (!r.contains("label") || !r["label"].is_string()) fail(where + ".label must be \"text\" or \"non-text\"");
    const std::string label = r["label"].get<std::string>();
    if (label == "text")
      region.label = Label::Text;
    else if (label == "non-text")
      region.label = Label::NonText;
    else
      fail(where + ".label must be \"text\" or \"non-text\", got \"" + label + "\"");
    const auto& b = region.bbox;
    if (b.min_x < 0 || b.min_y < 0 || b.max_x >= t.width || b.max_y >= t.height || b.min_x > b.max_x ||
        b.min_y > b.max_y)
      fail(where + " bbox lies outside the " + std::to_string(t.width) + "x" + std::to_string(t.height) + " image");
    t.regions.push_back(region);
  }
  return t;
}

json truth_to_json(const GroundTruth& truth) {
  json regions = json::array();
  for (const Region& r : truth.regions) {
    regions.push_back({{"x0", r.bbox.min_x},
                       {"y0", r.bbox.min_y},
                       {"x1", r.bbox.max_x},
                       {"y1", r.bbox.max_y},
                       {"label", r.label == Label::Text ? "text" : "non-text"}});
  }
  return {{"image", truth.image}, {"width", truth.width}, {"height", truth.height}, {"regions", regions}};
}

GroundTruth load_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open truth file " + path.string());
  try {
    return truth_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(Errc::SchemaError, path.string() + ": " + e.what());
  }
}

json report_json(const ConfusionMatrix& cm) {
  json out = {{"tp", cm.tp}, {"fn", cm.fn}, {"fp", cm.fp}, {"tn", cm.tn}};
  out["accuracy"] = cm.total() ? json(accuracy(cm)) : json(nullptr);
  return out;
}

}  // namespace maptext::eval
