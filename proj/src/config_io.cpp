#include "maptext/config_io.hpp"

#include <fstream>
#include <sstream>

namespace maptext::config {

namespace {

[[noreturn]] void schema_error(const std::string& msg) { throw Error(Errc::SchemaError, msg); }

json grid_to_json(const grid::GridSpec& g) { return {{"passes", g.passes}, {"sliding", g.sliding}}; }

grid::GridSpec grid_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) schema_error(where + " must be an object");
  grid::GridSpec g;
  for (const auto& [key, value] : j.items()) {
    if (key == "passes") {
      if (!value.is_array()) schema_error(where + ".passes must be an array");
      g.passes.clear();
      for (const auto& b : value) {
        if (!b.is_number_integer()) schema_error(where + ".passes entries must be integers");
        g.passes.push_back(b.get<int>());
      }
    } else if (key == "sliding") {
      if (!value.is_boolean()) schema_error(where + ".sliding must be a boolean");
      g.sliding = value.get<bool>();
    } else {
      schema_error("unknown key " + where + "." + key);
    }
  }
  return g;
}

template <typename T>
T number(const json& j, const std::string& where) {
  if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) schema_error(where + " must be a number");
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!j.is_number_unsigned()) schema_error(where + " must be a non-negative integer");
  } else {
    if (!j.is_number_integer()) schema_error(where + " must be an integer");
  }
  return j.get<T>();
}

Round round_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) schema_error(where + " must be an object");
  Round r;
  for (const auto& [key, value] : j.items()) {
    if (key == "area_threshold")
      r.area_threshold = number<long long>(value, where + ".area_threshold");
    else if (key == "grid")
      r.grid = grid_from_json(value, where + ".grid");
    else
      schema_error("unknown key " + where + "." + key);
  }
  return r;
}

}  // namespace

std::string selection_to_string(const fcm::Selection& sel) {
  switch (sel.kind) {
    case fcm::Selection::Kind::Darkest: return "darkest";
    case fcm::Selection::Kind::Brightest: return "brightest";
    case fcm::Selection::Kind::Index: return "index:" + std::to_string(sel.index);
  }
  return "darkest";
}

fcm::Selection parse_selection(const std::string& text) {
  if (text == "darkest") return fcm::Selection::darkest();
  if (text == "brightest") return fcm::Selection::brightest();
  if (text.rfind("index:", 0) == 0) {
    try {
      std::size_t used = 0;
      const int k = std::stoi(text.substr(6), &used);
      if (used == text.size() - 6) return fcm::Selection::cluster(k);
    } catch (const std::exception&) {
    }
  }
  schema_error("selection must be darkest, brightest or index:K, got '" + text + "'");
}

grid::GridSpec parse_grid(const std::string& text) {
  grid::GridSpec g;
  g.passes.clear();
  if (text == "none" || text == "0" || text.empty()) return g;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      g.passes.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(Errc::InvalidArgument, "bad grid size '" + item + "'");
    }
  }
  g.validate();
  return g;
}

std::vector<Round> parse_rounds(const std::string& text) {
  std::vector<Round> rounds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    Round r;
    try {
      std::size_t used = 0;
      const std::string t = item.substr(0, colon);
      r.area_threshold = std::stoll(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw Error(Errc::InvalidArgument, "bad round '" + item + "', expected T:grid");
    }
    r.grid = colon == std::string::npos ? grid::GridSpec{} : parse_grid(item.substr(colon + 1));
    rounds.push_back(r);
  }
  if (rounds.empty()) throw Error(Errc::InvalidArgument, "no rounds given");
  return rounds;
}

json to_json(const PipelineConfig& cfg) {
  json hits = json::array();
  for (const auto& h : cfg.se.hits()) hits.push_back({h.dx, h.dy});
  json repeats = json::array();
  for (const auto& r : cfg.cc_grid_repeats)
    repeats.push_back({{"area_threshold", r.area_threshold}, {"grid", grid_to_json(r.grid)}});
  return {
      {"fcm",
       {{"k", cfg.fcm.k},
        {"fuzzifier", cfg.fcm.fuzzifier},
        {"epsilon", cfg.fcm.epsilon},
        {"max_iterations", cfg.fcm.max_iterations},
        {"seed", cfg.fcm.seed}}},
      {"selection", selection_to_string(cfg.selection)},
      {"denoise_window", cfg.denoise_window},
      {"se", {{"width", cfg.se.width()}, {"height", cfg.se.height()}, {"hits", hits}}},
      {"dilate_iterations", cfg.dilate_iterations},
      {"connectivity", static_cast<int>(cfg.connectivity)},
      {"area_threshold", cfg.area_threshold},
      {"grid", grid_to_json(cfg.grid)},
      {"cc_grid_repeats", repeats},
      {"bg_color", cfg.bg_color},
  };
}

PipelineConfig from_json(const json& doc) {
  if (!doc.is_object()) schema_error("config must be a JSON object");
  PipelineConfig cfg;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "fcm") {
        if (!value.is_object()) schema_error("fcm must be an object");
        for (const auto& [fk, fv] : value.items()) {
          if (fk == "k") cfg.fcm.k = number<int>(fv, "fcm.k");
          else if (fk == "fuzzifier") cfg.fcm.fuzzifier = number<double>(fv, "fcm.fuzzifier");
          else if (fk == "epsilon") cfg.fcm.epsilon = number<double>(fv, "fcm.epsilon");
          else if (fk == "max_iterations") cfg.fcm.max_iterations = number<int>(fv, "fcm.max_iterations");
          else if (fk == "seed") cfg.fcm.seed = number<std::uint64_t>(fv, "fcm.seed");
          else schema_error("unknown key fcm." + fk);
        }
      } else if (key == "selection") {
        if (!value.is_string()) schema_error("selection must be a string");
        cfg.selection = parse_selection(value.get<std::string>());
      } else if (key == "denoise_window") {
        cfg.denoise_window = number<int>(value, "denoise_window");
      } else if (key == "se") {
        if (!value.is_object()) schema_error("se must be an object");
        const int w = number<int>(value.value("width", json(3)), "se.width");
        const int h = number<int>(value.value("height", json(3)), "se.height");
        for (const auto& [sk, sv] : value.items())
          if (sk != "width" && sk != "height" && sk != "hits") schema_error("unknown key se." + sk);
        if (value.contains("hits")) {
          const json& hj = value.at("hits");
          if (!hj.is_array()) schema_error("se.hits must be an array");
          std::vector<morph::Offset> hits;
          for (const auto& h2 : hj) {
            if (!h2.is_array() || h2.size() != 2) schema_error("se.hits entries must be [dx, dy]");
            hits.push_back({number<int>(h2[0], "se.hits[].dx"), number<int>(h2[1], "se.hits[].dy")});
          }
          cfg.se = morph::StructuringElement(w, h, std::move(hits));
        } else {
          cfg.se = morph::StructuringElement::rectangle(w, h);
        }
      } else if (key == "dilate_iterations") {
        cfg.dilate_iterations = number<int>(value, "dilate_iterations");
      } else if (key == "connectivity") {
        const int c = number<int>(value, "connectivity");
        if (c != 4 && c != 8) schema_error("connectivity must be 4 or 8");
        cfg.connectivity = static_cast<morph::Connectivity>(c);
      } else if (key == "area_threshold") {
        cfg.area_threshold = number<long long>(value, "area_threshold");
      } else if (key == "grid") {
        cfg.grid = grid_from_json(value, "grid");
      } else if (key == "cc_grid_repeats") {
        if (!value.is_array()) schema_error("cc_grid_repeats must be an array");
        cfg.cc_grid_repeats.clear();
        for (std::size_t i = 0; i < value.size(); ++i)
          cfg.cc_grid_repeats.push_back(round_from_json(value[i], "cc_grid_repeats[" + std::to_string(i) + "]"));
      } else if (key == "bg_color") {
        const int bg = number<int>(value, "bg_color");
        if (bg < 0 || bg > 255) schema_error("bg_color must be in [0,255]");
        cfg.bg_color = static_cast<Intensity>(bg);
      } else {
        schema_error("unknown key " + key);
      }
    }
  } catch (const Error& e) {
    if (e.code() == Errc::SchemaError) throw;
    throw Error(Errc::SchemaError, e.what());
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(Errc::SchemaError, e.what());
  }
  return cfg;
}

PipelineConfig merge(const PipelineConfig& base, const json& patch) {
  if (!patch.is_object()) schema_error("patch must be a JSON object");
  json doc = to_json(base);
  doc.merge_patch(patch);
  return from_json(doc);
}

PipelineConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    schema_error("config " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

void save(const PipelineConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write config " + path.string());
  out << to_json(cfg).dump(2) << '\n';
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

json slice(const PipelineConfig& cfg, Stage stage) {
  const json all = to_json(cfg);
  switch (stage) {
    case Stage::Rgb: return json::object();
    case Stage::Gray: return {{"denoise_window", all["denoise_window"]}};
    case Stage::Mask: return {{"fcm", all["fcm"]}, {"selection", all["selection"]}};
    case Stage::Edge: return json::object();
    case Stage::Dilated: return {{"se", all["se"]}, {"dilate_iterations", all["dilate_iterations"]}};
    case Stage::Mcc: return {{"connectivity", all["connectivity"]}, {"area_threshold", all["area_threshold"]}};
    case Stage::Output: return {{"grid", all["grid"]}, {"cc_grid_repeats", all["cc_grid_repeats"]}};
    case Stage::Final: return {{"bg_color", all["bg_color"]}};
  }
  return json::object();
}

}  // namespace maptext::config
