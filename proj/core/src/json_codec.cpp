#include "slicetrack/json_codec.hpp"

#include "slicetrack/error.hpp"

namespace slicetrack {

using nlohmann::json;

void to_json(json& j, const Point2& p) { j = json::array({p.x, p.y}); }

void to_json(json& j, const Roi& roi) {
  j = json::array({roi.x0, roi.y0, roi.width, roi.height});
}

void from_json(const json& j, Roi& roi) {
  if (j.is_array() && j.size() == 4) {
    roi = {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
  } else if (j.is_object()) {
    roi = {j.at("x0").get<int>(), j.at("y0").get<int>(), j.at("width").get<int>(),
           j.at("height").get<int>()};
  } else {
    throw ValidationError("ROI must be [x0, y0, width, height]");
  }
  roi.validate();
}

void to_json(json& j, const TrackParams& p) {
  j = json{{"pyramid_levels", p.pyramid_levels},
           {"window_radius", p.window_radius},
           {"max_iterations", p.max_iterations},
           {"convergence_eps", p.convergence_eps},
           {"min_eigenvalue", p.min_eigenvalue},
           {"fb_error_max", p.fb_error_max ? json(*p.fb_error_max) : json(nullptr)}};
}

void from_json(const json& j, TrackParams& p) {
  if (!j.is_object()) throw ValidationError("track params must be an object");
  if (j.contains("pyramid_levels")) p.pyramid_levels = j["pyramid_levels"].get<int>();
  if (j.contains("window_radius")) p.window_radius = j["window_radius"].get<int>();
  if (j.contains("max_iterations")) p.max_iterations = j["max_iterations"].get<int>();
  if (j.contains("convergence_eps")) p.convergence_eps = j["convergence_eps"].get<double>();
  if (j.contains("min_eigenvalue")) p.min_eigenvalue = j["min_eigenvalue"].get<double>();
  if (j.contains("fb_error_max")) {
    const auto& fb = j["fb_error_max"];
    p.fb_error_max = fb.is_null() ? std::nullopt : std::optional<double>(fb.get<double>());
  }
  p.validate();
}

void to_json(json& j, const DetectParams& p) {
  j = json{{"threshold",
            {{"kind", p.threshold.kind() == ThresholdPolicy::Kind::absolute ? "absolute" : "quantile"},
             {"value", p.threshold.value()}}},
           {"min_spacing", p.min_spacing},
           {"max_keypoints", p.max_keypoints ? json(*p.max_keypoints) : json(nullptr)}};
}

void from_json(const json& j, DetectParams& p) {
  if (!j.is_object()) throw ValidationError("detect params must be an object");
  if (j.contains("threshold")) {
    const auto& t = j["threshold"];
    if (t.is_string()) {
      p.threshold = parse_threshold(t.get<std::string>());
    } else {
      const auto kind = t.at("kind").get<std::string>();
      const double value = t.at("value").get<double>();
      if (kind == "absolute") {
        p.threshold = ThresholdPolicy::absolute(value);
      } else if (kind == "quantile") {
        p.threshold = ThresholdPolicy::quantile(value);
      } else {
        throw ValidationError("unknown threshold kind: " + kind);
      }
    }
  }
  if (j.contains("min_spacing")) p.min_spacing = j["min_spacing"].get<double>();
  if (j.contains("max_keypoints")) {
    const auto& m = j["max_keypoints"];
    p.max_keypoints = m.is_null() ? std::nullopt : std::optional<std::size_t>(m.get<std::size_t>());
  }
  if (!(p.min_spacing >= 0.0)) throw ValidationError("min_spacing must be >= 0");
}

void to_json(json& j, const SeedSpec& seed) {
  if (const auto* manual = std::get_if<ManualSeed>(&seed.mode)) {
    j = json{{"mode", "manual"}, {"points", manual->points}};
  } else {
    const auto& automatic = std::get<AutoSeed>(seed.mode);
    j = json{{"mode", "auto"}, {"roi", automatic.roi}, {"detect", automatic.detect}};
  }
  j["start_slice"] = seed.start_slice ? json(*seed.start_slice) : json("center");
}

void from_json(const json& j, SeedSpec& seed) {
  if (!j.is_object()) throw ValidationError("seed must be an object");
  const auto mode = j.value("mode", std::string("manual"));
  if (mode == "manual") {
    ManualSeed manual;
    for (const auto& p : j.at("points")) {
      if (!p.is_array() || p.size() != 2) throw ValidationError("seed points must be [x, y] pairs");
      manual.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    seed.mode = std::move(manual);
  } else if (mode == "auto") {
    AutoSeed automatic;
    automatic.roi = j.at("roi").get<Roi>();
    if (j.contains("detect")) automatic.detect = j["detect"].get<DetectParams>();
    seed.mode = std::move(automatic);
  } else {
    throw ValidationError("unknown seed mode: " + mode);
  }
  seed.start_slice.reset();
  if (j.contains("start_slice")) {
    const auto& s = j["start_slice"];
    if (s.is_number_integer()) {
      seed.start_slice = s.get<int>();
    } else if (!(s.is_null() || (s.is_string() && s.get<std::string>() == "center"))) {
      throw ValidationError("start_slice must be an index or \"center\"");
    }
  }
}

void to_json(json& j, const KeypointSet& set) {
  json points = json::array();
  for (const auto& k : set.points) points.push_back(json::array({k.x, k.y, to_string(k.status)}));
  j = json{{"slice_index", set.slice_index}, {"points", std::move(points)}};
}

void to_json(json& j, const Polygon& poly) { j = poly.vertices; }

void to_json(json& j, const MetricsReport& r) {
  json per_slice = json::array();
  for (const auto& [index, value] : r.per_slice_dsc) {
    per_slice.push_back(json{{"slice_index", index}, {"dsc", value}});
  }
  j = json{{"per_slice", std::move(per_slice)},
           {"mean", r.mean},
           {"std", r.std},
           {"median", r.median},
           {"iqr_low", r.iqr_low},
           {"iqr_high", r.iqr_high},
           {"n_evaluated", r.n_evaluated},
           {"n_zero", r.n_zero}};
}

ThresholdPolicy parse_threshold(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ValidationError("threshold must look like quantile:0.95 or absolute:0.1");
  }
  const std::string kind = text.substr(0, colon);
  double value = 0.0;
  try {
    std::size_t used = 0;
    value = std::stod(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing text");
  } catch (const std::exception&) {
    throw ValidationError("bad threshold value in: " + text);
  }
  if (kind == "quantile" || kind == "q") return ThresholdPolicy::quantile(value);
  if (kind == "absolute" || kind == "abs") return ThresholdPolicy::absolute(value);
  throw ValidationError("unknown threshold kind: " + kind);
}

}  // namespace slicetrack
