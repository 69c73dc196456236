#pragma once

// JSON encodings shared by the result manifest and the HTTP service.
// Decoders accept partial objects: absent fields keep their defaults.

#include <nlohmann/json.hpp>

#include "slicetrack/pipeline.hpp"

namespace slicetrack {

void to_json(nlohmann::json& j, const Point2& p);
void to_json(nlohmann::json& j, const Roi& roi);
void from_json(const nlohmann::json& j, Roi& roi);
void to_json(nlohmann::json& j, const TrackParams& params);
void from_json(const nlohmann::json& j, TrackParams& params);
void to_json(nlohmann::json& j, const DetectParams& params);
void from_json(const nlohmann::json& j, DetectParams& params);
void to_json(nlohmann::json& j, const SeedSpec& seed);
void from_json(const nlohmann::json& j, SeedSpec& seed);
void to_json(nlohmann::json& j, const KeypointSet& set);
void to_json(nlohmann::json& j, const Polygon& poly);
void to_json(nlohmann::json& j, const MetricsReport& report);

/// Parses "quantile:0.95" / "absolute:0.1" (also "q:" / "abs:"). Throws
/// ValidationError.
ThresholdPolicy parse_threshold(const std::string& text);

}  // namespace slicetrack
