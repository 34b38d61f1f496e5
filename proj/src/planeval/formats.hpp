#pragma once

// File codecs. Every writer is deterministic and every reader accepts what
// the matching writer produced, so write -> read -> write is byte-stable.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "planeval/calibration.hpp"
#include "planeval/depthraster.hpp"
#include "planeval/detection.hpp"
#include "planeval/evaluation.hpp"
#include "planeval/geometry.hpp"
#include "planeval/gps.hpp"
#include "planeval/synthcam.hpp"

namespace planeval::formats {

std::string read_text(const std::filesystem::path& path);
// Writes through a temporary file in the same directory, then renames.
void write_text(const std::filesystem::path& path, const std::string& text);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);
// Six significant digits.
std::string format_6g(double v);
double round_6g(double v);

// {"matrix": [[...],[...],[...]], "camera_height_m": h, "camera_id": id,
//  "units": "meters"}. Readers accept any nonzero scale.
struct HomographyFile {
  Homography homography;
  std::string camera_id;
};
std::string encode_homography(const HomographyFile& f);
HomographyFile decode_homography(const std::string& text);
HomographyFile read_homography(const std::filesystem::path& path);
void write_homography(const HomographyFile& f, const std::filesystem::path& path);

// CorrespondenceSet: {"image_id", "camera_height_m", "intrinsics" | null,
// "vanishing_point" | null, "points": [{"image": [u, v], "plane": [x, y]}]}.
std::string encode_session(const CalibrationSession& s);
CalibrationSession decode_session(const std::string& text);
CalibrationSession read_session(const std::filesystem::path& path);
void write_session(const CalibrationSession& s, const std::filesystem::path& path);

// Detections, JSON Lines: {"frame_id", "cls", "box": [x1, y1, x2, y2],
// "confidence", "object_id" | null} plus "reject_reason" on rejected records
// of a filtered file.
struct DetectionRecord {
  Detection detection;
  std::optional<RejectReason> reject_reason;
};
std::string encode_detections(const std::vector<DetectionRecord>& records);
std::vector<DetectionRecord> decode_detections(const std::string& text);
std::vector<DetectionRecord> read_detections(const std::filesystem::path& path);
void write_detections(const std::vector<DetectionRecord>& records,
                      const std::filesystem::path& path);

// Raster manifest, JSON Lines: {"frame_id", "raster"}. Relative raster paths
// resolve against the manifest's directory.
struct ManifestEntry {
  std::string frame_id;
  std::string raster;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};
std::string encode_manifest(const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> decode_manifest(const std::string& text);

// Samples, JSON Lines: {"frame_id", "viewpoint_id", "camera", "gt_m",
// "pred_raw"}.
std::string encode_samples(const std::vector<ObjectSample>& samples);
std::vector<ObjectSample> decode_samples(const std::string& text);

// GPS CSV with header t,lat,lon,alt,speed (speed may be empty).
std::string encode_gps_csv(const std::vector<GpsPoint>& trace);
std::vector<GpsPoint> decode_gps_csv(const std::string& text);

// Position report CSV (header viewpoint_id,abs_rel_base,abs_rel_shifted,
// abs_rel_delta,scale_base,scale_shifted,scale_delta,n_base,n_shifted) and
// its JSON mirror. Numbers carry six significant digits; missing values are
// empty fields / null.
std::string encode_report_csv(const std::vector<PositionReport>& rows);
std::string encode_report_json(const std::vector<PositionReport>& rows, const ScaleFactor& scale);

// Shifted-camera pairs for transfer: {"pairs": [{"base": [u, v],
// "shifted": [u, v]}, ...]}.
std::string encode_pixel_pairs(const std::vector<PixelPair>& pairs);
std::vector<PixelPair> decode_pixel_pairs(const std::string& text);

// Two-source comparison input, JSON Lines: {"object_id", "primary_m",
// "reference_m", "pred_raw"}.
struct ComparisonRecord {
  std::string object_id;
  double primary_m = 0.0;
  double reference_m = 0.0;
  double pred_raw = 0.0;
};
std::string encode_comparison_records(const std::vector<ComparisonRecord>& records);
std::vector<ComparisonRecord> decode_comparison_records(const std::string& text);

// Synthetic scene description consumed by `synth`.
synth::SceneConfig decode_scene_config(const std::string& text);
std::string encode_scene_config(const synth::SceneConfig& cfg);

// scene_truth.json: pose, intrinsics and exact per-object distances.
std::string encode_scene_truth(const synth::SceneConfig& cfg, const synth::Scene& scene);

}  // namespace planeval::formats
