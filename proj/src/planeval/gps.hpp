#pragma once

#include <optional>
#include <span>
#include <vector>

namespace planeval {

struct GpsPoint {
  double t = 0.0;  // seconds
  double lat = 0.0;
  double lon = 0.0;
  double alt = 0.0;  // meters
  std::optional<double> speed;
  friend bool operator==(const GpsPoint&, const GpsPoint&) = default;
};

inline constexpr double kEarthRadiusM = 6371008.8;

// Which pairs the altitude-change fraction is counted over.
enum class AltitudeChangeBasis {
  Segments,   // kept segments (horizontal displacement above the threshold)
  RawPoints,  // every consecutive pair of the 1 Hz resampled trace
};

struct SlopeOptions {
  double min_horizontal_m = 1.0;
  double altitude_step_m = 1.0;
  AltitudeChangeBasis basis = AltitudeChangeBasis::Segments;
};

struct SlopeSegment {
  double horizontal_m = 0.0;
  double delta_alt_m = 0.0;
  double slope_deg = 0.0;
};

struct SlopeStats {
  double mean_abs_deg = 0.0;
  double median_abs_deg = 0.0;
  double p99_abs_deg = 0.0;
  double altitude_change_fraction = 0.0;
  std::size_t n_segments = 0;
};

// Local equirectangular distance between two fixes.
double horizontal_distance_m(const GpsPoint& a, const GpsPoint& b);

// Nearest fix to every whole second in [ceil(t_first), floor(t_last)]; ties
// pick the earlier fix. Throws InsufficientData (< 2 points) and
// InvalidArgument (t not strictly increasing).
std::vector<GpsPoint> resample_1hz(std::span<const GpsPoint> trace);

// Segments between consecutive resampled fixes whose horizontal
// displacement exceeds min_horizontal_m.
std::vector<SlopeSegment> slope_segments(std::span<const GpsPoint> trace,
                                         const SlopeOptions& opts = {});

SlopeStats slope_stats(std::span<const GpsPoint> trace, const SlopeOptions& opts = {});

// Pools the segments of several traces before computing statistics.
SlopeStats slope_stats(std::span<const std::vector<GpsPoint>> traces,
                       const SlopeOptions& opts = {});

}  // namespace planeval
