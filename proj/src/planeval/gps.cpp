#include "planeval/gps.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "planeval/errors.hpp"
#include "planeval/stats.hpp"

namespace planeval {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void check_trace(std::span<const GpsPoint> trace) {
  if (trace.size() < 2) fail(ErrorCode::InsufficientData, "trace needs at least two fixes");
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& p = trace[i];
    if (!(p.lat >= -90.0 && p.lat <= 90.0) || !(p.lon >= -180.0 && p.lon <= 180.0) ||
        !std::isfinite(p.t) || !std::isfinite(p.alt)) {
      fail(ErrorCode::InvalidArgument, "fix " + std::to_string(i) + " is out of range");
    }
    if (i > 0 && !(p.t > trace[i - 1].t)) {
      fail(ErrorCode::InvalidArgument, "timestamps must be strictly increasing");
    }
  }
}

struct Pooled {
  std::vector<SlopeSegment> kept;
  std::size_t raw_pairs = 0;
  std::size_t raw_changes = 0;
};

void collect(std::span<const GpsPoint> trace, const SlopeOptions& opts, Pooled& pool) {
  const auto fixes = resample_1hz(trace);
  for (std::size_t i = 1; i < fixes.size(); ++i) {
    const double dalt = fixes[i].alt - fixes[i - 1].alt;
    ++pool.raw_pairs;
    if (std::abs(dalt) > opts.altitude_step_m) ++pool.raw_changes;
    const double dist = horizontal_distance_m(fixes[i - 1], fixes[i]);
    if (dist <= opts.min_horizontal_m) continue;
    pool.kept.push_back({dist, dalt, std::atan(dalt / dist) / kDegToRad});
  }
}

SlopeStats summarize(const Pooled& pool, const SlopeOptions& opts) {
  if (pool.kept.empty()) {
    fail(ErrorCode::InsufficientData, "no segment exceeds the minimum horizontal displacement");
  }
  std::vector<double> abs_slopes;
  abs_slopes.reserve(pool.kept.size());
  std::size_t changes = 0;
  for (const auto& s : pool.kept) {
    abs_slopes.push_back(std::abs(s.slope_deg));
    if (std::abs(s.delta_alt_m) > opts.altitude_step_m) ++changes;
  }
  std::sort(abs_slopes.begin(), abs_slopes.end());
  SlopeStats out;
  out.n_segments = abs_slopes.size();
  out.mean_abs_deg = std::accumulate(abs_slopes.begin(), abs_slopes.end(), 0.0) /
                     static_cast<double>(abs_slopes.size());
  out.median_abs_deg = stats::percentile_sorted(abs_slopes, 50.0);
  out.p99_abs_deg = stats::percentile_sorted(abs_slopes, 99.0);
  if (opts.basis == AltitudeChangeBasis::Segments) {
    out.altitude_change_fraction =
        static_cast<double>(changes) / static_cast<double>(pool.kept.size());
  } else {
    out.altitude_change_fraction =
        static_cast<double>(pool.raw_changes) / static_cast<double>(pool.raw_pairs);
  }
  return out;
}

}  // namespace

double horizontal_distance_m(const GpsPoint& a, const GpsPoint& b) {
  double dlon = b.lon - a.lon;
  if (dlon > 180.0) dlon -= 360.0;
  if (dlon < -180.0) dlon += 360.0;
  const double mean_lat = 0.5 * (a.lat + b.lat) * kDegToRad;
  const double dx = dlon * kDegToRad * std::cos(mean_lat);
  const double dy = (b.lat - a.lat) * kDegToRad;
  return kEarthRadiusM * std::hypot(dx, dy);
}

std::vector<GpsPoint> resample_1hz(std::span<const GpsPoint> trace) {
  check_trace(trace);
  const double first = std::ceil(trace.front().t);
  const double last = std::floor(trace.back().t);
  std::vector<GpsPoint> out;
  std::size_t j = 0;
  for (double sec = first; sec <= last; sec += 1.0) {
    while (j + 1 < trace.size() && std::abs(trace[j + 1].t - sec) < std::abs(trace[j].t - sec)) {
      ++j;
    }
    out.push_back(trace[j]);
  }
  return out;
}

std::vector<SlopeSegment> slope_segments(std::span<const GpsPoint> trace,
                                         const SlopeOptions& opts) {
  Pooled pool;
  collect(trace, opts, pool);
  return pool.kept;
}

SlopeStats slope_stats(std::span<const GpsPoint> trace, const SlopeOptions& opts) {
  Pooled pool;
  collect(trace, opts, pool);
  return summarize(pool, opts);
}

SlopeStats slope_stats(std::span<const std::vector<GpsPoint>> traces, const SlopeOptions& opts) {
  if (traces.empty()) fail(ErrorCode::InsufficientData, "no traces");
  Pooled pool;
  for (const auto& t : traces) collect(t, opts, pool);
  return summarize(pool, opts);
}

}  // namespace planeval
