#include "planeval/depthraster.hpp"

#include <algorithm>
#include <cmath>

#include "planeval/errors.hpp"
#include "planeval/stats.hpp"

namespace planeval {

DepthRaster::DepthRaster(std::size_t width, std::size_t height, std::vector<double> values,
                         std::string frame_id)
    : width_(width), height_(height), values_(std::move(values)), frame_id_(std::move(frame_id)) {
  if (width == 0 || height == 0) {
    fail(ErrorCode::InvalidArgument, "raster dimensions must be positive");
  }
  if (values_.size() != width * height) {
    fail(ErrorCode::InvalidArgument, "raster has " + std::to_string(values_.size()) +
                                         " values, expected " + std::to_string(width * height));
  }
}

bool DepthRaster::is_valid(double value) noexcept {
  return std::isfinite(value) && value > 0.0;
}

void validate(const ExtractionParams& p) {
  if (!(p.alpha > 0.0 && p.alpha <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
  }
  if (!(p.beta >= 0.0 && p.beta <= 100.0)) {
    fail(ErrorCode::InvalidArgument, "beta must lie in [0, 100]");
  }
}

Box shrink_box(const Box& b, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
  }
  const double cx = (b.x1 + b.x2) / 2.0;
  const double cy = (b.y1 + b.y2) / 2.0;
  const double hw = alpha * b.width() / 2.0;
  const double hh = alpha * b.height() / 2.0;
  return {cx - hw, cy - hh, cx + hw, cy + hh};
}

Box shrink_box(const Detection& d, double alpha) { return shrink_box(d.box(), alpha); }

std::vector<double> region_values(const DepthRaster& r, const Box& region) {
  // pixel centers u with x1 <= u < x2, clamped to [0, width)
  const auto lo = [](double a) { return std::max(0.0, std::ceil(a)); };
  const auto hi = [](double b, std::size_t n) {
    return std::min(static_cast<double>(n), std::ceil(b));
  };
  const double c0 = lo(region.x1);
  const double c1 = hi(region.x2, r.width());
  const double r0 = lo(region.y1);
  const double r1 = hi(region.y2, r.height());
  std::vector<double> out;
  if (c0 >= c1 || r0 >= r1) return out;
  out.reserve(static_cast<std::size_t>((c1 - c0) * (r1 - r0)));
  for (auto row = static_cast<std::size_t>(r0); row < static_cast<std::size_t>(r1); ++row) {
    for (auto col = static_cast<std::size_t>(c0); col < static_cast<std::size_t>(c1); ++col) {
      const double v = r.at(col, row);
      if (DepthRaster::is_valid(v)) out.push_back(v);
    }
  }
  return out;
}

double extract_distance(const DepthRaster& r, const Detection& d, const ExtractionParams& p) {
  validate(p);
  std::vector<double> values = region_values(r, shrink_box(d, p.alpha));
  if (values.empty()) {
    fail(ErrorCode::EmptyRegion, "no valid raster pixels inside the box of " +
                                     d.object_id().value_or(d.frame_id()));
  }
  std::sort(values.begin(), values.end());
  return stats::percentile_sorted(values, p.beta);
}

}  // namespace planeval
