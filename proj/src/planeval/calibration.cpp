#include "planeval/calibration.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "planeval/errors.hpp"

namespace planeval {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void check_finite(const Correspondence& c) {
  if (!std::isfinite(c.image.u) || !std::isfinite(c.image.v) ||
      !std::isfinite(c.plane.x) || !std::isfinite(c.plane.y)) {
    fail(ErrorCode::InvalidArgument, "correspondence coordinates must be finite");
  }
}

}  // namespace

void validate(const Intrinsics& k) {
  if (!(k.fx > 0.0) || !(k.fy > 0.0) || !std::isfinite(k.fx) || !std::isfinite(k.fy) ||
      !std::isfinite(k.cu) || !std::isfinite(k.cv)) {
    fail(ErrorCode::InvalidArgument, "intrinsics need finite fx, fy > 0");
  }
}

double pitch_from_vp(const Intrinsics& k, const VanishingPoint& vp) {
  validate(k);
  return kRadToDeg * std::atan((k.cv - vp.vv) / k.fy);
}

double yaw_from_vp(const Intrinsics& k, const VanishingPoint& vp) {
  validate(k);
  return kRadToDeg * std::atan((k.cu - vp.vu) / k.fx);
}

CalibrationSession::CalibrationSession(std::string image_id, double camera_height_m)
    : image_id_(std::move(image_id)), camera_height_m_(0.0) {
  set_camera_height(camera_height_m);
}

void CalibrationSession::set_camera_height(double camera_height_m) {
  if (!(camera_height_m > 0.0) || !std::isfinite(camera_height_m)) {
    fail(ErrorCode::InvalidArgument, "camera_height_m must be positive");
  }
  camera_height_m_ = camera_height_m;
}

void CalibrationSession::set_intrinsics(std::optional<Intrinsics> k) {
  if (k) validate(*k);
  intrinsics_ = k;
}

void CalibrationSession::set_vanishing_point(std::optional<VanishingPoint> vp) {
  if (vp && (!std::isfinite(vp->vu) || !std::isfinite(vp->vv))) {
    fail(ErrorCode::InvalidArgument, "vanishing point must be finite");
  }
  vp_ = vp;
}

std::size_t CalibrationSession::add_point(const Correspondence& c) {
  check_finite(c);
  points_.push_back(c);
  return points_.size() - 1;
}

void CalibrationSession::update_point(std::size_t index, const Correspondence& c) {
  if (index >= points_.size()) {
    fail(ErrorCode::NotFound, "no point with index " + std::to_string(index));
  }
  check_finite(c);
  points_[index] = c;
}

void CalibrationSession::remove_point(std::size_t index) {
  if (index >= points_.size()) {
    fail(ErrorCode::NotFound, "no point with index " + std::to_string(index));
  }
  points_.erase(points_.begin() + static_cast<std::ptrdiff_t>(index));
}

std::vector<double> reprojection_residuals(const Homography& h,
                                           std::span<const Correspondence> corrs) {
  std::vector<double> out;
  out.reserve(corrs.size());
  for (const auto& c : corrs) {
    try {
      const PlanePoint p = project(h, c.image);
      out.push_back(std::hypot(p.x - c.plane.x, p.y - c.plane.y));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PointAtInfinity) throw;
      out.push_back(std::numeric_limits<double>::infinity());
    }
  }
  return out;
}

SessionFit fit_session(const CalibrationSession& s) {
  Homography h = estimate_homography(s.correspondences(), s.camera_height_m());
  auto residuals = reprojection_residuals(h, s.correspondences());
  return {std::move(h), std::move(residuals)};
}

}  // namespace planeval
