#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "planeval/geometry.hpp"

namespace planeval {

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cu = 0.0;
  double cv = 0.0;
  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

struct VanishingPoint {
  double vu = 0.0;
  double vv = 0.0;
  friend bool operator==(const VanishingPoint&, const VanishingPoint&) = default;
};

// Throws InvalidArgument unless fx, fy are positive and finite.
void validate(const Intrinsics& k);

// Angles from the horizontal vanishing point, in degrees. Image v grows
// downward, so pitch is positive when the vanishing point sits above the
// principal point (camera tilted towards the ground) and yaw is positive
// when it sits to the left of it.
double pitch_from_vp(const Intrinsics& k, const VanishingPoint& vp);
double yaw_from_vp(const Intrinsics& k, const VanishingPoint& vp);

// A calibration in progress. Point edits are index based: removing point i
// shifts every later point down by one.
class CalibrationSession {
 public:
  CalibrationSession(std::string image_id, double camera_height_m);

  const std::string& image_id() const noexcept { return image_id_; }
  double camera_height_m() const noexcept { return camera_height_m_; }
  const std::vector<Correspondence>& correspondences() const noexcept { return points_; }
  const std::optional<Intrinsics>& intrinsics() const noexcept { return intrinsics_; }
  const std::optional<VanishingPoint>& vanishing_point() const noexcept { return vp_; }

  void set_camera_height(double camera_height_m);
  void set_intrinsics(std::optional<Intrinsics> k);
  void set_vanishing_point(std::optional<VanishingPoint> vp);

  // Returns the index of the appended point.
  std::size_t add_point(const Correspondence& c);
  // Throw NotFound for an out-of-range index.
  void update_point(std::size_t index, const Correspondence& c);
  void remove_point(std::size_t index);

  friend bool operator==(const CalibrationSession&, const CalibrationSession&) = default;

 private:
  std::string image_id_;
  double camera_height_m_;
  std::vector<Correspondence> points_;
  std::optional<Intrinsics> intrinsics_;
  std::optional<VanishingPoint> vp_;
};

struct SessionFit {
  Homography homography;
  // Plane-space distance in meters between the projection of image point i
  // and labeled plane point i, in correspondence order.
  std::vector<double> residuals_m;
};

SessionFit fit_session(const CalibrationSession& s);

// Residuals of an arbitrary homography against a correspondence list. Points
// that project to infinity get +inf.
std::vector<double> reprojection_residuals(const Homography& h,
                                           std::span<const Correspondence> corrs);

}  // namespace planeval
