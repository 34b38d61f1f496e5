#pragma once

#include <span>

#include <Eigen/Core>

namespace planeval {

// Image coordinates in pixels: u grows to the right, v grows downward.
struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

// Metric ground-plane coordinates: x lateral, y forward.
struct PlanePoint {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const PlanePoint&, const PlanePoint&) = default;
};

struct Correspondence {
  PixelPoint image;
  PlanePoint plane;
  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

// Image -> ground-plane homography plus the camera height it was calibrated
// for. The matrix is always stored in canonical form: unit Frobenius norm,
// bottom-right entry non-negative (or, when that entry is ~0, the first
// nonzero entry positive).
class Homography {
 public:
  // Throws InvalidArgument for non-finite or singular matrices and for a
  // non-positive camera height.
  Homography(const Eigen::Matrix3d& m, double camera_height_m);

  const Eigen::Matrix3d& matrix() const noexcept { return m_; }
  double camera_height_m() const noexcept { return camera_height_m_; }

  // Plane -> image mapping, same camera height.
  Homography inverse() const;

 private:
  Eigen::Matrix3d m_;
  double camera_height_m_;
};

inline constexpr double kPointAtInfinityEps = 1e-12;
inline constexpr double kSingularDetEps = 1e-12;
inline constexpr double kDegenerateSingularGap = 1e-10;

// Returns the canonical form of m (see Homography). Exposed for tests.
Eigen::Matrix3d canonicalize(const Eigen::Matrix3d& m);

// [X, Y, W] = H [u, v, 1]; returns (X/W, Y/W). Throws PointAtInfinity when
// |W| <= 1e-12.
PlanePoint project(const Homography& h, PixelPoint p);

// sqrt(x^2 + y^2 + h^2) of the projected point.
double ground_distance(const Homography& h, PixelPoint p);

// Normalized DLT fit over all correspondences, refined to minimize the sum
// of squared plane-space reprojection errors.
Homography estimate_homography(std::span<const Correspondence> corrs,
                               double camera_height_m);

struct PixelPair {
  PixelPoint base;
  PixelPoint shifted;
};

// Fits a homography for a second camera by pushing the base camera's pixels
// through `base` and pairing the resulting plane points with the second
// camera's pixels.
Homography transfer_homography(const Homography& base,
                               std::span<const PixelPair> pairs,
                               double camera_height_m);

}  // namespace planeval
