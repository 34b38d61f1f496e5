#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "planeval/calibration.hpp"
#include "planeval/depthraster.hpp"
#include "planeval/detection.hpp"
#include "planeval/geometry.hpp"

namespace planeval::synth {

// World frame: origin on the ground directly below the reference camera
// mount, x to the right, y forward, z up. The windshield offsets
// (x_m right, y_m up, z_m forward) move the camera center away from the
// mount, so the center sits at (x_m, z_m, height_m + y_m). Ground distances
// are measured from the mount point (0, 0, height_m), the frame a
// transferred homography reports in.
//
// Orientation is applied to the camera frame as yaw, then pitch, then roll.
// Positive pitch tilts the optical axis towards the ground, positive yaw
// turns it to the right. Pitch and yaw are the angles a vanishing point
// measurement reports: the road direction images at
// vu = cu - fx tan(yaw), vv = cv - fy tan(pitch) whenever roll is zero. The
// turn about the vertical axis is therefore atan(tan(yaw) cos(pitch)).
struct CameraPose {
  double height_m = 1.778;
  double pitch_deg = 0.0;
  double yaw_deg = 0.0;
  double roll_deg = 0.0;
  double x_m = 0.0;
  double y_m = 0.0;
  double z_m = 0.0;
};

struct ImageSize {
  std::size_t width = 1280;
  std::size_t height = 720;
};

// Vertical billboard standing on the ground at its contact point, facing the
// camera (its plane is perpendicular to the horizontal forward direction).
struct SceneObject {
  ObjectClass cls = ObjectClass::Car;
  double ground_x_m = 0.0;
  double ground_y_m = 0.0;
  double width_m = 1.8;
  double height_m = 1.5;
};

struct NoiseSpec {
  double raster_sigma_rel = 0.0;  // multiplicative Gaussian on raster values
  double box_sigma_px = 0.0;      // Gaussian on each box coordinate
};

// What the rendered raster holds on billboard pixels: the range of the
// object's ground contact point (an ideal object-distance predictor) or the
// exact range of the surface hit by each pixel ray. Ground pixels always
// hold their exact range; sky pixels are 0 (invalid).
enum class RasterContent { ObjectDistance, SurfaceRange };

std::string_view to_string(RasterContent c) noexcept;
RasterContent parse_raster_content(std::string_view label);

// World -> camera rotation (camera axes: x right, y down, z forward).
Eigen::Matrix3d camera_rotation(const CameraPose& pose);
Eigen::Vector3d camera_center(const CameraPose& pose);

// Throws BehindCamera when the point is not in front of the camera.
PixelPoint project_world_point(const CameraPose& pose, const Intrinsics& k,
                               const Eigen::Vector3d& world);
PixelPoint project_ground_point(const CameraPose& pose, const Intrinsics& k, PlanePoint g);

// Inverse of the pitch/yaw formulas: (cu - fx tan(yaw), cv - fy tan(pitch)).
VanishingPoint vanishing_point_of(const CameraPose& pose, const Intrinsics& k);

// Image -> ground homography derived from pose and intrinsics, with the
// mount height as camera height.
Homography true_homography(const CameraPose& pose, const Intrinsics& k);

// Range from the mount point to a ground point.
double mount_distance(const CameraPose& pose, PlanePoint g);

// Ground points paired with their exact pixels. Points in front of the
// camera and inside the image are preferred; when fewer than four qualify
// the in-front points outside the image are used as well.
std::vector<Correspondence> ground_correspondences(const CameraPose& pose, const Intrinsics& k,
                                                   const ImageSize& image,
                                                   std::span<const PlanePoint> ground);

// A parking-lot style grid: x in {-6, -3, 0, 3, 6} m, y in {5, 8, 12, 18, 25} m.
std::vector<PlanePoint> default_calibration_grid();

struct SceneConfig {
  CameraPose pose;
  Intrinsics intrinsics{700.0, 700.0, 640.0, 360.0};
  ImageSize image;
  std::vector<SceneObject> objects;
  std::vector<PlanePoint> calibration_points = default_calibration_grid();
  std::optional<NoiseSpec> noise;
  std::uint64_t seed = 0;
  RasterContent content = RasterContent::ObjectDistance;
  std::string frame_id = "frame_000000";
  double confidence = 0.9;
};

struct TruthObject {
  std::string object_id;
  ObjectClass cls = ObjectClass::Car;
  PlanePoint contact;
  double true_distance_m = 0.0;  // from the mount point
  double camera_range_m = 0.0;   // from the camera center
  PixelPoint anchor;             // exact projection of the contact point
  Box box;                       // before box noise
};

struct Scene {
  CalibrationSession session;
  VanishingPoint vanishing_point;
  Homography true_homography;
  std::vector<Detection> detections;
  std::vector<TruthObject> truth;
  DepthRaster raster;
};

// Renders every pipeline input for one frame. Box coordinates are centered
// horizontally on the projected contact point with the lower edge through it,
// and wide and tall enough to cover the projected billboard. Throws
// BehindCamera for objects not in front of the camera.
Scene generate_scene(const SceneConfig& cfg, unsigned workers = 1);

// A scene whose raster makes (alpha 0.75, beta 75) the unique best cell of
// the {0.5, 0.75, 1.0} x {50, 75, 90} grid. Every box is 40 x 40 px on
// integer coordinates. With L = g(1 - c), U = g(1 + 2c), V = g(1 + 5c) and
// a per-object c in [0.1, 0.4], the central 20 x 20 block holds 300 L and
// 100 U, the ring out to 30 x 30 holds 300 L, 150 g and 50 U, and the outer
// ring holds V only. The 75th percentile of the 30 x 30 block is g exactly;
// every other cell has a ratio to g that varies across objects. Values are
// multiplied by model_scale. g is the homography distance of the anchor.
Scene planted_grid_scene(double model_scale = 0.004);

// Error of the flat-ground homography when the real road rises ahead with a
// constant grade (plane z = y tan(tilt) hinged under the mount).
struct TiltErrorRow {
  double tilt_deg = 0.0;
  double distance_m = 0.0;     // forward coordinate of the point
  double true_range_m = 0.0;   // mount to the point on the tilted road
  double flat_range_m = 0.0;   // what the flat homography reports
  double abs_error_m = 0.0;
  double rel_error = 0.0;
};

std::vector<TiltErrorRow> nonplanarity_table(const CameraPose& pose, const Intrinsics& k,
                                             std::span<const double> tilts_deg,
                                             std::span<const double> distances_m);

}  // namespace planeval::synth
