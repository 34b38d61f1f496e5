#include "planeval/synthcam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "planeval/errors.hpp"
#include "planeval/parallel.hpp"

namespace planeval::synth {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kMinDepth = 1e-9;

Eigen::Matrix3d intrinsic_matrix(const Intrinsics& k) {
  Eigen::Matrix3d m;
  m << k.fx, 0.0, k.cu,
       0.0, k.fy, k.cv,
       0.0, 0.0, 1.0;
  return m;
}

struct Billboard {
  Eigen::Vector3d contact;
  Eigen::Vector3d normal;  // horizontal, towards +forward
  Eigen::Vector3d right;   // horizontal, along the billboard
  double half_width;
  double height;
};

// Horizontal forward direction of the camera in world coordinates.
Eigen::Vector3d horizontal_forward(const Eigen::Matrix3d& r) {
  Eigen::Vector3d f = r.row(2).transpose();
  f.z() = 0.0;
  if (f.norm() < 1e-12) return {0.0, 1.0, 0.0};
  return f.normalized();
}

}  // namespace

std::string_view to_string(RasterContent c) noexcept {
  return c == RasterContent::ObjectDistance ? "object_distance" : "surface_range";
}

RasterContent parse_raster_content(std::string_view label) {
  if (label == "object_distance") return RasterContent::ObjectDistance;
  if (label == "surface_range") return RasterContent::SurfaceRange;
  fail(ErrorCode::ParseError, "unknown raster content '" + std::string(label) + "'");
}

Eigen::Matrix3d camera_rotation(const CameraPose& pose) {
  const double pitch = pose.pitch_deg * kDegToRad;
  const double yaw = std::atan(std::tan(pose.yaw_deg * kDegToRad) * std::cos(pitch));
  const double roll = pose.roll_deg * kDegToRad;
  Eigen::Matrix3d level;  // rows: right, down, forward of an unrotated camera
  level << 1.0, 0.0, 0.0,
           0.0, 0.0, -1.0,
           0.0, 1.0, 0.0;
  Eigen::Matrix3d m_yaw;
  m_yaw << std::cos(yaw), 0.0, -std::sin(yaw),
           0.0, 1.0, 0.0,
           std::sin(yaw), 0.0, std::cos(yaw);
  Eigen::Matrix3d m_pitch;
  m_pitch << 1.0, 0.0, 0.0,
             0.0, std::cos(pitch), -std::sin(pitch),
             0.0, std::sin(pitch), std::cos(pitch);
  Eigen::Matrix3d m_roll;
  m_roll << std::cos(roll), std::sin(roll), 0.0,
            -std::sin(roll), std::cos(roll), 0.0,
            0.0, 0.0, 1.0;
  return m_roll * m_pitch * m_yaw * level;
}

Eigen::Vector3d camera_center(const CameraPose& pose) {
  return {pose.x_m, pose.z_m, pose.height_m + pose.y_m};
}

PixelPoint project_world_point(const CameraPose& pose, const Intrinsics& k,
                               const Eigen::Vector3d& world) {
  const Eigen::Vector3d pc = camera_rotation(pose) * (world - camera_center(pose));
  if (pc.z() <= kMinDepth) {
    fail(ErrorCode::BehindCamera, "point is not in front of the camera");
  }
  return {k.cu + k.fx * pc.x() / pc.z(), k.cv + k.fy * pc.y() / pc.z()};
}

PixelPoint project_ground_point(const CameraPose& pose, const Intrinsics& k, PlanePoint g) {
  return project_world_point(pose, k, Eigen::Vector3d(g.x, g.y, 0.0));
}

VanishingPoint vanishing_point_of(const CameraPose& pose, const Intrinsics& k) {
  return {k.cu - k.fx * std::tan(pose.yaw_deg * kDegToRad),
          k.cv - k.fy * std::tan(pose.pitch_deg * kDegToRad)};
}

Homography true_homography(const CameraPose& pose, const Intrinsics& k) {
  validate(k);
  if (!(pose.height_m > 0.0)) fail(ErrorCode::InvalidArgument, "camera height must be positive");
  const Eigen::Matrix3d r = camera_rotation(pose);
  Eigen::Matrix3d plane_to_image;
  plane_to_image.col(0) = r.col(0);
  plane_to_image.col(1) = r.col(1);
  plane_to_image.col(2) = -r * camera_center(pose);
  plane_to_image = intrinsic_matrix(k) * plane_to_image;
  return Homography(plane_to_image.inverse(), pose.height_m);
}

double mount_distance(const CameraPose& pose, PlanePoint g) {
  return std::sqrt(g.x * g.x + g.y * g.y + pose.height_m * pose.height_m);
}

std::vector<PlanePoint> default_calibration_grid() {
  std::vector<PlanePoint> out;
  for (double y : {5.0, 8.0, 12.0, 18.0, 25.0}) {
    for (double x : {-6.0, -3.0, 0.0, 3.0, 6.0}) out.push_back({x, y});
  }
  return out;
}

std::vector<Correspondence> ground_correspondences(const CameraPose& pose, const Intrinsics& k,
                                                   const ImageSize& image,
                                                   std::span<const PlanePoint> ground) {
  std::vector<Correspondence> in_frame;
  std::vector<Correspondence> in_front;
  for (const auto& g : ground) {
    PixelPoint p;
    try {
      p = project_ground_point(pose, k, g);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BehindCamera) throw;
      continue;
    }
    in_front.push_back({p, g});
    if (p.u >= 0.0 && p.u < static_cast<double>(image.width) && p.v >= 0.0 &&
        p.v < static_cast<double>(image.height)) {
      in_frame.push_back({p, g});
    }
  }
  return in_frame.size() >= 4 ? in_frame : in_front;
}

Scene generate_scene(const SceneConfig& cfg, unsigned workers) {
  validate(cfg.intrinsics);
  if (cfg.image.width == 0 || cfg.image.height == 0) {
    fail(ErrorCode::InvalidArgument, "image size must be positive");
  }
  const CameraPose& pose = cfg.pose;
  const Intrinsics& k = cfg.intrinsics;
  const Eigen::Matrix3d r = camera_rotation(pose);
  const Eigen::Vector3d center = camera_center(pose);
  const Eigen::Vector3d fwd = horizontal_forward(r);
  const Eigen::Vector3d right(fwd.y(), -fwd.x(), 0.0);

  CalibrationSession session(cfg.frame_id, pose.height_m);
  for (const auto& c : ground_correspondences(pose, k, cfg.image, cfg.calibration_points)) {
    session.add_point(c);
  }
  session.set_intrinsics(k);
  const VanishingPoint vp = vanishing_point_of(pose, k);
  session.set_vanishing_point(vp);

  std::vector<Billboard> boards;
  std::vector<TruthObject> truth;
  for (std::size_t i = 0; i < cfg.objects.size(); ++i) {
    const SceneObject& o = cfg.objects[i];
    if (!(o.width_m > 0.0) || !(o.height_m > 0.0)) {
      fail(ErrorCode::InvalidArgument, "object extents must be positive");
    }
    Billboard b{{o.ground_x_m, o.ground_y_m, 0.0}, fwd, right, o.width_m / 2.0, o.height_m};
    const PixelPoint anchor = project_world_point(pose, k, b.contact);
    double half_w = 0.0;
    double top = anchor.v;
    for (double side : {-1.0, 1.0}) {
      for (double z : {0.0, o.height_m}) {
        const Eigen::Vector3d corner =
            b.contact + side * b.half_width * right + Eigen::Vector3d(0.0, 0.0, z);
        const PixelPoint p = project_world_point(pose, k, corner);
        half_w = std::max(half_w, std::abs(p.u - anchor.u));
        top = std::min(top, p.v);
      }
    }
    TruthObject t;
    t.object_id = "obj_" + std::to_string(i);
    t.cls = o.cls;
    t.contact = {o.ground_x_m, o.ground_y_m};
    t.true_distance_m = mount_distance(pose, t.contact);
    t.camera_range_m = (b.contact - center).norm();
    t.anchor = anchor;
    t.box = {anchor.u - half_w, top, anchor.u + half_w, anchor.v};
    if (!(t.box.x1 < t.box.x2) || !(t.box.y1 < t.box.y2)) {
      fail(ErrorCode::InvalidArgument, "object " + t.object_id + " renders to an empty box");
    }
    boards.push_back(b);
    truth.push_back(std::move(t));
  }

  // Rays through integer pixel centers.
  const Eigen::Matrix3d ray_basis = r.transpose() * intrinsic_matrix(k).inverse();
  std::vector<double> values(cfg.image.width * cfg.image.height, 0.0);
  parallel_for(cfg.image.height, workers, [&](std::size_t row) {
    for (std::size_t col = 0; col < cfg.image.width; ++col) {
      const Eigen::Vector3d dir =
          ray_basis * Eigen::Vector3d(static_cast<double>(col), static_cast<double>(row), 1.0);
      double best_t = std::numeric_limits<double>::infinity();
      double value = 0.0;
      if (dir.z() < 0.0) {
        best_t = -center.z() / dir.z();
        value = (best_t * dir).norm();
      }
      for (std::size_t i = 0; i < boards.size(); ++i) {
        const Billboard& b = boards[i];
        const double denom = dir.dot(b.normal);
        if (std::abs(denom) < 1e-15) continue;
        const double t = (b.contact - center).dot(b.normal) / denom;
        if (!(t > 0.0) || t >= best_t) continue;
        const Eigen::Vector3d hit = center + t * dir;
        const Eigen::Vector3d rel = hit - b.contact;
        if (std::abs(rel.dot(b.right)) > b.half_width || hit.z() < 0.0 || hit.z() > b.height) {
          continue;
        }
        best_t = t;
        value = cfg.content == RasterContent::ObjectDistance ? truth[i].camera_range_m
                                                             : (t * dir).norm();
      }
      values[row * cfg.image.width + col] = value;
    }
  });

  std::vector<Detection> detections;
  detections.reserve(truth.size());
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const NoiseSpec noise = cfg.noise.value_or(NoiseSpec{});
  for (const auto& t : truth) {
    Box box = t.box;
    if (noise.box_sigma_px > 0.0) {
      box.x1 += noise.box_sigma_px * gauss(rng);
      box.y1 += noise.box_sigma_px * gauss(rng);
      box.x2 += noise.box_sigma_px * gauss(rng);
      box.y2 += noise.box_sigma_px * gauss(rng);
      if (box.x1 >= box.x2) std::swap(box.x1, box.x2);
      if (box.y1 >= box.y2) std::swap(box.y1, box.y2);
    }
    detections.emplace_back(t.cls, box, cfg.confidence, cfg.frame_id, t.object_id);
  }
  if (noise.raster_sigma_rel > 0.0) {
    for (double& v : values) {
      if (v > 0.0) v = std::max(v * (1.0 + noise.raster_sigma_rel * gauss(rng)), 1e-6);
    }
  }

  return Scene{std::move(session),
               vp,
               true_homography(pose, k),
               std::move(detections),
               std::move(truth),
               DepthRaster(cfg.image.width, cfg.image.height, std::move(values), cfg.frame_id)};
}

Scene planted_grid_scene(double model_scale) {
  if (!(model_scale > 0.0) || !std::isfinite(model_scale)) {
    fail(ErrorCode::InvalidArgument, "model scale must be positive");
  }
  SceneConfig cfg;
  cfg.pose.pitch_deg = 6.0;
  cfg.frame_id = "planted_000000";
  Scene scene = generate_scene(cfg);

  constexpr std::size_t kObjects = 8;
  constexpr std::size_t kSide = 40;
  std::vector<double> values = scene.raster.values();
  const std::size_t width = scene.raster.width();
  for (std::size_t i = 0; i < kObjects; ++i) {
    const std::size_t x0 = 80 + 150 * i;
    const std::size_t y0 = 460 + 20 * (i % 4);
    const Box box{static_cast<double>(x0), static_cast<double>(y0),
                  static_cast<double>(x0 + kSide), static_cast<double>(y0 + kSide)};
    Detection det(ObjectClass::Car, box, cfg.confidence, cfg.frame_id,
                  "obj_" + std::to_string(i));
    const PixelPoint anchor = anchor_point(det);
    const PlanePoint contact = project(scene.true_homography, anchor);
    const double g = ground_distance(scene.true_homography, anchor);
    const double c = 0.1 + 0.3 * static_cast<double>(i) / static_cast<double>(kObjects - 1);
    const double low = model_scale * g * (1.0 - c);
    const double exact = model_scale * g;
    const double up = model_scale * g * (1.0 + 2.0 * c);
    const double far = model_scale * g * (1.0 + 5.0 * c);

    std::size_t core = 0;
    std::size_t middle = 0;
    for (std::size_t dy = 0; dy < kSide; ++dy) {
      for (std::size_t dx = 0; dx < kSide; ++dx) {
        const auto ring = std::max(std::max(dx, kSide - 1 - dx), std::max(dy, kSide - 1 - dy));
        double v = far;
        if (ring < 30) {
          v = core++ < 300 ? low : up;
        } else if (ring < 35) {
          const std::size_t m = middle++;
          v = m < 300 ? low : (m < 450 ? exact : up);
        }
        values[(y0 + dy) * width + (x0 + dx)] = v;
      }
    }

    TruthObject t;
    t.object_id = *det.object_id();
    t.cls = det.cls();
    t.contact = contact;
    t.true_distance_m = g;
    t.camera_range_m = g;
    t.anchor = anchor;
    t.box = box;
    scene.detections.push_back(det);
    scene.truth.push_back(std::move(t));
  }
  scene.raster = DepthRaster(scene.raster.width(), scene.raster.height(), std::move(values),
                             cfg.frame_id);
  return scene;
}

std::vector<TiltErrorRow> nonplanarity_table(const CameraPose& pose, const Intrinsics& k,
                                             std::span<const double> tilts_deg,
                                             std::span<const double> distances_m) {
  const Homography flat = true_homography(pose, k);
  const Eigen::Vector3d mount(0.0, 0.0, pose.height_m);
  std::vector<TiltErrorRow> out;
  out.reserve(tilts_deg.size() * distances_m.size());
  for (double tilt : tilts_deg) {
    for (double d : distances_m) {
      const Eigen::Vector3d p(0.0, d, d * std::tan(tilt * kDegToRad));
      const PixelPoint px = project_world_point(pose, k, p);
      TiltErrorRow row;
      row.tilt_deg = tilt;
      row.distance_m = d;
      row.true_range_m = (p - mount).norm();
      // a ray that does not descend below the camera never meets the flat road
      row.flat_range_m = p.z() < camera_center(pose).z()
                             ? ground_distance(flat, px)
                             : std::numeric_limits<double>::infinity();
      row.abs_error_m = std::abs(row.flat_range_m - row.true_range_m);
      row.rel_error = row.abs_error_m / row.true_range_m;
      out.push_back(row);
    }
  }
  return out;
}

}  // namespace planeval::synth
