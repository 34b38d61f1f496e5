#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "planeval/geometry.hpp"

namespace planeval {

enum class ObjectClass { Car, Truck, Bus, Motorcycle, Bicycle, Person };

std::string_view to_string(ObjectClass cls) noexcept;
// Throws ParseError for unknown labels.
ObjectClass parse_object_class(std::string_view label);

struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }
  friend bool operator==(const Box&, const Box&) = default;
};

class Detection {
 public:
  // Throws InvalidArgument unless x1 < x2, y1 < y2 and confidence in [0, 1].
  Detection(ObjectClass cls, Box box, double confidence, std::string frame_id,
            std::optional<std::string> object_id = std::nullopt);

  ObjectClass cls() const noexcept { return cls_; }
  const Box& box() const noexcept { return box_; }
  double confidence() const noexcept { return confidence_; }
  const std::string& frame_id() const noexcept { return frame_id_; }
  const std::optional<std::string>& object_id() const noexcept { return object_id_; }

  friend bool operator==(const Detection&, const Detection&) = default;

 private:
  ObjectClass cls_;
  Box box_;
  double confidence_;
  std::string frame_id_;
  std::optional<std::string> object_id_;
};

// Midpoint of the lower edge of the box, ((x1 + x2) / 2, y2): the pixel
// assumed to touch the ground.
PixelPoint anchor_point(const Detection& d);

struct FilterConfig {
  double min_confidence = 0.5;
  std::map<ObjectClass, double> area_thresholds_px2 = {
      {ObjectClass::Car, 3000.0},       {ObjectClass::Truck, 3000.0},
      {ObjectClass::Bus, 3000.0},       {ObjectClass::Motorcycle, 1500.0},
      {ObjectClass::Bicycle, 1000.0},   {ObjectClass::Person, 1000.0},
  };
  // v coordinate of the vanishing point; the horizon stage is skipped when
  // unset.
  std::optional<double> horizon_v;
  // Intersection over the smaller box's area that counts as occlusion.
  double occlusion_overlap_min = 0.0;
};

enum class RejectReason { LowConfidence, AboveHorizon, Occluded, SmallArea };

std::string_view to_string(RejectReason r) noexcept;
RejectReason parse_reject_reason(std::string_view label);

struct FilterResult {
  std::vector<Detection> kept;
  std::vector<std::pair<Detection, RejectReason>> rejected;
  // One entry per input detection, unset when kept.
  std::vector<std::optional<RejectReason>> verdicts;
};

// Intersection area over the smaller of the two box areas.
double intersection_over_min_area(const Box& a, const Box& b) noexcept;

// Confidence, horizon, occlusion and area stages, in that order. Occlusion
// is resolved per frame_id, across classes, visiting boxes from the lowest
// (largest y2) upwards; ties go to the larger box and then to input order.
// Both output lists preserve input order.
FilterResult filter_detections(const std::vector<Detection>& ds, const FilterConfig& cfg);

// Ground-truth range of the detection's anchor point.
double assign_gt_distance(const Detection& d, const Homography& h);

}  // namespace planeval
