#include "planeval/detection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "planeval/errors.hpp"

namespace planeval {

namespace {

constexpr std::array<std::pair<ObjectClass, std::string_view>, 6> kClassNames = {{
    {ObjectClass::Car, "car"},
    {ObjectClass::Truck, "truck"},
    {ObjectClass::Bus, "bus"},
    {ObjectClass::Motorcycle, "motorcycle"},
    {ObjectClass::Bicycle, "bicycle"},
    {ObjectClass::Person, "person"},
}};

constexpr std::array<std::pair<RejectReason, std::string_view>, 4> kReasonNames = {{
    {RejectReason::LowConfidence, "low_confidence"},
    {RejectReason::AboveHorizon, "above_horizon"},
    {RejectReason::Occluded, "occluded"},
    {RejectReason::SmallArea, "small_area"},
}};

}  // namespace

std::string_view to_string(ObjectClass cls) noexcept {
  for (const auto& [c, name] : kClassNames) {
    if (c == cls) return name;
  }
  return "unknown";
}

ObjectClass parse_object_class(std::string_view label) {
  for (const auto& [c, name] : kClassNames) {
    if (name == label) return c;
  }
  fail(ErrorCode::ParseError, "unknown object class '" + std::string(label) + "'");
}

std::string_view to_string(RejectReason r) noexcept {
  for (const auto& [c, name] : kReasonNames) {
    if (c == r) return name;
  }
  return "unknown";
}

RejectReason parse_reject_reason(std::string_view label) {
  for (const auto& [c, name] : kReasonNames) {
    if (name == label) return c;
  }
  fail(ErrorCode::ParseError, "unknown reject reason '" + std::string(label) + "'");
}

Detection::Detection(ObjectClass cls, Box box, double confidence, std::string frame_id,
                     std::optional<std::string> object_id)
    : cls_(cls),
      box_(box),
      confidence_(confidence),
      frame_id_(std::move(frame_id)),
      object_id_(std::move(object_id)) {
  if (!std::isfinite(box.x1) || !std::isfinite(box.y1) || !std::isfinite(box.x2) ||
      !std::isfinite(box.y2)) {
    fail(ErrorCode::InvalidArgument, "box coordinates must be finite");
  }
  if (!(box.x1 < box.x2) || !(box.y1 < box.y2)) {
    fail(ErrorCode::InvalidArgument, "box needs x1 < x2 and y1 < y2");
  }
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "confidence must lie in [0, 1]");
  }
}

PixelPoint anchor_point(const Detection& d) {
  const Box& b = d.box();
  return {(b.x1 + b.x2) / 2.0, b.y2};
}

double intersection_over_min_area(const Box& a, const Box& b) noexcept {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return (iw * ih) / std::min(a.area(), b.area());
}

FilterResult filter_detections(const std::vector<Detection>& ds, const FilterConfig& cfg) {
  const std::size_t n = ds.size();
  std::vector<std::optional<RejectReason>> verdict(n);

  for (std::size_t i = 0; i < n; ++i) {
    if (ds[i].confidence() < cfg.min_confidence) {
      verdict[i] = RejectReason::LowConfidence;
    } else if (cfg.horizon_v && ds[i].box().y2 < *cfg.horizon_v) {
      verdict[i] = RejectReason::AboveHorizon;
    }
  }

  std::unordered_map<std::string, std::vector<std::size_t>> by_frame;
  for (std::size_t i = 0; i < n; ++i) {
    if (!verdict[i]) by_frame[ds[i].frame_id()].push_back(i);
  }
  for (auto& [frame, idx] : by_frame) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const Box& ba = ds[a].box();
      const Box& bb = ds[b].box();
      if (ba.y2 != bb.y2) return ba.y2 > bb.y2;
      if (ba.area() != bb.area()) return ba.area() > bb.area();
      return a < b;
    });
    std::vector<std::size_t> lower;
    for (std::size_t i : idx) {
      const bool occluded = std::any_of(lower.begin(), lower.end(), [&](std::size_t k) {
        return intersection_over_min_area(ds[i].box(), ds[k].box()) >
               cfg.occlusion_overlap_min;
      });
      if (occluded) {
        verdict[i] = RejectReason::Occluded;
      } else {
        lower.push_back(i);
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (verdict[i]) continue;
    const auto it = cfg.area_thresholds_px2.find(ds[i].cls());
    const double threshold = it == cfg.area_thresholds_px2.end() ? 0.0 : it->second;
    if (ds[i].box().area() < threshold) verdict[i] = RejectReason::SmallArea;
  }

  FilterResult out;
  for (std::size_t i = 0; i < n; ++i) {
    if (verdict[i]) {
      out.rejected.emplace_back(ds[i], *verdict[i]);
    } else {
      out.kept.push_back(ds[i]);
    }
  }
  out.verdicts = std::move(verdict);
  return out;
}

double assign_gt_distance(const Detection& d, const Homography& h) {
  return ground_distance(h, anchor_point(d));
}

}  // namespace planeval
