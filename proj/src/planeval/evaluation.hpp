#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "planeval/depthraster.hpp"
#include "planeval/detection.hpp"

namespace planeval {

enum class Camera { Base, Shifted };

std::string_view to_string(Camera c) noexcept;
Camera parse_camera(std::string_view label);

struct ObjectSample {
  std::string frame_id;
  std::string viewpoint_id;
  Camera camera = Camera::Base;
  double gt_distance_m = 0.0;
  double pred_distance_raw = 0.0;  // model units, before scaling
  friend bool operator==(const ObjectSample&, const ObjectSample&) = default;
};

// Throws InvalidArgument unless both distances are positive and finite.
void validate(const ObjectSample& s);

enum class ScaleScope { Global, PerImage, PerPosition };

std::string_view to_string(ScaleScope s) noexcept;
ScaleScope parse_scale_scope(std::string_view label);

struct ScaleFactor {
  double value = 1.0;
  ScaleScope scope = ScaleScope::Global;
};

// Median scaling factors, median(gt) / median(pred), one per group. The
// group key is empty for Global, the frame_id for PerImage and the
// viewpoint_id for PerPosition.
struct ScaleFactors {
  ScaleScope scope = ScaleScope::Global;
  std::map<std::string, double> by_group;

  double for_sample(const ObjectSample& s) const;
};

// 100 * mean(|gt - pred| / gt). Throws EmptyInput, NonPositiveGroundTruth,
// and InvalidArgument on a length mismatch.
double abs_rel(std::span<const double> gt, std::span<const double> pred);

// Pearson correlation of average ranks. Throws InsufficientData for fewer
// than two pairs and ConstantInput when either side has a single value.
double spearman(std::span<const double> a, std::span<const double> b);

ScaleFactors compute_scale(std::span<const ObjectSample> samples, ScaleScope scope);
ScaleFactor compute_global_scale(std::span<const ObjectSample> samples);

// abs-rel after multiplying each prediction by its group's factor.
double scaled_abs_rel(std::span<const ObjectSample> samples, const ScaleFactors& factors);

// Copies of the samples with pred_raw multiplied by the factor of their
// (viewpoint, camera) group, so every group's own median ratio becomes 1.
std::vector<ObjectSample> rescale_per_position(std::span<const ObjectSample> samples);

struct PositionReport {
  std::string viewpoint_id;
  std::optional<double> abs_rel_base;
  std::optional<double> abs_rel_shifted;
  std::optional<double> abs_rel_delta;
  std::optional<double> scale_base;
  std::optional<double> scale_shifted;
  std::optional<double> scale_delta;
  std::size_t n_objects_base = 0;
  std::size_t n_objects_shifted = 0;
};

// One row per viewpoint (natural order of viewpoint ids). abs-rel uses the
// single supplied scale; scale_* are the per-position, per-camera median
// ratios of the raw predictions. Rows lacking a camera leave that side and
// the deltas unset.
std::vector<PositionReport> build_position_reports(std::span<const ObjectSample> samples,
                                                   const ScaleFactor& scale);

// Same rows after rescale_per_position; the scale deltas collapse to zero.
std::vector<PositionReport> build_position_reports_per_position(
    std::span<const ObjectSample> samples);

struct CompareOptions {
  // Align predictions to each ground-truth source with its own global median
  // ratio before computing abs-rel.
  bool median_scaling = true;
};

struct GtComparison {
  double abs_rel_primary = 0.0;
  double abs_rel_reference = 0.0;
  double difference = 0.0;  // primary - reference
  double spearman_between_sources = 0.0;
};

GtComparison compare_gt_sources(std::span<const double> primary_gt,
                                std::span<const double> reference_gt,
                                std::span<const double> pred,
                                const CompareOptions& opts = {});

// Evaluation input for one frame: its raster and the filtered detections
// with their ground-truth distances.
struct EvalObject {
  Detection detection;
  double gt_distance_m;
};

struct EvalFrame {
  std::string frame_id;
  std::string viewpoint_id;
  Camera camera = Camera::Base;
  std::shared_ptr<const DepthRaster> raster;
  std::vector<EvalObject> objects;
};

struct ExtractionOutcome {
  std::vector<ObjectSample> samples;  // frame order, then object order
  std::size_t empty_regions = 0;
};

ExtractionOutcome extract_samples(std::span<const EvalFrame> frames, const ExtractionParams& p,
                                  unsigned workers);

struct GridCell {
  double alpha = 0.0;
  double beta = 0.0;
  std::optional<double> abs_rel;  // unset when no object could be extracted
  std::size_t n_samples = 0;
};

struct GridSearchResult {
  double best_alpha = 0.0;
  double best_beta = 0.0;
  double best_abs_rel = 0.0;
  std::vector<GridCell> table;  // alphas outer, betas inner, input order
};

// Exhaustive search; scaling is recomputed per cell. Ties go to the larger
// alpha, then the larger beta. Throws AllCellsInvalid.
GridSearchResult grid_search_alpha_beta(std::span<const EvalFrame> frames,
                                        std::span<const double> alphas,
                                        std::span<const double> betas, ScaleScope scaling,
                                        unsigned workers);

// Numeric-aware ordering for ids such as "2" < "10".
bool natural_less(const std::string& a, const std::string& b);

}  // namespace planeval
