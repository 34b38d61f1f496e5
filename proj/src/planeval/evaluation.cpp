#include "planeval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "planeval/errors.hpp"
#include "planeval/parallel.hpp"
#include "planeval/stats.hpp"

namespace planeval {

namespace {

std::string group_key(const ObjectSample& s, ScaleScope scope) {
  switch (scope) {
    case ScaleScope::Global: return {};
    case ScaleScope::PerImage: return s.frame_id;
    case ScaleScope::PerPosition: return s.viewpoint_id;
  }
  return {};
}

double median_ratio(const std::vector<double>& gt, const std::vector<double>& pred) {
  const double mp = stats::median(pred);
  if (!(mp > 0.0)) fail(ErrorCode::InvalidArgument, "median prediction must be positive");
  return stats::median(gt) / mp;
}

struct Split {
  std::vector<double> gt;
  std::vector<double> pred;
};

std::optional<double> delta(const std::optional<double>& s, const std::optional<double>& b) {
  if (s && b) return *s - *b;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Camera c) noexcept {
  return c == Camera::Base ? "base" : "shifted";
}

Camera parse_camera(std::string_view label) {
  if (label == "base") return Camera::Base;
  if (label == "shifted") return Camera::Shifted;
  fail(ErrorCode::ParseError, "camera must be 'base' or 'shifted', got '" + std::string(label) + "'");
}

std::string_view to_string(ScaleScope s) noexcept {
  switch (s) {
    case ScaleScope::Global: return "global";
    case ScaleScope::PerImage: return "per_image";
    case ScaleScope::PerPosition: return "per_position";
  }
  return "global";
}

ScaleScope parse_scale_scope(std::string_view label) {
  if (label == "global") return ScaleScope::Global;
  if (label == "per_image") return ScaleScope::PerImage;
  if (label == "per_position") return ScaleScope::PerPosition;
  fail(ErrorCode::ParseError, "unknown scaling scope '" + std::string(label) + "'");
}

void validate(const ObjectSample& s) {
  if (!(s.gt_distance_m > 0.0) || !std::isfinite(s.gt_distance_m)) {
    fail(ErrorCode::InvalidArgument, "gt distance must be positive and finite");
  }
  if (!(s.pred_distance_raw > 0.0) || !std::isfinite(s.pred_distance_raw)) {
    fail(ErrorCode::InvalidArgument, "raw prediction must be positive and finite");
  }
}

double ScaleFactors::for_sample(const ObjectSample& s) const {
  const auto it = by_group.find(group_key(s, scope));
  if (it == by_group.end()) {
    fail(ErrorCode::EmptyGroup, "no scale factor for group '" + group_key(s, scope) + "'");
  }
  return it->second;
}

double abs_rel(std::span<const double> gt, std::span<const double> pred) {
  if (gt.size() != pred.size()) {
    fail(ErrorCode::InvalidArgument, "gt and pred differ in length");
  }
  if (gt.empty()) fail(ErrorCode::EmptyInput, "abs-rel of empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!(gt[i] > 0.0)) fail(ErrorCode::NonPositiveGroundTruth, "gt must be positive");
    sum += std::abs(gt[i] - pred[i]) / gt[i];
  }
  return 100.0 * sum / static_cast<double>(gt.size());
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::InvalidArgument, "inputs differ in length");
  if (a.size() < 2) fail(ErrorCode::InsufficientData, "spearman needs at least two pairs");
  const auto ra = stats::average_ranks(a);
  const auto rb = stats::average_ranks(b);
  return stats::pearson(ra, rb);
}

ScaleFactors compute_scale(std::span<const ObjectSample> samples, ScaleScope scope) {
  if (samples.empty()) fail(ErrorCode::EmptyGroup, "no samples to compute a scale from");
  std::map<std::string, Split> groups;
  for (const auto& s : samples) {
    validate(s);
    auto& g = groups[group_key(s, scope)];
    g.gt.push_back(s.gt_distance_m);
    g.pred.push_back(s.pred_distance_raw);
  }
  ScaleFactors out{scope, {}};
  for (const auto& [key, g] : groups) out.by_group.emplace(key, median_ratio(g.gt, g.pred));
  return out;
}

ScaleFactor compute_global_scale(std::span<const ObjectSample> samples) {
  return {compute_scale(samples, ScaleScope::Global).by_group.at({}), ScaleScope::Global};
}

double scaled_abs_rel(std::span<const ObjectSample> samples, const ScaleFactors& factors) {
  std::vector<double> gt;
  std::vector<double> pred;
  gt.reserve(samples.size());
  pred.reserve(samples.size());
  for (const auto& s : samples) {
    gt.push_back(s.gt_distance_m);
    pred.push_back(factors.for_sample(s) * s.pred_distance_raw);
  }
  return abs_rel(gt, pred);
}

std::vector<ObjectSample> rescale_per_position(std::span<const ObjectSample> samples) {
  std::map<std::pair<std::string, Camera>, Split> groups;
  for (const auto& s : samples) {
    validate(s);
    auto& g = groups[{s.viewpoint_id, s.camera}];
    g.gt.push_back(s.gt_distance_m);
    g.pred.push_back(s.pred_distance_raw);
  }
  std::map<std::pair<std::string, Camera>, double> factor;
  for (const auto& [key, g] : groups) factor.emplace(key, median_ratio(g.gt, g.pred));
  std::vector<ObjectSample> out(samples.begin(), samples.end());
  for (auto& s : out) s.pred_distance_raw *= factor.at({s.viewpoint_id, s.camera});
  return out;
}

bool natural_less(const std::string& a, const std::string& b) {
  const auto numeric = [](const std::string& s) {
    return !s.empty() && s.size() < 19 &&
           std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (numeric(a) && numeric(b)) {
    const auto na = std::stoll(a);
    const auto nb = std::stoll(b);
    if (na != nb) return na < nb;
  }
  return a < b;
}

std::vector<PositionReport> build_position_reports(std::span<const ObjectSample> samples,
                                                   const ScaleFactor& scale) {
  if (samples.empty()) fail(ErrorCode::EmptyInput, "no samples to report on");
  if (!(scale.value > 0.0) || !std::isfinite(scale.value)) {
    fail(ErrorCode::InvalidArgument, "scale must be positive and finite");
  }
  std::map<std::string, std::pair<Split, Split>> by_vp;  // base, shifted
  for (const auto& s : samples) {
    validate(s);
    auto& [base, shifted] = by_vp[s.viewpoint_id];
    Split& g = s.camera == Camera::Base ? base : shifted;
    g.gt.push_back(s.gt_distance_m);
    g.pred.push_back(s.pred_distance_raw);
  }

  std::vector<std::string> ids;
  ids.reserve(by_vp.size());
  for (const auto& [id, _] : by_vp) ids.push_back(id);
  std::sort(ids.begin(), ids.end(), natural_less);

  const auto side = [&](const Split& g, std::optional<double>& err, std::optional<double>& sc) {
    if (g.gt.empty()) return;
    std::vector<double> scaled(g.pred.size());
    std::transform(g.pred.begin(), g.pred.end(), scaled.begin(),
                   [&](double p) { return scale.value * p; });
    err = abs_rel(g.gt, scaled);
    sc = median_ratio(g.gt, g.pred);
  };

  std::vector<PositionReport> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto& [base, shifted] = by_vp.at(id);
    PositionReport r;
    r.viewpoint_id = id;
    side(base, r.abs_rel_base, r.scale_base);
    side(shifted, r.abs_rel_shifted, r.scale_shifted);
    r.abs_rel_delta = delta(r.abs_rel_shifted, r.abs_rel_base);
    r.scale_delta = delta(r.scale_shifted, r.scale_base);
    r.n_objects_base = base.gt.size();
    r.n_objects_shifted = shifted.gt.size();
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PositionReport> build_position_reports_per_position(
    std::span<const ObjectSample> samples) {
  if (samples.empty()) fail(ErrorCode::EmptyInput, "no samples to report on");
  const auto rescaled = rescale_per_position(samples);
  return build_position_reports(rescaled, {1.0, ScaleScope::PerPosition});
}

GtComparison compare_gt_sources(std::span<const double> primary_gt,
                                std::span<const double> reference_gt,
                                std::span<const double> pred, const CompareOptions& opts) {
  if (primary_gt.size() != reference_gt.size() || primary_gt.size() != pred.size()) {
    fail(ErrorCode::InvalidArgument, "primary, reference and pred must have equal length");
  }
  if (primary_gt.empty()) fail(ErrorCode::EmptyInput, "no objects to compare");
  const auto scored = [&](std::span<const double> gt) {
    std::vector<double> p(pred.begin(), pred.end());
    if (opts.median_scaling) {
      const double s = stats::median(gt) / stats::median(pred);
      for (double& v : p) v *= s;
    }
    return abs_rel(gt, p);
  };
  GtComparison out;
  out.abs_rel_primary = scored(primary_gt);
  out.abs_rel_reference = scored(reference_gt);
  out.difference = out.abs_rel_primary - out.abs_rel_reference;
  out.spearman_between_sources = spearman(primary_gt, reference_gt);
  return out;
}

ExtractionOutcome extract_samples(std::span<const EvalFrame> frames, const ExtractionParams& p,
                                  unsigned workers) {
  validate(p);
  std::vector<std::vector<std::optional<double>>> preds(frames.size());
  parallel_for(frames.size(), workers, [&](std::size_t i) {
    const EvalFrame& f = frames[i];
    auto& out = preds[i];
    out.resize(f.objects.size());
    for (std::size_t k = 0; k < f.objects.size(); ++k) {
      try {
        out[k] = extract_distance(*f.raster, f.objects[k].detection, p);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyRegion) throw;
      }
    }
  });
  ExtractionOutcome outcome;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const EvalFrame& f = frames[i];
    for (std::size_t k = 0; k < f.objects.size(); ++k) {
      if (!preds[i][k]) {
        ++outcome.empty_regions;
        continue;
      }
      outcome.samples.push_back(
          {f.frame_id, f.viewpoint_id, f.camera, f.objects[k].gt_distance_m, *preds[i][k]});
    }
  }
  return outcome;
}

GridSearchResult grid_search_alpha_beta(std::span<const EvalFrame> frames,
                                        std::span<const double> alphas,
                                        std::span<const double> betas, ScaleScope scaling,
                                        unsigned workers) {
  if (alphas.empty() || betas.empty()) {
    fail(ErrorCode::InvalidArgument, "alpha and beta grids must be nonempty");
  }
  for (double a : alphas) validate(ExtractionParams{a, 50.0});
  for (double b : betas) validate(ExtractionParams{1.0, b});

  GridSearchResult result;
  result.table.resize(alphas.size() * betas.size());
  parallel_for(result.table.size(), workers, [&](std::size_t c) {
    GridCell& cell = result.table[c];
    cell.alpha = alphas[c / betas.size()];
    cell.beta = betas[c % betas.size()];
    // frames are processed sequentially inside a cell; cells run in parallel
    const auto outcome = extract_samples(frames, {cell.alpha, cell.beta}, 1);
    cell.n_samples = outcome.samples.size();
    if (outcome.samples.empty()) return;
    const auto factors = compute_scale(outcome.samples, scaling);
    cell.abs_rel = scaled_abs_rel(outcome.samples, factors);
  });

  const GridCell* best = nullptr;
  for (const auto& cell : result.table) {
    if (!cell.abs_rel) continue;
    if (best == nullptr || *cell.abs_rel < *best->abs_rel ||
        (*cell.abs_rel == *best->abs_rel &&
         (cell.alpha > best->alpha || (cell.alpha == best->alpha && cell.beta > best->beta)))) {
      best = &cell;
    }
  }
  if (best == nullptr) fail(ErrorCode::AllCellsInvalid, "no grid cell produced any sample");
  result.best_alpha = best->alpha;
  result.best_beta = best->beta;
  result.best_abs_rel = *best->abs_rel;
  return result;
}

}  // namespace planeval
