#include "planeval/workflows.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <thread>

#include <json.hpp>

#include "planeval/errors.hpp"
#include "planeval/formats.hpp"
#include "planeval/parallel.hpp"

namespace planeval::workflows {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using formats::format_6g;

namespace {

// Read access to one command's run configuration.
class Args {
 public:
  Args(Json j, std::string command, std::set<std::string> allowed)
      : j_(std::move(j)), command_(std::move(command)) {
    if (!j_.is_object()) fail(ErrorCode::InvalidArgument, "run configuration must be an object");
    allowed.insert("workers");
    for (const auto& [key, value] : j_.items()) {
      if (!allowed.contains(key)) {
        fail(ErrorCode::InvalidArgument, command_ + ": unknown option '" + key + "'");
      }
    }
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  std::optional<std::string> str(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    const Json& v = j_.at(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return v.dump();
    bad(key, "a string");
  }

  std::string required_str(const std::string& key) const {
    auto v = str(key);
    if (!v || v->empty()) fail(ErrorCode::InvalidArgument, command_ + ": --" + key + " is required");
    return *v;
  }

  std::optional<double> num(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    const Json& v = j_.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return parse_number(key, v.get<std::string>());
    bad(key, "a number");
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "true" || s == "1") return true;
      if (s == "false" || s == "0") return false;
    }
    bad(key, "a boolean");
  }

  std::vector<std::string> strs(const std::string& key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const Json& v = j_.at(key);
    if (v.is_string()) return {v.get<std::string>()};
    if (!v.is_array()) bad(key, "a list of strings");
    for (const Json& e : v) {
      if (!e.is_string()) bad(key, "a list of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  // Accepts an array or a comma-separated string.
  std::vector<double> nums(const std::string& key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    const Json& v = j_.at(key);
    if (v.is_number()) return {v.get<double>()};
    std::vector<std::string> parts;
    if (v.is_string()) {
      std::string s = v.get<std::string>();
      std::size_t start = 0;
      while (start <= s.size()) {
        const std::size_t end = std::min(s.find(',', start), s.size());
        parts.push_back(s.substr(start, end - start));
        start = end + 1;
      }
    } else if (v.is_array()) {
      for (const Json& e : v) {
        if (e.is_number()) {
          out.push_back(e.get<double>());
        } else if (e.is_string()) {
          parts.push_back(e.get<std::string>());
        } else {
          bad(key, "a list of numbers");
        }
      }
    } else {
      bad(key, "a list of numbers");
    }
    for (const auto& p : parts) out.push_back(parse_number(key, p));
    return out;
  }

  unsigned workers() const {
    const auto w = num("workers");
    if (w && (*w != std::floor(*w))) bad("workers", "an integer");
    return resolve_workers(w ? std::optional<long>(static_cast<long>(*w)) : std::nullopt);
  }

 private:
  [[noreturn]] void bad(const std::string& key, const char* what) const {
    fail(ErrorCode::InvalidArgument, command_ + ": --" + key + " must be " + what);
  }

  double parse_number(const std::string& key, const std::string& s) const {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      bad(key, "a number");
    }
    if (used != s.size()) bad(key, "a number");
    return v;
  }

  Json j_;
  std::string command_;
};

fs::path input_file(const std::string& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) fail(ErrorCode::IoError, "no such file: " + path);
  return path;
}

fs::path output_file(const std::string& path) {
  const fs::path p(path);
  const fs::path parent = p.parent_path();
  std::error_code ec;
  if (!parent.empty() && !fs::is_directory(parent, ec)) {
    fail(ErrorCode::IoError, "output directory does not exist: " + parent.string());
  }
  return p;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::vector<Detection> active_detections(const std::vector<formats::DetectionRecord>& records) {
  std::vector<Detection> out;
  for (const auto& r : records) {
    if (!r.reject_reason) out.push_back(r.detection);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string calibrate(const Args& a) {
  const auto session = formats::read_session(input_file(a.required_str("session")));
  const auto out = output_file(a.required_str("out"));
  const auto residuals_path = a.str("residuals");
  if (residuals_path) output_file(*residuals_path);
  const SessionFit fit = fit_session(session);
  formats::write_homography({fit.homography, a.str("camera-id").value_or("base")}, out);

  std::string csv = "index,u,v,x,y,residual_m\n";
  const auto& pts = session.correspondences();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    csv += std::to_string(i) + "," + formats::format_double(pts[i].image.u) + "," +
           formats::format_double(pts[i].image.v) + "," +
           formats::format_double(pts[i].plane.x) + "," +
           formats::format_double(pts[i].plane.y) + "," +
           formats::format_double(fit.residuals_m[i]) + "\n";
  }
  if (residuals_path) {
    formats::write_text(*residuals_path, csv);
    return {};
  }
  return csv;
}

std::string transfer(const Args& a) {
  const auto base = formats::read_homography(input_file(a.required_str("base")));
  const auto pairs =
      formats::decode_pixel_pairs(formats::read_text(input_file(a.required_str("pairs"))));
  const auto out = output_file(a.required_str("out"));
  const double height = a.num("camera-height").value_or(base.homography.camera_height_m());
  const Homography h = transfer_homography(base.homography, pairs, height);
  formats::write_homography({h, a.str("camera-id").value_or("shifted")}, out);
  return {};
}

std::string angles(const Args& a) {
  const auto session = formats::read_session(input_file(a.required_str("session")));
  const auto out = a.str("out");
  if (out) output_file(*out);
  if (!session.intrinsics() || !session.vanishing_point()) {
    fail(ErrorCode::InvalidArgument, "session needs intrinsics and a vanishing point");
  }
  Json j;
  j["pitch_deg"] = pitch_from_vp(*session.intrinsics(), *session.vanishing_point());
  j["yaw_deg"] = yaw_from_vp(*session.intrinsics(), *session.vanishing_point());
  if (out) {
    formats::write_text(*out, dump(j));
    return {};
  }
  return dump(j);
}

std::string filter(const Args& a) {
  const auto records = formats::read_detections(input_file(a.required_str("detections")));
  const auto out = a.str("out");
  if (out) output_file(*out);
  FilterConfig cfg;
  if (auto v = a.num("min-confidence")) cfg.min_confidence = *v;
  if (auto v = a.num("occlusion-overlap-min")) cfg.occlusion_overlap_min = *v;
  if (auto v = a.num("horizon-v")) {
    cfg.horizon_v = *v;
  } else if (auto s = a.str("session")) {
    const auto session = formats::read_session(input_file(*s));
    if (!session.vanishing_point()) {
      fail(ErrorCode::InvalidArgument, "session has no vanishing point for the horizon stage");
    }
    cfg.horizon_v = session.vanishing_point()->vv;
  }
  for (const auto& spec : a.strs("area")) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::InvalidArgument, "--area expects class=pixels, got '" + spec + "'");
    }
    const ObjectClass cls = parse_object_class(spec.substr(0, eq));
    try {
      std::size_t used = 0;
      const std::string value = spec.substr(eq + 1);
      cfg.area_thresholds_px2[cls] = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidArgument, "--area expects class=pixels, got '" + spec + "'");
    }
  }
  const bool keep_rejected = a.flag("keep-rejected", false);

  const auto input = active_detections(records);
  const FilterResult res = filter_detections(input, cfg);
  std::vector<formats::DetectionRecord> written;
  std::map<std::string, std::size_t> counts;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const auto& verdict = res.verdicts[i];
    if (verdict) ++counts[std::string(to_string(*verdict))];
    if (!verdict || keep_rejected) written.push_back({input[i], verdict});
  }
  const std::string jsonl = formats::encode_detections(written);
  if (!out) return jsonl;
  formats::write_text(*out, jsonl);
  Json summary;
  summary["input"] = input.size();
  summary["kept"] = res.kept.size();
  Json rejected = Json::object();
  for (auto r : {RejectReason::LowConfidence, RejectReason::AboveHorizon, RejectReason::Occluded,
                 RejectReason::SmallArea}) {
    const std::string name(to_string(r));
    rejected[name] = counts[name];
  }
  summary["rejected"] = std::move(rejected);
  return dump(summary);
}

struct LoadedFrames {
  std::vector<EvalFrame> frames;
  std::size_t gt_at_infinity = 0;
};

LoadedFrames load_frames(const Args& a, unsigned workers) {
  const fs::path manifest_path = input_file(a.required_str("manifest"));
  const auto manifest = formats::decode_manifest(formats::read_text(manifest_path));
  const auto detections =
      active_detections(formats::read_detections(input_file(a.required_str("detections"))));
  const auto homography = formats::read_homography(input_file(a.required_str("homography")));
  const std::string viewpoint = a.str("viewpoint").value_or("0");
  const Camera camera = parse_camera(a.str("camera").value_or("base"));

  std::map<std::string, std::size_t> index;
  std::vector<fs::path> raster_paths;
  for (const auto& e : manifest) {
    if (!index.emplace(e.frame_id, index.size()).second) {
      fail(ErrorCode::InvalidArgument, "frame '" + e.frame_id + "' listed twice in the manifest");
    }
    fs::path p(e.raster);
    if (p.is_relative()) p = manifest_path.parent_path() / p;
    raster_paths.push_back(input_file(p.string()));
  }

  LoadedFrames out;
  out.frames.resize(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    out.frames[i].frame_id = manifest[i].frame_id;
    out.frames[i].viewpoint_id = viewpoint;
    out.frames[i].camera = camera;
  }
  for (const auto& d : detections) {
    const auto it = index.find(d.frame_id());
    if (it == index.end()) {
      fail(ErrorCode::NotFound, "frame '" + d.frame_id() + "' has no raster in the manifest");
    }
    double gt = 0.0;
    try {
      gt = assign_gt_distance(d, homography.homography);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PointAtInfinity) throw;
      ++out.gt_at_infinity;
      continue;
    }
    out.frames[it->second].objects.push_back({d, gt});
  }
  parallel_for(out.frames.size(), workers, [&](std::size_t i) {
    if (out.frames[i].objects.empty()) return;
    auto raster = std::make_shared<DepthRaster>(read_pfm(raster_paths[i]));
    raster->set_frame_id(out.frames[i].frame_id);
    out.frames[i].raster = std::move(raster);
  });
  std::erase_if(out.frames, [](const EvalFrame& f) { return f.objects.empty(); });
  return out;
}

std::string extract(const Args& a) {
  const auto out = output_file(a.required_str("out"));
  const ExtractionParams params{a.num("alpha").value_or(1.0), a.num("beta").value_or(50.0)};
  validate(params);
  const unsigned workers = a.workers();
  const LoadedFrames loaded = load_frames(a, workers);
  const ExtractionOutcome outcome = extract_samples(loaded.frames, params, workers);
  formats::write_text(out, formats::encode_samples(outcome.samples));
  Json summary;
  summary["samples"] = outcome.samples.size();
  summary["empty_regions"] = outcome.empty_regions;
  summary["gt_at_infinity"] = loaded.gt_at_infinity;
  return dump(summary);
}

std::vector<ObjectSample> read_samples(const std::vector<std::string>& paths) {
  std::vector<ObjectSample> out;
  for (const auto& p : paths) {
    auto part = formats::decode_samples(formats::read_text(input_file(p)));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::string evaluate(const Args& a) {
  const auto paths = a.strs("samples");
  if (paths.empty()) fail(ErrorCode::InvalidArgument, "evaluate: --samples is required");
  for (const auto& p : paths) input_file(p);
  const auto out_csv = a.str("out-csv");
  const auto out_json = a.str("out-json");
  if (out_csv) output_file(*out_csv);
  if (out_json) output_file(*out_json);
  const auto scale_paths = a.strs("scale-samples");
  const auto fixed_scale = a.num("scale");
  const bool per_position = a.flag("per-position", false);
  if (per_position && (fixed_scale || !scale_paths.empty())) {
    fail(ErrorCode::InvalidArgument, "--per-position excludes --scale and --scale-samples");
  }

  const auto samples = read_samples(paths);
  if (samples.empty()) fail(ErrorCode::EmptyInput, "no samples to evaluate");

  std::vector<PositionReport> rows;
  ScaleFactor scale{1.0, ScaleScope::PerPosition};
  if (per_position) {
    rows = build_position_reports_per_position(samples);
  } else {
    if (fixed_scale) {
      if (!(*fixed_scale > 0.0) || !std::isfinite(*fixed_scale)) {
        fail(ErrorCode::InvalidArgument, "--scale must be positive");
      }
      scale = {*fixed_scale, ScaleScope::Global};
    } else if (!scale_paths.empty()) {
      const auto fit_on = read_samples(scale_paths);
      if (fit_on.empty()) fail(ErrorCode::EmptyInput, "no samples to fit the scale on");
      scale = compute_global_scale(fit_on);
    } else {
      scale = compute_global_scale(samples);
    }
    rows = build_position_reports(samples, scale);
  }
  const std::string csv = formats::encode_report_csv(rows);
  if (out_json) formats::write_text(*out_json, formats::encode_report_json(rows, scale));
  if (out_csv) {
    formats::write_text(*out_csv, csv);
    return {};
  }
  return csv;
}

std::string grid_search(const Args& a) {
  auto alphas = a.nums("alphas");
  auto betas = a.nums("betas");
  if (alphas.empty()) alphas = {0.5, 0.75, 1.0};
  if (betas.empty()) betas = {50.0, 75.0, 90.0};
  const ScaleScope scope = parse_scale_scope(a.str("scaling").value_or("global"));
  const auto out = a.str("out");
  if (out) output_file(*out);
  const unsigned workers = a.workers();
  const LoadedFrames loaded = load_frames(a, workers);
  const GridSearchResult res = grid_search_alpha_beta(loaded.frames, alphas, betas, scope, workers);

  std::string table = "alpha,beta,abs_rel,n_samples\n";
  for (const auto& c : res.table) {
    table += format_6g(c.alpha) + "," + format_6g(c.beta) + "," +
             (c.abs_rel ? format_6g(*c.abs_rel) : "") + "," + std::to_string(c.n_samples) + "\n";
  }
  if (out) formats::write_text(*out, table);
  return "best: alpha=" + format_6g(res.best_alpha) + " beta=" + format_6g(res.best_beta) +
         "\nabs_rel: " + format_6g(res.best_abs_rel) + "\n";
}

std::string compare_gt(const Args& a) {
  const auto records =
      formats::decode_comparison_records(formats::read_text(input_file(a.required_str("input"))));
  const auto out = a.str("out");
  if (out) output_file(*out);
  std::vector<double> primary;
  std::vector<double> reference;
  std::vector<double> pred;
  for (const auto& r : records) {
    primary.push_back(r.primary_m);
    reference.push_back(r.reference_m);
    pred.push_back(r.pred_raw);
  }
  CompareOptions opts;
  opts.median_scaling = a.flag("median-scaling", true);
  const GtComparison cmp = compare_gt_sources(primary, reference, pred, opts);
  Json j;
  j["n_objects"] = records.size();
  j["median_scaling"] = opts.median_scaling;
  j["abs_rel_primary"] = formats::round_6g(cmp.abs_rel_primary);
  j["abs_rel_reference"] = formats::round_6g(cmp.abs_rel_reference);
  j["difference"] = formats::round_6g(cmp.difference);
  j["spearman_between_sources"] = formats::round_6g(cmp.spearman_between_sources);
  if (out) {
    formats::write_text(*out, dump(j));
    return {};
  }
  return dump(j);
}

std::string gps_stats(const Args& a) {
  const auto paths = a.strs("traces");
  if (paths.empty()) fail(ErrorCode::InvalidArgument, "gps-stats: --traces is required");
  const auto out = a.str("out");
  if (out) output_file(*out);
  SlopeOptions opts;
  if (auto v = a.num("min-horizontal-m")) opts.min_horizontal_m = *v;
  if (auto v = a.num("altitude-step-m")) opts.altitude_step_m = *v;
  const std::string basis = a.str("basis").value_or("segments");
  if (basis == "segments") {
    opts.basis = AltitudeChangeBasis::Segments;
  } else if (basis == "raw_points") {
    opts.basis = AltitudeChangeBasis::RawPoints;
  } else {
    fail(ErrorCode::InvalidArgument, "--basis must be segments or raw_points");
  }
  std::vector<std::vector<GpsPoint>> traces;
  for (const auto& p : paths) traces.push_back(formats::decode_gps_csv(formats::read_text(input_file(p))));
  const SlopeStats s = slope_stats(std::span<const std::vector<GpsPoint>>(traces), opts);
  Json j;
  j["n_traces"] = traces.size();
  j["n_segments"] = s.n_segments;
  j["mean_abs_slope_deg"] = formats::round_6g(s.mean_abs_deg);
  j["median_abs_slope_deg"] = formats::round_6g(s.median_abs_deg);
  j["p99_abs_slope_deg"] = formats::round_6g(s.p99_abs_deg);
  j["altitude_change_fraction"] = formats::round_6g(s.altitude_change_fraction);
  j["basis"] = basis;
  if (out) {
    formats::write_text(*out, dump(j));
    return {};
  }
  return dump(j);
}

synth::SceneConfig default_scene_config() {
  synth::SceneConfig cfg;
  const std::pair<double, double> spots[] = {{-3.5, 8.0},  {0.0, 12.0}, {3.5, 15.0},
                                             {-3.5, 20.0}, {0.0, 26.0}, {3.5, 32.0}};
  for (const auto& [x, y] : spots) {
    synth::SceneObject o;
    o.ground_x_m = x;
    o.ground_y_m = y;
    cfg.objects.push_back(o);
  }
  return cfg;
}

std::string synth_cmd(const Args& a) {
  const fs::path dir = a.required_str("out-dir");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) fail(ErrorCode::IoError, "cannot create " + dir.string());
  const std::string preset = a.str("preset").value_or("");
  const auto config_path = a.str("config");
  if (!preset.empty() && preset != "planted-grid") {
    fail(ErrorCode::InvalidArgument, "unknown preset '" + preset + "'");
  }
  if (!preset.empty() && config_path) {
    fail(ErrorCode::InvalidArgument, "--preset and --config are exclusive");
  }
  const unsigned workers = a.workers();

  synth::SceneConfig cfg = config_path
                               ? formats::decode_scene_config(formats::read_text(input_file(*config_path)))
                               : default_scene_config();
  if (auto seed = a.num("seed")) {
    if (*seed < 0 || *seed != std::floor(*seed)) {
      fail(ErrorCode::InvalidArgument, "--seed must be a non-negative integer");
    }
    cfg.seed = static_cast<std::uint64_t>(*seed);
  }
  std::optional<synth::Scene> scene;
  if (preset == "planted-grid") {
    scene.emplace(synth::planted_grid_scene());
    cfg = synth::SceneConfig{};
    cfg.pose.pitch_deg = 6.0;
    cfg.frame_id = scene->raster.frame_id();
  } else {
    scene.emplace(synth::generate_scene(cfg, workers));
  }

  const std::string raster_name = cfg.frame_id + ".pfm";
  std::vector<formats::DetectionRecord> dets;
  for (const auto& d : scene->detections) dets.push_back({d, std::nullopt});

  formats::write_session(scene->session, dir / "session.json");
  formats::write_homography({scene->true_homography, "base"}, dir / "homography_true.json");
  formats::write_detections(dets, dir / "detections.jsonl");
  formats::write_text(dir / "manifest.jsonl", formats::encode_manifest({{cfg.frame_id, raster_name}}));
  write_pfm(scene->raster, dir / raster_name);
  formats::write_text(dir / "scene_config.json", formats::encode_scene_config(cfg));
  formats::write_text(dir / "scene_truth.json", formats::encode_scene_truth(cfg, *scene));

  Json j;
  j["files"] = {"session.json",   "homography_true.json", "detections.jsonl", "manifest.jsonl",
                raster_name,      "scene_config.json",    "scene_truth.json"};
  return dump(j);
}

struct Command {
  std::string name;
  std::set<std::string> keys;
  std::string (*fn)(const Args&);
};

const std::vector<Command>& commands() {
  static const std::vector<Command> table = {
      {"calibrate", {"session", "out", "residuals", "camera-id"}, calibrate},
      {"transfer", {"base", "pairs", "out", "camera-height", "camera-id"}, transfer},
      {"angles", {"session", "out"}, angles},
      {"filter",
       {"detections", "out", "keep-rejected", "min-confidence", "horizon-v", "session",
        "occlusion-overlap-min", "area"},
       filter},
      {"extract",
       {"manifest", "detections", "homography", "viewpoint", "camera", "alpha", "beta", "out"},
       extract},
      {"evaluate", {"samples", "scale", "scale-samples", "per-position", "out-csv", "out-json"},
       evaluate},
      {"grid-search",
       {"manifest", "detections", "homography", "viewpoint", "camera", "alphas", "betas",
        "scaling", "out"},
       grid_search},
      {"compare-gt", {"input", "median-scaling", "out"}, compare_gt},
      {"gps-stats", {"traces", "min-horizontal-m", "altitude-step-m", "basis", "out"}, gps_stats},
      {"synth", {"config", "preset", "seed", "out-dir"}, synth_cmd},
  };
  return table;
}

}  // namespace

unsigned resolve_workers(std::optional<long> flag) {
  long value = 0;
  if (flag) {
    value = *flag;
  } else if (const char* env = std::getenv("PLANEVAL_WORKERS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    value = std::strtol(env, &end, 10);
    if (*end != '\0') fail(ErrorCode::InvalidArgument, "PLANEVAL_WORKERS must be an integer");
  } else {
    value = std::max(1u, std::thread::hardware_concurrency());
  }
  if (value < 1 || value > 4096) fail(ErrorCode::InvalidArgument, "worker count must be in [1, 4096]");
  return static_cast<unsigned>(value);
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& c : commands()) out.push_back(c.name);
    return out;
  }();
  return names;
}

std::string run(std::string_view command, const std::string& config_json) {
  for (const auto& c : commands()) {
    if (c.name != command) continue;
    Json j;
    try {
      j = config_json.empty() ? Json::object() : Json::parse(config_json);
    } catch (const Json::exception& e) {
      fail(ErrorCode::ParseError, std::string("run configuration: ") + e.what());
    }
    return c.fn(Args(std::move(j), c.name, c.keys));
  }
  fail(ErrorCode::InvalidArgument, "unknown command '" + std::string(command) + "'");
}

}  // namespace planeval::workflows
