#include "planeval/formats.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "planeval/errors.hpp"

namespace planeval::formats {

using Json = nlohmann::ordered_json;

namespace {

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorCode::ParseError, what + ": " + e.what());
  }
}

const Json& member(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) {
    fail(ErrorCode::ParseError, what + ": missing field '" + key + "'");
  }
  return j.at(key);
}

double number(const Json& j, const char* key, const std::string& what) {
  const Json& v = member(j, key, what);
  if (!v.is_number()) fail(ErrorCode::ParseError, what + ": field '" + key + "' must be a number");
  return v.get<double>();
}

double number_or(const Json& j, const char* key, double fallback, const std::string& what) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return number(j, key, what);
}

std::string string_field(const Json& j, const char* key, const std::string& what) {
  const Json& v = member(j, key, what);
  if (!v.is_string()) fail(ErrorCode::ParseError, what + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

std::array<double, 2> pair_field(const Json& j, const char* key, const std::string& what) {
  const Json& v = member(j, key, what);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    fail(ErrorCode::ParseError, what + ": field '" + key + "' must be [a, b]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

// Non-blank lines of a JSON Lines document, each parsed.
template <class Fn>
void for_each_jsonl(const std::string& text, const std::string& what, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = what + " line " + std::to_string(lineno);
    const Json j = parse_json(line, where);
    try {
      fn(j, where);
    } catch (const Error& e) {
      if (std::string_view(e.what()).starts_with(where)) throw;
      fail(ErrorCode::ParseError, where + ": " + e.what());
    }
  }
}

Json optional_number(const std::optional<double>& v) {
  return v ? Json(round_6g(*v)) : Json(nullptr);
}

std::string csv_number(const std::optional<double>& v) { return v ? format_6g(*v) : ""; }

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoError, "cannot replace " + path.string() + ": " + ec.message());
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_6g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double round_6g(double v) { return std::stod(format_6g(v)); }

// ---------------------------------------------------------------------------
// homography

std::string encode_homography(const HomographyFile& f) {
  const auto& m = f.homography.matrix();
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
  Json j;
  j["matrix"] = rows;
  j["camera_height_m"] = f.homography.camera_height_m();
  j["camera_id"] = f.camera_id;
  j["units"] = "meters";
  return j.dump(2) + "\n";
}

HomographyFile decode_homography(const std::string& text) {
  const std::string what = "homography";
  const Json j = parse_json(text, what);
  const Json& rows = member(j, "matrix", what);
  if (!rows.is_array() || rows.size() != 3) fail(ErrorCode::ParseError, "matrix must be 3x3");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    const Json& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != 3) fail(ErrorCode::ParseError, "matrix must be 3x3");
    for (int c = 0; c < 3; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) fail(ErrorCode::ParseError, "matrix entries must be numbers");
      m(r, c) = v.get<double>();
    }
  }
  if (j.contains("units") && j.at("units") != "meters") {
    fail(ErrorCode::ParseError, "homography units must be 'meters'");
  }
  std::string camera_id;
  if (j.contains("camera_id") && j.at("camera_id").is_string()) {
    camera_id = j.at("camera_id").get<std::string>();
  }
  return {Homography(m, number(j, "camera_height_m", what)), camera_id};
}

HomographyFile read_homography(const std::filesystem::path& path) {
  return decode_homography(read_text(path));
}

void write_homography(const HomographyFile& f, const std::filesystem::path& path) {
  write_text(path, encode_homography(f));
}

// ---------------------------------------------------------------------------
// calibration session

std::string encode_session(const CalibrationSession& s) {
  Json j;
  j["image_id"] = s.image_id();
  j["camera_height_m"] = s.camera_height_m();
  if (const auto& k = s.intrinsics()) {
    j["intrinsics"] = {{"fx", k->fx}, {"fy", k->fy}, {"cu", k->cu}, {"cv", k->cv}};
  } else {
    j["intrinsics"] = nullptr;
  }
  if (const auto& vp = s.vanishing_point()) {
    j["vanishing_point"] = {{"vu", vp->vu}, {"vv", vp->vv}};
  } else {
    j["vanishing_point"] = nullptr;
  }
  Json pts = Json::array();
  for (const auto& c : s.correspondences()) {
    Json p;
    p["image"] = {c.image.u, c.image.v};
    p["plane"] = {c.plane.x, c.plane.y};
    pts.push_back(std::move(p));
  }
  j["points"] = std::move(pts);
  return j.dump(2) + "\n";
}

CalibrationSession decode_session(const std::string& text) {
  const std::string what = "correspondence set";
  const Json j = parse_json(text, what);
  std::string image_id;
  if (j.contains("image_id") && !j.at("image_id").is_null()) {
    image_id = string_field(j, "image_id", what);
  }
  CalibrationSession s(image_id, number(j, "camera_height_m", what));
  if (j.contains("intrinsics") && !j.at("intrinsics").is_null()) {
    const Json& k = j.at("intrinsics");
    s.set_intrinsics(Intrinsics{number(k, "fx", what), number(k, "fy", what),
                                number(k, "cu", what), number(k, "cv", what)});
  }
  if (j.contains("vanishing_point") && !j.at("vanishing_point").is_null()) {
    const Json& vp = j.at("vanishing_point");
    s.set_vanishing_point(VanishingPoint{number(vp, "vu", what), number(vp, "vv", what)});
  }
  if (j.contains("points")) {
    const Json& pts = j.at("points");
    if (!pts.is_array()) fail(ErrorCode::ParseError, what + ": points must be an array");
    for (const Json& p : pts) {
      const auto img = pair_field(p, "image", what);
      const auto pl = pair_field(p, "plane", what);
      s.add_point({{img[0], img[1]}, {pl[0], pl[1]}});
    }
  }
  return s;
}

CalibrationSession read_session(const std::filesystem::path& path) {
  return decode_session(read_text(path));
}

void write_session(const CalibrationSession& s, const std::filesystem::path& path) {
  write_text(path, encode_session(s));
}

// ---------------------------------------------------------------------------
// detections

std::string encode_detections(const std::vector<DetectionRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    const Detection& d = r.detection;
    Json j;
    j["frame_id"] = d.frame_id();
    j["cls"] = std::string(to_string(d.cls()));
    j["box"] = {d.box().x1, d.box().y1, d.box().x2, d.box().y2};
    j["confidence"] = d.confidence();
    j["object_id"] = d.object_id() ? Json(*d.object_id()) : Json(nullptr);
    if (r.reject_reason) j["reject_reason"] = std::string(to_string(*r.reject_reason));
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<DetectionRecord> decode_detections(const std::string& text) {
  std::vector<DetectionRecord> out;
  for_each_jsonl(text, "detections", [&](const Json& j, const std::string& where) {
    const Json& box = member(j, "box", where);
    if (!box.is_array() || box.size() != 4) {
      fail(ErrorCode::ParseError, where + ": box must be [x1, y1, x2, y2]");
    }
    std::array<double, 4> b{};
    for (std::size_t i = 0; i < 4; ++i) {
      if (!box[i].is_number()) fail(ErrorCode::ParseError, where + ": box must be numeric");
      b[i] = box[i].get<double>();
    }
    std::optional<std::string> object_id;
    if (j.contains("object_id") && !j.at("object_id").is_null()) {
      object_id = string_field(j, "object_id", where);
    }
    DetectionRecord rec{Detection(parse_object_class(string_field(j, "cls", where)),
                                  Box{b[0], b[1], b[2], b[3]}, number(j, "confidence", where),
                                  string_field(j, "frame_id", where), std::move(object_id)),
                        std::nullopt};
    if (j.contains("reject_reason") && !j.at("reject_reason").is_null()) {
      rec.reject_reason = parse_reject_reason(string_field(j, "reject_reason", where));
    }
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<DetectionRecord> read_detections(const std::filesystem::path& path) {
  return decode_detections(read_text(path));
}

void write_detections(const std::vector<DetectionRecord>& records,
                      const std::filesystem::path& path) {
  write_text(path, encode_detections(records));
}

// ---------------------------------------------------------------------------
// manifest and samples

std::string encode_manifest(const std::vector<ManifestEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    Json j;
    j["frame_id"] = e.frame_id;
    j["raster"] = e.raster;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<ManifestEntry> decode_manifest(const std::string& text) {
  std::vector<ManifestEntry> out;
  for_each_jsonl(text, "manifest", [&](const Json& j, const std::string& where) {
    out.push_back({string_field(j, "frame_id", where), string_field(j, "raster", where)});
  });
  return out;
}

std::string encode_samples(const std::vector<ObjectSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    Json j;
    j["frame_id"] = s.frame_id;
    j["viewpoint_id"] = s.viewpoint_id;
    j["camera"] = std::string(to_string(s.camera));
    j["gt_m"] = s.gt_distance_m;
    j["pred_raw"] = s.pred_distance_raw;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<ObjectSample> decode_samples(const std::string& text) {
  std::vector<ObjectSample> out;
  for_each_jsonl(text, "samples", [&](const Json& j, const std::string& where) {
    ObjectSample s{string_field(j, "frame_id", where), string_field(j, "viewpoint_id", where),
                   parse_camera(string_field(j, "camera", where)), number(j, "gt_m", where),
                   number(j, "pred_raw", where)};
    validate(s);
    out.push_back(std::move(s));
  });
  return out;
}

// ---------------------------------------------------------------------------
// GPS

std::string encode_gps_csv(const std::vector<GpsPoint>& trace) {
  std::string out = "t,lat,lon,alt,speed\n";
  for (const auto& p : trace) {
    out += format_double(p.t) + "," + format_double(p.lat) + "," + format_double(p.lon) + "," +
           format_double(p.alt) + "," + (p.speed ? format_double(*p.speed) : "") + "\n";
  }
  return out;
}

std::vector<GpsPoint> decode_gps_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<GpsPoint> out;
  const auto parse = [&](const std::string& tok, const char* col) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      fail(ErrorCode::ParseError,
           "gps line " + std::to_string(lineno) + ": bad " + col + " '" + tok + "'");
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) cols.push_back(tok);
    if (line.back() == ',') cols.emplace_back();
    if (lineno == 1) {
      if (line != "t,lat,lon,alt,speed") {
        fail(ErrorCode::ParseError, "gps csv header must be 't,lat,lon,alt,speed'");
      }
      continue;
    }
    if (cols.size() != 5) {
      fail(ErrorCode::ParseError, "gps line " + std::to_string(lineno) + ": expected 5 columns");
    }
    GpsPoint p{parse(cols[0], "t"), parse(cols[1], "lat"), parse(cols[2], "lon"),
               parse(cols[3], "alt"), std::nullopt};
    if (!cols[4].empty()) p.speed = parse(cols[4], "speed");
    out.push_back(p);
  }
  if (lineno == 0) fail(ErrorCode::ParseError, "gps csv is empty");
  return out;
}

// ---------------------------------------------------------------------------
// reports

std::string encode_report_csv(const std::vector<PositionReport>& rows) {
  std::string out =
      "viewpoint_id,abs_rel_base,abs_rel_shifted,abs_rel_delta,scale_base,scale_shifted,"
      "scale_delta,n_base,n_shifted\n";
  for (const auto& r : rows) {
    out += r.viewpoint_id + "," + csv_number(r.abs_rel_base) + "," +
           csv_number(r.abs_rel_shifted) + "," + csv_number(r.abs_rel_delta) + "," +
           csv_number(r.scale_base) + "," + csv_number(r.scale_shifted) + "," +
           csv_number(r.scale_delta) + "," + std::to_string(r.n_objects_base) + "," +
           std::to_string(r.n_objects_shifted) + "\n";
  }
  return out;
}

std::string encode_report_json(const std::vector<PositionReport>& rows, const ScaleFactor& scale) {
  Json j;
  j["scale"] = round_6g(scale.value);
  j["scale_scope"] = std::string(to_string(scale.scope));
  Json arr = Json::array();
  for (const auto& r : rows) {
    Json o;
    o["viewpoint_id"] = r.viewpoint_id;
    o["abs_rel_base"] = optional_number(r.abs_rel_base);
    o["abs_rel_shifted"] = optional_number(r.abs_rel_shifted);
    o["abs_rel_delta"] = optional_number(r.abs_rel_delta);
    o["scale_base"] = optional_number(r.scale_base);
    o["scale_shifted"] = optional_number(r.scale_shifted);
    o["scale_delta"] = optional_number(r.scale_delta);
    o["n_base"] = r.n_objects_base;
    o["n_shifted"] = r.n_objects_shifted;
    arr.push_back(std::move(o));
  }
  j["positions"] = std::move(arr);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// transfer pairs and comparison records

std::string encode_pixel_pairs(const std::vector<PixelPair>& pairs) {
  Json arr = Json::array();
  for (const auto& p : pairs) {
    Json o;
    o["base"] = {p.base.u, p.base.v};
    o["shifted"] = {p.shifted.u, p.shifted.v};
    arr.push_back(std::move(o));
  }
  Json j;
  j["pairs"] = std::move(arr);
  return j.dump(2) + "\n";
}

std::vector<PixelPair> decode_pixel_pairs(const std::string& text) {
  const std::string what = "pixel pairs";
  const Json j = parse_json(text, what);
  const Json& arr = member(j, "pairs", what);
  if (!arr.is_array()) fail(ErrorCode::ParseError, what + ": pairs must be an array");
  std::vector<PixelPair> out;
  for (const Json& p : arr) {
    const auto b = pair_field(p, "base", what);
    const auto s = pair_field(p, "shifted", what);
    out.push_back({{b[0], b[1]}, {s[0], s[1]}});
  }
  return out;
}

std::string encode_comparison_records(const std::vector<ComparisonRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    Json j;
    j["object_id"] = r.object_id;
    j["primary_m"] = r.primary_m;
    j["reference_m"] = r.reference_m;
    j["pred_raw"] = r.pred_raw;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<ComparisonRecord> decode_comparison_records(const std::string& text) {
  std::vector<ComparisonRecord> out;
  for_each_jsonl(text, "comparison", [&](const Json& j, const std::string& where) {
    ComparisonRecord r;
    if (j.contains("object_id") && j.at("object_id").is_string()) {
      r.object_id = j.at("object_id").get<std::string>();
    }
    r.primary_m = number(j, "primary_m", where);
    r.reference_m = number(j, "reference_m", where);
    r.pred_raw = number(j, "pred_raw", where);
    out.push_back(std::move(r));
  });
  return out;
}

// ---------------------------------------------------------------------------
// synthetic scenes

synth::SceneConfig decode_scene_config(const std::string& text) {
  const std::string what = "scene config";
  const Json j = parse_json(text, what);
  if (!j.is_object()) fail(ErrorCode::ParseError, what + " must be an object");
  synth::SceneConfig cfg;
  if (j.contains("pose")) {
    const Json& p = j.at("pose");
    auto& pose = cfg.pose;
    pose.height_m = number_or(p, "height_m", pose.height_m, what);
    pose.pitch_deg = number_or(p, "pitch_deg", pose.pitch_deg, what);
    pose.yaw_deg = number_or(p, "yaw_deg", pose.yaw_deg, what);
    pose.roll_deg = number_or(p, "roll_deg", pose.roll_deg, what);
    pose.x_m = number_or(p, "x_m", pose.x_m, what);
    pose.y_m = number_or(p, "y_m", pose.y_m, what);
    pose.z_m = number_or(p, "z_m", pose.z_m, what);
  }
  if (j.contains("intrinsics")) {
    const Json& k = j.at("intrinsics");
    cfg.intrinsics = {number(k, "fx", what), number(k, "fy", what), number(k, "cu", what),
                      number(k, "cv", what)};
  }
  if (j.contains("image")) {
    const Json& im = j.at("image");
    const double w = number(im, "width", what);
    const double h = number(im, "height", what);
    if (!(w >= 1.0) || !(h >= 1.0)) fail(ErrorCode::ParseError, what + ": bad image size");
    cfg.image = {static_cast<std::size_t>(w), static_cast<std::size_t>(h)};
  }
  if (j.contains("objects")) {
    for (const Json& o : j.at("objects")) {
      synth::SceneObject obj;
      if (o.contains("cls")) obj.cls = parse_object_class(string_field(o, "cls", what));
      obj.ground_x_m = number(o, "ground_x_m", what);
      obj.ground_y_m = number(o, "ground_y_m", what);
      obj.width_m = number_or(o, "width_m", obj.width_m, what);
      obj.height_m = number_or(o, "height_m", obj.height_m, what);
      cfg.objects.push_back(obj);
    }
  }
  if (j.contains("calibration_points")) {
    cfg.calibration_points.clear();
    for (const Json& p : j.at("calibration_points")) {
      if (!p.is_array() || p.size() != 2) {
        fail(ErrorCode::ParseError, what + ": calibration points must be [x, y]");
      }
      cfg.calibration_points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
  }
  if (j.contains("noise") && !j.at("noise").is_null()) {
    const Json& n = j.at("noise");
    cfg.noise = synth::NoiseSpec{number_or(n, "raster_sigma_rel", 0.0, what),
                                 number_or(n, "box_sigma_px", 0.0, what)};
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("content")) {
    cfg.content = synth::parse_raster_content(string_field(j, "content", what));
  }
  if (j.contains("frame_id")) cfg.frame_id = string_field(j, "frame_id", what);
  cfg.confidence = number_or(j, "confidence", cfg.confidence, what);
  return cfg;
}

namespace {

Json pose_json(const synth::CameraPose& p) {
  Json j;
  j["height_m"] = p.height_m;
  j["pitch_deg"] = p.pitch_deg;
  j["yaw_deg"] = p.yaw_deg;
  j["roll_deg"] = p.roll_deg;
  j["x_m"] = p.x_m;
  j["y_m"] = p.y_m;
  j["z_m"] = p.z_m;
  return j;
}

Json intrinsics_json(const Intrinsics& k) {
  return Json{{"fx", k.fx}, {"fy", k.fy}, {"cu", k.cu}, {"cv", k.cv}};
}

}  // namespace

std::string encode_scene_config(const synth::SceneConfig& cfg) {
  Json j;
  j["pose"] = pose_json(cfg.pose);
  j["intrinsics"] = intrinsics_json(cfg.intrinsics);
  j["image"] = {{"width", cfg.image.width}, {"height", cfg.image.height}};
  Json objs = Json::array();
  for (const auto& o : cfg.objects) {
    objs.push_back({{"cls", std::string(to_string(o.cls))},
                    {"ground_x_m", o.ground_x_m},
                    {"ground_y_m", o.ground_y_m},
                    {"width_m", o.width_m},
                    {"height_m", o.height_m}});
  }
  j["objects"] = std::move(objs);
  Json pts = Json::array();
  for (const auto& p : cfg.calibration_points) pts.push_back({p.x, p.y});
  j["calibration_points"] = std::move(pts);
  if (cfg.noise) {
    j["noise"] = {{"raster_sigma_rel", cfg.noise->raster_sigma_rel},
                  {"box_sigma_px", cfg.noise->box_sigma_px}};
  } else {
    j["noise"] = nullptr;
  }
  j["seed"] = cfg.seed;
  j["content"] = std::string(synth::to_string(cfg.content));
  j["frame_id"] = cfg.frame_id;
  j["confidence"] = cfg.confidence;
  return j.dump(2) + "\n";
}

std::string encode_scene_truth(const synth::SceneConfig& cfg, const synth::Scene& scene) {
  Json j;
  j["frame_id"] = cfg.frame_id;
  j["pose"] = pose_json(cfg.pose);
  j["intrinsics"] = intrinsics_json(cfg.intrinsics);
  j["image"] = {{"width", cfg.image.width}, {"height", cfg.image.height}};
  j["vanishing_point"] = {{"vu", scene.vanishing_point.vu}, {"vv", scene.vanishing_point.vv}};
  Json objs = Json::array();
  for (const auto& t : scene.truth) {
    Json o;
    o["object_id"] = t.object_id;
    o["cls"] = std::string(to_string(t.cls));
    o["contact"] = {t.contact.x, t.contact.y};
    o["true_distance_m"] = t.true_distance_m;
    o["camera_range_m"] = t.camera_range_m;
    o["anchor"] = {t.anchor.u, t.anchor.v};
    o["box"] = {t.box.x1, t.box.y1, t.box.x2, t.box.y2};
    objs.push_back(std::move(o));
  }
  j["objects"] = std::move(objs);
  return j.dump(2) + "\n";
}

}  // namespace planeval::formats
