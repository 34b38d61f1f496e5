#include "planeval/serve_api.hpp"

#include <cmath>
#include <mutex>

#include <json.hpp>

#include "planeval/errors.hpp"
#include "planeval/formats.hpp"

namespace planeval::serve {

using Json = nlohmann::ordered_json;

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParseError:
      return 400;
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::NoFit:
      return 409;
    case ErrorCode::IoError:
      return 500;
    default:
      return 422;
  }
}

Response error_response(int status, ErrorCode code, const std::string& detail) {
  Json j;
  j["error"] = std::string(to_string(code));
  j["detail"] = detail;
  return {status, "application/json", j.dump()};
}

Response json_response(int status, const Json& j) { return {status, "application/json", j.dump()}; }

Json fit_json(const SessionFit& fit, const std::string& camera_id) {
  Json j;
  j["homography"] = Json::parse(formats::encode_homography({fit.homography, camera_id}));
  j["residuals_m"] = fit.residuals_m;
  return j;
}

Correspondence parse_point(const std::string& body) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::exception& e) {
    fail(ErrorCode::ParseError, std::string("body: ") + e.what());
  }
  const auto pair = [&](const char* key) {
    if (!j.is_object() || !j.contains(key)) {
      fail(ErrorCode::ParseError, std::string("body: missing '") + key + "'");
    }
    const Json& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(ErrorCode::ParseError, std::string("body: '") + key + "' must be [a, b]");
    }
    const double a = v[0].get<double>();
    const double b = v[1].get<double>();
    if (!std::isfinite(a) || !std::isfinite(b)) {
      fail(ErrorCode::InvalidArgument, std::string("body: '") + key + "' must be finite");
    }
    return std::pair{a, b};
  };
  const auto [u, v] = pair("image");
  const auto [x, y] = pair("plane");
  return {{u, v}, {x, y}};
}

std::size_t parse_index(const std::string& s) {
  if (s.empty() || s.size() > 9 || s.find_first_not_of("0123456789") != std::string::npos) {
    fail(ErrorCode::NotFound, "no point '" + s + "'");
  }
  return static_cast<std::size_t>(std::stoul(s));
}

double parse_coord(const std::map<std::string, std::string>& q, const char* key) {
  const auto it = q.find(key);
  if (it == q.end()) fail(ErrorCode::InvalidArgument, std::string("missing query '") + key + "'");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != it->second.size() || !std::isfinite(v)) {
    fail(ErrorCode::InvalidArgument, std::string("query '") + key + "' must be a number");
  }
  return v;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string url_decode(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size() && hex_value(s[i + 1]) >= 0 &&
               hex_value(s[i + 2]) >= 0) {
      out += static_cast<char>(hex_value(s[i + 1]) * 16 + hex_value(s[i + 2]));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> parse_query(const std::string& query) {
  std::map<std::string, std::string> out;
  std::size_t start = 0;
  while (start < query.size()) {
    const std::size_t end = std::min(query.find('&', start), query.size());
    const std::string part = query.substr(start, end - start);
    if (!part.empty()) {
      const std::size_t eq = part.find('=');
      if (eq == std::string::npos) {
        out[url_decode(part)] = "";
      } else {
        out[url_decode(part.substr(0, eq))] = url_decode(part.substr(eq + 1));
      }
    }
    start = end + 1;
  }
  return out;
}

SessionState::SessionState(ServerConfig cfg)
    : session_(std::move(cfg.session)),
      image_(std::move(cfg.image)),
      export_dir_(std::move(cfg.export_dir)),
      camera_id_(std::move(cfg.camera_id)) {}

CalibrationSession SessionState::session() const {
  std::shared_lock lock(mu_);
  return session_;
}

bool SessionState::has_fit() const {
  std::shared_lock lock(mu_);
  return fit_.has_value();
}

Response SessionState::handle(const Request& req) {
  try {
    const std::string& p = req.path;
    const std::string points = "/api/points";
    if (p == "/api/session") {
      if (req.method == "GET") return get_session();
    } else if (p == "/api/image") {
      if (req.method == "GET") return get_image();
    } else if (p == points) {
      if (req.method == "POST") return add_point(req.body);
    } else if (p.starts_with(points + "/")) {
      const std::string index = p.substr(points.size() + 1);
      if (req.method == "PUT") return update_point(index, req.body);
      if (req.method == "DELETE") return remove_point(index);
    } else if (p == "/api/fit") {
      if (req.method == "POST") return fit();
    } else if (p == "/api/preview") {
      if (req.method == "GET") return preview(req.query);
    } else if (p == "/api/export") {
      if (req.method == "POST") return do_export();
    } else {
      return error_response(404, ErrorCode::NotFound, "no route " + p);
    }
    return error_response(405, ErrorCode::InvalidArgument,
                          "method " + req.method + " not allowed on " + p);
  } catch (const Error& e) {
    return error_response(status_for(e.code()), e.code(), e.what());
  }
}

Response SessionState::get_session() const {
  std::shared_lock lock(mu_);
  Json j = Json::parse(formats::encode_session(session_));
  j["fit"] = fit_ ? fit_json(*fit_, camera_id_) : Json(nullptr);
  return json_response(200, j);
}

Response SessionState::get_image() const {
  std::shared_lock lock(mu_);
  if (!image_) fail(ErrorCode::NotFound, "no calibration image loaded");
  return {200, image_->media_type, image_->bytes};
}

Response SessionState::add_point(const std::string& body) {
  const Correspondence c = parse_point(body);
  std::unique_lock lock(mu_);
  const std::size_t index = session_.add_point(c);
  fit_.reset();
  return json_response(201, Json{{"index", index}});
}

Response SessionState::update_point(const std::string& index, const std::string& body) {
  const std::size_t i = parse_index(index);
  const Correspondence c = parse_point(body);
  std::unique_lock lock(mu_);
  session_.update_point(i, c);
  fit_.reset();
  return json_response(200, Json{{"index", i}});
}

Response SessionState::remove_point(const std::string& index) {
  const std::size_t i = parse_index(index);
  std::unique_lock lock(mu_);
  session_.remove_point(i);
  fit_.reset();
  return json_response(200, Json{{"removed", i}, {"n_points", session_.correspondences().size()}});
}

Response SessionState::fit() {
  std::unique_lock lock(mu_);
  SessionFit f = fit_session(session_);
  fit_ = std::move(f);
  return json_response(200, fit_json(*fit_, camera_id_));
}

Response SessionState::preview(const std::string& query) const {
  const auto q = parse_query(query);
  const PixelPoint px{parse_coord(q, "u"), parse_coord(q, "v")};
  std::shared_lock lock(mu_);
  if (!fit_) return error_response(404, ErrorCode::NoFit, "no current fit");
  const PlanePoint g = project(fit_->homography, px);
  Json j;
  j["x"] = g.x;
  j["y"] = g.y;
  j["distance_m"] = ground_distance(fit_->homography, px);
  return json_response(200, j);
}

Response SessionState::do_export() const {
  std::shared_lock lock(mu_);
  if (!fit_) {
    return error_response(409, ErrorCode::NoFit, "fit the session before exporting");
  }
  std::error_code ec;
  std::filesystem::create_directories(export_dir_, ec);
  const auto h_path = export_dir_ / "homography.json";
  const auto s_path = export_dir_ / "session.json";
  formats::write_homography({fit_->homography, camera_id_}, h_path);
  formats::write_session(session_, s_path);
  Json j;
  j["homography"] = h_path.string();
  j["session"] = s_path.string();
  return json_response(200, j);
}

}  // namespace planeval::serve
