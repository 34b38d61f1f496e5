#pragma once

// Request router for the calibration server. Transport independent: the
// HTTP layer hands over method, path, raw query string and body and sends
// back whatever comes out.

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>

#include "planeval/calibration.hpp"

namespace planeval::serve {

struct ImagePayload {
  std::string bytes;
  std::string media_type = "application/octet-stream";
};

struct ServerConfig {
  CalibrationSession session{"", 1.0};
  std::optional<ImagePayload> image;
  std::filesystem::path export_dir = ".";
  std::string camera_id = "base";
};

struct Request {
  std::string method;
  std::string path;
  std::string query;  // raw, without '?'
  std::string body;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Invariant: the stored fit, when present, was computed from exactly the
// current correspondences. Every mutation clears it. Mutations take an
// exclusive lock; reads share.
class SessionState {
 public:
  explicit SessionState(ServerConfig cfg);

  Response handle(const Request& req);

  CalibrationSession session() const;
  bool has_fit() const;

 private:
  Response get_session() const;
  Response get_image() const;
  Response add_point(const std::string& body);
  Response update_point(const std::string& index, const std::string& body);
  Response remove_point(const std::string& index);
  Response fit();
  Response preview(const std::string& query) const;
  Response do_export() const;

  mutable std::shared_mutex mu_;
  CalibrationSession session_;
  std::optional<SessionFit> fit_;
  std::optional<ImagePayload> image_;
  std::filesystem::path export_dir_;
  std::string camera_id_;
};

// Query string decoding (application/x-www-form-urlencoded).
std::map<std::string, std::string> parse_query(const std::string& query);

}  // namespace planeval::serve
