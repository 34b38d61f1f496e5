#include "planeval/planeval.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "planeval/calibration.hpp"
#include "planeval/depthraster.hpp"
#include "planeval/errors.hpp"
#include "planeval/evaluation.hpp"
#include "planeval/formats.hpp"
#include "planeval/geometry.hpp"
#include "planeval/serve_api.hpp"
#include "planeval/workflows.hpp"

struct pe_homography {
  planeval::Homography h;
};

struct pe_session {
  planeval::CalibrationSession s;
};

struct pe_raster {
  planeval::DepthRaster r;
};

struct pe_server {
  planeval::serve::SessionState state;
};

namespace {

using planeval::ErrorCode;

thread_local std::string g_detail;

pe_status status_of(ErrorCode code) {
  // Enumerators are declared in the same order.
  return static_cast<pe_status>(static_cast<int>(code) + 1);
}

template <class Fn>
pe_status guarded(Fn&& fn) {
  try {
    fn();
    g_detail.clear();
    return PE_OK;
  } catch (const planeval::Error& e) {
    g_detail = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_detail = "out of memory";
    return PE_INTERNAL;
  } catch (const std::exception& e) {
    g_detail = e.what();
    return PE_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) planeval::fail(ErrorCode::InvalidArgument, std::string(what) + " is null");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

}  // namespace

extern "C" {

const char* pe_status_name(pe_status status) {
  if (status == PE_OK) return "Ok";
  if (status == PE_INTERNAL) return "Internal";
  if (status > PE_OK && status < PE_INTERNAL) {
    return planeval::to_string(static_cast<ErrorCode>(static_cast<int>(status) - 1)).data();
  }
  return "Unknown";
}

const char* pe_last_error_detail(void) { return g_detail.c_str(); }

const char* pe_version(void) { return "0.3.0"; }

void pe_string_free(char* s) { std::free(s); }

pe_status pe_resolve_workers(long requested, unsigned* out) {
  return guarded([&] {
    require(out, "out");
    *out = planeval::workflows::resolve_workers(requested > 0 ? std::optional<long>(requested)
                                                              : std::nullopt);
  });
}

pe_status pe_homography_create(const double matrix[9], double camera_height_m,
                               pe_homography** out) {
  return guarded([&] {
    require(matrix, "matrix");
    require(out, "out");
    Eigen::Matrix3d m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = matrix[i];
    *out = new pe_homography{planeval::Homography(m, camera_height_m)};
  });
}

pe_status pe_homography_estimate(const double* image_uv, const double* plane_xy, size_t n,
                                 double camera_height_m, pe_homography** out) {
  return guarded([&] {
    require(out, "out");
    if (n > 0) {
      require(image_uv, "image_uv");
      require(plane_xy, "plane_xy");
    }
    std::vector<planeval::Correspondence> corrs(n);
    for (size_t i = 0; i < n; ++i) {
      corrs[i] = {{image_uv[2 * i], image_uv[2 * i + 1]}, {plane_xy[2 * i], plane_xy[2 * i + 1]}};
    }
    *out = new pe_homography{planeval::estimate_homography(corrs, camera_height_m)};
  });
}

pe_status pe_homography_read(const char* path, pe_homography** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new pe_homography{planeval::formats::read_homography(path).homography};
  });
}

pe_status pe_homography_write(const pe_homography* h, const char* camera_id, const char* path) {
  return guarded([&] {
    require(h, "homography");
    require(path, "path");
    planeval::formats::write_homography({h->h, camera_id ? camera_id : ""}, path);
  });
}

pe_status pe_homography_matrix(const pe_homography* h, double out[9]) {
  return guarded([&] {
    require(h, "homography");
    require(out, "out");
    for (int i = 0; i < 9; ++i) out[i] = h->h.matrix()(i / 3, i % 3);
  });
}

pe_status pe_homography_camera_height(const pe_homography* h, double* out) {
  return guarded([&] {
    require(h, "homography");
    require(out, "out");
    *out = h->h.camera_height_m();
  });
}

pe_status pe_homography_project(const pe_homography* h, double u, double v, double* x,
                                double* y) {
  return guarded([&] {
    require(h, "homography");
    require(x, "x");
    require(y, "y");
    const auto p = planeval::project(h->h, {u, v});
    *x = p.x;
    *y = p.y;
  });
}

pe_status pe_homography_ground_distance(const pe_homography* h, double u, double v,
                                        double* out) {
  return guarded([&] {
    require(h, "homography");
    require(out, "out");
    *out = planeval::ground_distance(h->h, {u, v});
  });
}

void pe_homography_free(pe_homography* h) { delete h; }

pe_status pe_session_create(const char* image_id, double camera_height_m, pe_session** out) {
  return guarded([&] {
    require(out, "out");
    *out = new pe_session{planeval::CalibrationSession(image_id ? image_id : "", camera_height_m)};
  });
}

pe_status pe_session_read(const char* path, pe_session** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new pe_session{planeval::formats::read_session(path)};
  });
}

pe_status pe_session_write(const pe_session* s, const char* path) {
  return guarded([&] {
    require(s, "session");
    require(path, "path");
    planeval::formats::write_session(s->s, path);
  });
}

pe_status pe_session_add_point(pe_session* s, double u, double v, double x, double y,
                               size_t* index) {
  return guarded([&] {
    require(s, "session");
    const size_t i = s->s.add_point({{u, v}, {x, y}});
    if (index != nullptr) *index = i;
  });
}

pe_status pe_session_remove_point(pe_session* s, size_t index) {
  return guarded([&] {
    require(s, "session");
    s->s.remove_point(index);
  });
}

pe_status pe_session_point_count(const pe_session* s, size_t* out) {
  return guarded([&] {
    require(s, "session");
    require(out, "out");
    *out = s->s.correspondences().size();
  });
}

pe_status pe_session_fit(const pe_session* s, pe_homography** out, double* residuals) {
  return guarded([&] {
    require(s, "session");
    require(out, "out");
    auto fit = planeval::fit_session(s->s);
    if (residuals != nullptr) {
      std::copy(fit.residuals_m.begin(), fit.residuals_m.end(), residuals);
    }
    *out = new pe_homography{fit.homography};
  });
}

void pe_session_free(pe_session* s) { delete s; }

pe_status pe_raster_create(size_t width, size_t height, const double* values, pe_raster** out) {
  return guarded([&] {
    require(out, "out");
    if (width * height > 0) require(values, "values");
    *out = new pe_raster{planeval::DepthRaster(
        width, height, std::vector<double>(values, values + width * height))};
  });
}

pe_status pe_raster_read_pfm(const char* path, pe_raster** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new pe_raster{planeval::read_pfm(path)};
  });
}

pe_status pe_raster_write_pfm(const pe_raster* r, const char* path) {
  return guarded([&] {
    require(r, "raster");
    require(path, "path");
    planeval::write_pfm(r->r, path);
  });
}

pe_status pe_raster_size(const pe_raster* r, size_t* width, size_t* height) {
  return guarded([&] {
    require(r, "raster");
    if (width != nullptr) *width = r->r.width();
    if (height != nullptr) *height = r->r.height();
  });
}

pe_status pe_raster_extract(const pe_raster* r, const double box[4], double alpha, double beta,
                            double* out) {
  return guarded([&] {
    require(r, "raster");
    require(box, "box");
    require(out, "out");
    const planeval::Detection d(planeval::ObjectClass::Car, {box[0], box[1], box[2], box[3]},
                                1.0, r->r.frame_id());
    *out = planeval::extract_distance(r->r, d, {alpha, beta});
  });
}

void pe_raster_free(pe_raster* r) { delete r; }

pe_status pe_abs_rel(const double* gt, const double* pred, size_t n, double* out) {
  return guarded([&] {
    require(out, "out");
    if (n > 0) {
      require(gt, "gt");
      require(pred, "pred");
    }
    *out = planeval::abs_rel({gt, n}, {pred, n});
  });
}

pe_status pe_spearman(const double* a, const double* b, size_t n, double* out) {
  return guarded([&] {
    require(out, "out");
    if (n > 0) {
      require(a, "a");
      require(b, "b");
    }
    *out = planeval::spearman({a, n}, {b, n});
  });
}

pe_status pe_run_command(const char* command, const char* config_json, char** stdout_text) {
  return guarded([&] {
    require(command, "command");
    require(stdout_text, "stdout_text");
    *stdout_text = nullptr;
    const std::string text =
        planeval::workflows::run(command, config_json != nullptr ? config_json : "");
    *stdout_text = copy_string(text);
  });
}

pe_status pe_server_create(const char* config_json, pe_server** out) {
  return guarded([&] {
    require(out, "out");
    using Json = nlohmann::json;
    Json j = Json::object();
    if (config_json != nullptr && *config_json != '\0') {
      try {
        j = Json::parse(config_json);
      } catch (const Json::exception& e) {
        planeval::fail(ErrorCode::ParseError, std::string("server configuration: ") + e.what());
      }
    }
    const auto text = [&](const char* key) -> std::optional<std::string> {
      if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
      if (!j.at(key).is_string()) {
        planeval::fail(ErrorCode::InvalidArgument, std::string(key) + " must be a string");
      }
      return j.at(key).get<std::string>();
    };
    planeval::serve::ServerConfig cfg;
    if (auto path = text("session")) {
      cfg.session = planeval::formats::read_session(*path);
    } else {
      double height = 1.0;
      if (j.contains("camera_height_m")) {
        if (!j.at("camera_height_m").is_number()) {
          planeval::fail(ErrorCode::InvalidArgument, "camera_height_m must be a number");
        }
        height = j.at("camera_height_m").get<double>();
      }
      cfg.session = planeval::CalibrationSession(text("image_id").value_or(""), height);
    }
    if (auto path = text("image")) {
      planeval::serve::ImagePayload img;
      img.bytes = planeval::formats::read_text(*path);
      if (auto type = text("image_type")) {
        img.media_type = *type;
      } else {
        const std::string ext = std::filesystem::path(*path).extension().string();
        if (ext == ".png") img.media_type = "image/png";
        if (ext == ".jpg" || ext == ".jpeg") img.media_type = "image/jpeg";
      }
      cfg.image = std::move(img);
    }
    if (auto dir = text("export_dir")) cfg.export_dir = *dir;
    if (auto id = text("camera_id")) cfg.camera_id = *id;
    *out = new pe_server{planeval::serve::SessionState(std::move(cfg))};
  });
}

pe_status pe_server_handle(pe_server* s, const char* method, const char* path, const char* query,
                           const char* body, size_t body_len, int* status, char** content_type,
                           char** response, size_t* response_len) {
  return guarded([&] {
    require(s, "server");
    require(method, "method");
    require(path, "path");
    require(status, "status");
    require(content_type, "content_type");
    require(response, "response");
    if (body_len > 0) require(body, "body");
    planeval::serve::Request req{method, path, query ? query : "",
                                 body_len > 0 ? std::string(body, body_len) : std::string()};
    const auto res = s->state.handle(req);
    char* type = copy_string(res.content_type);
    char* data = nullptr;
    try {
      data = copy_string(res.body);
    } catch (...) {
      std::free(type);
      throw;
    }
    *status = res.status;
    *content_type = type;
    *response = data;
    if (response_len != nullptr) *response_len = res.body.size();
  });
}

void pe_server_free(pe_server* s) { delete s; }

}  // extern "C"
