#include "http_server.hpp"

#include <httplib.h>

namespace planeval_http {

namespace {

const char* kIndexPage = R"(<!doctype html>
<html lang="en">
<head><meta charset="utf-8"><title>planeval calibration</title></head>
<body>
<h1>planeval calibration server</h1>
<p>No UI assets were configured. Start the server with <code>--static-dir</code>
pointing at a built calibration UI, or drive the JSON API directly:</p>
<ul>
<li><code>GET /api/session</code></li>
<li><code>GET /api/image</code></li>
<li><code>POST /api/points</code>, <code>PUT /api/points/{i}</code>, <code>DELETE /api/points/{i}</code></li>
<li><code>POST /api/fit</code></li>
<li><code>GET /api/preview?u=..&amp;v=..</code></li>
<li><code>POST /api/export</code></li>
</ul>
</body>
</html>
)";

std::string query_string(const httplib::Request& req) {
  std::string out;
  for (const auto& [key, value] : req.params) {
    if (!out.empty()) out += '&';
    out += httplib::detail::encode_query_param(key) + "=" +
           httplib::detail::encode_query_param(value);
  }
  return out;
}

}  // namespace

struct Server::Impl {
  pe_server* router;
  Options opts;
  httplib::Server http;
  int bound_port = -1;

  void forward(const httplib::Request& req, httplib::Response& res) {
    int status = 500;
    char* type = nullptr;
    char* body = nullptr;
    size_t len = 0;
    const pe_status st =
        pe_server_handle(router, req.method.c_str(), req.path.c_str(), query_string(req).c_str(),
                         req.body.data(), req.body.size(), &status, &type, &body, &len);
    if (st != PE_OK) {
      res.status = 500;
      res.set_content(std::string("{\"error\":\"") + pe_status_name(st) + "\",\"detail\":\"\"}",
                      "application/json");
      return;
    }
    res.status = status;
    res.set_content(std::string(body, len), type);
    pe_string_free(type);
    pe_string_free(body);
  }
};

Server::Server(pe_server* router, Options opts) : impl_(std::make_unique<Impl>()) {
  impl_->router = router;
  impl_->opts = std::move(opts);
  auto& http = impl_->http;
  Impl* impl = impl_.get();
  const auto handler = [impl](const httplib::Request& req, httplib::Response& res) {
    impl->forward(req, res);
  };
  const char* api = R"(/api/.*)";
  http.Get(api, handler);
  http.Post(api, handler);
  http.Put(api, handler);
  http.Delete(api, handler);
  if (impl_->opts.static_dir.empty() || !http.set_mount_point("/", impl_->opts.static_dir)) {
    http.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kIndexPage, "text/html; charset=utf-8");
    });
  }
}

Server::~Server() { stop(); }

bool Server::bind() {
  auto& o = impl_->opts;
  if (o.port == 0) {
    impl_->bound_port = impl_->http.bind_to_any_port(o.host);
  } else {
    impl_->bound_port = impl_->http.bind_to_port(o.host, o.port) ? o.port : -1;
  }
  return impl_->bound_port > 0;
}

int Server::port() const { return impl_->bound_port; }

bool Server::listen() { return impl_->http.listen_after_bind(); }

void Server::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace planeval_http
