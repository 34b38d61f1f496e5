#pragma once

#include <memory>
#include <string>

#include "planeval/planeval.h"

namespace planeval_http {

struct Options {
  std::string host = "127.0.0.1";
  int port = 8791;  // 0 picks a free port
  std::string static_dir;  // empty serves a built-in page at /
};

// Exposes a pe_server router over HTTP. The router stays owned by the
// caller and must outlive the server.
class Server {
 public:
  Server(pe_server* router, Options opts);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Returns false when the address cannot be bound.
  bool bind();
  int port() const;
  // Blocks until stop() is called.
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace planeval_http
