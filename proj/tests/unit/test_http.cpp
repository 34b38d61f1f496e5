#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "http_server.hpp"
#include "temp_dir.hpp"

using Json = nlohmann::json;

namespace {

class Running {
 public:
  explicit Running(planeval_http::Options opts) {
    EXPECT_EQ(pe_server_create(R"({"camera_height_m": 1.5, "image_id": "cal"})", &router_), PE_OK);
    opts.port = 0;
    server_ = std::make_unique<planeval_http::Server>(router_, opts);
    EXPECT_TRUE(server_->bind());
    thread_ = std::thread([this] { server_->listen(); });
    server_->wait_until_ready();
  }
  ~Running() {
    server_->stop();
    thread_.join();
    server_.reset();
    pe_server_free(router_);
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", server_->port()); }

 private:
  pe_server* router_ = nullptr;
  std::unique_ptr<planeval_http::Server> server_;
  std::thread thread_;
};

}  // namespace

TEST(Http, ApiRoundTrip) {
  Running r({});
  auto cli = r.client();
  auto session = cli.Get("/api/session");
  ASSERT_TRUE(session);
  EXPECT_EQ(session->status, 200);
  EXPECT_EQ(Json::parse(session->body)["image_id"], "cal");

  // v = 300 + 3000 / y, u = 640 + 600 x / y
  const double pts[5][2] = {{-2, 5}, {2, 5}, {-2, 10}, {2, 10}, {0, 20}};
  for (const auto& p : pts) {
    const Json body{{"image", {640 + 600 * p[0] / p[1], 300 + 3000 / p[1]}},
                    {"plane", {p[0], p[1]}}};
    auto res = cli.Post("/api/points", body.dump(), "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 201);
  }
  auto fit = cli.Post("/api/fit", "", "application/json");
  ASSERT_TRUE(fit);
  ASSERT_EQ(fit->status, 200) << fit->body;
  EXPECT_EQ(Json::parse(fit->body)["residuals_m"].size(), 5u);

  auto preview = cli.Get("/api/preview?u=640&v=450");
  ASSERT_TRUE(preview);
  ASSERT_EQ(preview->status, 200) << preview->body;
  EXPECT_NEAR(Json::parse(preview->body)["y"].get<double>(), 20.0, 1e-9);

  auto moved = cli.Put("/api/points/4", R"({"image": [640, 400], "plane": [0, 30]})",
                       "application/json");
  ASSERT_TRUE(moved);
  EXPECT_EQ(moved->status, 200);
  auto stale = cli.Get("/api/preview?u=640&v=450");
  ASSERT_TRUE(stale);
  EXPECT_EQ(stale->status, 404);

  auto gone = cli.Delete("/api/points/9");
  ASSERT_TRUE(gone);
  EXPECT_EQ(gone->status, 404);
  EXPECT_EQ(Json::parse(gone->body)["error"], "NotFound");

  auto bad = cli.Post("/api/points", "{", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);

  auto image = cli.Get("/api/image");
  ASSERT_TRUE(image);
  EXPECT_EQ(image->status, 404);
}

TEST(Http, PlaceholderIndexWithoutStaticDir) {
  Running r({});
  auto cli = r.client();
  auto index = cli.Get("/");
  ASSERT_TRUE(index);
  EXPECT_EQ(index->status, 200);
  EXPECT_NE(index->body.find("/api/session"), std::string::npos);
}

TEST(Http, ServesStaticAssets) {
  TempDir dir;
  {
    std::ofstream(dir / "index.html") << "<html>ui</html>";
    std::ofstream(dir / "app.js") << "console.log(1);";
  }
  planeval_http::Options opts;
  opts.static_dir = dir.path().string();
  Running r(opts);
  auto cli = r.client();
  auto index = cli.Get("/");
  ASSERT_TRUE(index);
  EXPECT_EQ(index->status, 200);
  EXPECT_EQ(index->body, "<html>ui</html>");
  auto js = cli.Get("/app.js");
  ASSERT_TRUE(js);
  EXPECT_EQ(js->body, "console.log(1);");
  auto api = cli.Get("/api/session");
  ASSERT_TRUE(api);
  EXPECT_EQ(api->status, 200);
}
