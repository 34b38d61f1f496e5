#include <gtest/gtest.h>

#include <cmath>

#include <json.hpp>

#include "oracles.hpp"
#include "planeval/errors.hpp"
#include "planeval/formats.hpp"
#include "temp_dir.hpp"

using namespace planeval;
using namespace planeval::formats;

namespace {

template <class Fn>
Error error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected an error";
  return Error(ErrorCode::InvalidArgument, "");
}

CalibrationSession random_session(oracle::Rng& rng) {
  CalibrationSession s("img_" + std::to_string(rng.integer(0, 99)), rng.uniform(0.5, 3.0));
  const auto n = rng.integer(0, 12);
  for (long i = 0; i < n; ++i) {
    s.add_point({{rng.uniform(0, 1280), rng.uniform(0, 720)},
                 {rng.uniform(-20, 20), rng.uniform(0, 80)}});
  }
  if (rng.coin()) s.set_intrinsics(Intrinsics{rng.uniform(300, 2000), rng.uniform(300, 2000),
                                              rng.uniform(0, 1280), rng.uniform(0, 720)});
  if (rng.coin()) s.set_vanishing_point(VanishingPoint{rng.uniform(0, 1280), rng.uniform(-50, 400)});
  return s;
}

}  // namespace

TEST(Formats, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_6g(3.14159265), "3.14159");
  EXPECT_EQ(round_6g(2.718281828), 2.71828);
  oracle::Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal(1e3) * std::pow(10.0, rng.integer(-10, 10));
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Formats, HomographyRoundTripAndRescaledInput) {
  oracle::Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Matrix3d m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = rng.uniform(-2, 2);
    m(2, 2) += 3.0;
    const HomographyFile f{Homography(m, rng.uniform(1, 3)), "cam"};
    const std::string text = encode_homography(f);
    const HomographyFile back = decode_homography(text);
    EXPECT_EQ(back.homography.matrix(), f.homography.matrix());
    EXPECT_EQ(back.homography.camera_height_m(), f.homography.camera_height_m());
    EXPECT_EQ(back.camera_id, "cam");
    EXPECT_EQ(encode_homography(back), text);

    // any nonzero scale is accepted
    auto j = nlohmann::json::parse(text);
    for (auto& row : j["matrix"]) {
      for (auto& x : row) x = x.get<double>() * -7.5;
    }
    const HomographyFile scaled = decode_homography(j.dump());
    EXPECT_LT((scaled.homography.matrix() - f.homography.matrix()).norm(), 1e-12);
  }
  const auto j = nlohmann::json::parse(encode_homography(
      {Homography(Eigen::Matrix3d::Identity(), 1.5), "base"}));
  EXPECT_EQ(j["units"], "meters");
  EXPECT_EQ(j["camera_height_m"], 1.5);
}

TEST(Formats, HomographyErrors) {
  EXPECT_EQ(error_of([] { decode_homography("{"); }).code(), ErrorCode::ParseError);
  EXPECT_EQ(error_of([] { decode_homography(R"({"matrix": [[1,0,0],[0,1,0]], "camera_height_m": 1})"); })
                .code(),
            ErrorCode::ParseError);
  EXPECT_EQ(error_of([] {
              decode_homography(
                  R"({"matrix": [[1,0,0],[0,1,0],[0,0,1]], "camera_height_m": 1, "units": "feet"})");
            }).code(),
            ErrorCode::ParseError);
  EXPECT_EQ(error_of([] {
              decode_homography(R"({"matrix": [[0,0,0],[0,0,0],[0,0,0]], "camera_height_m": 1})");
            }).code(),
            ErrorCode::InvalidArgument);
}

TEST(Formats, SessionRoundTrip) {
  oracle::Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const CalibrationSession s = random_session(rng);
    const std::string text = encode_session(s);
    const CalibrationSession back = decode_session(text);
    EXPECT_EQ(back, s);
    EXPECT_EQ(encode_session(back), text);
  }
  EXPECT_EQ(error_of([] { decode_session(R"({"image_id": "x"})"); }).code(), ErrorCode::ParseError);
}

TEST(Formats, DetectionsRoundTripWithReasons) {
  oracle::Rng rng(4);
  std::vector<DetectionRecord> records;
  for (int i = 0; i < 50; ++i) {
    const double x = rng.uniform(0, 1000);
    const double y = rng.uniform(0, 600);
    std::optional<std::string> id;
    if (rng.coin()) id = "o" + std::to_string(i);
    std::optional<RejectReason> reason;
    if (rng.coin()) reason = static_cast<RejectReason>(rng.integer(0, 3));
    records.push_back({Detection(static_cast<ObjectClass>(rng.integer(0, 5)),
                                 {x, y, x + rng.uniform(1, 99), y + rng.uniform(1, 99)},
                                 rng.uniform(0, 1), "f" + std::to_string(i % 7), id),
                       reason});
  }
  const std::string text = encode_detections(records);
  const auto back = decode_detections(text);
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].detection, records[i].detection);
    EXPECT_EQ(back[i].reject_reason, records[i].reject_reason);
  }
  EXPECT_EQ(encode_detections(back), text);
}

TEST(Formats, DetectionErrorsNameTheLine) {
  const std::string good =
      R"({"frame_id": "a", "cls": "car", "box": [0, 0, 10, 10], "confidence": 0.9})";
  const Error bad_cls = error_of([&] {
    decode_detections(good + "\n\n" +
                      R"({"frame_id": "a", "cls": "tank", "box": [0, 0, 10, 10], "confidence": 0.9})");
  });
  EXPECT_EQ(bad_cls.code(), ErrorCode::ParseError);
  EXPECT_NE(std::string(bad_cls.what()).find("line 3"), std::string::npos) << bad_cls.what();
  const Error bad_box = error_of([&] {
    decode_detections(R"({"frame_id": "a", "cls": "car", "box": [10, 0, 0, 10], "confidence": 0.9})");
  });
  EXPECT_EQ(bad_box.code(), ErrorCode::ParseError);
  EXPECT_NE(std::string(bad_box.what()).find("line 1"), std::string::npos);
  EXPECT_EQ(error_of([] { decode_detections("not json"); }).code(), ErrorCode::ParseError);
  EXPECT_EQ(decode_detections("\n\n").size(), 0u);
}

TEST(Formats, SamplesManifestPairsAndComparisons) {
  const std::vector<ObjectSample> samples{{"f1", "0", Camera::Base, 12.5, 0.051},
                                          {"f2", "3", Camera::Shifted, 7.0 / 3.0, 1e-3 / 7.0}};
  EXPECT_EQ(decode_samples(encode_samples(samples)), samples);
  EXPECT_EQ(error_of([] {
              decode_samples(R"({"frame_id":"f","viewpoint_id":"0","camera":"left","gt_m":1,"pred_raw":1})");
            }).code(),
            ErrorCode::ParseError);

  const std::vector<ManifestEntry> manifest{{"f1", "rasters/f1.pfm"}, {"f2", "/abs/f2.pfm"}};
  EXPECT_EQ(decode_manifest(encode_manifest(manifest)), manifest);

  const std::vector<PixelPair> pairs{{{1.5, 2.5}, {3.25, 4.0}}, {{100, 200}, {101, 199}}};
  const auto pb = decode_pixel_pairs(encode_pixel_pairs(pairs));
  ASSERT_EQ(pb.size(), 2u);
  EXPECT_EQ(pb[0].base, pairs[0].base);
  EXPECT_EQ(pb[1].shifted, pairs[1].shifted);

  const std::vector<ComparisonRecord> recs{{"a", 10.0, 11.0, 0.04}, {"b", 20.0, 19.5, 0.08}};
  const auto rb = decode_comparison_records(encode_comparison_records(recs));
  ASSERT_EQ(rb.size(), 2u);
  EXPECT_EQ(rb[1].object_id, "b");
  EXPECT_EQ(rb[1].reference_m, 19.5);
  EXPECT_EQ(encode_comparison_records(rb), encode_comparison_records(recs));
}

TEST(Formats, GpsCsvRoundTrip) {
  oracle::Rng rng(5);
  std::vector<GpsPoint> trace;
  for (int i = 0; i < 100; ++i) {
    std::optional<double> speed;
    if (rng.coin()) speed = rng.uniform(0, 30);
    trace.push_back({i + rng.uniform(0, 0.5), rng.uniform(-80, 80), rng.uniform(-179, 179),
                     rng.uniform(-10, 3000), speed});
  }
  const std::string text = encode_gps_csv(trace);
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,lat,lon,alt,speed");
  EXPECT_EQ(decode_gps_csv(text), trace);
  EXPECT_EQ(encode_gps_csv(decode_gps_csv(text)), text);
  const Error e = error_of([] { decode_gps_csv("t,lat,lon,alt,speed\n0,1,2,3,\n1,x,2,3,\n"); });
  EXPECT_EQ(e.code(), ErrorCode::ParseError);
  EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  EXPECT_EQ(error_of([] { decode_gps_csv("a,b\n"); }).code(), ErrorCode::ParseError);
}

TEST(Formats, ReportCsvAndJson) {
  PositionReport full;
  full.viewpoint_id = "4";
  full.abs_rel_base = 12.3456789;
  full.abs_rel_shifted = 15.0;
  full.abs_rel_delta = 2.6543211;
  full.scale_base = 250.0;
  full.scale_shifted = 260.0;
  full.scale_delta = 10.0;
  full.n_objects_base = 3;
  full.n_objects_shifted = 4;
  PositionReport half;
  half.viewpoint_id = "5";
  half.abs_rel_base = 1.0;
  half.scale_base = 2.0;
  half.n_objects_base = 1;
  const std::string csv = encode_report_csv({full, half});
  EXPECT_EQ(csv,
            "viewpoint_id,abs_rel_base,abs_rel_shifted,abs_rel_delta,scale_base,scale_shifted,"
            "scale_delta,n_base,n_shifted\n"
            "4,12.3457,15,2.65432,250,260,10,3,4\n"
            "5,1,,,2,,,1,0\n");
  const auto j = nlohmann::json::parse(encode_report_json({full, half}, {250.0, ScaleScope::Global}));
  EXPECT_EQ(j["scale"], 250.0);
  EXPECT_EQ(j["scale_scope"], "global");
  ASSERT_EQ(j["positions"].size(), 2u);
  EXPECT_TRUE(j["positions"][1]["abs_rel_shifted"].is_null());
  EXPECT_EQ(j["positions"][0]["n_shifted"], 4);
}

TEST(Formats, SceneConfigRoundTrip) {
  synth::SceneConfig cfg;
  cfg.pose.pitch_deg = 6.0;
  cfg.pose.x_m = 0.05;
  cfg.objects.push_back({ObjectClass::Truck, 1.0, 14.0, 2.5, 3.0});
  cfg.noise = synth::NoiseSpec{0.01, 0.5};
  cfg.seed = 17;
  cfg.content = synth::RasterContent::SurfaceRange;
  const std::string text = encode_scene_config(cfg);
  const auto back = decode_scene_config(text);
  EXPECT_EQ(back.pose.pitch_deg, 6.0);
  EXPECT_EQ(back.pose.x_m, 0.05);
  ASSERT_EQ(back.objects.size(), 1u);
  EXPECT_EQ(back.objects[0].cls, ObjectClass::Truck);
  EXPECT_EQ(back.seed, 17u);
  EXPECT_EQ(back.content, synth::RasterContent::SurfaceRange);
  ASSERT_TRUE(back.noise);
  EXPECT_EQ(back.noise->box_sigma_px, 0.5);
  EXPECT_EQ(encode_scene_config(back), text);
  // missing keys take defaults
  const auto defaults = decode_scene_config("{}");
  EXPECT_EQ(defaults.image.width, 1280u);
  EXPECT_EQ(defaults.calibration_points.size(), 25u);
}

TEST(Formats, FilesAndIoErrors) {
  TempDir dir;
  write_text(dir / "a.txt", "hello\n");
  EXPECT_EQ(read_text(dir / "a.txt"), "hello\n");
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "a.txt.tmp"));
  EXPECT_EQ(error_of([&] { read_text(dir / "missing.txt"); }).code(), ErrorCode::IoError);
  EXPECT_EQ(error_of([&] { write_text(dir.path() / "no" / "dir.txt", "x"); }).code(),
            ErrorCode::IoError);
  CalibrationSession s("x", 1.5);
  write_session(s, dir / "s.json");
  EXPECT_EQ(read_session(dir / "s.json"), s);
}
