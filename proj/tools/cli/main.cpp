// planeval command-line tool. Parses flags (and an optional JSON config
// file), then hands a flat JSON run configuration to the library.

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "http_server.hpp"
#include "planeval/planeval.h"

namespace {

using Json = nlohmann::ordered_json;

// Flat JSON config: {"out": "h.json", "workers": 4, "alphas": [0.5, 1.0]}.
// Keys map onto the selected subcommand's flags (underscores read as
// dashes); flags given on the command line win.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    Json j = Json::object();
    for (const CLI::App* sub : app->get_subcommands()) {
      for (const CLI::Option* op : sub->get_options()) {
        if (op->get_lnames().empty() || op->get_lnames()[0] == "help") continue;
        const std::string key = op->get_lnames()[0];
        if (op->count() > 0) {
          j[key] = op->results().size() == 1 ? Json(op->results()[0]) : Json(op->results());
        } else if (default_also && !op->get_default_str().empty()) {
          j[key] = op->get_default_str();
        }
      }
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::exception& e) {
      throw CLI::ConversionError(std::string("config file: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    const auto subs = app_->get_subcommands();
    std::vector<CLI::ConfigItem> items;
    for (const auto& [raw_key, value] : j.items()) {
      std::string key = raw_key;
      std::replace(key.begin(), key.end(), '_', '-');
      CLI::ConfigItem item;
      item.name = key;
      if (app_->get_option_no_throw("--" + key) == nullptr && !subs.empty()) {
        item.parents = {subs.front()->get_name()};
      }
      const auto text = [](const Json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
      };
      if (value.is_array()) {
        for (const auto& e : value) item.inputs.push_back(text(e));
      } else if (!value.is_null()) {
        item.inputs.push_back(text(value));
      } else {
        continue;
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  const CLI::App* app_;
};

enum class Kind { Text, Number, Flag, List };

struct Flag {
  const char* name;
  Kind kind;
  const char* help;
  bool required = false;
};

struct Command {
  const char* name;
  const char* help;
  std::vector<Flag> flags;
};

const std::vector<Command>& command_table() {
  static const std::vector<Command> table = {
      {"calibrate",
       "Fit a homography to a correspondence file and report per-point residuals",
       {{"session", Kind::Text, "Correspondence set JSON", true},
        {"out", Kind::Text, "Homography JSON to write", true},
        {"residuals", Kind::Text, "Residual CSV to write (default: standard output)"},
        {"camera-id", Kind::Text, "Camera id stored in the homography file (default: base)"}}},
      {"transfer",
       "Derive a second camera's homography from paired pixels and a base homography",
       {{"base", Kind::Text, "Base camera homography JSON", true},
        {"pairs", Kind::Text, "Pixel pairs JSON", true},
        {"out", Kind::Text, "Homography JSON to write", true},
        {"camera-height", Kind::Number, "Camera height in meters (default: base height)"},
        {"camera-id", Kind::Text, "Camera id stored in the homography file (default: shifted)"}}},
      {"angles",
       "Pitch and yaw from the vanishing point and intrinsics of a session file",
       {{"session", Kind::Text, "Correspondence set JSON with intrinsics and vanishing point", true},
        {"out", Kind::Text, "JSON to write (default: standard output)"}}},
      {"filter",
       "Apply the confidence, horizon, occlusion and area filters to detections",
       {{"detections", Kind::Text, "Detections JSONL", true},
        {"out", Kind::Text, "Filtered JSONL to write (default: standard output)"},
        {"keep-rejected", Kind::Flag, "Keep rejected records, tagged with reject_reason"},
        {"min-confidence", Kind::Number, "Minimum confidence (default: 0.5)"},
        {"horizon-v", Kind::Number, "Horizon row; boxes whose lower edge is above it are dropped"},
        {"session", Kind::Text, "Take the horizon row from this session's vanishing point"},
        {"occlusion-overlap-min", Kind::Number,
         "Intersection over smaller area that counts as occlusion (default: 0)"},
        {"area", Kind::List, "Per-class minimum area, e.g. car=3000 (repeatable)"}}},
      {"extract",
       "Read predicted distances from rasters for every detection",
       {{"manifest", Kind::Text, "Raster manifest JSONL", true},
        {"detections", Kind::Text, "Filtered detections JSONL", true},
        {"homography", Kind::Text, "Homography JSON giving ground-truth distances", true},
        {"viewpoint", Kind::Text, "Viewpoint id recorded on every sample (default: 0)"},
        {"camera", Kind::Text, "base or shifted (default: base)"},
        {"alpha", Kind::Number, "Box resize fraction in (0, 1] (default: 1)"},
        {"beta", Kind::Number, "Percentile in [0, 100] (default: 50)"},
        {"out", Kind::Text, "Samples JSONL to write", true}}},
      {"evaluate",
       "Per-position abs-rel and perceived-scale report from samples",
       {{"samples", Kind::List, "Samples JSONL files", true},
        {"scale", Kind::Number, "Fixed scale factor applied to raw predictions"},
        {"scale-samples", Kind::List, "Samples to fit the global median scale on"},
        {"per-position", Kind::Flag, "Diagnostic mode: scale each position and camera by itself"},
        {"out-csv", Kind::Text, "Report CSV to write (default: standard output)"},
        {"out-json", Kind::Text, "Report JSON to write"}}},
      {"grid-search",
       "Search box resize fraction and percentile for the lowest abs-rel",
       {{"manifest", Kind::Text, "Raster manifest JSONL", true},
        {"detections", Kind::Text, "Filtered detections JSONL", true},
        {"homography", Kind::Text, "Homography JSON giving ground-truth distances", true},
        {"viewpoint", Kind::Text, "Viewpoint id (default: 0)"},
        {"camera", Kind::Text, "base or shifted (default: base)"},
        {"alphas", Kind::Text, "Comma-separated alphas (default: 0.5,0.75,1.0)"},
        {"betas", Kind::Text, "Comma-separated betas (default: 50,75,90)"},
        {"scaling", Kind::Text, "global, per_image or per_position (default: global)"},
        {"out", Kind::Text, "Table CSV to write"}}},
      {"compare-gt",
       "Compare two ground-truth sources against the same predictions",
       {{"input", Kind::Text, "Comparison JSONL", true},
        {"median-scaling", Kind::Flag,
         "Align predictions to each source by median ratio (default: on; --no-median-scaling)"},
        {"out", Kind::Text, "JSON to write (default: standard output)"}}},
      {"gps-stats",
       "Road slope statistics from GPS traces",
       {{"traces", Kind::List, "GPS CSV files", true},
        {"min-horizontal-m", Kind::Number, "Minimum horizontal displacement (default: 1)"},
        {"altitude-step-m", Kind::Number, "Altitude change threshold (default: 1)"},
        {"basis", Kind::Text, "segments or raw_points (default: segments)"},
        {"out", Kind::Text, "JSON to write (default: standard output)"}}},
      {"synth",
       "Generate an oracle scene: session, true homography, detections, raster",
       {{"config", Kind::Text, "Scene description JSON"},
        {"preset", Kind::Text, "Built-in scene: planted-grid"},
        {"seed", Kind::Number, "Seed for all noise"},
        {"out-dir", Kind::Text, "Directory to write into", true}}},
  };
  return table;
}

struct ServeFlags {
  std::string host = "127.0.0.1";
  int port = 8791;
  std::string static_dir;
  std::string session;
  std::string image;
  double camera_height = 1.0;
  std::string export_dir = ".";
  std::string camera_id = "base";
};

planeval_http::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int report_error(pe_status st) {
  Json j;
  j["error"] = pe_status_name(st);
  j["detail"] = pe_last_error_detail();
  std::cerr << j.dump() << std::endl;
  return 1;
}

int run_serve(const ServeFlags& f) {
  Json cfg;
  if (!f.session.empty()) cfg["session"] = f.session;
  if (!f.image.empty()) cfg["image"] = f.image;
  cfg["camera_height_m"] = f.camera_height;
  cfg["export_dir"] = f.export_dir;
  cfg["camera_id"] = f.camera_id;
  pe_server* router = nullptr;
  if (pe_status st = pe_server_create(cfg.dump().c_str(), &router); st != PE_OK) {
    return report_error(st);
  }
  int rc = 0;
  {
    planeval_http::Server server(router, {f.host, f.port, f.static_dir});
    if (!server.bind()) {
      std::cerr << Json{{"error", "IoError"},
                        {"detail", "cannot bind " + f.host + ":" + std::to_string(f.port)}}
                       .dump()
                << std::endl;
      rc = 1;
    } else {
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving on http://" << f.host << ":" << server.port() << std::endl;
      server.listen();
      g_server = nullptr;
    }
  }
  pe_server_free(router);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ground-plane homography toolkit for evaluating monocular depth estimators",
               "planeval"};
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON run configuration; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", pe_version());
  long workers_flag = 0;
  app.add_option("--workers", workers_flag,
                 "Worker threads for frame-level work (default: PLANEVAL_WORKERS, then all cores)")
      ->check(CLI::Range(1L, 4096L));

  std::deque<std::vector<std::string>> list_storage;
  std::map<std::string, std::vector<std::pair<std::string, CLI::Option*>>> options;
  for (const auto& cmd : command_table()) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    auto& opts = options[cmd.name];
    for (const auto& f : cmd.flags) {
      const std::string flag = std::string("--") + f.name;
      CLI::Option* op = nullptr;
      switch (f.kind) {
        case Kind::Text:
          op = sub->add_option(flag, f.help)->type_name("TEXT");
          break;
        case Kind::Number:
          op = sub->add_option(flag, f.help)->type_name("NUMBER")->check(CLI::Number);
          break;
        case Kind::Flag:
          op = std::string(f.name) == "median-scaling"
                   ? sub->add_flag(flag + ",!--no-median-scaling", f.help)
                   : sub->add_flag(flag, f.help);
          break;
        case Kind::List:
          op = sub->add_option(flag, list_storage.emplace_back(), f.help)->type_name("TEXT ...");
          break;
      }
      if (f.required) op->required();
      opts.emplace_back(f.name, op);
    }
  }

  ServeFlags serve;
  CLI::App* serve_cmd = app.add_subcommand("serve", "Run the calibration server for the browser UI");
  serve_cmd->add_option("--host", serve.host, "Address to bind (default: 127.0.0.1)");
  serve_cmd->add_option("--port", serve.port, "Port (default: 8791)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--static-dir", serve.static_dir, "Directory with UI assets served at /");
  serve_cmd->add_option("--session", serve.session, "Correspondence set to start from");
  serve_cmd->add_option("--image", serve.image, "Calibration image served at /api/image");
  serve_cmd->add_option("--camera-height", serve.camera_height,
                        "Camera height in meters for a new session (default: 1)");
  serve_cmd->add_option("--export-dir", serve.export_dir,
                        "Directory /api/export writes to (default: .)");
  serve_cmd->add_option("--camera-id", serve.camera_id, "Camera id for exported homographies");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (serve_cmd->parsed()) return run_serve(serve);

  const CLI::App* sub = app.get_subcommands().front();
  Json cfg = Json::object();
  for (const auto& [name, op] : options[sub->get_name()]) {
    if (op->count() == 0) continue;
    if (op->get_expected_min() == 0) {
      cfg[name] = op->as<bool>();
    } else if (op->get_expected_max() > 1) {
      cfg[name] = op->results();
    } else {
      cfg[name] = op->results().back();
    }
  }
  unsigned workers = 0;
  if (pe_status st = pe_resolve_workers(workers_flag, &workers); st != PE_OK) {
    return report_error(st);
  }
  cfg["workers"] = workers;

  char* text = nullptr;
  const pe_status st = pe_run_command(sub->get_name().c_str(), cfg.dump().c_str(), &text);
  if (st != PE_OK) return report_error(st);
  std::fwrite(text, 1, std::strlen(text), stdout);
  pe_string_free(text);
  return 0;
}
