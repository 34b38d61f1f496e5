#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "temp_dir.hpp"

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  Result run(const std::string& args, const std::string& env = {}) {
    const auto out = dir_ / "stdout.txt";
    const auto err = dir_ / "stderr.txt";
    const std::string cmd = env + " '" + PLANEVAL_CLI + "' " + args + " > '" + out.string() +
                            "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  TempDir dir_;
};

}  // namespace

TEST_F(Cli, HelpListsCommandsAndFlags) {
  const Result top = run("--help");
  EXPECT_EQ(top.code, 0);
  for (const char* c : {"calibrate", "transfer", "angles", "filter", "extract", "evaluate",
                        "grid-search", "compare-gt", "gps-stats", "synth", "serve"}) {
    EXPECT_NE(top.out.find(c), std::string::npos) << c;
  }
  EXPECT_NE(top.out.find("--workers"), std::string::npos);
  const Result sub = run("grid-search --help");
  EXPECT_EQ(sub.code, 0);
  for (const char* f : {"--manifest", "--alphas", "--betas", "--scaling"}) {
    EXPECT_NE(sub.out.find(f), std::string::npos) << f;
  }
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("calibrate --out x.json").code, 2);  // missing --session
  EXPECT_EQ(run("extract --alpha abc").code, 2);
  EXPECT_EQ(run("--workers 0 angles --session s.json").code, 2);
  EXPECT_EQ(run("evaluate --samples a --bogus 1").code, 2);
}

TEST_F(Cli, DomainErrorsExitOneWithJsonLine) {
  const Result r = run("angles --session " + path("missing.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.out, "");
  EXPECT_EQ(r.err.rfind("{\"error\":\"IoError\",\"detail\":", 0), 0u) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);

  std::ofstream(path("empty.jsonl")).close();
  const Result e = run("evaluate --samples " + path("empty.jsonl"));
  EXPECT_EQ(e.code, 1);
  EXPECT_EQ(e.err.rfind("{\"error\":\"EmptyInput\"", 0), 0u) << e.err;

  const Result w = run("angles --session x", "PLANEVAL_WORKERS=abc");
  EXPECT_EQ(w.code, 1);
  EXPECT_NE(w.err.find("InvalidArgument"), std::string::npos);
}

TEST_F(Cli, SynthThenCalibrate) {
  const Result s = run("synth --out-dir " + dir_.path().string());
  ASSERT_EQ(s.code, 0) << s.err;
  const Result c = run("calibrate --session " + path("session.json") + " --out " + path("h.json"));
  ASSERT_EQ(c.code, 0) << c.err;
  std::istringstream lines(c.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "index,u,v,x,y,residual_m");
  int n = 0;
  while (std::getline(lines, line)) {
    EXPECT_LT(std::stod(line.substr(line.rfind(',') + 1)), 1e-8) << line;
    ++n;
  }
  EXPECT_GE(n, 4);
}

TEST_F(Cli, PlantedGridSearch) {
  ASSERT_EQ(run("synth --preset planted-grid --out-dir " + dir_.path().string()).code, 0);
  const Result g = run("grid-search --manifest " + path("manifest.jsonl") + " --detections " +
                       path("detections.jsonl") + " --homography " +
                       path("homography_true.json"));
  ASSERT_EQ(g.code, 0) << g.err;
  EXPECT_EQ(g.out.substr(0, g.out.find('\n')), "best: alpha=0.75 beta=75");
}

TEST_F(Cli, ConfigFileMergesWithFlagsWinning) {
  ASSERT_EQ(run("synth --out-dir " + dir_.path().string()).code, 0);
  {
    std::ofstream cfg(path("run.json"));
    cfg << "{\"session\": \"" << path("session.json") << "\", \"out\": \"" << path("from_cfg.json")
        << "\", \"camera_id\": \"cfgcam\", \"workers\": 2}";
  }
  const Result a = run("calibrate --config " + path("run.json"));
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(slurp(path("from_cfg.json")).find("\"cfgcam\""), std::string::npos);
  const Result b = run("calibrate --config " + path("run.json") + " --out " +
                       path("from_flag.json") + " --camera-id flagcam");
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_NE(slurp(path("from_flag.json")).find("\"flagcam\""), std::string::npos);

  {
    std::ofstream cfg(path("bad.json"));
    cfg << "{\"session\": \"" << path("session.json") << "\", \"nonsense\": 1}";
  }
  EXPECT_EQ(run("calibrate --out x.json --config " + path("bad.json")).code, 2);
}

TEST_F(Cli, MedianScalingToggle) {
  {
    std::ofstream in(path("cmp.jsonl"));
    in << R"({"object_id":"a","primary_m":10,"reference_m":10,"pred_raw":0.04})" << "\n"
       << R"({"object_id":"b","primary_m":20,"reference_m":22,"pred_raw":0.08})" << "\n";
  }
  const Result on = run("compare-gt --input " + path("cmp.jsonl"));
  ASSERT_EQ(on.code, 0) << on.err;
  EXPECT_NE(on.out.find("\"median_scaling\": true"), std::string::npos) << on.out;
  const Result off = run("compare-gt --no-median-scaling --input " + path("cmp.jsonl"));
  ASSERT_EQ(off.code, 0) << off.err;
  EXPECT_NE(off.out.find("\"median_scaling\": false"), std::string::npos) << off.out;
}
