#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "glips/cli.hpp"
#include "glips/image_io.hpp"
#include "test_support.hpp"

using glips::testing::TempDir;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "glips");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = glips::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Sets GLIPS_MODEL for the lifetime of the guard.
struct EnvGuard {
  explicit EnvGuard(const std::string& v) { setenv(glips::cli::kModelEnvVar, v.c_str(), 1); }
  ~EnvGuard() { unsetenv(glips::cli::kModelEnvVar); }
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    a_ = (dir_ / "a.png").string();
    b_ = (dir_ / "b.png").string();
    glips::encode_png(glips::testing::pattern_image(224, 224, 1), a_);
    glips::encode_png(glips::testing::pattern_image(224, 224, 2), b_);
  }
  TempDir dir_{"cli"};
  std::string a_, b_;
};

}  // namespace

TEST_F(CliTest, RescaleSsimMidBin) {
  const auto r = run({"rescale", "--metric", "SSIM", "--value", "0.45", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["score"].get<double>(), 3.55, 1e-9);
  EXPECT_EQ(j["label"], "SomewhatAgree");

  const auto ex = run({"rescale", "--metric", "SSIM", "--value", "0.45", "--explain"});
  ASSERT_EQ(ex.code, 0);
  EXPECT_NE(ex.out.find("score: 3.55"), std::string::npos) << ex.out;
  EXPECT_NE(ex.out.find("unit-slope"), std::string::npos);
  EXPECT_NE(ex.out.find("3.6"), std::string::npos);
}

TEST_F(CliTest, ScoreMetrics) {
  const auto g = run({"score", a_, b_, "--format", "json"});
  ASSERT_EQ(g.code, 0) << g.err;
  const auto j = json::parse(g.out);
  EXPECT_EQ(j["metric"], "GLIPS");
  EXPECT_TRUE(j["components"].contains("s1"));
  EXPECT_EQ(j["components"]["kernel"]["family"], "rbf");

  const auto same = run({"score", a_, a_, "--metric", "psnr", "--format", "json"});
  ASSERT_EQ(same.code, 0) << same.err;
  const auto js = json::parse(same.out);
  EXPECT_TRUE(js["rescaled"].is_null());

  for (const char* m : {"ssim", "ms-ssim", "fid", "kid"}) {
    const auto r = run({"score", a_, b_, "--metric", m});
    EXPECT_EQ(r.code, 0) << m << ": " << r.err;
    EXPECT_NE(r.out.find("rescaled: "), std::string::npos);
  }
}

TEST_F(CliTest, GlipsFlagsReachTheScore) {
  const auto base = json::parse(run({"score", a_, b_, "--format", "json"}).out);
  const auto poly =
      json::parse(run({"score", a_, b_, "--format", "json", "--kernel", "polynomial", "--degree", "2"}).out);
  EXPECT_EQ(poly["components"]["kernel"]["family"], "polynomial");
  EXPECT_EQ(poly["components"]["kernel"]["d"], 2);
  const auto l0 = json::parse(run({"score", a_, b_, "--format", "json", "--lambda", "0"}).out);
  EXPECT_NEAR(l0["actual"].get<double>(), std::min(1.0, base["components"]["s2"].get<double>()), 1e-12);
}

TEST_F(CliTest, ModelPrecedence) {
  const auto cfg = (dir_ / "cfg.json").string();
  glips::testing::write_text(cfg, R"({"model": "fixture:2", "glips": {"lambda": 0.54}})");
  const auto flag1 = run({"score", a_, b_, "--model", "fixture:1", "--lambda", "0.54"});
  const auto cfg_flag1 = run({"score", a_, b_, "--config", cfg, "--model", "fixture:1"});
  const auto cfg_only = run({"score", a_, b_, "--config", cfg});
  const auto flag2 = run({"score", a_, b_, "--model", "fixture:2", "--lambda", "0.54"});
  EXPECT_EQ(cfg_flag1.out, flag1.out);
  EXPECT_EQ(cfg_only.out, flag2.out);
  EXPECT_NE(flag1.out, flag2.out);

  EnvGuard env((dir_ / "missing_manifest.json").string());
  EXPECT_EQ(run({"score", a_, b_}).code, glips::cli::BackendError);
  EXPECT_EQ(run({"score", a_, b_, "--config", cfg}).code, 0);
  EXPECT_EQ(run({"score", a_, b_, "--model", "fixture:0"}).code, 0);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run({}).code, glips::cli::InputError);
  EXPECT_EQ(run({"score", a_}).code, glips::cli::InputError);
  EXPECT_EQ(run({"score", a_, (dir_ / "nope.png").string()}).code, glips::cli::InputError);
  EXPECT_EQ(run({"score", a_, b_, "--metric", "lpips"}).code, glips::cli::InputError);
  EXPECT_EQ(run({"score", a_, b_, "--lambda", "2"}).code, glips::cli::InputError);
  EXPECT_EQ(run({"rescale", "--metric", "FID", "--value", "nan"}).code, glips::cli::InputError);
  EXPECT_EQ(run({"score", a_, b_, "--model", (dir_ / "none.json").string()}).code, glips::cli::BackendError);
  const auto bad_dim = (dir_ / "bad_dim.json").string();
  auto m = glips::load_manifest(glips::testing::data_path("onnx/vit_opset14.json"));
  m.feature_dim = 5;
  glips::testing::write_text(bad_dim, glips::manifest_to_json(m));
  const auto r = run({"score", a_, b_, "--model", bad_dim});
  EXPECT_EQ(r.code, glips::cli::BackendError);
  EXPECT_NE(r.err.find("ShapeMismatch"), std::string::npos) << r.err;
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, OnnxModelThroughCli) {
  const auto r = run({"score", a_, b_, "--model", glips::testing::data_path("onnx/vit_opset17.json").string(),
                      "--k", "4", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_GE(j["actual"].get<double>(), 0.0);
  EXPECT_LE(j["actual"].get<double>(), 1.0);
}

TEST_F(CliTest, EvaluateSweepInspect) {
  const auto ds = glips::testing::write_fixture_dataset(dir_.path() / "ds", 2, false, 192);
  const auto out_dir = (dir_ / "report").string();
  const auto ev = run({"evaluate", "--manifest", ds.manifest.string(), "--human", ds.humans.string(), "--metrics",
                       "glips,ssim", "--out", out_dir});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_NE(ev.out.find("GLIPS mean MAPE"), std::string::npos);
  const auto csv = glips::testing::read_text(dir_ / "report/report.csv");
  EXPECT_EQ(csv.rfind("model,metric,actual,rescaled,human,likert_metric,likert_human,mad,mape\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);

  const auto sw = run({"sweep", "--manifest", ds.manifest.string(), "--human", ds.humans.string(), "--lambdas",
                       "0,0.5,1", "--format", "json"});
  ASSERT_EQ(sw.code, 0) << sw.err;
  const auto js = json::parse(sw.out);
  EXPECT_EQ(js["rows"].size(), 3u);
  EXPECT_EQ(run({"sweep", "--manifest", ds.manifest.string(), "--human", ds.humans.string(), "--lambdas", ""}).code,
            glips::cli::InputError);

  const auto heat = (dir_ / "heat.png").string();
  const auto in = run({"inspect-attention", "--image", a_, "--top-k", "5", "--heatmap", heat});
  ASSERT_EQ(in.code, 0) << in.err;
  const auto ji = json::parse(in.out);
  EXPECT_EQ(ji["scores"].size(), 196u);
  EXPECT_EQ(ji["top_k"].size(), 5u);
  const auto png = glips::decode_image(heat);
  EXPECT_EQ(png.height(), 14u);
  EXPECT_EQ(run({"inspect-attention", "--image", a_, "--top-k", "0"}).code, glips::cli::InputError);
}

TEST(CliBinary, RunsAsAProcess) {
  TempDir dir("clibin");
  const auto out = dir / "out.txt";
  const std::string cmd = std::string("\"") + GLIPS_CLI_PATH + "\" rescale --metric FID --value 20.5 > \"" +
                          out.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  EXPECT_NE(glips::testing::read_text(out).find("score: 3.55"), std::string::npos);

  const std::string bad = std::string("\"") + GLIPS_CLI_PATH + "\" score missing1.png missing2.png > /dev/null 2>&1";
  const int bad_status = std::system(bad.c_str());
  ASSERT_TRUE(WIFEXITED(bad_status));
  EXPECT_EQ(WEXITSTATUS(bad_status), 2);
}
