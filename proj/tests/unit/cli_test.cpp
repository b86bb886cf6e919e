#include <gtest/gtest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "feedloc/bundle.hpp"
#include "feedloc/error.hpp"
#include "feedloc/simulator.hpp"
#include "feedloc_tools/commands.hpp"
#include "test_support.hpp"

namespace feedloc::tools {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kSmallSpec = R"({"num_references": 5, "image_width": 320, "image_height": 240, "focal": 262.5})";

void write_file(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  return json::parse(in);
}

class Cli : public ::testing::Test {
 protected:
  testing::TempDir dir{"cli"};
  std::ostringstream out;
  std::ostringstream err;

  fs::path spec_file(const std::string& text = kSmallSpec) {
    const fs::path p = dir.path() / ("spec" + std::to_string(counter_++) + ".json");
    write_file(p, text);
    return p;
  }

  int simulate(const fs::path& dest, std::uint64_t seed, const std::string& corruption = "{}") {
    SimulateOptions o;
    o.spec = spec_file();
    o.corruption = dir.path() / ("corruption" + std::to_string(counter_++) + ".json");
    write_file(*o.corruption, corruption);
    o.seed = seed;
    o.out = dest;
    return cmd_simulate(o, err);
  }

  int localize(const fs::path& bundle, const fs::path& dest, RunConfig cfg = {}) {
    LocalizeOptions o;
    o.bundle = bundle;
    o.out = dest;
    o.config = cfg;
    return cmd_localize(o, out, err);
  }

 private:
  int counter_ = 0;
};

TEST_F(Cli, SimulateRejectsZeroReferences) {
  SimulateOptions o;
  o.spec = spec_file(R"({"num_references": 0})");
  o.out = dir.path() / "b";
  EXPECT_EQ(cmd_simulate(o, err), kExitInput);
  EXPECT_NE(err.str().find("InvalidSpec"), std::string::npos);
}

TEST_F(Cli, SimulateRejectsMalformedCorruption) {
  EXPECT_EQ(simulate(dir.path() / "b", 1, R"({"sim_scale": 0})"), kExitInput);
  EXPECT_EQ(simulate(dir.path() / "c", 1, "not json"), kExitInput);
}

TEST_F(Cli, SimulateIsDeterministic) {
  ASSERT_EQ(simulate(dir.path() / "a", 5, R"({"keypoint_noise_sigma": 1.0})"), kExitOk);
  ASSERT_EQ(simulate(dir.path() / "b", 5, R"({"keypoint_noise_sigma": 1.0})"), kExitOk);
  EXPECT_TRUE(testing::trees_identical(dir.path() / "a", dir.path() / "b"));
  EXPECT_TRUE(fs::exists(dir.path() / "a" / "oracle.json"));
  EXPECT_EQ(cmd_validate(dir.path() / "a", out, err), kExitOk);
}

TEST_F(Cli, LocalizeNoiselessBundle) {
  ASSERT_EQ(simulate(dir.path() / "b", 3, R"({"sim_scale": 2.5})"), kExitOk);
  ASSERT_EQ(localize(dir.path() / "b", dir.path() / "out"), kExitOk) << err.str();
  const json result = read_json(dir.path() / "out" / "s3_query.json");
  const sim::OracleRecord oracle = sim::read_oracle(dir.path() / "b" / "oracle.json");
  const RigidPose pose = pose_from_row_major(result.at("pose").get<std::vector<double>>());
  EXPECT_LT((pose.center - oracle.gt_query_pose.center).norm(), 1e-4);
  EXPECT_NEAR(result.at("scale").get<double>(), 2.5, 1e-8);
}

TEST_F(Cli, LocalizeIsDeterministic) {
  ASSERT_EQ(simulate(dir.path() / "b", 4, R"({"keypoint_noise_sigma": 1.0, "pointmap_noise_sigma": 0.02})"), kExitOk);
  ASSERT_EQ(localize(dir.path() / "b", dir.path() / "o1"), kExitOk);
  ASSERT_EQ(localize(dir.path() / "b", dir.path() / "o2"), kExitOk);
  EXPECT_TRUE(testing::trees_identical(dir.path() / "o1", dir.path() / "o2"));
}

TEST_F(Cli, TriOnlyWithoutPairsFailsWhileAutoSucceeds) {
  ASSERT_EQ(simulate(dir.path() / "b", 6), kExitOk);
  RunConfig cfg;
  cfg.baseline_min = 50.0;
  cfg.baseline_max = 60.0;
  cfg.scale_mode = ScaleMode::TriOnly;
  EXPECT_EQ(localize(dir.path() / "b", dir.path() / "tri", cfg), kExitPipeline);
  EXPECT_NE(err.str().find("NoScaleAvailable"), std::string::npos);
  cfg.scale_mode = ScaleMode::Auto;
  EXPECT_EQ(localize(dir.path() / "b", dir.path() / "auto", cfg), kExitOk);
}

TEST_F(Cli, LocalizeInputErrors) {
  EXPECT_EQ(localize(dir.path() / "missing", dir.path() / "o"), kExitInput);
  RunConfig bad;
  bad.search_radius = -1.0;
  ASSERT_EQ(simulate(dir.path() / "b", 7), kExitOk);
  EXPECT_EQ(localize(dir.path() / "b", dir.path() / "o", bad), kExitInput);
  fs::remove(dir.path() / "b" / "feat" / "kp_0.f32");
  EXPECT_EQ(localize(dir.path() / "b", dir.path() / "o"), kExitInput);
}

TEST_F(Cli, ScaleModeNames) {
  EXPECT_EQ(parse_scale_mode("auto"), ScaleMode::Auto);
  EXPECT_EQ(parse_scale_mode("tri_only"), ScaleMode::TriOnly);
  EXPECT_EQ(parse_scale_mode("traj_only"), ScaleMode::TrajOnly);
  EXPECT_THROW(parse_scale_mode("both"), Error);
}

class Evaluate : public Cli {
 protected:
  void SetUp() override {
    ASSERT_EQ(simulate(dir.path() / "bundles" / "a", 1), kExitOk);
    ASSERT_EQ(simulate(dir.path() / "bundles" / "b", 2), kExitOk);
    ASSERT_EQ(localize(dir.path() / "bundles", dir.path() / "results"), kExitOk) << err.str();
  }

  json evaluate(const fs::path& gt) {
    EvaluateOptions o;
    o.results = dir.path() / "results";
    o.gt = gt;
    o.out = dir.path() / "report";
    EXPECT_EQ(cmd_evaluate(o, out, err), kExitOk) << err.str();
    return read_json(dir.path() / "report" / "report.json");
  }
};

TEST_F(Evaluate, PerfectResults) {
  const json r = evaluate(dir.path() / "bundles");
  EXPECT_EQ(r["queries"], 2);
  EXPECT_LT(r["median_translation_cm"].get<double>(), 1e-3);
  EXPECT_DOUBLE_EQ(r["recall"][0]["recall"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(r["recall"][1]["recall"].get<double>(), 1.0);
}

TEST_F(Evaluate, HalfDisplaced) {
  const fs::path f = dir.path() / "results" / "s2_query.json";
  json j = read_json(f);
  j["pose"][3] = j["pose"][3].get<double>() + 0.5;
  write_file(f, j.dump());
  const json r = evaluate(dir.path() / "bundles");
  EXPECT_DOUBLE_EQ(r["recall"][0]["recall"].get<double>(), 0.5);
  EXPECT_NEAR(r["median_translation_cm"].get<double>(), 25.0, 1e-3);
}

TEST_F(Evaluate, MissingGroundTruthIsInputError) {
  EvaluateOptions o;
  o.results = dir.path() / "results";
  o.gt = dir.path() / "bundles" / "a" / "oracle.json";
  EXPECT_EQ(cmd_evaluate(o, out, err), kExitInput);
  EXPECT_NE(err.str().find("s2_query"), std::string::npos);
}

TEST_F(Evaluate, EmptyResultsIsInputError) {
  fs::create_directories(dir.path() / "empty");
  EvaluateOptions o;
  o.results = dir.path() / "empty";
  o.gt = dir.path() / "bundles";
  EXPECT_EQ(cmd_evaluate(o, out, err), kExitInput);
}

}  // namespace
}  // namespace feedloc::tools
