#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "commands.h"
#include "gr3dkit/camera.h"
#include "gr3dkit/error.h"
#include "gr3dkit/ground_text.h"
#include "gr3dkit/io.h"
#include "gr3dkit/region_protocol.h"
#include "gr3dkit/rng.h"

namespace gr3dkit::cli {
namespace {

const std::filesystem::path kFixtures = GR3DKIT_FIXTURE_DIR;

std::string fixture(const char* name) { return (kFixtures / name).string(); }

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "gr3dkit_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

struct CommandResult {
  int status;
  std::string out;
  std::string err;
};

template <class Args, class Fn>
CommandResult run(Fn fn, const Args& args) {
  std::ostringstream out, err;
  const int status = fn(args, out, err);
  return {status, out.str(), err.str()};
}

TEST(ThresholdsTest, RangeAndList) {
  EXPECT_EQ(parse_thresholds("0.05:0.50:0.05"), default_thresholds());
  EXPECT_EQ(parse_thresholds("0.25,0.5"), (std::vector<double>{0.25, 0.5}));
  EXPECT_EQ(parse_thresholds("0.1:0.3:0.1"), (std::vector<double>{0.1, 0.2, 0.3}));
  EXPECT_THROW(parse_thresholds("0.1:0.3"), Error);
  EXPECT_THROW(parse_thresholds("1.5"), Error);
  EXPECT_THROW(parse_thresholds("a,b"), Error);
}

TEST(Eval3dCommandTest, PerfectFixture) {
  EvalArgs a;
  a.pred_path = fixture("perfect_pred.jsonl");
  a.gt_path = fixture("eval4x5_gt.jsonl");
  a.out_path = scratch("perfect.json").string();
  const CommandResult r = run(cmd_eval3d, a);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("1.000"), std::string::npos) << r.out;
  const auto j = io::Json::parse(io::read_file(a.out_path));
  EXPECT_EQ(j["map"].get<double>(), 1.0);
}

TEST(Eval3dCommandTest, EmptyPredictions) {
  EvalArgs a;
  a.pred_path = fixture("empty_pred.jsonl");
  a.gt_path = fixture("eval4x5_gt.jsonl");
  a.out_path = scratch("empty.json").string();
  const CommandResult r = run(cmd_eval3d, a);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("0.000"), std::string::npos);
  EXPECT_EQ(io::Json::parse(io::read_file(a.out_path))["map"].get<double>(), 0.0);
}

TEST(Eval3dCommandTest, OracleFixture) {
  EvalArgs a;
  a.pred_path = fixture("eval4x5_pred.jsonl");
  a.gt_path = fixture("eval4x5_gt.jsonl");
  a.thresholds = "0.05:0.50:0.05";
  a.out_path = scratch("oracle.json").string();
  ASSERT_EQ(run(cmd_eval3d, a).status, 0);
  const auto got = io::Json::parse(io::read_file(a.out_path));
  const auto want = io::Json::parse(io::read_file(fixture("eval4x5_expected.json")));
  EXPECT_NEAR(got["map"].get<double>(), want["map"].get<double>(), 1e-9);
  EXPECT_NEAR(got["ap15"].get<double>(), want["ap15"].get<double>(), 1e-9);
  for (const auto& [cat, aps] : want["per_category"].items()) {
    for (std::size_t t = 0; t < aps.size(); ++t) {
      EXPECT_NEAR(got["per_category"][cat]["ap"][t].get<double>(), aps[t].get<double>(), 1e-9)
          << cat << " " << t;
    }
  }
}

TEST(Eval3dCommandTest, JobsDoNotChangeReport) {
  EvalArgs a;
  a.pred_path = fixture("eval4x5_pred.jsonl");
  a.gt_path = fixture("eval4x5_gt.jsonl");
  a.out_path = scratch("j1.json").string();
  ASSERT_EQ(run(cmd_eval3d, a).status, 0);
  EvalArgs b = a;
  b.jobs = 4;
  b.out_path = scratch("j4.json").string();
  ASSERT_EQ(run(cmd_eval3d, b).status, 0);
  EXPECT_EQ(io::read_file(a.out_path), io::read_file(b.out_path));
}

TEST(Eval3dCommandTest, ParseErrorReportsOffset) {
  EvalArgs a;
  a.pred_path = fixture("bad_pred.jsonl");
  a.gt_path = fixture("eval4x5_gt.jsonl");
  const CommandResult r = run(cmd_eval3d, a);
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find(a.pred_path), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("byte 92"), std::string::npos) << r.err;
}

TEST(Eval2dCommandTest, Perfect) {
  EvalArgs a;
  a.pred_path = fixture("perfect2d_pred.jsonl");
  a.gt_path = fixture("perfect2d_gt.jsonl");
  const CommandResult r = run(cmd_eval2d, a);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("1.000"), std::string::npos);
}

TEST(EvalGcotCommandTest, Fixtures) {
  GCoTArgs a;
  a.records_path = fixture("gcot_fixture.jsonl");
  a.out_path = scratch("gcot.json").string();
  ASSERT_EQ(run(cmd_eval_gcot, a).status, 0);
  auto j = io::Json::parse(io::read_file(a.out_path));
  EXPECT_DOUBLE_EQ(j["a_acc"].get<double>(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(j["g_acc"].get<double>(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(j["consistency"].get<double>(), 1.0 / 3.0);

  a.records_path = fixture("gcot_perfect.jsonl");
  ASSERT_EQ(run(cmd_eval_gcot, a).status, 0);
  j = io::Json::parse(io::read_file(a.out_path));
  EXPECT_EQ(j["consistency"].get<double>(), 1.0);

  a.records_path = fixture("empty_pred.jsonl");
  EXPECT_NE(run(cmd_eval_gcot, a).status, 0);
}

GenArgs gen_args(const char* kind, const std::string& out) {
  GenArgs a;
  a.manifest_path = fixture("manifest.jsonl");
  a.kind = kind;
  a.seed = 99;
  a.out_path = scratch(out).string();
  return a;
}

TEST(GenCommandTest, DeterministicAndStrictParses) {
  for (const char* kind : {"cot", "detect", "points"}) {
    GenArgs a = gen_args(kind, std::string(kind) + "_a.jsonl");
    GenArgs b = gen_args(kind, std::string(kind) + "_b.jsonl");
    b.jobs = 2;
    if (std::string(kind) != "points") a.jitter = b.jitter = "0.1,0.1";
    ASSERT_EQ(run(cmd_gen, a).status, 0) << kind;
    ASSERT_EQ(run(cmd_gen, b).status, 0) << kind;
    const std::string content = io::read_file(a.out_path);
    EXPECT_EQ(content, io::read_file(b.out_path)) << kind;
    const auto lines = io::parse_json_lines(content, a.out_path);
    ASSERT_EQ(lines.size(), 2u);
    // Sorted by image_id.
    EXPECT_EQ(lines[0].value["image_id"], "kitchen_01");
    for (const auto& l : lines) {
      EXPECT_NO_THROW(parse(l.value["text"].get<std::string>(), ParseMode::kStrict));
    }
  }
}

TEST(GenCommandTest, SeedChangesJitter) {
  GenArgs a = gen_args("detect", "seed_a.jsonl");
  GenArgs b = gen_args("detect", "seed_b.jsonl");
  a.jitter = b.jitter = "0.2,0.2";
  b.seed = 100;
  ASSERT_EQ(run(cmd_gen, a).status, 0);
  ASSERT_EQ(run(cmd_gen, b).status, 0);
  EXPECT_NE(io::read_file(a.out_path), io::read_file(b.out_path));
}

TEST(GenCommandTest, PointsWithoutDepthFails) {
  GenArgs a = gen_args("points", "nodepth.jsonl");
  a.manifest_path = fixture("manifest_nodepth.jsonl");
  const CommandResult r = run(cmd_gen, a);
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("depth"), std::string::npos) << r.err;
}

TEST(GenCommandTest, Conversations) {
  GenArgs a = gen_args("detect", "conv.jsonl");
  a.conversations = true;
  a.max_rounds = 1;
  ASSERT_EQ(run(cmd_gen, a).status, 0);
  const auto lines = io::parse_json_lines(io::read_file(a.out_path), a.out_path);
  EXPECT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0].value["turns"].size(), 1u);
}

TEST(SimulateStreamCommandTest, TwoEntitiesMatchTrainingLayout) {
  const CommandResult r = run(cmd_simulate_stream, StreamArgs{fixture("replay_two_entities.jsonl")});
  ASSERT_EQ(r.status, 0) << r.err;
  const std::string text = "The red cup sits on the wooden table.";
  const std::vector<Mention> m = {{{0, 11}, {2, 3, 10, 12}}, {{20, 36}, {0, 10, 32, 24}}};
  std::string expected;
  for (const auto& line : skeleton(build_training_sequence(text, m))) expected += line + "\n";
  EXPECT_EQ(r.out, expected);
}

TEST(SimulateStreamCommandTest, EarlyAckAndEmpty) {
  const CommandResult bad = run(cmd_simulate_stream, StreamArgs{fixture("replay_early_ack.jsonl")});
  EXPECT_NE(bad.status, 0);
  EXPECT_NE(bad.err.find("ProtocolViolation"), std::string::npos) << bad.err;
  const CommandResult empty = run(cmd_simulate_stream, StreamArgs{fixture("replay_empty.jsonl")});
  EXPECT_EQ(empty.status, 0);
  EXPECT_EQ(empty.out, "");
}

TEST(NormalizeCommandTest, Examples) {
  NormalizeArgs a;
  a.fx = 1000;
  a.width = 640;
  a.height = 480;
  auto j = io::Json::parse(run(cmd_normalize, a).out);
  EXPECT_EQ(j["scale"].get<double>(), 1.0);
  a.fx = 500;
  j = io::Json::parse(run(cmd_normalize, a).out);
  EXPECT_EQ(j["width"], 1280);
  EXPECT_EQ(j["height"], 960);
  a.fx = -1;
  EXPECT_NE(run(cmd_normalize, a).status, 0);
}

TEST(NormalizeCommandTest, AgreesWithLibrary) {
  Rng rng(71);
  for (int i = 0; i < 100; ++i) {
    NormalizeArgs a;
    a.fx = rng.uniform(100, 3000);
    a.fy = rng.uniform(100, 3000);
    a.width = 1 + static_cast<int>(rng.below(4000));
    a.height = 1 + static_cast<int>(rng.below(4000));
    const auto j = io::Json::parse(run(cmd_normalize, a).out);
    const auto n = normalize_intrinsics({a.fx, *a.fy, 0.5 * a.width, 0.5 * a.height, a.width, a.height});
    ASSERT_EQ(j["width"].get<int>(), n.width);
    ASSERT_EQ(j["height"].get<int>(), n.height);
    ASSERT_EQ(j["scale"].get<double>(), n.scale);
    ASSERT_EQ(j["fx"].get<double>(), 1000.0);
  }
}

}  // namespace
}  // namespace gr3dkit::cli
