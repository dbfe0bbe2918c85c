#include "gr3dkit/datagen.h"

#include <gtest/gtest.h>

#include "gr3dkit/error.h"
#include "gr3dkit/ground_text.h"
#include "gr3dkit/rng.h"
#include "oracles.h"

namespace gr3dkit {
namespace {

AnnotatedScene make_scene(std::size_t objects, std::uint64_t seed = 1) {
  Rng rng(seed);
  AnnotatedScene s;
  s.image_id = "scene" + std::to_string(seed);
  s.intrinsics = {500, 500, 320, 240, 640, 480};
  for (std::size_t i = 0; i < objects; ++i) {
    SceneObject o;
    o.category = i % 2 ? "chair" : "table";
    o.description = "the " + o.category + " " + std::to_string(i);
    o.box2d = oracle::random_box2d(rng, 400);
    Box3D b = oracle::random_box3d(rng);
    b.center.z() += 5;
    o.box3d = b;
    s.objects.push_back(o);
  }
  return s;
}

std::string text_of(const TrainingRecord& r) { return grounded_text(r.segments); }

TEST(DetectCotTest, SingleObjectTriple) {
  const auto r = make_detect_cot(make_scene(1));
  ASSERT_EQ(r.segments.size(), 3u);
  EXPECT_TRUE(std::holds_alternative<BoxLiteral>(r.segments[0]));
  EXPECT_TRUE(std::holds_alternative<RegionSlot>(r.segments[1]));
  const auto t = parse(std::get<TextSpan>(r.segments[2]).text, ParseMode::kStrict);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<Box3D>(t[0].value));
  check_layout(r.segments);
  EXPECT_EQ(r.metadata.at("image_id"), "scene1");
}

TEST(DetectCotTest, CapAndAreaOrder) {
  const auto scene = make_scene(25);
  const auto r = make_detect_cot(scene);
  ASSERT_EQ(r.segments.size(), 60u);
  double last = INFINITY;
  for (std::size_t i = 0; i < r.segments.size(); i += 3) {
    const double area = std::get<BoxLiteral>(r.segments[i]).box.area();
    EXPECT_LE(area, last);
    last = area;
  }
  DetectOptions five;
  five.max_objects = 5;
  EXPECT_EQ(make_detect_cot(scene, five).segments.size(), 15u);
}

TEST(DetectCotTest, RoundTripRecoversBoxes) {
  const auto scene = make_scene(8, 3);
  DetectOptions raw;
  raw.canonicalize = false;
  const auto r = make_detect_cot(scene, raw);
  const auto tokens = parse(text_of(r), ParseMode::kStrict);
  const auto objects = select_objects(scene, raw);
  std::size_t k = 0;
  for (const auto& t : tokens) {
    if (const auto* b = std::get_if<Box2D>(&t.value)) {
      EXPECT_EQ(*b, objects[k]->box2d);
    } else if (const auto* b3 = std::get_if<Box3D>(&t.value)) {
      EXPECT_EQ(*b3, *objects[k]->box3d);
      ++k;
    }
  }
  EXPECT_EQ(k, objects.size());
}

TEST(DetectCotTest, CanonicalTargetsSameCorners) {
  const auto scene = make_scene(4, 5);
  const auto r = make_detect_cot(scene);
  const auto objects = select_objects(scene, {});
  std::size_t k = 0;
  for (const auto& t : parse(text_of(r), ParseMode::kStrict)) {
    const auto* b = std::get_if<Box3D>(&t.value);
    if (!b) continue;
    EXPECT_NEAR(iou3d(*b, *objects[k]->box3d), 1.0, 1e-9);
    ++k;
  }
}

TEST(DetectCotTest, NothingToGenerate) {
  auto scene = make_scene(3);
  for (auto& o : scene.objects) o.box3d.reset();
  try {
    make_detect_cot(scene);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNothingToGenerate);
  }
}

TEST(DetectCotTest, FilterIsApplied) {
  DetectOptions only_chairs;
  only_chairs.filter = [](const SceneObject& o) { return o.category == "chair"; };
  EXPECT_EQ(make_detect_cot(make_scene(6), only_chairs).segments.size(), 9u);
}

TEST(GroundedCotTest, TemplatedMentions) {
  const auto r = make_grounded_cot(make_scene(3));
  check_layout(r.segments);
  std::size_t slots = 0;
  for (const auto& s : r.segments) slots += std::holds_alternative<RegionSlot>(s);
  EXPECT_EQ(slots, 3u);
  EXPECT_NO_THROW(parse(text_of(r), ParseMode::kStrict));
}

TEST(GroundedCotTest, UsesReasoningText) {
  auto scene = make_scene(1);
  scene.reasoning = ReasoningText{"the cup is here.", {{{0, 7}, {1, 1, 5, 5}}}};
  const auto r = make_grounded_cot(scene);
  EXPECT_EQ(text_of(r), "the cup<bbox>[1.0, 1.0, 5.0, 5.0]</bbox> is here.");
}

AnnotatedScene depth_scene(float d) {
  auto s = make_scene(1);
  s.intrinsics = {100, 100, 16, 12, 32, 24};
  s.objects[0].box2d = {2, 2, 10, 10};
  s.depth = DepthMap(32, 24, std::vector<float>(32 * 24, d));
  return s;
}

TEST(PointSupervisionTest, ConstantDepthAndDeterminism) {
  const auto scene = depth_scene(3.0f);
  const Box2D region{4, 4, 20, 20};
  const auto r = make_point_supervision(scene, region, kDefaultPointsPerImage, 9);
  ASSERT_EQ(r.segments.size(), 3u);
  const auto t = parse(std::get<TextSpan>(r.segments[2]).text, ParseMode::kStrict);
  const auto& pts = std::get<Points3D>(t[0].value).points;
  ASSERT_EQ(pts.size(), 100u);
  for (const auto& p : pts) {
    EXPECT_EQ(p.z(), 3.0);
    const Vec2 uv = project(scene.intrinsics, p);
    EXPECT_GE(uv.x(), region.x1 - 0.5);
    EXPECT_LE(uv.x(), region.x2 + 0.5);
    EXPECT_GE(uv.y(), region.y1 - 0.5);
    EXPECT_LE(uv.y(), region.y2 + 0.5);
  }
  EXPECT_EQ(r, make_point_supervision(scene, region, 100, 9));
  EXPECT_NE(r, make_point_supervision(scene, region, 100, 10));
}

TEST(PointSupervisionTest, NoDepth) {
  try {
    make_point_supervision(make_scene(1), {0, 0, 10, 10}, 10, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoDepth);
  }
}

TEST(ConversationTest, CapAndSpillover) {
  const auto turns = make_detect_turns(make_scene(12));
  ASSERT_EQ(turns.size(), 12u);
  const auto three = assemble_conversation(std::span(turns).first(3));
  ASSERT_EQ(three.size(), 1u);
  EXPECT_EQ(three[0].turns.size(), 3u);
  const auto convs = assemble_conversation(turns);
  ASSERT_EQ(convs.size(), 2u);
  EXPECT_EQ(convs[0].turns.size(), 10u);
  EXPECT_EQ(convs[1].turns.size(), 2u);
  EXPECT_NE(convs[0].id, convs[1].id);
  std::string all;
  for (const auto& c : convs) {
    for (const auto& t : c.turns) all += t.answer;
  }
  EXPECT_NO_THROW(parse(all, ParseMode::kStrict));
}

TEST(AugmentTest, ZeroJitterIdentical) {
  const auto r = make_detect_cot(make_scene(4));
  EXPECT_EQ(augment_record(r, {0, 0, 5}, 640, 480), r);
}

TEST(AugmentTest, TargetsUntouchedRegionsInside) {
  const auto r = make_detect_cot(make_scene(20, 7));
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto a = augment_record(r, {0.5, 0.5, seed}, 640, 480);
    ASSERT_EQ(a.segments.size(), r.segments.size());
    check_layout(a.segments, false);
    for (std::size_t i = 0; i < a.segments.size(); ++i) {
      if (const auto* slot = std::get_if<RegionSlot>(&a.segments[i])) {
        ASSERT_TRUE(slot->region.valid());
        ASSERT_GE(slot->region.x1, 0);
        ASSERT_GE(slot->region.y1, 0);
        ASSERT_LE(slot->region.x2, 640);
        ASSERT_LE(slot->region.y2, 480);
      } else {
        ASSERT_EQ(a.segments[i], r.segments[i]);
      }
    }
    ASSERT_EQ(a.metadata.at("augmented"), "true");
  }
}

TEST(AugmentTest, RejectsPointRecords) {
  const auto r = make_point_supervision(depth_scene(1.0f), {0, 0, 8, 8}, 5, 1);
  EXPECT_THROW(augment_record(r, {0.1, 0.1, 1}, 32, 24), Error);
}

TEST(TemplateTest, BuiltinVersionAndFill) {
  const auto& t = TemplateSet::builtin();
  EXPECT_EQ(t.version, "1");
  for (const char* kind : {"cot", "detect", "detect_turn", "points", "cot_step"}) {
    EXPECT_FALSE(t.by_kind.at(kind).empty()) << kind;
  }
  SceneObject o{"mug", "the blue mug", {}, {}};
  EXPECT_EQ(fill_template("find {description} ({category})", o), "find the blue mug (mug)");
  EXPECT_EQ(&t.pick("cot", "k"), &t.pick("cot", "k"));
}

TEST(PoseTest, TargetsInReferenceFrame) {
  auto scene = make_scene(1);
  Pose pose;
  pose.translation = Vec3(0, 0, 10);
  scene.pose = pose;
  const Box3D t = target_box(scene, *scene.objects[0].box3d, false);
  EXPECT_EQ(t.center, scene.objects[0].box3d->center + pose.translation);
  EXPECT_EQ(make_detect_cot(scene).metadata.at("frame"), "reference");
}

}  // namespace
}  // namespace gr3dkit
