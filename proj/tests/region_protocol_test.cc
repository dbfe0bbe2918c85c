#include "gr3dkit/region_protocol.h"

#include <gtest/gtest.h>

#include "gr3dkit/error.h"
#include "gr3dkit/rng.h"

namespace gr3dkit {
namespace {

// Feeds `text` in chunks, acknowledging every pause with the paused box.
std::vector<SequenceSegment> replay(const std::string& text, std::size_t chunk) {
  RegionProtocol protocol;
  auto handle = [&](DecodeStep step) {
    while (const auto* pause = std::get_if<PauseForRegion>(&step.action)) {
      EXPECT_EQ(protocol.phase(), RegionProtocol::Phase::kAwaitingRegion);
      step = protocol.on_region_inserted(pause->box);
    }
  };
  for (std::size_t i = 0; i < text.size(); i += chunk) {
    handle(protocol.on_decode(text.substr(i, chunk)));
  }
  protocol.finish();
  return protocol.segments();
}

TEST(BuildTrainingSequenceTest, NoMentions) {
  const auto s = build_training_sequence("the cup", {});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(std::get<TextSpan>(s[0]).text, "the cup");
}

TEST(BuildTrainingSequenceTest, MentionAtEnd) {
  const std::vector<Mention> m = {{{4, 7}, {1, 2, 3, 4}}};
  const auto s = build_training_sequence("the cup", m);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(std::get<TextSpan>(s[0]).text, "the cup");
  EXPECT_EQ(std::get<BoxLiteral>(s[1]).box, (Box2D{1, 2, 3, 4}));
  const auto& slot = std::get<RegionSlot>(s[2]);
  EXPECT_EQ(slot.source, RegionSource::kGroundTruth);
  EXPECT_TRUE(slot.gradient_barrier);
  EXPECT_EQ(slot.region, (Box2D{1, 2, 3, 4}));
  check_layout(s);
}

TEST(BuildTrainingSequenceTest, RejectsBadMentions) {
  const Box2D b{0, 0, 1, 1};
  const std::vector<Mention> overlap = {{{0, 3}, b}, {{2, 5}, b}};
  EXPECT_THROW(build_training_sequence("hello world", overlap), Error);
  const std::vector<Mention> out_of_range = {{{3, 30}, b}};
  EXPECT_THROW(build_training_sequence("hello", out_of_range), Error);
  const std::vector<Mention> split_utf8 = {{{0, 2}, b}};
  EXPECT_THROW(build_training_sequence("aé", split_utf8), Error);
  EXPECT_THROW(build_training_sequence("<bbox>[0,0,1,1]</bbox>", {}), Error);
}

TEST(CheckLayoutTest, Violations) {
  const Box2D b{0, 0, 1, 1};
  std::vector<SequenceSegment> orphan = {TextSpan{"x"}, RegionSlot{}};
  EXPECT_THROW(check_layout(orphan), Error);
  std::vector<SequenceSegment> mismatch = {BoxLiteral{b}, RegionSlot{RegionSource::kGroundTruth, true, {0, 0, 2, 2}}};
  EXPECT_THROW(check_layout(mismatch), Error);
  EXPECT_NO_THROW(check_layout(mismatch, false));
  std::vector<SequenceSegment> no_barrier = {BoxLiteral{b}, RegionSlot{RegionSource::kGroundTruth, false, b}};
  EXPECT_THROW(check_layout(no_barrier), Error);
}

TEST(ProtocolTest, PlainTextContinues) {
  RegionProtocol p;
  const auto step = p.on_decode("hello ");
  EXPECT_TRUE(std::holds_alternative<Continue>(step.action));
  EXPECT_EQ(p.phase(), RegionProtocol::Phase::kGenerating);
}

TEST(ProtocolTest, PauseAndAck) {
  RegionProtocol p;
  const auto step = p.on_decode("the cup <bbox>[1, 2, 3, 4]</bbox> is red");
  ASSERT_TRUE(std::holds_alternative<PauseForRegion>(step.action));
  EXPECT_EQ(std::get<PauseForRegion>(step.action).box, (Box2D{1, 2, 3, 4}));
  EXPECT_EQ(p.phase(), RegionProtocol::Phase::kAwaitingRegion);
  // Trailing text is held until the region is inserted.
  ASSERT_FALSE(p.segments().empty());
  EXPECT_TRUE(std::holds_alternative<BoxLiteral>(p.segments().back()));

  EXPECT_THROW(p.on_decode("more"), Error);
  EXPECT_THROW(p.finish(), Error);
  EXPECT_THROW(p.on_region_inserted({0, 0, 1, 1}), Error);

  p.on_region_inserted({1, 2, 3, 4});
  EXPECT_EQ(p.phase(), RegionProtocol::Phase::kGenerating);
  p.finish();
  const auto& s = p.segments();
  ASSERT_EQ(s.size(), 4u);
  const auto& slot = std::get<RegionSlot>(s[2]);
  EXPECT_EQ(slot.source, RegionSource::kPredicted);
  EXPECT_FALSE(slot.gradient_barrier);
  EXPECT_EQ(std::get<TextSpan>(s[3]).text, " is red");
}

TEST(ProtocolTest, AckWhileGeneratingThrows) {
  RegionProtocol p;
  EXPECT_THROW(p.on_region_inserted({0, 0, 1, 1}), Error);
}

TEST(ProtocolTest, TwoBoxesInOneChunk) {
  RegionProtocol p;
  auto step = p.on_decode("a<bbox>[0,0,1,1]</bbox>b<bbox>[0,0,2,2]</bbox>c");
  ASSERT_TRUE(std::holds_alternative<PauseForRegion>(step.action));
  step = p.on_region_inserted({0, 0, 1, 1});
  ASSERT_TRUE(std::holds_alternative<PauseForRegion>(step.action));
  EXPECT_EQ(std::get<PauseForRegion>(step.action).box, (Box2D{0, 0, 2, 2}));
  step = p.on_region_inserted({0, 0, 2, 2});
  EXPECT_TRUE(std::holds_alternative<Continue>(step.action));
  p.finish();
  EXPECT_EQ(grounded_text(p.segments()), "a<bbox>[0.0, 0.0, 1.0, 1.0]</bbox>b<bbox>[0.0, 0.0, 2.0, 2.0]</bbox>c");
}

TEST(ProtocolTest, ReplayMatchesTrainingLayout) {
  const std::string text = "the red cup is left of the chair.";
  const std::vector<Mention> m = {{{4, 11}, {10, 20, 30, 40}}, {{23, 32}, {50, 10, 90, 80}}};
  const auto train = build_training_sequence(text, m);
  const std::string response = grounded_text(train);
  for (std::size_t chunk : {1u, 2u, 3u, 5u, 8u, 13u, 1000u}) {
    const auto infer = replay(response, chunk);
    EXPECT_EQ(skeleton(infer), skeleton(train)) << chunk;
    check_layout(infer);
  }
}

TEST(ProtocolTest, NonBoxTagsStayInText) {
  const auto s = replay("p <points3d>[(1,2,3)]</points3d> q", 4);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(std::get<TextSpan>(s[0]).text, "p <points3d>[(1.0, 2.0, 3.0)]</points3d> q");
}

}  // namespace
}  // namespace gr3dkit
