#ifndef GR3DKIT_GROUND_TEXT_H_
#define GR3DKIT_GROUND_TEXT_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gr3dkit/geom2d.h"
#include "gr3dkit/geom3d.h"

// Grounding markup embedded in free text (format version 1):
//
//   bbox2d := "<bbox>["   num "," num "," num "," num "]</bbox>"
//   bbox3d := "<bbox3d>[" 9 comma-separated nums "]</bbox3d>"
//             (x_c, y_c, z_c, w, h, l, pitch, roll, yaw)
//   points := "<points3d>[" "(" num "," num "," num ")" ("," "(" ... ")")*
//             "]</points3d>"
//
// Whitespace is allowed anywhere between the opening and closing tag except
// inside numbers. Serialized numbers use the shortest round-trip decimal
// with at least one fractional digit.

namespace gr3dkit {

inline constexpr int kGroundTextFormatVersion = 1;

struct ByteRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

enum class TagKind { kBox2D, kBox3D, kPoints3D };

struct Text {
  std::string text;
  friend bool operator==(const Text&, const Text&) = default;
};

struct Points3D {
  std::vector<Vec3> points;
  friend bool operator==(const Points3D&, const Points3D&) = default;
};

// A span that failed to parse. `offset` is where the problem was detected.
struct Malformed {
  std::string reason;
  std::string text;
  std::size_t offset = 0;
  friend bool operator==(const Malformed&, const Malformed&) = default;
};

struct GroundingToken {
  std::variant<Text, Box2D, Box3D, Points3D, Malformed> value;
  ByteRange range;

  friend bool operator==(const GroundingToken&, const GroundingToken&) = default;
};

enum class ParseMode { kStrict, kLenient };

// Tokenizes `text`. Strict mode throws ParseError at the first malformed
// span; lenient mode reports it as a Malformed token. Token ranges are
// contiguous and cover the input.
std::vector<GroundingToken> parse(std::string_view text,
                                  ParseMode mode = ParseMode::kLenient);

// Canonical text. Throws SerializeError for invalid boxes, Malformed tokens,
// or text that would itself parse as markup.
std::string serialize(std::span<const GroundingToken> tokens);

std::string format_number(double v);
std::string to_text(const Box2D& b);
std::string to_text(const Box3D& b);
std::string to_text(std::span<const Vec3> points);

// Merges adjacent Text tokens and drops byte ranges; two parses with equal
// semantic content compare equal after this.
std::vector<GroundingToken> semantic_content(std::span<const GroundingToken> tokens);

// Streaming events.
struct TextDelta {
  std::string text;
  friend bool operator==(const TextDelta&, const TextDelta&) = default;
};
struct BBoxOpened {
  TagKind kind = TagKind::kBox2D;
  friend bool operator==(const BBoxOpened&, const BBoxOpened&) = default;
};
struct BBoxCompleted {
  Box2D box;
  friend bool operator==(const BBoxCompleted&, const BBoxCompleted&) = default;
};
struct BBox3DCompleted {
  Box3D box;
  friend bool operator==(const BBox3DCompleted&, const BBox3DCompleted&) = default;
};
struct PointsCompleted {
  std::vector<Vec3> points;
  friend bool operator==(const PointsCompleted&, const PointsCompleted&) = default;
};
using MalformedSpan = Malformed;

struct StreamEvent {
  std::variant<TextDelta, BBoxOpened, BBoxCompleted, BBox3DCompleted,
               PointsCompleted, MalformedSpan>
      value;
  ByteRange range;

  friend bool operator==(const StreamEvent&, const StreamEvent&) = default;
};

// Merges adjacent TextDelta events. Two event streams describe the same
// input iff their coalesced forms are equal.
std::vector<StreamEvent> coalesce(std::span<const StreamEvent> events);

// Incremental parser. Chunks may split tags, numbers and UTF-8 sequences;
// the coalesced events are independent of how the input was chunked.
// Text is released as soon as it cannot be the start of a tag; a trailing
// incomplete UTF-8 sequence is held until the next chunk.
class StreamParser {
 public:
  StreamParser() = default;

  std::vector<StreamEvent> feed(std::string_view chunk);
  // Flushes held text and reports an unterminated tag as MalformedSpan.
  std::vector<StreamEvent> finish();

  bool finished() const { return finished_; }
  bool inside_tag() const { return state_ != State::kText; }
  std::size_t offset() const { return pos_; }

 private:
  enum class State { kText, kOpenTag, kBody, kCloseTag };
  enum class Body {
    kBeforeBracket,
    kBeforeParen,
    kBeforeNumber,
    kInNumber,
    kAfterNumber,
    kAfterTuple,
    kBeforeClose,
  };

  void step(char c, std::vector<StreamEvent>& out);
  void body_step(char c, std::vector<StreamEvent>& out);
  bool finish_number();
  void fail(std::string reason, std::vector<StreamEvent>& out);
  void complete(std::vector<StreamEvent>& out);
  void flush_text(std::vector<StreamEvent>& out, bool hold_partial_utf8);
  void emit(StreamEvent e, std::vector<StreamEvent>& out);
  void reset_tag();

  State state_ = State::kText;
  Body body_ = Body::kBeforeBracket;
  TagKind kind_ = TagKind::kBox2D;
  std::size_t pos_ = 0;

  std::string text_;
  std::size_t text_start_ = 0;

  std::string tag_;
  std::size_t tag_start_ = 0;
  std::string number_;
  std::size_t number_start_ = 0;
  std::vector<double> values_;
  std::size_t close_matched_ = 0;
  bool in_tuple_ = false;
  bool finished_ = false;
};

}  // namespace gr3dkit

#endif  // GR3DKIT_GROUND_TEXT_H_
