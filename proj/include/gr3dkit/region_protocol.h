#ifndef GR3DKIT_REGION_PROTOCOL_H_
#define GR3DKIT_REGION_PROTOCOL_H_

#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gr3dkit/geom2d.h"
#include "gr3dkit/ground_text.h"

namespace gr3dkit {

enum class RegionSource { kGroundTruth, kPredicted };

struct TextSpan {
  std::string text;
  friend bool operator==(const TextSpan&, const TextSpan&) = default;
};

struct BoxLiteral {
  Box2D box;
  friend bool operator==(const BoxLiteral&, const BoxLiteral&) = default;
};

// Where a region token goes. `gradient_barrier` marks the token as detached
// (no gradient flows through it); ground-truth slots always carry it.
struct RegionSlot {
  RegionSource source = RegionSource::kGroundTruth;
  bool gradient_barrier = true;
  Box2D region;
  friend bool operator==(const RegionSlot&, const RegionSlot&) = default;
};

using SequenceSegment = std::variant<TextSpan, BoxLiteral, RegionSlot>;

// Fully grounded text of a layout: TextSpans verbatim, BoxLiterals
// serialized, RegionSlots contribute nothing.
std::string grounded_text(std::span<const SequenceSegment> segments);

// Layout with provenance flags stripped: "text:<...>", "box:<bbox>...", "slot".
std::vector<std::string> skeleton(std::span<const SequenceSegment> segments);

// Positional invariants: every RegionSlot directly follows a BoxLiteral
// (holding the same region when `require_same_region`), and ground-truth
// slots are gradient barriers. Throws InvalidArgument on violation.
void check_layout(std::span<const SequenceSegment> segments,
                  bool require_same_region = true);

struct Mention {
  ByteRange range;
  Box2D box;
};

// Teacher-forced layout: the text is cut at each mention's end, followed by
// the mention's BoxLiteral and a ground-truth RegionSlot. Throws
// InvalidMentions for unsorted, overlapping, empty or out-of-range mentions,
// ranges that split a UTF-8 sequence, or text that already contains markup.
std::vector<SequenceSegment> build_training_sequence(std::string_view text,
                                                     std::span<const Mention> mentions);

struct Continue {
  friend bool operator==(const Continue&, const Continue&) = default;
};
struct PauseForRegion {
  Box2D box;
  friend bool operator==(const PauseForRegion&, const PauseForRegion&) = default;
};
using ProtocolAction = std::variant<Continue, PauseForRegion>;

struct DecodeStep {
  std::vector<StreamEvent> events;
  ProtocolAction action;
};

// Inference-time region insertion. Decoded chunks go through the streaming
// parser; a completed 2D box pauses generation until the caller inserts
// the region, and anything parsed after the box is held back and replayed
// on resume so segment order matches source order.
class RegionProtocol {
 public:
  enum class Phase { kGenerating, kAwaitingRegion, kFinished };

  RegionProtocol() = default;

  // Throws ProtocolViolation unless the phase is kGenerating.
  DecodeStep on_decode(std::string_view chunk);

  // Acknowledges the pending region. Throws ProtocolViolation when no region
  // is pending or `region` differs from it. Returns what the replayed
  // buffered events produced, which may pause again.
  DecodeStep on_region_inserted(const Box2D& region);

  // End of generation; flushes the parser. Throws ProtocolViolation while a
  // region is pending.
  std::vector<StreamEvent> finish();

  Phase phase() const { return phase_; }
  std::optional<Box2D> pending_region() const { return pending_; }
  const std::vector<SequenceSegment>& segments() const { return segments_; }

 private:
  DecodeStep drain();
  void append_text(std::string_view text);

  Phase phase_ = Phase::kGenerating;
  std::optional<Box2D> pending_;
  std::vector<SequenceSegment> segments_;
  std::deque<StreamEvent> buffered_;
  StreamParser parser_;
};

}  // namespace gr3dkit

#endif  // GR3DKIT_REGION_PROTOCOL_H_
