#include "gr3dkit/region_protocol.h"

#include "gr3dkit/error.h"

namespace gr3dkit {

std::string grounded_text(std::span<const SequenceSegment> segments) {
  std::string out;
  for (const auto& s : segments) {
    if (const auto* t = std::get_if<TextSpan>(&s)) out += t->text;
    else if (const auto* b = std::get_if<BoxLiteral>(&s)) out += to_text(b->box);
  }
  return out;
}

std::vector<std::string> skeleton(std::span<const SequenceSegment> segments) {
  std::vector<std::string> out;
  out.reserve(segments.size());
  for (const auto& s : segments) {
    if (const auto* t = std::get_if<TextSpan>(&s)) out.push_back("text:" + t->text);
    else if (const auto* b = std::get_if<BoxLiteral>(&s)) out.push_back("box:" + to_text(b->box));
    else out.push_back("slot");
  }
  return out;
}

void check_layout(std::span<const SequenceSegment> segments, bool require_same_region) {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto* slot = std::get_if<RegionSlot>(&segments[i]);
    if (slot == nullptr) continue;
    const auto* lit = i > 0 ? std::get_if<BoxLiteral>(&segments[i - 1]) : nullptr;
    if (lit == nullptr) {
      throw Error(ErrorCode::kInvalidArgument, "region slot without a preceding box literal");
    }
    if (require_same_region && !(lit->box == slot->region)) {
      throw Error(ErrorCode::kInvalidArgument, "region slot differs from its box literal");
    }
    if (slot->source == RegionSource::kGroundTruth && !slot->gradient_barrier) {
      throw Error(ErrorCode::kInvalidArgument, "ground-truth slot must be a gradient barrier");
    }
  }
}

namespace {

bool is_utf8_continuation(char c) {
  return (static_cast<unsigned char>(c) & 0xC0) == 0x80;
}

}  // namespace

std::vector<SequenceSegment> build_training_sequence(std::string_view text,
                                                     std::span<const Mention> mentions) {
  std::size_t prev_end = 0;
  for (const auto& m : mentions) {
    if (m.range.begin >= m.range.end || m.range.end > text.size() ||
        m.range.begin < prev_end) {
      throw Error(ErrorCode::kInvalidMentions,
                  "mentions must be non-empty, sorted, non-overlapping and inside the text");
    }
    if ((m.range.end < text.size() && is_utf8_continuation(text[m.range.end])) ||
        is_utf8_continuation(text[m.range.begin])) {
      throw Error(ErrorCode::kInvalidMentions, "mention splits a UTF-8 sequence");
    }
    if (!m.box.valid()) {
      throw Error(ErrorCode::kInvalidMentions, "mention box is invalid");
    }
    prev_end = m.range.end;
  }
  try {
    for (const auto& t : parse(text, ParseMode::kStrict)) {
      if (!std::holds_alternative<Text>(t.value)) throw Error(ErrorCode::kParseError, "");
    }
  } catch (const Error&) {
    throw Error(ErrorCode::kInvalidMentions, "text already contains grounding markup");
  }

  std::vector<SequenceSegment> out;
  std::size_t cut = 0;
  for (const auto& m : mentions) {
    out.push_back(TextSpan{std::string(text.substr(cut, m.range.end - cut))});
    out.push_back(BoxLiteral{m.box});
    out.push_back(RegionSlot{RegionSource::kGroundTruth, true, m.box});
    cut = m.range.end;
  }
  if (cut < text.size()) out.push_back(TextSpan{std::string(text.substr(cut))});
  return out;
}

void RegionProtocol::append_text(std::string_view text) {
  if (text.empty()) return;
  if (!segments_.empty()) {
    if (auto* t = std::get_if<TextSpan>(&segments_.back())) {
      t->text += text;
      return;
    }
  }
  segments_.push_back(TextSpan{std::string(text)});
}

DecodeStep RegionProtocol::drain() {
  DecodeStep step{{}, Continue{}};
  while (!buffered_.empty()) {
    StreamEvent e = std::move(buffered_.front());
    buffered_.pop_front();
    std::optional<Box2D> pause;
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, TextDelta>) {
            append_text(v.text);
          } else if constexpr (std::is_same_v<T, BBoxCompleted>) {
            segments_.push_back(BoxLiteral{v.box});
            pause = v.box;
          } else if constexpr (std::is_same_v<T, BBox3DCompleted>) {
            append_text(to_text(v.box));
          } else if constexpr (std::is_same_v<T, PointsCompleted>) {
            append_text(to_text(std::span<const Vec3>(v.points)));
          } else if constexpr (std::is_same_v<T, MalformedSpan>) {
            append_text(v.text);
          }
        },
        e.value);
    step.events.push_back(std::move(e));
    if (pause) {
      phase_ = Phase::kAwaitingRegion;
      pending_ = *pause;
      step.action = PauseForRegion{*pause};
      return step;
    }
  }
  return step;
}

DecodeStep RegionProtocol::on_decode(std::string_view chunk) {
  if (phase_ != Phase::kGenerating) {
    throw Error(ErrorCode::kProtocolViolation,
                phase_ == Phase::kAwaitingRegion ? "decode while awaiting a region"
                                                 : "decode after finish");
  }
  for (auto& e : parser_.feed(chunk)) buffered_.push_back(std::move(e));
  return drain();
}

DecodeStep RegionProtocol::on_region_inserted(const Box2D& region) {
  if (phase_ != Phase::kAwaitingRegion) {
    throw Error(ErrorCode::kProtocolViolation, "region inserted while none was requested");
  }
  if (!(region == *pending_)) {
    throw Error(ErrorCode::kProtocolViolation, "inserted region does not match the pending box");
  }
  segments_.push_back(RegionSlot{RegionSource::kPredicted, false, region});
  pending_.reset();
  phase_ = Phase::kGenerating;
  return drain();
}

std::vector<StreamEvent> RegionProtocol::finish() {
  if (phase_ == Phase::kAwaitingRegion) {
    throw Error(ErrorCode::kProtocolViolation, "finish while awaiting a region");
  }
  if (phase_ == Phase::kFinished) return {};
  for (auto& e : parser_.finish()) buffered_.push_back(std::move(e));
  DecodeStep step = drain();
  if (phase_ == Phase::kAwaitingRegion) {
    // Cannot happen: finish() only flushes text and malformed spans.
    throw Error(ErrorCode::kProtocolViolation, "box completed at end of stream");
  }
  phase_ = Phase::kFinished;
  return std::move(step.events);
}

}  // namespace gr3dkit
