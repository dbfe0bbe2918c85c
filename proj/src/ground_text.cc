#include "gr3dkit/ground_text.h"

#include <array>
#include <charconv>
#include <cmath>
#include <system_error>

#include "gr3dkit/error.h"

namespace gr3dkit {

namespace {

constexpr std::string_view kOpenTags[] = {"<bbox>", "<bbox3d>", "<points3d>"};
constexpr std::string_view kCloseTags[] = {"</bbox>", "</bbox3d>", "</points3d>"};
constexpr std::size_t kMaxNumberLength = 64;

std::size_t tag_index(TagKind k) { return static_cast<std::size_t>(k); }

std::size_t arity(TagKind k) {
  switch (k) {
    case TagKind::kBox2D: return 4;
    case TagKind::kBox3D: return 9;
    case TagKind::kPoints3D: return 3;
  }
  return 0;
}

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_num_start(char c) { return is_digit(c) || c == '.' || c == '+' || c == '-'; }
bool is_num_char(char c) { return is_num_start(c) || c == 'e' || c == 'E'; }

bool parse_number(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') {
    s.remove_prefix(1);
    if (!s.empty() && (s.front() == '+' || s.front() == '-')) return false;
  }
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

// Bytes at the end of `s` that start a UTF-8 sequence not yet complete.
std::size_t incomplete_utf8_tail(std::string_view s) {
  const std::size_t n = s.size();
  for (std::size_t back = 1; back <= 4 && back <= n; ++back) {
    const auto c = static_cast<unsigned char>(s[n - back]);
    if ((c & 0xC0) == 0x80) continue;
    std::size_t need = 1;
    if ((c & 0xE0) == 0xC0) need = 2;
    else if ((c & 0xF0) == 0xE0) need = 3;
    else if ((c & 0xF8) == 0xF0) need = 4;
    return back < need ? back : 0;
  }
  return 0;
}

}  // namespace

std::vector<StreamEvent> StreamParser::feed(std::string_view chunk) {
  if (finished_) {
    throw Error(ErrorCode::kInvalidArgument, "feed() after finish()");
  }
  std::vector<StreamEvent> out;
  for (char c : chunk) {
    step(c, out);
    ++pos_;
  }
  flush_text(out, /*hold_partial_utf8=*/true);
  return out;
}

std::vector<StreamEvent> StreamParser::finish() {
  std::vector<StreamEvent> out;
  if (finished_) return out;
  if (state_ == State::kOpenTag) {
    if (text_.empty()) text_start_ = tag_start_;
    text_ += tag_;
    reset_tag();
  } else if (state_ == State::kBody || state_ == State::kCloseTag) {
    flush_text(out, false);
    emit({Malformed{"unterminated tag", tag_, pos_}, {tag_start_, pos_}}, out);
    reset_tag();
  }
  flush_text(out, false);
  finished_ = true;
  return out;
}

void StreamParser::emit(StreamEvent e, std::vector<StreamEvent>& out) {
  out.push_back(std::move(e));
}

void StreamParser::flush_text(std::vector<StreamEvent>& out, bool hold_partial_utf8) {
  if (text_.empty()) return;
  const std::size_t hold = hold_partial_utf8 ? incomplete_utf8_tail(text_) : 0;
  const std::size_t len = text_.size() - hold;
  if (len == 0) return;
  emit({TextDelta{text_.substr(0, len)}, {text_start_, text_start_ + len}}, out);
  text_.erase(0, len);
  text_start_ += len;
}

void StreamParser::reset_tag() {
  state_ = State::kText;
  tag_.clear();
  number_.clear();
  values_.clear();
  close_matched_ = 0;
  in_tuple_ = false;
}

void StreamParser::fail(std::string reason, std::vector<StreamEvent>& out) {
  flush_text(out, false);
  emit({Malformed{std::move(reason), tag_, pos_}, {tag_start_, pos_}}, out);
  reset_tag();
}

bool StreamParser::finish_number() {
  double v = 0;
  const bool ok = parse_number(number_, v);
  number_.clear();
  if (ok) values_.push_back(v);
  return ok;
}

void StreamParser::step(char c, std::vector<StreamEvent>& out) {
  switch (state_) {
    case State::kText:
      if (c == '<') {
        state_ = State::kOpenTag;
        tag_ = "<";
        tag_start_ = pos_;
      } else {
        if (text_.empty()) text_start_ = pos_;
        text_ += c;
      }
      return;

    case State::kOpenTag: {
      tag_ += c;
      for (std::size_t i = 0; i < std::size(kOpenTags); ++i) {
        if (kOpenTags[i] == tag_) {
          kind_ = static_cast<TagKind>(i);
          state_ = State::kBody;
          body_ = Body::kBeforeBracket;
          flush_text(out, false);
          emit({BBoxOpened{kind_}, {tag_start_, pos_ + 1}}, out);
          return;
        }
        if (kOpenTags[i].starts_with(tag_)) return;
      }
      // Not a tag after all: the prefix is text and `c` is scanned again.
      tag_.pop_back();
      if (text_.empty()) text_start_ = tag_start_;
      text_ += tag_;
      reset_tag();
      step(c, out);
      return;
    }

    case State::kBody:
      body_step(c, out);
      return;

    case State::kCloseTag: {
      const std::string_view expected = kCloseTags[tag_index(kind_)];
      if (c != expected[close_matched_]) {
        fail("malformed closing tag", out);
        step(c, out);
        return;
      }
      tag_ += c;
      if (++close_matched_ == expected.size()) complete(out);
      return;
    }
  }
}

void StreamParser::body_step(char c, std::vector<StreamEvent>& out) {
  const char* error = nullptr;
  const bool points = kind_ == TagKind::kPoints3D;
  switch (body_) {
    case Body::kBeforeBracket:
      if (c == '[') body_ = points ? Body::kBeforeParen : Body::kBeforeNumber;
      else if (!is_ws(c)) error = "expected '['";
      break;
    case Body::kBeforeParen:
      if (c == '(') {
        in_tuple_ = true;
        body_ = Body::kBeforeNumber;
      } else if (!is_ws(c)) {
        error = "expected '('";
      }
      break;
    case Body::kBeforeNumber:
      if (is_num_start(c)) {
        number_.assign(1, c);
        number_start_ = pos_;
        body_ = Body::kInNumber;
      } else if (!is_ws(c)) {
        error = "expected a number";
      }
      break;
    case Body::kInNumber:
      if (is_num_char(c)) {
        if (number_.size() >= kMaxNumberLength) {
          error = "number too long";
        } else {
          number_ += c;
        }
        break;
      }
      if (!finish_number()) {
        error = "non-numeric field";
        break;
      }
      body_ = Body::kAfterNumber;
      body_step(c, out);
      return;
    case Body::kAfterNumber: {
      if (is_ws(c)) break;
      const std::size_t in_group =
          points ? (values_.size() % 3 == 0 ? 3 : values_.size() % 3)
                 : values_.size();
      if (c == ',') {
        if (in_group < arity(kind_)) body_ = Body::kBeforeNumber;
        else error = points ? "point needs 3 coordinates" : "too many values";
      } else if (c == ']' && !points) {
        if (values_.size() == arity(kind_)) body_ = Body::kBeforeClose;
        else error = kind_ == TagKind::kBox2D ? "expected 4 values" : "expected 9 values";
      } else if (c == ')' && points && in_group == 3) {
        in_tuple_ = false;
        body_ = Body::kAfterTuple;
      } else {
        error = points ? "point needs 3 coordinates" : "unexpected character";
      }
      break;
    }
    case Body::kAfterTuple:
      if (c == ',') body_ = Body::kBeforeParen;
      else if (c == ']') body_ = Body::kBeforeClose;
      else if (!is_ws(c)) error = "expected ',' or ']'";
      break;
    case Body::kBeforeClose:
      if (c == '<') {
        state_ = State::kCloseTag;
        close_matched_ = 1;
      } else if (!is_ws(c)) {
        error = "expected closing tag";
      }
      break;
  }
  if (error != nullptr) {
    fail(error, out);
    step(c, out);
    return;
  }
  tag_ += c;
}

void StreamParser::complete(std::vector<StreamEvent>& out) {
  const ByteRange range{tag_start_, pos_ + 1};
  flush_text(out, false);
  switch (kind_) {
    case TagKind::kBox2D: {
      const Box2D b{values_[0], values_[1], values_[2], values_[3]};
      if (b.valid()) emit({BBoxCompleted{b}, range}, out);
      else emit({Malformed{"invalid 2D box", tag_, tag_start_}, range}, out);
      break;
    }
    case TagKind::kBox3D: {
      Box3D b;
      b.center = Vec3(values_[0], values_[1], values_[2]);
      b.size = Vec3(values_[3], values_[4], values_[5]);
      b.angles = {values_[6], values_[7], values_[8]};
      if (b.valid()) emit({BBox3DCompleted{b}, range}, out);
      else emit({Malformed{"invalid 3D box", tag_, tag_start_}, range}, out);
      break;
    }
    case TagKind::kPoints3D: {
      std::vector<Vec3> pts;
      pts.reserve(values_.size() / 3);
      for (std::size_t i = 0; i + 2 < values_.size(); i += 3) {
        pts.emplace_back(values_[i], values_[i + 1], values_[i + 2]);
      }
      emit({PointsCompleted{std::move(pts)}, range}, out);
      break;
    }
  }
  reset_tag();
}

std::vector<StreamEvent> coalesce(std::span<const StreamEvent> events) {
  std::vector<StreamEvent> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    const auto* delta = std::get_if<TextDelta>(&e.value);
    if (delta != nullptr && !out.empty()) {
      if (auto* prev = std::get_if<TextDelta>(&out.back().value);
          prev != nullptr && out.back().range.end == e.range.begin) {
        prev->text += delta->text;
        out.back().range.end = e.range.end;
        continue;
      }
    }
    out.push_back(e);
  }
  return out;
}

std::vector<GroundingToken> parse(std::string_view text, ParseMode mode) {
  StreamParser parser;
  std::vector<StreamEvent> events = parser.feed(text);
  for (auto& e : parser.finish()) events.push_back(std::move(e));

  std::vector<GroundingToken> tokens;
  for (auto& e : coalesce(events)) {
    std::visit(
        [&](auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, TextDelta>) {
            tokens.push_back({Text{std::move(v.text)}, e.range});
          } else if constexpr (std::is_same_v<T, BBoxCompleted>) {
            tokens.push_back({v.box, e.range});
          } else if constexpr (std::is_same_v<T, BBox3DCompleted>) {
            tokens.push_back({v.box, e.range});
          } else if constexpr (std::is_same_v<T, PointsCompleted>) {
            tokens.push_back({Points3D{std::move(v.points)}, e.range});
          } else if constexpr (std::is_same_v<T, MalformedSpan>) {
            if (mode == ParseMode::kStrict) throw ParseError(v.offset, v.reason);
            tokens.push_back({std::move(v), e.range});
          }
        },
        e.value);
  }
  return tokens;
}

std::string format_number(double v) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::kSerializeError, "non-finite number");
  }
  // Fixed notation, shortest digits that round-trip.
  std::array<char, 512> buf;
  const auto [ptr, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed);
  if (ec != std::errc()) {
    throw Error(ErrorCode::kSerializeError, "number formatting failed");
  }
  std::string s(buf.data(), ptr);
  if (s.find('.') == std::string::npos) s += ".0";
  return s;
}

namespace {

void append_list(std::string& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_number(values[i]);
  }
}

}  // namespace

std::string to_text(const Box2D& b) {
  if (!b.valid()) throw Error(ErrorCode::kSerializeError, "invalid 2D box");
  const double v[] = {b.x1, b.y1, b.x2, b.y2};
  std::string out = "<bbox>[";
  append_list(out, v);
  out += "]</bbox>";
  return out;
}

std::string to_text(const Box3D& b) {
  if (!b.valid()) throw Error(ErrorCode::kSerializeError, "invalid 3D box");
  const double v[] = {b.center.x(), b.center.y(), b.center.z(),
                      b.size.x(),   b.size.y(),   b.size.z(),
                      b.angles.pitch, b.angles.roll, b.angles.yaw};
  std::string out = "<bbox3d>[";
  append_list(out, v);
  out += "]</bbox3d>";
  return out;
}

std::string to_text(std::span<const Vec3> points) {
  if (points.empty()) throw Error(ErrorCode::kSerializeError, "empty point list");
  std::string out = "<points3d>[";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0) out += ", ";
    out += '(';
    const double v[] = {points[i].x(), points[i].y(), points[i].z()};
    append_list(out, v);
    out += ')';
  }
  out += "]</points3d>";
  return out;
}

namespace {

void check_text_run(const std::string& run) {
  if (run.empty()) return;
  for (const auto& t : parse(run, ParseMode::kLenient)) {
    if (!std::holds_alternative<Text>(t.value)) {
      throw Error(ErrorCode::kSerializeError, "text token contains grounding markup");
    }
  }
}

}  // namespace

std::string serialize(std::span<const GroundingToken> tokens) {
  std::string out;
  std::string run;
  for (const auto& t : tokens) {
    if (const auto* text = std::get_if<Text>(&t.value)) {
      run += text->text;
      continue;
    }
    check_text_run(run);
    out += run;
    run.clear();
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Box2D> || std::is_same_v<T, Box3D>) {
            out += to_text(v);
          } else if constexpr (std::is_same_v<T, Points3D>) {
            out += to_text(std::span<const Vec3>(v.points));
          } else if constexpr (std::is_same_v<T, Malformed>) {
            throw Error(ErrorCode::kSerializeError, "cannot serialize a malformed span");
          }
        },
        t.value);
  }
  check_text_run(run);
  out += run;
  return out;
}

std::vector<GroundingToken> semantic_content(std::span<const GroundingToken> tokens) {
  std::vector<GroundingToken> out;
  for (const auto& t : tokens) {
    const auto* text = std::get_if<Text>(&t.value);
    if (text != nullptr && text->text.empty()) continue;
    if (text != nullptr && !out.empty()) {
      if (auto* prev = std::get_if<Text>(&out.back().value)) {
        prev->text += text->text;
        continue;
      }
    }
    out.push_back({t.value, {}});
  }
  return out;
}

}  // namespace gr3dkit
