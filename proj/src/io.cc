#include "gr3dkit/io.h"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gr3dkit/error.h"
#include "gr3dkit/ground_text.h"

namespace gr3dkit::io {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, path.string() + ": cannot open for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::kIoError, path.string() + ": write failed");
}

std::vector<JsonLine> parse_json_lines(std::string_view content, const std::string& source) {
  std::vector<JsonLine> out;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    const std::string_view line = content.substr(start, end - start);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        out.push_back({start, Json::parse(line)});
      } catch (const nlohmann::json::parse_error& e) {
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        throw ParseError(source, start + at, "invalid JSON");
      }
      if (!out.back().value.is_object()) {
        throw ParseError(source, start, "record is not a JSON object");
      }
    }
    start = end + 1;
  }
  return out;
}

namespace {

std::vector<double> numbers(const Json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + " must be an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> v;
  v.reserve(n);
  for (const auto& x : j) {
    if (!x.is_number()) {
      throw Error(ErrorCode::kInvalidArgument, std::string(what) + " has a non-numeric entry");
    }
    v.push_back(x.get<double>());
  }
  return v;
}

// Runs `fn` and rethrows library errors as a ParseError at `offset`.
template <class Fn>
auto at_line(const std::string& source, std::size_t offset, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(source, offset, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, offset, e.what());
  }
}

std::string required_string(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("missing string field '") + key + "'");
  }
  return j[key].get<std::string>();
}

template <class T>
std::optional<T> first_of(std::string_view text) {
  for (const auto& t : parse(text, ParseMode::kLenient)) {
    if (const auto* v = std::get_if<T>(&t.value)) return *v;
  }
  return std::nullopt;
}

}  // namespace

Json to_json(const Box2D& b) { return Json::array({b.x1, b.y1, b.x2, b.y2}); }

Json to_json(const Box3D& b) {
  return Json::array({b.center.x(), b.center.y(), b.center.z(), b.size.x(), b.size.y(),
                      b.size.z(), b.angles.pitch, b.angles.roll, b.angles.yaw});
}

Box2D box2d_from_json(const Json& j) {
  const auto v = numbers(j, 4, "box2d");
  Box2D b{v[0], v[1], v[2], v[3]};
  check_box(b);
  return b;
}

Box3D box3d_from_json(const Json& j) {
  const auto v = numbers(j, 9, "box3d");
  Box3D b;
  b.center = Vec3(v[0], v[1], v[2]);
  b.size = Vec3(v[3], v[4], v[5]);
  b.angles = {v[6], v[7], v[8]};
  check_box(b);
  return b;
}

std::vector<DetectionRecord> parse_detection_records(std::string_view content,
                                                     const std::string& source) {
  std::vector<DetectionRecord> out;
  for (const auto& line : parse_json_lines(content, source)) {
    out.push_back(at_line(source, line.offset, [&] {
      const Json& j = line.value;
      DetectionRecord r;
      r.offset = line.offset;
      r.image_id = j.contains("image_id") && j["image_id"].is_number_integer()
                       ? std::to_string(j["image_id"].get<long long>())
                       : required_string(j, "image_id");
      r.category = required_string(j, "category");
      if (j.contains("score") && !j["score"].is_null()) r.score = j["score"].get<double>();
      if (j.contains("box2d") && !j["box2d"].is_null()) r.box2d = box2d_from_json(j["box2d"]);
      if (j.contains("box3d") && !j["box3d"].is_null()) r.box3d = box3d_from_json(j["box3d"]);
      if (j.contains("ignore")) r.ignore = j["ignore"].get<bool>();
      if (j.contains("text") && j["text"].is_string()) {
        const std::string text = j["text"].get<std::string>();
        if (!r.box2d) r.box2d = first_of<Box2D>(text);
        if (!r.box3d) r.box3d = first_of<Box3D>(text);
      }
      return r;
    }));
  }
  return out;
}

namespace {

template <class BoxT>
const BoxT& require_box(const DetectionRecord& r, const std::string& source) {
  if constexpr (std::is_same_v<BoxT, Box3D>) {
    if (!r.box3d) throw ParseError(source, r.offset, "record has no box3d");
    return *r.box3d;
  } else {
    if (!r.box2d) throw ParseError(source, r.offset, "record has no box2d");
    return *r.box2d;
  }
}

template <class BoxT>
std::vector<Detection<BoxT>> to_predictions(const std::vector<DetectionRecord>& records,
                                            const std::string& source) {
  std::vector<Detection<BoxT>> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back({r.image_id, r.category, require_box<BoxT>(r, source), r.score.value_or(1.0)});
  }
  return out;
}

template <class BoxT>
std::vector<GroundTruth<BoxT>> to_ground_truth(const std::vector<DetectionRecord>& records,
                                               const std::string& source) {
  std::vector<GroundTruth<BoxT>> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back({r.image_id, r.category, require_box<BoxT>(r, source), r.ignore});
  }
  return out;
}

}  // namespace

std::vector<Detection3D> predictions_3d(const std::vector<DetectionRecord>& records,
                                        const std::string& source) {
  return to_predictions<Box3D>(records, source);
}
std::vector<GroundTruth3D> ground_truth_3d(const std::vector<DetectionRecord>& records,
                                           const std::string& source) {
  return to_ground_truth<Box3D>(records, source);
}
std::vector<Detection2D> predictions_2d(const std::vector<DetectionRecord>& records,
                                        const std::string& source) {
  return to_predictions<Box2D>(records, source);
}
std::vector<GroundTruth2D> ground_truth_2d(const std::vector<DetectionRecord>& records,
                                           const std::string& source) {
  return to_ground_truth<Box2D>(records, source);
}

std::vector<GCoTRecord> parse_gcot_records(std::string_view content, const std::string& source) {
  std::vector<GCoTRecord> out;
  for (const auto& line : parse_json_lines(content, source)) {
    out.push_back(at_line(source, line.offset, [&] {
      const Json& j = line.value;
      GCoTRecord r;
      if (!j.contains("answer_correct") || !j["answer_correct"].is_boolean()) {
        throw Error(ErrorCode::kInvalidArgument, "missing boolean field 'answer_correct'");
      }
      r.answer_correct = j["answer_correct"].get<bool>();
      if (!j.contains("gt_box")) {
        throw Error(ErrorCode::kInvalidArgument, "missing field 'gt_box'");
      }
      r.gt_box = box2d_from_json(j["gt_box"]);
      if (j.contains("predicted_box") && !j["predicted_box"].is_null()) {
        r.predicted_box = box2d_from_json(j["predicted_box"]);
      } else if (j.contains("response") && j["response"].is_string()) {
        r.predicted_box = first_of<Box2D>(j["response"].get<std::string>());
      }
      return r;
    }));
  }
  return out;
}

DepthMap load_depth_map(const std::filesystem::path& path, int width, int height,
                        const std::optional<std::filesystem::path>& mask_path, double scale) {
  if (!(scale > 0)) throw Error(ErrorCode::kInvalidArgument, "depth scale must be positive");
  const std::string raw = read_file(path);
  const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (raw.size() != count * sizeof(float)) {
    throw Error(ErrorCode::kIoError, path.string() + ": expected " +
                                         std::to_string(count * sizeof(float)) + " bytes");
  }
  std::vector<float> depth(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, raw.data() + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    float v;
    std::memcpy(&v, &bits, 4);
    depth[i] = static_cast<float>(v * scale);
  }
  std::vector<std::uint8_t> valid;
  if (mask_path) {
    const std::string m = read_file(*mask_path);
    if (m.size() != count) {
      throw Error(ErrorCode::kIoError, mask_path->string() + ": expected " +
                                           std::to_string(count) + " bytes");
    }
    valid.assign(m.begin(), m.end());
  }
  return DepthMap(width, height, std::move(depth), std::move(valid));
}

namespace {

CameraIntrinsics intrinsics_from_json(const Json& j) {
  CameraIntrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.contains("fy") ? j["fy"].get<double>() : k.fx;
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  k.cx = j.contains("cx") ? j["cx"].get<double>() : 0.5 * k.width;
  k.cy = j.contains("cy") ? j["cy"].get<double>() : 0.5 * k.height;
  check_intrinsics(k);
  return k;
}

Pose pose_from_json(const Json& j) {
  const auto r = numbers(j.at("rotation"), 9, "pose.rotation");
  const auto t = numbers(j.at("translation"), 3, "pose.translation");
  Mat3 m;
  m << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
  return {RotationMatrix::checked(m), Vec3(t[0], t[1], t[2])};
}

AnnotatedScene scene_from_json(const Json& j, const std::filesystem::path& base_dir) {
  AnnotatedScene s;
  s.image_id = required_string(j, "image_id");
  s.intrinsics = intrinsics_from_json(j.at("intrinsics"));
  if (j.contains("objects")) {
    for (const auto& o : j["objects"]) {
      SceneObject obj;
      obj.category = required_string(o, "category");
      obj.description = o.contains("description") ? o["description"].get<std::string>()
                                                  : obj.category;
      obj.box2d = box2d_from_json(o.at("box2d"));
      if (o.contains("box3d") && !o["box3d"].is_null()) obj.box3d = box3d_from_json(o["box3d"]);
      s.objects.push_back(std::move(obj));
    }
  }
  if (j.contains("depth") && !j["depth"].is_null()) {
    const Json& d = j["depth"];
    std::optional<std::filesystem::path> mask;
    if (d.contains("mask") && d["mask"].is_string()) mask = base_dir / d["mask"].get<std::string>();
    s.depth = load_depth_map(base_dir / required_string(d, "path"), s.intrinsics.width,
                             s.intrinsics.height, mask,
                             d.contains("scale") ? d["scale"].get<double>() : 1.0);
  }
  if (j.contains("pose") && !j["pose"].is_null()) s.pose = pose_from_json(j["pose"]);
  if (j.contains("reasoning") && !j["reasoning"].is_null()) {
    const Json& r = j["reasoning"];
    ReasoningText rt;
    rt.text = required_string(r, "text");
    for (const auto& m : r.at("mentions")) {
      rt.mentions.push_back({{m.at("begin").get<std::size_t>(), m.at("end").get<std::size_t>()},
                             box2d_from_json(m.at("box2d"))});
    }
    s.reasoning = std::move(rt);
  }
  check_scene(s);
  return s;
}

}  // namespace

std::vector<AnnotatedScene> parse_manifest(std::string_view content, const std::string& source,
                                           const std::filesystem::path& base_dir) {
  std::vector<AnnotatedScene> out;
  for (const auto& line : parse_json_lines(content, source)) {
    out.push_back(at_line(source, line.offset, [&] { return scene_from_json(line.value, base_dir); }));
  }
  return out;
}

std::vector<AnnotatedScene> read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path), path.string(), path.parent_path());
}

std::vector<ReplayStep> parse_replay(std::string_view content, const std::string& source) {
  std::vector<ReplayStep> out;
  for (const auto& line : parse_json_lines(content, source)) {
    out.push_back(at_line(source, line.offset, [&] {
      const Json& j = line.value;
      ReplayStep s;
      s.offset = line.offset;
      if (j.contains("chunk")) {
        s.kind = ReplayStep::Kind::kChunk;
        s.text = j["chunk"].get<std::string>();
      } else if (j.contains("ack")) {
        s.kind = ReplayStep::Kind::kAck;
        s.box = box2d_from_json(j["ack"]);
      } else if (j.contains("finish")) {
        s.kind = ReplayStep::Kind::kFinish;
      } else {
        throw Error(ErrorCode::kInvalidArgument, "replay line needs 'chunk', 'ack' or 'finish'");
      }
      return s;
    }));
  }
  return out;
}

Json to_json(const SequenceSegment& s) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TextSpan>) {
          return {{"type", "text"}, {"text", v.text}};
        } else if constexpr (std::is_same_v<T, BoxLiteral>) {
          return {{"type", "box"}, {"box", to_json(v.box)}};
        } else {
          return {{"type", "slot"},
                  {"source", v.source == RegionSource::kGroundTruth ? "ground_truth" : "predicted"},
                  {"gradient_barrier", v.gradient_barrier},
                  {"region", to_json(v.region)}};
        }
      },
      s);
}

Json to_json(std::span<const SequenceSegment> segments) {
  Json arr = Json::array();
  for (const auto& s : segments) arr.push_back(to_json(s));
  return arr;
}

Json to_json(const TrainingRecord& r) {
  Json meta = Json::object();
  for (const auto& [k, v] : r.metadata) meta[k] = v;
  return {{"image_id", r.image_id},
          {"kind", std::string(to_string(r.kind))},
          {"question", r.question},
          {"text", grounded_text(r.segments)},
          {"segments", to_json(std::span<const SequenceSegment>(r.segments))},
          {"metadata", meta}};
}

Json to_json(const Conversation& c) {
  Json turns = Json::array();
  for (const auto& t : c.turns) {
    turns.push_back({{"question", t.question},
                     {"answer", t.answer},
                     {"segments", to_json(std::span<const SequenceSegment>(t.segments))}});
  }
  return {{"id", c.id}, {"image_id", c.image_id}, {"turns", turns}};
}

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json to_json(const EvalReport& report) {
  Json per_category = Json::object();
  for (const auto& [category, aps] : report.per_category_ap) {
    Json arr = Json::array();
    for (const auto& ap : aps) arr.push_back(optional_number(ap));
    per_category[category] = {{"num_gt", report.num_gt.at(category)}, {"ap", arr}};
  }
  Json per_threshold = Json::array();
  Json counts = Json::array();
  for (std::size_t t = 0; t < report.thresholds.size(); ++t) {
    per_threshold.push_back(optional_number(report.ap_per_threshold[t]));
    counts.push_back({{"tp", report.counts[t].tp},
                      {"fp", report.counts[t].fp},
                      {"fn", report.counts[t].fn}});
  }
  return {{"thresholds", report.thresholds},
          {"map", optional_number(report.map)},
          {"ap15", optional_number(report.ap15)},
          {"ap_per_threshold", per_threshold},
          {"counts", counts},
          {"per_category", per_category},
          {"categories_without_gt", report.categories_without_gt}};
}

Json to_json(const GCoTMetrics& m) {
  return {{"count", m.count},
          {"a_acc", m.answer_accuracy},
          {"g_acc", m.grounding_accuracy},
          {"consistency", m.consistency}};
}

namespace {

std::string fixed3(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", *v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

}  // namespace

std::string format_report(const EvalReport& report, std::string_view title) {
  std::size_t name_width = 8;
  for (const auto& [c, aps] : report.per_category_ap) name_width = std::max(name_width, c.size());
  std::size_t t15 = report.thresholds.size();
  for (std::size_t t = 0; t < report.thresholds.size(); ++t) {
    if (std::abs(report.thresholds[t] - 0.15) < 1e-12) t15 = t;
  }

  std::string out(title);
  out += "\n";
  auto row = [&](std::string name, std::string gt, std::string ap15, std::string map) {
    name.resize(name_width, ' ');
    out += name + pad(std::move(gt), 8) + pad(std::move(ap15), 8) + pad(std::move(map), 8) + "\n";
  };
  row("category", "num_gt", "AP15", "mAP");
  for (const auto& [category, aps] : report.per_category_ap) {
    std::optional<double> sum;
    std::size_t n = 0;
    for (const auto& ap : aps) {
      if (ap) {
        sum = sum.value_or(0) + *ap;
        ++n;
      }
    }
    const std::optional<double> mean = n ? std::optional(*sum / n) : std::nullopt;
    row(category, std::to_string(report.num_gt.at(category)),
        t15 < aps.size() ? fixed3(aps[t15]) : "-", fixed3(mean));
  }
  row("overall", "", fixed3(report.ap15), fixed3(report.map));
  out += "\nthreshold      AP     TP     FP     FN\n";
  for (std::size_t t = 0; t < report.thresholds.size(); ++t) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%9.2f %7s %6zu %6zu %6zu\n", report.thresholds[t],
                  fixed3(report.ap_per_threshold[t]).c_str(), report.counts[t].tp,
                  report.counts[t].fp, report.counts[t].fn);
    out += buf;
  }
  for (const auto& c : report.categories_without_gt) {
    out += "warning: category '" + c + "' has predictions but no ground truth\n";
  }
  return out;
}

std::string format_gcot(const GCoTMetrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "records %zu\nA-Acc   %.4f\nG-Acc   %.4f\nConsist %.4f\n",
                m.count, m.answer_accuracy, m.grounding_accuracy, m.consistency);
  return buf;
}

}  // namespace gr3dkit::io
