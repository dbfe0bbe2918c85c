#ifndef GR3DKIT_IO_H_
#define GR3DKIT_IO_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gr3dkit/datagen.h"
#include "gr3dkit/eval.h"
#include "gr3dkit/region_protocol.h"

// Line-delimited JSON formats. Every parse failure is a ParseError naming
// the source and the byte offset of the offending line (or character, for
// JSON syntax errors).
namespace gr3dkit::io {

using Json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

struct JsonLine {
  std::size_t offset = 0;
  Json value;
};

// Blank lines are skipped.
std::vector<JsonLine> parse_json_lines(std::string_view content, const std::string& source);

Json to_json(const Box2D& b);
Json to_json(const Box3D& b);
Box2D box2d_from_json(const Json& j);
Box3D box3d_from_json(const Json& j);

// {image_id, category, score?, box2d?, box3d?, ignore?}. When a box field is
// missing but a "text" field is present, the first box of that kind found
// by a lenient parse of the text is used.
struct DetectionRecord {
  std::string image_id;
  std::string category;
  std::optional<double> score;
  std::optional<Box2D> box2d;
  std::optional<Box3D> box3d;
  bool ignore = false;
  std::size_t offset = 0;
};

std::vector<DetectionRecord> parse_detection_records(std::string_view content,
                                                     const std::string& source);

// Missing scores default to 1. Throws ParseError for records lacking the
// box kind requested.
std::vector<Detection3D> predictions_3d(const std::vector<DetectionRecord>& records,
                                        const std::string& source);
std::vector<GroundTruth3D> ground_truth_3d(const std::vector<DetectionRecord>& records,
                                           const std::string& source);
std::vector<Detection2D> predictions_2d(const std::vector<DetectionRecord>& records,
                                        const std::string& source);
std::vector<GroundTruth2D> ground_truth_2d(const std::vector<DetectionRecord>& records,
                                           const std::string& source);

// {answer_correct, gt_box, predicted_box? | response?}. A "response" is
// model output text, parsed leniently; its first 2D box is the prediction.
std::vector<GCoTRecord> parse_gcot_records(std::string_view content, const std::string& source);

// Raw little-endian float32 raster, row-major, scaled by `scale` to meters.
// The optional mask is a raw uint8 raster, nonzero = valid.
DepthMap load_depth_map(const std::filesystem::path& path, int width, int height,
                        const std::optional<std::filesystem::path>& mask_path,
                        double scale);

// Scene records; relative depth paths resolve against `base_dir`.
std::vector<AnnotatedScene> parse_manifest(std::string_view content, const std::string& source,
                                           const std::filesystem::path& base_dir);
std::vector<AnnotatedScene> read_manifest(const std::filesystem::path& path);

// Replay script for the region protocol: {"chunk": "..."}, {"ack": [x1,y1,x2,y2]}
// or {"finish": true}.
struct ReplayStep {
  enum class Kind { kChunk, kAck, kFinish };
  Kind kind = Kind::kChunk;
  std::string text;
  Box2D box;
  std::size_t offset = 0;
};

std::vector<ReplayStep> parse_replay(std::string_view content, const std::string& source);

Json to_json(const SequenceSegment& s);
Json to_json(std::span<const SequenceSegment> segments);
Json to_json(const TrainingRecord& r);
Json to_json(const Conversation& c);
Json to_json(const EvalReport& report);
Json to_json(const GCoTMetrics& m);

// Human-readable report: per-category AP15 and mAP, then per-threshold AP.
std::string format_report(const EvalReport& report, std::string_view title);
std::string format_gcot(const GCoTMetrics& m);

}  // namespace gr3dkit::io

#endif  // GR3DKIT_IO_H_
