#ifndef GR3DKIT_DATAGEN_H_
#define GR3DKIT_DATAGEN_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gr3dkit/camera.h"
#include "gr3dkit/geom2d.h"
#include "gr3dkit/geom3d.h"
#include "gr3dkit/region_protocol.h"

namespace gr3dkit {

struct SceneObject {
  std::string category;
  std::string description;
  Box2D box2d;
  std::optional<Box3D> box3d;
};

// Upstream reasoning text whose mentions are already linked to boxes.
struct ReasoningText {
  std::string text;
  std::vector<Mention> mentions;
};

struct AnnotatedScene {
  std::string image_id;
  CameraIntrinsics intrinsics;
  std::vector<SceneObject> objects;
  std::optional<DepthMap> depth;
  // Maps this view into the reference view; 3D outputs are expressed in
  // the reference frame when present.
  std::optional<Pose> pose;
  std::optional<ReasoningText> reasoning;
};

// Throws InvalidArgument if boxes leave the image or descriptions are empty.
void check_scene(const AnnotatedScene& scene);

enum class RecordKind { kGroundedCoT, kDetectCoT, kPointSupervision };

std::string_view to_string(RecordKind kind);

struct TrainingRecord {
  RecordKind kind = RecordKind::kGroundedCoT;
  std::string image_id;
  std::string question;
  std::vector<SequenceSegment> segments;
  std::map<std::string, std::string> metadata;

  friend bool operator==(const TrainingRecord&, const TrainingRecord&) = default;
};

// Question/step templates shipped with the library (data/question_templates_v1.txt).
struct TemplateSet {
  std::string version;
  std::map<std::string, std::vector<std::string>> by_kind;

  static const TemplateSet& builtin();
  static TemplateSet parse(std::string_view content);
  // Deterministic pick keyed by `key`.
  const std::string& pick(std::string_view kind, std::string_view key) const;
};

// Replaces {category} / {description}.
std::string fill_template(std::string_view tmpl, const SceneObject& object);

// Selection predicate for 3D-annotated objects; the default keeps all.
using ObjectFilter = std::function<bool(const SceneObject&)>;

struct DetectOptions {
  std::size_t max_objects = 20;
  ObjectFilter filter;
  bool canonicalize = true;
};

// Objects with a 3D box that pass the filter, by descending 2D area
// (stable), capped at max_objects.
std::vector<const SceneObject*> select_objects(const AnnotatedScene& scene,
                                               const DetectOptions& options);

// The 3D target as emitted: transformed to the reference frame when the
// scene has a pose, then canonicalized if requested.
Box3D target_box(const AnnotatedScene& scene, const Box3D& box, bool canonical);

// Grounded chain of thought. Uses scene.reasoning when present, otherwise
// one templated sentence per object (largest first) with the description
// as the mention.
TrainingRecord make_grounded_cot(const AnnotatedScene& scene, std::size_t max_objects = 20);

// Detect-then-lift: for each selected object, BoxLiteral(2D), a
// ground-truth RegionSlot and the serialized bbox3d target.
// Throws NothingToGenerate if no object qualifies.
TrainingRecord make_detect_cot(const AnnotatedScene& scene, const DetectOptions& options = {});

// One single-object detect record per selected object, for multi-turn
// conversations.
std::vector<TrainingRecord> make_detect_turns(const AnnotatedScene& scene,
                                              const DetectOptions& options = {});

inline constexpr std::size_t kDefaultPointsPerImage = 100;

// BoxLiteral(region), a ground-truth RegionSlot, then a points3d target of
// n points from sample_region_points(). Throws NoDepth without a depth
// map; NoValidDepth propagates.
TrainingRecord make_point_supervision(const AnnotatedScene& scene, const Box2D& region,
                                      std::size_t n, std::uint64_t seed);

struct Turn {
  std::string question;
  std::string answer;
  std::vector<SequenceSegment> segments;
};

struct Conversation {
  std::string id;
  std::string image_id;
  std::vector<Turn> turns;
};

// One record per turn, in input order, at most max_rounds turns per
// conversation; the remainder spills into further conversations.
std::vector<Conversation> assemble_conversation(std::span<const TrainingRecord> records,
                                                std::size_t max_rounds = 10);

// Jitters every RegionSlot region (slot i uses derive_seed(p.seed, i));
// BoxLiterals and targets are untouched. Throws InvalidArgument for
// point-supervision records.
TrainingRecord augment_record(const TrainingRecord& record, const JitterParams& p,
                              int image_w, int image_h);

}  // namespace gr3dkit

#endif  // GR3DKIT_DATAGEN_H_
