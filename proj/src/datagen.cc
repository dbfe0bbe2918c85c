#include "gr3dkit/datagen.h"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "gr3dkit/error.h"
#include "gr3dkit/ground_text.h"
#include "gr3dkit/question_templates.h"
#include "gr3dkit/rng.h"

namespace gr3dkit {

std::string_view to_string(RecordKind kind) {
  switch (kind) {
    case RecordKind::kGroundedCoT: return "cot";
    case RecordKind::kDetectCoT: return "detect";
    case RecordKind::kPointSupervision: return "points";
  }
  return "unknown";
}

void check_scene(const AnnotatedScene& scene) {
  check_intrinsics(scene.intrinsics);
  const double w = scene.intrinsics.width;
  const double h = scene.intrinsics.height;
  for (const auto& o : scene.objects) {
    const Box2D& b = o.box2d;
    if (!b.valid() || b.x1 < 0 || b.y1 < 0 || b.x2 > w || b.y2 > h) {
      throw Error(ErrorCode::kInvalidArgument,
                  scene.image_id + ": object box outside the image");
    }
    if (o.description.empty()) {
      throw Error(ErrorCode::kInvalidArgument, scene.image_id + ": empty description");
    }
    if (o.box3d) check_box(*o.box3d);
  }
}

TemplateSet TemplateSet::parse(std::string_view content) {
  TemplateSet set;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.find("format version") != std::string::npos && set.version.empty()) {
        const auto p = line.find_last_of(' ');
        set.version = line.substr(p + 1);
        if (!set.version.empty() && set.version.back() == '.') set.version.pop_back();
      }
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "template line without a tab: " + line);
    }
    set.by_kind[line.substr(0, tab)].push_back(line.substr(tab + 1));
  }
  return set;
}

const TemplateSet& TemplateSet::builtin() {
  static const TemplateSet set = parse(generated::kQuestionTemplatesV1);
  return set;
}

const std::string& TemplateSet::pick(std::string_view kind, std::string_view key) const {
  const auto it = by_kind.find(std::string(kind));
  if (it == by_kind.end() || it->second.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no templates for " + std::string(kind));
  }
  return it->second[fnv1a64(key) % it->second.size()];
}

namespace {

void replace_all(std::string& s, std::string_view what, std::string_view with) {
  for (auto p = s.find(what); p != std::string::npos; p = s.find(what, p + with.size())) {
    s.replace(p, what.size(), with);
  }
}

std::map<std::string, std::string> base_metadata(const AnnotatedScene& scene) {
  return {{"image_id", scene.image_id},
          {"format_version", std::to_string(kGroundTextFormatVersion)},
          {"template_version", TemplateSet::builtin().version},
          {"frame", scene.pose ? "reference" : "camera"}};
}

std::vector<const SceneObject*> by_area(const AnnotatedScene& scene,
                                        const std::function<bool(const SceneObject&)>& keep,
                                        std::size_t cap) {
  std::vector<const SceneObject*> out;
  for (const auto& o : scene.objects) {
    if (keep(o)) out.push_back(&o);
  }
  std::stable_sort(out.begin(), out.end(), [](const SceneObject* a, const SceneObject* b) {
    return a->box2d.area() > b->box2d.area();
  });
  if (out.size() > cap) out.resize(cap);
  return out;
}

void append_detect_triple(const AnnotatedScene& scene, const SceneObject& o, bool canonical,
                          std::vector<SequenceSegment>& segments) {
  segments.push_back(BoxLiteral{o.box2d});
  segments.push_back(RegionSlot{RegionSource::kGroundTruth, true, o.box2d});
  segments.push_back(TextSpan{to_text(target_box(scene, *o.box3d, canonical))});
}

}  // namespace

std::string fill_template(std::string_view tmpl, const SceneObject& object) {
  std::string s(tmpl);
  replace_all(s, "{category}", object.category);
  replace_all(s, "{description}", object.description);
  return s;
}

std::vector<const SceneObject*> select_objects(const AnnotatedScene& scene,
                                               const DetectOptions& options) {
  return by_area(
      scene,
      [&](const SceneObject& o) {
        return o.box3d.has_value() && (!options.filter || options.filter(o));
      },
      options.max_objects);
}

Box3D target_box(const AnnotatedScene& scene, const Box3D& box, bool canonical) {
  Box3D out = scene.pose ? transform_to_reference(*scene.pose, box) : box;
  return canonical ? canonicalize(out) : out;
}

TrainingRecord make_grounded_cot(const AnnotatedScene& scene, std::size_t max_objects) {
  check_scene(scene);
  const TemplateSet& templates = TemplateSet::builtin();
  TrainingRecord r;
  r.kind = RecordKind::kGroundedCoT;
  r.image_id = scene.image_id;
  r.question = templates.pick("cot", scene.image_id);
  r.metadata = base_metadata(scene);

  if (scene.reasoning) {
    r.segments = build_training_sequence(scene.reasoning->text, scene.reasoning->mentions);
    r.metadata["source"] = "reasoning";
    return r;
  }

  const auto objects =
      by_area(scene, [](const SceneObject&) { return true; }, max_objects);
  if (objects.empty()) {
    throw Error(ErrorCode::kNothingToGenerate, scene.image_id + ": no objects");
  }
  const auto& steps = templates.by_kind.at("cot_step");
  std::string text;
  std::vector<Mention> mentions;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string& tmpl =
        (i == 0 || steps.size() == 1) ? steps[0] : steps[1 + (i - 1) % (steps.size() - 1)];
    const auto slot = tmpl.find("{description}");
    if (!text.empty()) text += ' ';
    const std::string& desc = objects[i]->description;
    const std::string prefix = fill_template(tmpl.substr(0, slot), *objects[i]);
    const std::size_t begin = text.size() + prefix.size();
    text += prefix + desc;
    text += fill_template(tmpl.substr(slot + std::string_view("{description}").size()),
                          *objects[i]);
    mentions.push_back({{begin, begin + desc.size()}, objects[i]->box2d});
  }
  r.segments = build_training_sequence(text, mentions);
  r.metadata["source"] = "template";
  r.metadata["objects"] = std::to_string(objects.size());
  return r;
}

TrainingRecord make_detect_cot(const AnnotatedScene& scene, const DetectOptions& options) {
  check_scene(scene);
  const auto objects = select_objects(scene, options);
  if (objects.empty()) {
    throw Error(ErrorCode::kNothingToGenerate,
                scene.image_id + ": no object with a 3D box");
  }
  TrainingRecord r;
  r.kind = RecordKind::kDetectCoT;
  r.image_id = scene.image_id;
  r.question = TemplateSet::builtin().pick("detect", scene.image_id);
  r.metadata = base_metadata(scene);
  r.metadata["objects"] = std::to_string(objects.size());
  for (const auto* o : objects) append_detect_triple(scene, *o, options.canonicalize, r.segments);
  return r;
}

std::vector<TrainingRecord> make_detect_turns(const AnnotatedScene& scene,
                                              const DetectOptions& options) {
  check_scene(scene);
  const auto objects = select_objects(scene, options);
  if (objects.empty()) {
    throw Error(ErrorCode::kNothingToGenerate,
                scene.image_id + ": no object with a 3D box");
  }
  std::vector<TrainingRecord> out;
  out.reserve(objects.size());
  for (std::size_t i = 0; i < objects.size(); ++i) {
    TrainingRecord r;
    r.kind = RecordKind::kDetectCoT;
    r.image_id = scene.image_id;
    r.question = fill_template(
        TemplateSet::builtin().pick("detect_turn", scene.image_id + "#" + std::to_string(i)),
        *objects[i]);
    r.metadata = base_metadata(scene);
    r.metadata["objects"] = "1";
    append_detect_triple(scene, *objects[i], options.canonicalize, r.segments);
    out.push_back(std::move(r));
  }
  return out;
}

TrainingRecord make_point_supervision(const AnnotatedScene& scene, const Box2D& region,
                                      std::size_t n, std::uint64_t seed) {
  check_scene(scene);
  if (!scene.depth) {
    throw Error(ErrorCode::kNoDepth, scene.image_id + ": scene has no depth map");
  }
  std::vector<Vec3> points =
      sample_region_points(*scene.depth, scene.intrinsics, region, n, seed);
  if (scene.pose) {
    for (auto& p : points) p = scene.pose->apply(p);
  }
  TrainingRecord r;
  r.kind = RecordKind::kPointSupervision;
  r.image_id = scene.image_id;
  r.question = TemplateSet::builtin().pick("points", scene.image_id);
  r.metadata = base_metadata(scene);
  r.metadata["points"] = std::to_string(points.size());
  r.segments.push_back(BoxLiteral{region});
  r.segments.push_back(RegionSlot{RegionSource::kGroundTruth, true, region});
  r.segments.push_back(TextSpan{to_text(std::span<const Vec3>(points))});
  return r;
}

std::vector<Conversation> assemble_conversation(std::span<const TrainingRecord> records,
                                                std::size_t max_rounds) {
  if (max_rounds == 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_rounds must be positive");
  }
  std::vector<Conversation> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i % max_rounds == 0) {
      Conversation c;
      c.image_id = records[i].image_id;
      c.id = records[i].image_id + "#" + std::to_string(i / max_rounds);
      out.push_back(std::move(c));
    }
    const TrainingRecord& r = records[i];
    out.back().turns.push_back({r.question, grounded_text(r.segments), r.segments});
  }
  return out;
}

TrainingRecord augment_record(const TrainingRecord& record, const JitterParams& p,
                              int image_w, int image_h) {
  if (record.kind == RecordKind::kPointSupervision) {
    throw Error(ErrorCode::kInvalidArgument,
                "augmentation applies to grounded-CoT and detect records only");
  }
  check_jitter(p);
  TrainingRecord out = record;
  if (p.is_zero()) return out;
  std::uint64_t slot_index = 0;
  for (auto& s : out.segments) {
    auto* slot = std::get_if<RegionSlot>(&s);
    if (slot == nullptr) continue;
    JitterParams q = p;
    q.seed = derive_seed(p.seed, slot_index++);
    slot->region = jitter(slot->region, q, image_w, image_h);
  }
  out.metadata["augmented"] = "true";
  return out;
}

}  // namespace gr3dkit
