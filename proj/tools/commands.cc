#include "commands.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <ostream>
#include <thread>

#include <spdlog/spdlog.h>

#include "gr3dkit/datagen.h"
#include "gr3dkit/error.h"
#include "gr3dkit/io.h"
#include "gr3dkit/region_protocol.h"
#include "gr3dkit/rng.h"

namespace gr3dkit::cli {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto p = s.find(sep, start);
    out.push_back(s.substr(start, p - start));
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

double to_double(const std::string& s) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidArgument, "not a number: '" + s + "'");
  }
  return v;
}

std::size_t decimals(const std::string& s) {
  const auto dot = s.find('.');
  return dot == std::string::npos ? 0 : s.size() - dot - 1;
}

// Shared error reporting: every library error becomes exit status 1.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return 1;
}

}  // namespace

std::vector<double> parse_thresholds(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) {
      throw Error(ErrorCode::kInvalidArgument, "thresholds range must be start:stop:step");
    }
    std::size_t d = 0;
    for (const auto& p : parts) d = std::max(d, decimals(p));
    if (d > 9) throw Error(ErrorCode::kInvalidArgument, "too many decimals in thresholds");
    const double scale = std::pow(10.0, static_cast<double>(d));
    const long long start = std::llround(to_double(parts[0]) * scale);
    const long long stop = std::llround(to_double(parts[1]) * scale);
    const long long step = std::llround(to_double(parts[2]) * scale);
    if (step <= 0 || stop < start) {
      throw Error(ErrorCode::kInvalidArgument, "empty thresholds range");
    }
    for (long long k = start; k <= stop; k += step) out.push_back(k / scale);
  } else {
    for (const auto& p : split(spec, ',')) out.push_back(to_double(p));
  }
  for (double t : out) {
    if (!(t >= 0 && t <= 1)) throw Error(ErrorCode::kInvalidArgument, "threshold outside [0, 1]");
  }
  return out;
}

JitterParams parse_jitter(const std::string& spec, std::uint64_t seed) {
  const auto parts = split(spec, ',');
  if (parts.size() != 2) throw Error(ErrorCode::kInvalidArgument, "--jitter expects c,s");
  JitterParams p{to_double(parts[0]), to_double(parts[1]), seed};
  check_jitter(p);
  return p;
}

namespace {

EvalOptions eval_options(const EvalArgs& args) {
  EvalOptions o;
  if (!args.thresholds.empty()) o.thresholds = parse_thresholds(args.thresholds);
  o.jobs = std::max(1u, args.jobs);
  o.interpolation = args.all_points ? Interpolation::kAllPoints : Interpolation::k101Point;
  return o;
}

void emit_report(const EvalReport& report, const EvalArgs& args, std::string_view title,
                 std::ostream& out) {
  out << io::format_report(report, title);
  if (!args.out_path.empty()) io::write_file(args.out_path, io::to_json(report).dump() + "\n");
}

}  // namespace

int cmd_eval3d(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto pred = io::parse_detection_records(io::read_file(args.pred_path), args.pred_path);
    const auto gt = io::parse_detection_records(io::read_file(args.gt_path), args.gt_path);
    const auto report = evaluate_3d(io::predictions_3d(pred, args.pred_path),
                                    io::ground_truth_3d(gt, args.gt_path), eval_options(args));
    emit_report(report, args, "3D detection (IoU3D)", out);
    return 0;
  });
}

int cmd_eval2d(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto pred = io::parse_detection_records(io::read_file(args.pred_path), args.pred_path);
    const auto gt = io::parse_detection_records(io::read_file(args.gt_path), args.gt_path);
    const auto report = evaluate_2d(io::predictions_2d(pred, args.pred_path),
                                    io::ground_truth_2d(gt, args.gt_path), eval_options(args));
    emit_report(report, args, "2D detection (IoU2D)", out);
    return 0;
  });
}

int cmd_eval_gcot(const GCoTArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto records =
        io::parse_gcot_records(io::read_file(args.records_path), args.records_path);
    const GCoTMetrics m = evaluate_gcot(records);
    out << io::format_gcot(m);
    if (!args.out_path.empty()) io::write_file(args.out_path, io::to_json(m).dump() + "\n");
    return 0;
  });
}

namespace {

// Everything one scene contributes to the output file, already rendered.
struct SceneOutput {
  std::vector<std::string> lines;
  std::optional<Error> error;
  bool skipped = false;
};

SceneOutput generate_scene(const AnnotatedScene& scene, const GenArgs& args,
                           const std::optional<JitterParams>& jitter) {
  SceneOutput out;
  const std::uint64_t scene_seed = derive_seed(args.seed, scene.image_id);
  DetectOptions detect;
  detect.max_objects = args.max_objects;

  std::vector<TrainingRecord> records;
  try {
    if (args.kind == "cot") {
      records.push_back(make_grounded_cot(scene, args.max_objects));
    } else if (args.kind == "detect") {
      if (args.conversations) records = make_detect_turns(scene, detect);
      else records.push_back(make_detect_cot(scene, detect));
    } else {
      const Box2D full{0, 0, static_cast<double>(scene.intrinsics.width),
                       static_cast<double>(scene.intrinsics.height)};
      records.push_back(make_point_supervision(scene, full, args.points,
                                               derive_seed(scene_seed, "points")));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNothingToGenerate || e.code() == ErrorCode::kNoValidDepth) {
      spdlog::warn("skipping {}: {}", scene.image_id, e.what());
      out.skipped = true;
      return out;
    }
    out.error = e;
    return out;
  }

  if (jitter && args.kind != "points") {
    for (auto& r : records) {
      JitterParams p = *jitter;
      p.seed = derive_seed(scene_seed, "jitter");
      r = augment_record(r, p, scene.intrinsics.width, scene.intrinsics.height);
    }
  }
  if (args.conversations) {
    for (const auto& c : assemble_conversation(records, args.max_rounds)) {
      out.lines.push_back(io::to_json(c).dump());
    }
  } else {
    for (const auto& r : records) out.lines.push_back(io::to_json(r).dump());
  }
  return out;
}

}  // namespace

int cmd_gen(const GenArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.kind != "cot" && args.kind != "detect" && args.kind != "points") {
      throw Error(ErrorCode::kInvalidArgument, "--kind must be cot, detect or points");
    }
    auto scenes = io::read_manifest(args.manifest_path);
    std::stable_sort(scenes.begin(), scenes.end(),
                     [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
    if (args.kind == "points") {
      for (const auto& s : scenes) {
        if (!s.depth) {
          throw Error(ErrorCode::kNoDepth, args.manifest_path + ": scene '" + s.image_id +
                                               "' has no depth map; --kind points needs depth");
        }
      }
    }
    std::optional<JitterParams> jitter;
    if (!args.jitter.empty()) jitter = parse_jitter(args.jitter, args.seed);

    std::vector<SceneOutput> results(scenes.size());
    const unsigned jobs = std::max(1u, std::min<unsigned>(args.jobs, scenes.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i = next++; i < scenes.size(); i = next++) {
        results[i] = generate_scene(scenes[i], args, jitter);
      }
    };
    {
      std::vector<std::jthread> workers;
      for (unsigned w = 1; w < jobs; ++w) workers.emplace_back(work);
      work();
    }

    std::string content;
    std::size_t written = 0, skipped = 0;
    for (const auto& r : results) {
      if (r.error) throw *r.error;
      skipped += r.skipped;
      for (const auto& line : r.lines) {
        content += line;
        content += '\n';
        ++written;
      }
    }
    io::write_file(args.out_path, content);
    out << "wrote " << written << " records from " << scenes.size() << " scenes to "
        << args.out_path;
    if (skipped) out << " (" << skipped << " skipped)";
    out << "\n";
    return 0;
  });
}

int cmd_simulate_stream(const StreamArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto steps = io::parse_replay(io::read_file(args.replay_path), args.replay_path);
    RegionProtocol protocol;
    for (const auto& step : steps) {
      try {
        switch (step.kind) {
          case io::ReplayStep::Kind::kChunk: {
            const DecodeStep r = protocol.on_decode(step.text);
            if (const auto* p = std::get_if<PauseForRegion>(&r.action)) {
              spdlog::debug("pause for region {}", to_text(p->box));
            }
            break;
          }
          case io::ReplayStep::Kind::kAck:
            protocol.on_region_inserted(step.box);
            break;
          case io::ReplayStep::Kind::kFinish:
            protocol.finish();
            break;
        }
      } catch (const Error& e) {
        throw Error(e.code(), args.replay_path + ": byte " + std::to_string(step.offset) +
                                  ": " + e.what());
      }
    }
    if (protocol.phase() != RegionProtocol::Phase::kFinished) protocol.finish();
    for (const auto& line : skeleton(protocol.segments())) out << line << "\n";
    return 0;
  });
}

int cmd_normalize(const NormalizeArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    CameraIntrinsics k;
    k.fx = args.fx;
    k.fy = args.fy.value_or(args.fx);
    k.width = args.width;
    k.height = args.height;
    k.cx = args.cx.value_or(0.5 * args.width);
    k.cy = args.cy.value_or(0.5 * args.height);
    const NormalizedSize n = normalize_intrinsics(k);
    const CameraIntrinsics r = rescale_intrinsics(k);
    io::Json j = {{"width", n.width}, {"height", n.height}, {"scale", n.scale},
                  {"fx", r.fx},       {"fy", r.fy},         {"cx", r.cx},
                  {"cy", r.cy}};
    out << j.dump() << "\n";
    return 0;
  });
}

}  // namespace gr3dkit::cli
