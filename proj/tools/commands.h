#ifndef GR3DKIT_TOOLS_COMMANDS_H_
#define GR3DKIT_TOOLS_COMMANDS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gr3dkit/camera.h"
#include "gr3dkit/eval.h"
#include "gr3dkit/geom2d.h"

namespace gr3dkit::cli {

inline constexpr std::uint64_t kDefaultSeed = 20240521;

// "a:b:s" (inclusive range in exact decimal steps) or "a,b,c".
std::vector<double> parse_thresholds(const std::string& spec);

// "c,s" -> center/size fractions.
JitterParams parse_jitter(const std::string& spec, std::uint64_t seed);

struct EvalArgs {
  std::string pred_path;
  std::string gt_path;
  std::string thresholds;  // empty -> defaults
  std::string out_path;    // machine-readable JSON report
  unsigned jobs = 1;
  bool all_points = false;
};

// Return values are process exit codes: 0 success, 1 failure.
int cmd_eval3d(const EvalArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval2d(const EvalArgs& args, std::ostream& out, std::ostream& err);

struct GCoTArgs {
  std::string records_path;
  std::string out_path;
};
int cmd_eval_gcot(const GCoTArgs& args, std::ostream& out, std::ostream& err);

struct GenArgs {
  std::string manifest_path;
  std::string out_path;
  std::string kind;  // cot | detect | points
  std::uint64_t seed = kDefaultSeed;
  std::string jitter;  // "c,s", empty -> none
  std::size_t max_objects = 20;
  std::size_t points = 100;
  bool conversations = false;
  std::size_t max_rounds = 10;
  unsigned jobs = 1;
};
int cmd_gen(const GenArgs& args, std::ostream& out, std::ostream& err);

struct StreamArgs {
  std::string replay_path;
};
int cmd_simulate_stream(const StreamArgs& args, std::ostream& out, std::ostream& err);

struct NormalizeArgs {
  double fx = 0;
  std::optional<double> fy;
  int width = 0;
  int height = 0;
  std::optional<double> cx;
  std::optional<double> cy;
};
int cmd_normalize(const NormalizeArgs& args, std::ostream& out, std::ostream& err);

}  // namespace gr3dkit::cli

#endif  // GR3DKIT_TOOLS_COMMANDS_H_
