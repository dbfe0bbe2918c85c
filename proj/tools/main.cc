#include <cstdlib>
#include <iostream>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "commands.h"

namespace {

void configure_logging() {
  auto logger = spdlog::stderr_logger_mt("gr3dkit");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("GR3DKIT_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace gr3dkit::cli;
  configure_logging();

  CLI::App app{"gr3dkit: grounding text, region protocol, 3D box geometry and evaluation"};
  app.require_subcommand(1);

  EvalArgs eval3d, eval2d;
  for (auto [name, args, what] : {std::tuple{"eval3d", &eval3d, "3D IoU"},
                                  std::tuple{"eval2d", &eval2d, "2D IoU"}}) {
    auto* sub = app.add_subcommand(name, std::string("AP evaluation with ") + what + " matching");
    sub->add_option("--pred", args->pred_path, "predictions (JSON lines)")->required()->check(CLI::ExistingFile);
    sub->add_option("--gt", args->gt_path, "ground truth (JSON lines)")->required()->check(CLI::ExistingFile);
    sub->add_option("--thresholds", args->thresholds, "start:stop:step or a,b,c (default 0.05:0.50:0.05)");
    sub->add_option("--out", args->out_path, "write the JSON report here");
    sub->add_option("--jobs", args->jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--all-point", args->all_points, "all-point AP instead of 101-point");
  }

  GCoTArgs gcot;
  auto* gcot_cmd = app.add_subcommand("eval-gcot", "A-Acc / G-Acc / consistency");
  gcot_cmd->add_option("--records", gcot.records_path)->required()->check(CLI::ExistingFile);
  gcot_cmd->add_option("--out", gcot.out_path, "write the JSON summary here");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate training records from a scene manifest");
  gen_cmd->add_option("--manifest", gen.manifest_path)->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--kind", gen.kind)->required()->check(CLI::IsMember({"cot", "detect", "points"}));
  gen_cmd->add_option("--seed", gen.seed, "seed for all randomness");
  gen_cmd->add_option("--jitter", gen.jitter, "region jitter c,s (center, size fractions)");
  gen_cmd->add_option("--out", gen.out_path)->required();
  gen_cmd->add_option("--max-objects", gen.max_objects, "objects per record (detect/cot)");
  gen_cmd->add_option("--points", gen.points, "points per image (points)");
  gen_cmd->add_flag("--conversations", gen.conversations, "emit multi-turn conversations");
  gen_cmd->add_option("--max-rounds", gen.max_rounds, "turns per conversation");
  gen_cmd->add_option("--jobs", gen.jobs, "worker threads")->check(CLI::PositiveNumber);

  StreamArgs stream;
  auto* stream_cmd = app.add_subcommand("simulate-stream", "replay a scripted decode through the region protocol");
  stream_cmd->add_option("--replay", stream.replay_path)->required()->check(CLI::ExistingFile);

  NormalizeArgs norm;
  auto* norm_cmd = app.add_subcommand("normalize", "intrinsic-aware image size normalization");
  norm_cmd->add_option("--fx", norm.fx)->required();
  norm_cmd->add_option("--fy", norm.fy);
  norm_cmd->add_option("--width", norm.width)->required();
  norm_cmd->add_option("--height", norm.height)->required();
  norm_cmd->add_option("--cx", norm.cx);
  norm_cmd->add_option("--cy", norm.cy);

  CLI11_PARSE(app, argc, argv);

  auto& out = std::cout;
  auto& err = std::cerr;
  if (app.got_subcommand("eval3d")) return cmd_eval3d(eval3d, out, err);
  if (app.got_subcommand("eval2d")) return cmd_eval2d(eval2d, out, err);
  if (*gcot_cmd) return cmd_eval_gcot(gcot, out, err);
  if (*gen_cmd) return cmd_gen(gen, out, err);
  if (*stream_cmd) return cmd_simulate_stream(stream, out, err);
  if (*norm_cmd) return cmd_normalize(norm, out, err);
  return 2;
}
