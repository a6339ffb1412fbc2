#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "papercast/common/error.hpp"
#include "papercast/gateway/backends.hpp"
#include "papercast/orchestrator/orchestrator.hpp"

using namespace papercast;
namespace orch = papercast::orchestrator;

namespace {

struct Common {
  std::string config_path;
  std::string workdir;
  bool quiet = false;
};

orch::PipelineConfig make_config(const Common& c) {
  orch::PipelineConfig cfg = c.config_path.empty() ? orch::PipelineConfig{} : orch::load_config(c.config_path);
  if (!c.workdir.empty()) cfg.workdir = c.workdir;
  return cfg;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--workdir", c.workdir, "Working directory (overrides the config)");
}

int cmd_run(const Common& c, const std::string& source, int iterations) {
  auto cfg = make_config(c);
  if (iterations > 0) cfg.iterations = iterations;
  auto result = orch::run_pipeline(source, cfg);
  std::cout << "paper root: " << result.paper_root.string() << "\n";
  for (const auto& v : result.videos)
    std::cout << "iteration " << v.iteration << ": " << v.path.string() << " (" << v.duration_s << " s)\n";
  return orch::kExitOk;
}

int cmd_baseline(const Common& c, const std::string& source) {
  auto cfg = make_config(c);
  auto result = orch::run_baseline(source, cfg);
  std::cout << "baseline video: " << result.video.path.string() << " (" << result.video.duration_s << " s, "
            << result.generation_calls << " generation call)\n";
  return orch::kExitOk;
}

int cmd_evaluate(const Common& c, const std::string& video, const std::string& narration_path,
                 const std::string& out_path, const std::string& condition) {
  auto cfg = make_config(c);
  gateway::Gateway gw(gateway::make_backend(cfg.backend, cfg.seed), cfg.gateway);
  std::string narration = narration_path.empty() ? "" : read_file(narration_path);
  evaluate::EvaluateOptions opts;
  opts.paper_id = fs::path(video).stem().string();
  opts.condition = condition;
  opts.frames = cfg.evaluation_frames;
  opts.score_min = cfg.feedback.score_min;
  opts.score_max = cfg.feedback.score_max;
  fs::path out = out_path.empty() ? fs::path(video).replace_extension(".evaluation.json") : fs::path(out_path);
  fs::path frames_dir = out.parent_path() / (out.stem().string() + "_frames");
  auto report = evaluate::evaluate_video(video, narration, gw, frames_dir, opts);
  write_json(out, evaluate::to_json(report));
  std::cout << evaluate::to_json(report).dump(2) << "\n";
  return report.complete() ? orch::kExitOk : orch::kExitStageFailure;
}

int cmd_resume(const Common& c, const std::string& paper) {
  auto cfg = make_config(c);
  auto result = orch::resume(paper, cfg);
  std::cout << (result.executed_anything ? "resumed " : "nothing to do for ") << result.paper_root.string() << "\n";
  return orch::kExitOk;
}

int cmd_report(const Common& c, const std::string& out) {
  auto cfg = make_config(c);
  auto summary = orch::write_report(cfg.workdir, out);
  std::cout << evaluate::to_csv(summary);
  return orch::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Turns a research paper into a short vertical video and refines it over iterations."};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_flag("-q,--quiet", common.quiet, "Only log warnings and errors");

  std::string source, video, narration, out, paper, condition = evaluate::kMultiAgent;
  int iterations = 0;

  auto* run = app.add_subcommand("run", "Run the full multi-agent pipeline");
  run->add_option("--source", source, "PDF/HTML path, arXiv id or URL")->required();
  run->add_option("--iterations", iterations, "Number of iterations (overrides the config)")->check(CLI::PositiveNumber);
  add_common(run, common);

  auto* baseline = app.add_subcommand("baseline", "Single-call baseline video");
  baseline->add_option("--source", source, "PDF/HTML path, arXiv id or URL")->required();
  add_common(baseline, common);

  auto* eval = app.add_subcommand("evaluate", "Score any video against the rubric");
  eval->add_option("--video", video, "Video file")->required()->check(CLI::ExistingFile);
  eval->add_option("--narration", narration, "Text file with the narration")->check(CLI::ExistingFile);
  eval->add_option("--out", out, "Report path (default: next to the video)");
  eval->add_option("--condition", condition, "Condition label")
      ->check(CLI::IsMember({evaluate::kMultiAgent, evaluate::kSingleAgent, "external"}));
  add_common(eval, common);

  auto* res = app.add_subcommand("resume", "Continue an interrupted run");
  res->add_option("--paper", paper, "Paper id (directory name under the workdir)")->required();
  add_common(res, common);

  auto* report = app.add_subcommand("report", "Aggregate evaluation reports into a CSV");
  report->add_option("--out", out, "Output directory")->required();
  add_common(report, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return orch::kExitUsage;
  }
  spdlog::set_level(common.quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (*run) return cmd_run(common, source, iterations);
    if (*baseline) return cmd_baseline(common, source);
    if (*eval) return cmd_evaluate(common, video, narration, out, condition);
    if (*res) return cmd_resume(common, paper);
    if (*report) return cmd_report(common, out);
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.code()), e.what());
    return orch::exit_code_for(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return orch::kExitStageFailure;
  }
  return orch::kExitUsage;
}
