#include <algorithm>

#include <spdlog/spdlog.h>

#include "papercast/common/error.hpp"
#include "papercast/feedback/feedback.hpp"

namespace papercast::feedback {

namespace {

std::pair<double, double> clamp_span(std::pair<double, double> span, double video_s) {
  return {std::max(0.0, span.first), std::min(span.second, video_s)};
}

}  // namespace

IterationFeedback run_feedback_iteration(const IterationInputs& inputs, const std::map<AgentId, PromptState>& prompts,
                                         Gateway& gateway, const FeedbackOptions& options, const fs::path& iter_dir,
                                         PromptStore* store) {
  const int j = inputs.iteration;
  if (j < 1) raise(ErrorCode::PreconditionViolation, "feedback iterations start at 1");
  if (inputs.video.iteration != j) raise(ErrorCode::PreconditionViolation, "video belongs to another iteration");
  if (inputs.plan.scenes.size() != inputs.script.sections.size())
    raise(ErrorCode::PreconditionViolation, "plan and script disagree on the section count");
  for (auto agent : gateway::kGenerationAgents) {
    auto it = prompts.find(agent);
    if (it == prompts.end()) raise(ErrorCode::PreconditionViolation, "missing prompt for " + gateway::to_string(agent));
    if (it->second.iteration != j - 1)
      raise(ErrorCode::PreconditionViolation, gateway::to_string(agent) + " prompt is not from iteration " + std::to_string(j - 1));
  }

  IterationFeedback result;
  const fs::path frames_dir = iter_dir / "feedback_frames";
  const fs::path log_path = iter_dir / "feedback.jsonl";
  fs::create_directories(iter_dir);
  fs::remove(log_path);

  auto spans = compose::sub_scene_spans(inputs.plan, inputs.audio);
  std::size_t span_index = 0;
  double offset = 0.0;
  std::size_t backend_failures = 0;

  for (std::size_t s = 0; s < inputs.plan.scenes.size(); ++s) {
    const auto& scene = inputs.plan.scenes[s];
    const auto& section = inputs.script.sections[s];
    const std::string kind = planning::to_string(section.kind);
    std::optional<compose::FrameSet> section_frames;
    try {
      section_frames = compose::sample_frames(
          inputs.video.path, clamp_span({offset, offset + inputs.audio[s].duration_s}, inputs.video.duration_s),
          kFlashtalkFramesPerSection, frames_dir, kind);
    } catch (const Error& e) {
      result.warnings.push_back("no section frames for " + kind + ": " + e.what());
    }
    offset += inputs.audio[s].duration_s;

    for (std::size_t k = 0; k < scene.sub_scenes.size(); ++k, ++span_index) {
      const auto& sub = scene.sub_scenes[k];
      FeedbackContext ctx;
      ctx.sub_scene_id = sub.sub_scene_id;
      ctx.description = sub.description;
      ctx.narration_slice = planning::narration_slice(section, scene, k);
      ctx.section_kind = kind;
      ctx.section_narration = section.narration_text;
      if (auto d = inputs.directives.find(sub.sub_scene_id); d != inputs.directives.end()) ctx.directives = &d->second;

      try {
        auto frames = compose::sample_frames(inputs.video.path, clamp_span(spans[span_index].second, inputs.video.duration_s),
                                             kSubSceneFrames, frames_dir, sub.sub_scene_id);
        for (auto agent : kFeedbackAgents) {
          const compose::FrameSet* set = &frames;
          if (agent == FeedbackAgent::flashtalk) {
            if (!section_frames) continue;
            set = &*section_frames;
          }
          auto metrics = set_metrics(sub, agent, options.metrics);
          gateway.set_context({{"iteration", j}, {"stage", "feedback"}, {"sub_scene", sub.sub_scene_id}});
          result.attempted += metrics.size();
          std::vector<std::string> excluded;
          auto records = run_feedback_agent(agent, *set, ctx, metrics, gateway, j, options, &excluded);
          result.warnings.insert(result.warnings.end(), excluded.begin(), excluded.end());
          for (auto& r : records) {
            append_line(log_path, to_json(r).dump());
            result.records.push_back(std::move(r));
          }
        }
      } catch (const Error& e) {
        if (e.code() == ErrorCode::BackendUnavailable) ++backend_failures;
        std::string w = "skipped feedback for " + sub.sub_scene_id + ": " + e.what();
        spdlog::warn("{}", w);
        result.warnings.push_back(w);
      }
    }
  }
  if (backend_failures > 0 && result.records.empty())
    raise(ErrorCode::BackendUnavailable, "every feedback call failed to reach the backend");

  gateway.set_context({{"iteration", j}, {"stage", "feedback"}, {"step", "summarize"}});
  result.summary = summarize_feedback(result.records, gateway, options.routing);
  result.summary.iteration = j;
  result.warnings.insert(result.warnings.end(), result.summary.warnings.begin(), result.summary.warnings.end());
  write_json(iter_dir / "feedback_summary.json", to_json(result.summary));

  gateway.set_context({{"iteration", j}, {"stage", "feedback"}, {"step", "reflect"}});
  for (auto agent : gateway::kGenerationAgents) {
    auto reflected = reflect_prompt(prompts.at(agent), result.summary.per_agent.at(agent), gateway);
    result.warnings.insert(result.warnings.end(), reflected.warnings.begin(), reflected.warnings.end());
    if (store) store->put(reflected.prompt);
    result.prompts[agent] = std::move(reflected.prompt);
  }
  gateway.set_context(json::object());
  return result;
}

}  // namespace papercast::feedback
