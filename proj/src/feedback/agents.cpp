#include <algorithm>
#include <cstdio>
#include <set>

#include <spdlog/spdlog.h>

#include "papercast/common/error.hpp"
#include "papercast/common/text.hpp"
#include "papercast/feedback/feedback.hpp"
#include "papercast/gateway/schemas.hpp"

namespace papercast::feedback {

namespace {

json directives_digest(const editing::SceneDirectives& d) {
  json overlays = json::array();
  for (const auto& o : d.overlays)
    overlays.push_back({{"content", o.content}, {"start_s", o.start_s}, {"duration_s", o.duration_s}});
  json effects = json::array();
  for (const auto& e : d.effects) effects.push_back({{"kind", editing::to_string(e.kind)}, {"target", e.target_component_id}});
  return {{"background", d.background}, {"image_ids", d.image_ids}, {"overlays", overlays}, {"effects", effects}};
}

// Deterministic stand-in used when the summary call fails validation.
std::string local_summary(const std::map<std::string, double>& means, const std::vector<std::string>& comments) {
  std::string out = "Mean scores:";
  for (const auto& [metric, mean] : means) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), " %.2f;", mean);
    out += " " + metric + buf;
  }
  out.back() = '.';
  for (const auto& c : comments) out += " " + c;
  return out;
}

}  // namespace

std::vector<FeedbackRecord> run_feedback_agent(FeedbackAgent agent, const compose::FrameSet& frames,
                                               const FeedbackContext& context, const std::vector<MetricSpec>& metrics,
                                               Gateway& gateway, int iteration, const FeedbackOptions& options,
                                               std::vector<std::string>* exclusions) {
  if (metrics.empty()) raise(ErrorCode::PreconditionViolation, "feedback needs at least one metric");
  if (frames.frames.empty()) raise(ErrorCode::PreconditionViolation, "feedback needs frames");
  for (const auto& m : metrics)
    if (m.agent != agent)
      raise(ErrorCode::PreconditionViolation, "metric " + m.name + " does not belong to the " + to_string(agent) + " agent");

  json sub = {{"id", context.sub_scene_id},
              {"description", context.description},
              {"narration", context.narration_slice},
              {"section", context.section_kind},
              {"section_narration", context.section_narration}};
  if (context.directives) sub["directives"] = directives_digest(*context.directives);

  std::vector<gateway::ImageRef> images;
  for (std::size_t i = 0; i < frames.frames.size(); ++i)
    images.push_back({"frame_" + std::to_string(i), frames.frames[i]});

  std::vector<FeedbackRecord> out;
  for (const auto& m : metrics) {
    gateway::ModelRequest req;
    req.agent = gateway_agent(agent);
    req.schema_id = "feedback_v1";
    req.attached_images = images;
    req.constraints = {{"metrics", {m.name}}, {"score_min", options.score_min}, {"score_max", options.score_max}};
    req.prompt_text = gateway::with_input(gateway::bundled_prompt(req.agent),
                                          {{"role", to_string(agent)},
                                           {"metric", {{"name", m.name}, {"description", m.description}}},
                                           {"score_range", {options.score_min, options.score_max}},
                                           {"sub_scene", sub}});
    auto resp = gateway.complete_structured(req);
    if (!resp.valid) {
      std::string why = fmt::format("excluded {} feedback on {} ({}): {}", to_string(agent), context.sub_scene_id,
                                    m.name, resp.error);
      spdlog::warn("{}", why);
      if (exclusions) exclusions->push_back(why);
      continue;
    }
    const json& p = *resp.parsed;
    out.push_back({iteration, agent, context.sub_scene_id, m.name, p["score"].get<int>(),
                   text::normalize_space(p["comment"].get<std::string>())});
  }
  return out;
}

FeedbackSummary summarize_feedback(const std::vector<FeedbackRecord>& records, Gateway& gateway,
                                   const RoutingConfig& routing) {
  FeedbackSummary summary;
  if (!records.empty()) summary.iteration = records.front().iteration;
  for (const auto& r : records)
    if (r.iteration != summary.iteration)
      raise(ErrorCode::PreconditionViolation, "records from several iterations passed to summarize");
  for (auto agent : gateway::kGenerationAgents) summary.per_agent[agent] = {};

  for (std::size_t i = 0; i < records.size(); ++i)
    for (auto target : route(records[i].agent, routing)) summary.per_agent[target].record_indices.push_back(i);

  for (auto& [agent, slice] : summary.per_agent) {
    if (slice.record_indices.empty()) continue;
    std::map<std::string, std::pair<double, int>> sums;
    json routed = json::array();
    std::vector<std::string> comments;
    std::set<std::string> seen;
    for (auto i : slice.record_indices) {
      const auto& r = records[i];
      auto& [sum, n] = sums[r.metric_name];
      sum += r.score;
      ++n;
      routed.push_back({{"sub_scene_id", r.sub_scene_id},
                        {"feedback_agent", to_string(r.agent)},
                        {"metric", r.metric_name},
                        {"score", r.score},
                        {"comment", r.comment}});
      if (!r.comment.empty() && seen.insert(r.comment).second) comments.push_back(r.comment);
    }
    for (const auto& [metric, sn] : sums) slice.means[metric] = sn.first / sn.second;

    gateway::ModelRequest req;
    req.agent = AgentId::reflection;
    req.schema_id = "summary_v1";
    req.prompt_text = gateway::with_input(
        gateway::summary_prompt(), {{"agent", gateway::to_string(agent)}, {"records", routed}, {"means", slice.means}});
    auto resp = gateway.complete_structured(req);
    if (resp.valid) {
      slice.text = text::trim((*resp.parsed)["summary"].get<std::string>());
    } else {
      std::string w = "summary for " + gateway::to_string(agent) + " fell back to local means: " + resp.error;
      spdlog::warn("{}", w);
      summary.warnings.push_back(w);
      slice.text = local_summary(slice.means, comments);
    }
  }
  return summary;
}

ReflectionResult reflect_prompt(const PromptState& prompt, const AgentSummary& summary, Gateway& gateway) {
  if (!gateway::is_generation_agent(prompt.agent))
    raise(ErrorCode::PreconditionViolation, "only generation agents have prompts to reflect");
  ReflectionResult result;
  result.prompt = prompt;
  result.prompt.iteration = prompt.iteration + 1;
  if (summary.empty()) return result;

  const std::string block = gateway::find_schema_block(prompt.text);
  if (block.empty()) raise(ErrorCode::PreconditionViolation, gateway::to_string(prompt.agent) + " prompt has no schema block");

  constexpr int kAttempts = 2;
  json input = {{"agent", gateway::to_string(prompt.agent)}, {"prompt", prompt.text}, {"feedback", summary.text}};
  for (int attempt = 1; attempt <= kAttempts; ++attempt) {
    gateway::ModelRequest req;
    req.agent = AgentId::reflection;
    req.schema_id = "reflection_v1";
    req.prompt_text = gateway::with_input(gateway::bundled_prompt(AgentId::reflection), input);
    auto resp = gateway.complete_structured(req);
    if (!resp.valid) {
      result.warnings.push_back("reflection for " + gateway::to_string(prompt.agent) + " was invalid: " + resp.error);
      continue;
    }
    std::string revised = (*resp.parsed)["revised_prompt"].get<std::string>();
    if (gateway::find_schema_block(revised) == block) {
      result.prompt.text = std::move(revised);
      return result;
    }
    result.warnings.push_back("reflection for " + gateway::to_string(prompt.agent) + " altered the schema block (attempt " +
                              std::to_string(attempt) + ")");
    input["correction"] = "Your previous revision changed or dropped the OUTPUT_SCHEMA block. Copy it exactly.";
  }
  result.warnings.push_back("kept the previous " + gateway::to_string(prompt.agent) + " prompt");
  for (const auto& w : result.warnings) spdlog::warn("{}", w);
  return result;
}

}  // namespace papercast::feedback
