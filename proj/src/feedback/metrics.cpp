#include <algorithm>

#include "papercast/common/error.hpp"
#include "papercast/feedback/feedback.hpp"

namespace papercast::feedback {

std::string to_string(FeedbackAgent agent) {
  switch (agent) {
    case FeedbackAgent::flashtalk: return "flashtalk";
    case FeedbackAgent::sceneplan: return "sceneplan";
    case FeedbackAgent::text: return "text";
  }
  return "?";
}

FeedbackAgent parse_feedback_agent(const std::string& s) {
  for (auto a : kFeedbackAgents)
    if (to_string(a) == s || gateway::to_string(gateway_agent(a)) == s) return a;
  raise(ErrorCode::UnknownAgent, "unknown feedback agent '" + s + "'");
}

AgentId gateway_agent(FeedbackAgent agent) {
  switch (agent) {
    case FeedbackAgent::flashtalk: return AgentId::feedback_flashtalk;
    case FeedbackAgent::sceneplan: return AgentId::feedback_sceneplan;
    case FeedbackAgent::text: return AgentId::feedback_text;
  }
  return AgentId::feedback_sceneplan;
}

MetricConfig parse_metric_config(const std::string& s) {
  if (s == "experiment") return MetricConfig::experiment;
  if (s == "full") return MetricConfig::full;
  raise(ErrorCode::ConfigError, "metric config must be 'experiment' or 'full', got '" + s + "'");
}

const std::vector<MetricSpec>& metric_registry() {
  using A = FeedbackAgent;
  static const std::vector<MetricSpec> registry = {
      {A::flashtalk, "Clarity", "Is the message clear and easy to follow?"},
      {A::flashtalk, "Curiosity", "Does the hook immediately capture audience interest?"},
      {A::flashtalk, "Effectiveness", "Does the flash talk motivate viewers to explore the full content?"},
      {A::sceneplan, "Narrative Coherence",
       "Does the sequence of sub-scenes follow a logical flow? Are transitions smooth, avoiding abrupt shifts "
       "between scenes? Does the structure maintain audience engagement throughout the video?"},
      {A::sceneplan, "Timing and Pacing",
       "Are the durations of sub-scenes appropriately distributed? Do any sections feel rushed or overly "
       "extended? Is the pacing consistent, maintaining viewer engagement?"},
      {A::sceneplan, "Visual Relevance and Clarity",
       "Do the selected images and visuals align with the sub-scene descriptions? Are there any unclear or "
       "ambiguous visual choices? Does each sub-scene effectively illustrate the corresponding narration?"},
      {A::text, "Clarity",
       "Are the text components clear, concise, and logically structured? Do they enhance scene understanding "
       "without clutter?"},
      {A::text, "Key Information Coverage", "Do the extracted texts effectively summarize core ideas from the scene?"},
      {A::text, "Timing and Alignment",
       "Are text components timed appropriately with the audio narration and visuals? Do the texts appear and "
       "disappear naturally to support visual storytelling?"},
  };
  return registry;
}

std::optional<MetricSpec> find_metric(FeedbackAgent agent, const std::string& name) {
  for (const auto& m : metric_registry())
    if (m.agent == agent && m.name == name) return m;
  return std::nullopt;
}

std::vector<MetricSpec> set_metrics(const planning::SubScene&, FeedbackAgent agent, MetricConfig config) {
  if (config == MetricConfig::experiment) {
    switch (agent) {
      case FeedbackAgent::flashtalk: return {*find_metric(agent, "Curiosity")};
      case FeedbackAgent::sceneplan: return {*find_metric(agent, "Visual Relevance and Clarity")};
      case FeedbackAgent::text: return {*find_metric(agent, "Key Information Coverage")};
    }
  }
  std::vector<MetricSpec> out;
  std::copy_if(metric_registry().begin(), metric_registry().end(), std::back_inserter(out),
               [&](const MetricSpec& m) { return m.agent == agent; });
  return out;
}

std::vector<MetricSpec> set_metrics(const planning::SubScene& sub_scene, const std::string& agent,
                                    MetricConfig config) {
  return set_metrics(sub_scene, parse_feedback_agent(agent), config);
}

std::vector<AgentId> route(FeedbackAgent agent, const RoutingConfig& routing) {
  switch (agent) {
    case FeedbackAgent::flashtalk: return {AgentId::F};
    case FeedbackAgent::sceneplan:
      if (routing.sceneplan_to_effects) return {AgentId::S, AgentId::E};
      return {AgentId::S};
    case FeedbackAgent::text: return {AgentId::T, AgentId::L};
  }
  return {};
}

json to_json(const FeedbackRecord& r) {
  return {{"iteration", r.iteration},     {"agent", to_string(r.agent)}, {"sub_scene_id", r.sub_scene_id},
          {"metric", r.metric_name},      {"score", r.score},            {"comment", r.comment}};
}

FeedbackRecord record_from_json(const json& j) {
  try {
    FeedbackRecord r;
    r.iteration = j.at("iteration").get<int>();
    r.agent = parse_feedback_agent(j.at("agent").get<std::string>());
    r.sub_scene_id = j.at("sub_scene_id").get<std::string>();
    r.metric_name = j.at("metric").get<std::string>();
    r.score = j.at("score").get<int>();
    r.comment = j.value("comment", "");
    return r;
  } catch (const json::exception& e) {
    raise(ErrorCode::ParseError, std::string("bad feedback record: ") + e.what());
  }
}

json to_json(const FeedbackSummary& s) {
  json per_agent = json::object();
  for (const auto& [agent, a] : s.per_agent)
    per_agent[gateway::to_string(agent)] = {{"summary", a.text}, {"means", a.means}, {"records", a.record_indices}};
  return {{"schema", "papercast.feedback_summary"},
          {"iteration", s.iteration},
          {"per_agent", per_agent},
          {"warnings", s.warnings}};
}

}  // namespace papercast::feedback
