#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "papercast/compose/compose.hpp"
#include "papercast/editing/editing.hpp"
#include "papercast/gateway/gateway.hpp"
#include "papercast/gateway/prompts.hpp"
#include "papercast/planning/planning.hpp"

namespace papercast::feedback {

using gateway::AgentId;
using gateway::Gateway;
using gateway::PromptState;

enum class FeedbackAgent { flashtalk, sceneplan, text };
inline constexpr FeedbackAgent kFeedbackAgents[] = {FeedbackAgent::flashtalk, FeedbackAgent::sceneplan,
                                                    FeedbackAgent::text};

std::string to_string(FeedbackAgent agent);
FeedbackAgent parse_feedback_agent(const std::string& s);  // throws UnknownAgent
AgentId gateway_agent(FeedbackAgent agent);

// Frames handed to each feedback agent.
inline constexpr int kFlashtalkFramesPerSection = 10;
inline constexpr int kSubSceneFrames = 2;

struct MetricSpec {
  FeedbackAgent agent = FeedbackAgent::flashtalk;
  std::string name;
  std::string description;

  bool operator==(const MetricSpec&) const = default;
};

enum class MetricConfig { experiment, full };
MetricConfig parse_metric_config(const std::string& s);  // throws ConfigError

const std::vector<MetricSpec>& metric_registry();
std::optional<MetricSpec> find_metric(FeedbackAgent agent, const std::string& name);

// Metrics a feedback agent scores for a sub-scene. The experiment config asks
// one metric per agent; the full config asks the whole registry.
std::vector<MetricSpec> set_metrics(const planning::SubScene& sub_scene, FeedbackAgent agent, MetricConfig config);
std::vector<MetricSpec> set_metrics(const planning::SubScene& sub_scene, const std::string& agent, MetricConfig config);

struct FeedbackRecord {
  int iteration = 1;
  FeedbackAgent agent = FeedbackAgent::sceneplan;
  std::string sub_scene_id;
  std::string metric_name;
  int score = 1;
  std::string comment;

  bool operator==(const FeedbackRecord&) const = default;
};

json to_json(const FeedbackRecord& r);
FeedbackRecord record_from_json(const json& j);

struct RoutingConfig {
  bool sceneplan_to_effects = false;
};

// Generation agents that receive a feedback agent's records.
std::vector<AgentId> route(FeedbackAgent agent, const RoutingConfig& routing = {});

struct AgentSummary {
  std::string text;                      // empty when nothing was routed
  std::map<std::string, double> means;   // metric name -> mean score
  std::vector<std::size_t> record_indices;  // into the summarized record list

  [[nodiscard]] bool empty() const { return text.empty(); }
};

struct FeedbackSummary {
  int iteration = 0;
  std::map<AgentId, AgentSummary> per_agent;  // every generation agent, possibly empty
  std::vector<std::string> warnings;
};

json to_json(const FeedbackSummary& s);

struct FeedbackOptions {
  MetricConfig metrics = MetricConfig::experiment;
  RoutingConfig routing;
  int score_min = 1;
  int score_max = 5;
};

// What a feedback agent sees besides the frames.
struct FeedbackContext {
  std::string sub_scene_id;
  std::string description;
  std::string narration_slice;
  std::string section_kind;
  std::string section_narration;
  const editing::SceneDirectives* directives = nullptr;
};

// One model call per metric. Records that stay invalid after the gateway's
// retries are excluded and described in `exclusions`.
std::vector<FeedbackRecord> run_feedback_agent(FeedbackAgent agent, const compose::FrameSet& frames,
                                               const FeedbackContext& context, const std::vector<MetricSpec>& metrics,
                                               Gateway& gateway, int iteration, const FeedbackOptions& options = {},
                                               std::vector<std::string>* exclusions = nullptr);

// Routes records to generation agents, computes per-metric means and asks the
// summary template for a condensed text per agent that received records.
FeedbackSummary summarize_feedback(const std::vector<FeedbackRecord>& records, Gateway& gateway,
                                   const RoutingConfig& routing = {});

struct ReflectionResult {
  PromptState prompt;
  std::vector<std::string> warnings;
};

// Rewrites one agent's prompt from its current text and its summary slice only.
// An empty slice returns the prompt unchanged (iteration advanced). A revision
// that loses the schema block is retried once, then the old text is kept.
ReflectionResult reflect_prompt(const PromptState& prompt, const AgentSummary& summary, Gateway& gateway);

// prompts/<agent>/<iteration>.txt under `root`, with every read recorded.
class PromptStore {
 public:
  explicit PromptStore(fs::path root);

  void put(const PromptState& prompt);
  [[nodiscard]] PromptState get(AgentId agent, int iteration) const;
  [[nodiscard]] bool has(AgentId agent, int iteration) const;
  // Highest stored iteration, or -1.
  [[nodiscard]] int latest(AgentId agent) const;
  [[nodiscard]] std::vector<PromptState> lineage(AgentId agent) const;
  [[nodiscard]] fs::path path_for(AgentId agent, int iteration) const;

  [[nodiscard]] std::vector<std::pair<AgentId, int>> reads() const { return reads_; }
  void clear_reads() { reads_.clear(); }

 private:
  fs::path root_;
  mutable std::vector<std::pair<AgentId, int>> reads_;
};

struct IterationInputs {
  int iteration = 1;  // the video's iteration; prompts come in at iteration - 1
  compose::VideoArtifact video;
  planning::FlashtalkScript script;
  planning::ScenePlan plan;
  std::vector<planning::AudioTrack> audio;
  std::map<std::string, editing::SceneDirectives> directives;  // by sub-scene id
};

struct IterationFeedback {
  std::vector<FeedbackRecord> records;
  FeedbackSummary summary;
  std::map<AgentId, PromptState> prompts;  // at iteration `inputs.iteration`
  std::size_t attempted = 0;               // feedback calls issued
  std::vector<std::string> warnings;
};

// Samples frames, queries every feedback agent on every sub-scene, summarizes,
// reflects each generation agent's prompt and persists records, summary and
// the new prompts. Writes <iter_dir>/feedback.jsonl line by line.
IterationFeedback run_feedback_iteration(const IterationInputs& inputs, const std::map<AgentId, PromptState>& prompts,
                                         Gateway& gateway, const FeedbackOptions& options, const fs::path& iter_dir,
                                         PromptStore* store = nullptr);

}  // namespace papercast::feedback
