#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "papercast/common/error.hpp"
#include "papercast/compose/compose.hpp"
#include "papercast/evaluate/evaluate.hpp"
#include "papercast/feedback/feedback.hpp"
#include "papercast/gateway/gateway.hpp"

namespace papercast::orchestrator {

enum class Stage { planning, editing, compose, feedback, evaluation };
inline constexpr std::array<Stage, 5> kStageOrder = {Stage::planning, Stage::editing, Stage::compose, Stage::feedback,
                                                     Stage::evaluation};
std::string to_string(Stage stage);
Stage parse_stage(const std::string& s);  // throws ConfigError

enum class StageStatus { pending, done, failed };
std::string to_string(StageStatus status);

struct KillPoint {
  int iteration = 0;
  Stage stage = Stage::planning;
};

struct PipelineConfig {
  int iterations = 5;
  fs::path workdir = "work";
  std::uint64_t seed = 42;
  json backend = {{"name", "mock"}};
  gateway::GatewayConfig gateway;
  std::string tts = "stub";
  std::string avatar = "stub";
  double target_duration_s = 120.0;
  media::VideoSettings video;
  bool fixed_black_background = true;
  bool sanity_check = true;
  feedback::FeedbackOptions feedback;
  bool evaluation = true;
  int evaluation_frames = evaluate::kEvaluationFrames;
  bool drop_incomplete_reports = true;
  std::optional<KillPoint> kill_after;  // test hook: the process exits right after this stage
};

// Unknown keys and out-of-range values raise ConfigError.
PipelineConfig config_from_json(const json& j);
PipelineConfig load_config(const fs::path& path);
// Everything that shapes outputs; workdir and the kill hook are left out.
json to_json(const PipelineConfig& c);

struct StageRecord {
  StageStatus status = StageStatus::pending;
  std::map<std::string, std::string> artifacts;  // path relative to the paper root -> sha256
  std::string error;
};

struct IterationState {
  int iteration = 1;
  std::map<Stage, StageRecord> stages;
};

struct RunState {
  std::string paper_id;
  std::string source_ref;
  std::string condition = evaluate::kMultiAgent;
  json config;
  StageRecord preprocessing;
  std::vector<IterationState> iterations;

  [[nodiscard]] bool complete() const;
};

json to_json(const RunState& s);
// Throws CorruptState when the stage order is violated.
RunState state_from_json(const json& j);

struct RunResult {
  fs::path paper_root;
  std::vector<compose::VideoArtifact> videos;
  std::vector<evaluate::EvaluationReport> reports;
  bool executed_anything = false;
};

// Fresh run: clears earlier pipeline outputs for the paper, then runs
// preprocessing and N iterations of planning, editing, compose, feedback and
// evaluation. Writes state.json after every stage and run_manifest.json at
// the end.
RunResult run_pipeline(const std::string& source_ref, const PipelineConfig& config);

// Continues a persisted run from its first non-done stage, with the config
// recorded in its state. Done stages are verified by checksum (CorruptState on
// mismatch) and never re-executed.
RunResult resume(const std::string& paper_id, const PipelineConfig& config);

struct BaselineResult {
  fs::path paper_root;
  compose::VideoArtifact video;
  std::optional<evaluate::EvaluationReport> report;
  std::size_t generation_calls = 0;
};

// One model call for script, scenes, text and text placement; standard
// composition and evaluation. Outputs go to <paper root>/baseline/.
BaselineResult run_baseline(const std::string& source_ref, const PipelineConfig& config);

// Aggregates every evaluation.json under the workdir and writes
// <out_dir>/aggregate.csv.
evaluate::AggregateSummary write_report(const fs::path& workdir, const fs::path& out_dir,
                                        const evaluate::Grouping& grouping = {});

// CLI exit codes: 0 success, 1 usage or config error, 2 stage failure,
// 3 backend failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitStageFailure = 2;
inline constexpr int kExitBackendFailure = 3;
int exit_code_for(ErrorCode code);

// Relative paths and checksums of the run's artifacts, in path order.
json build_run_manifest(const RunState& state, const fs::path& paper_root);

}  // namespace papercast::orchestrator
