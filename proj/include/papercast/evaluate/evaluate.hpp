#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "papercast/compose/compose.hpp"
#include "papercast/gateway/gateway.hpp"

namespace papercast::evaluate {

inline constexpr int kEvaluationFrames = 60;
inline constexpr double kCiZ = 1.96;

struct RubricMetric {
  std::string id;  // SI, KCC, ...
  std::string name;
  std::string category;
  std::string description;
};

const std::vector<RubricMetric>& rubric();
// Categories in display order with their member metric ids.
const std::vector<std::pair<std::string, std::vector<std::string>>>& categories();

inline constexpr const char* kMultiAgent = "multi_agent";
inline constexpr const char* kSingleAgent = "single_agent";

struct EvaluationReport {
  std::string paper_id;
  int iteration = 0;
  std::string condition = kMultiAgent;
  std::string video;  // path as given, informational
  std::map<std::string, int> scores;
  std::map<std::string, std::string> comments;
  std::map<std::string, double> category_means;
  std::vector<std::string> excluded;  // metrics missing after retries

  [[nodiscard]] bool complete() const { return excluded.empty() && scores.size() == rubric().size(); }
};

// Arithmetic mean per category, for categories whose members are all scored.
std::map<std::string, double> category_means(const std::map<std::string, int>& scores);

json to_json(const EvaluationReport& r);
EvaluationReport report_from_json(const json& j);

struct EvaluateOptions {
  std::string paper_id;
  int iteration = 0;
  std::string condition = kMultiAgent;
  int frames = kEvaluationFrames;
  int score_min = 1;
  int score_max = 5;
};

// Samples frames uniformly over the whole video into `frames_dir` and asks the
// evaluation agent for all rubric scores. Metrics still invalid after the
// gateway's retries are listed in `excluded`.
EvaluationReport evaluate_video(const fs::path& video, const std::string& narration, gateway::Gateway& gateway,
                                const fs::path& frames_dir, const EvaluateOptions& options);

// 1.96 * s / sqrt(n) with the sample standard deviation; nullopt for n < 2.
std::optional<double> ci_half_width(const std::vector<double>& values);

struct Grouping {
  bool by_condition = true;
  bool by_iteration = true;
  bool by_paper = false;
  // Drop a report entirely when any metric is excluded; otherwise skip only
  // the missing metrics.
  bool drop_incomplete = true;
};

struct AggregateRow {
  std::string condition;  // empty when not grouped
  std::optional<int> iteration;
  std::optional<std::string> paper_id;
  std::string metric;  // metric id or category name
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> ci_half_width;
};

struct AggregateSummary {
  std::vector<AggregateRow> rows;  // sorted by group keys, then rubric order
  std::size_t reports_used = 0;
  std::size_t reports_dropped = 0;
};

// Throws EmptyInput when no usable report remains.
AggregateSummary aggregate_scores(const std::vector<EvaluationReport>& reports, const Grouping& grouping = {});

std::string to_csv(const AggregateSummary& summary);
void write_csv(const AggregateSummary& summary, const fs::path& path);

}  // namespace papercast::evaluate
