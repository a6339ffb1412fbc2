#include "papercast/evaluate/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "papercast/common/error.hpp"
#include "papercast/gateway/prompts.hpp"

namespace papercast::evaluate {

const std::vector<RubricMetric>& rubric() {
  static const std::vector<RubricMetric> r = {
      {"SI", "Scientific Integrity", "Content Accuracy",
       "Measures how well the video adheres to the core findings of the paper without distortion."},
      {"KCC", "Key Concept Coverage", "Content Accuracy",
       "Assesses whether the video includes the main hypotheses, methods, results, and conclusions."},
      {"LF", "Logical Flow", "Clarity",
       "Checks if the summary follows a logical sequence (Background, Methods, Results, Conclusion)."},
      {"C", "Comprehensibility", "Clarity",
       "Evaluates whether the explanation is understandable for a general audience while maintaining accuracy."},
      {"SR", "Scene Readability", "Visual & Audio Sync",
       "Ensures that any text on screen is clear, not too dense, and easy to read."},
      {"AVA", "Audio-Visual Alignment", "Visual & Audio Sync",
       "Evaluates if spoken content matches the on-screen visuals at the right moment."},
      {"AR", "Attention Retention", "Engagement", "Predicts how well the video keeps viewers engaged throughout."},
      {"Pacing", "Pacing", "Engagement", "Evaluates whether the video moves too fast or too slow for comprehension."},
      {"CTA", "Call-to-Action Effectiveness", "Engagement",
       "Checks if viewers are encouraged to read the full paper or visit related resources."},
      {"HE", "Highlight Emphasis", "Engagement",
       "Measures if key findings are properly emphasized through animation, captions, or repetition."},
  };
  return r;
}

const std::vector<std::pair<std::string, std::vector<std::string>>>& categories() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> c = [] {
    std::vector<std::pair<std::string, std::vector<std::string>>> out;
    for (const auto& m : rubric()) {
      if (out.empty() || out.back().first != m.category) out.push_back({m.category, {}});
      out.back().second.push_back(m.id);
    }
    return out;
  }();
  return c;
}

std::map<std::string, double> category_means(const std::map<std::string, int>& scores) {
  std::map<std::string, double> out;
  for (const auto& [name, members] : categories()) {
    double sum = 0.0;
    bool all = true;
    for (const auto& id : members) {
      auto it = scores.find(id);
      if (it == scores.end()) {
        all = false;
        break;
      }
      sum += it->second;
    }
    if (all) out[name] = sum / static_cast<double>(members.size());
  }
  return out;
}

json to_json(const EvaluationReport& r) {
  return {{"schema", "papercast.evaluation"}, {"paper_id", r.paper_id},   {"iteration", r.iteration},
          {"condition", r.condition},         {"video", r.video},         {"scores", r.scores},
          {"comments", r.comments},           {"category_means", r.category_means}, {"excluded", r.excluded}};
}

EvaluationReport report_from_json(const json& j) {
  try {
    EvaluationReport r;
    r.paper_id = j.value("paper_id", "");
    r.iteration = j.value("iteration", 0);
    r.condition = j.value("condition", std::string(kMultiAgent));
    r.video = j.value("video", "");
    r.scores = j.at("scores").get<std::map<std::string, int>>();
    r.comments = j.value("comments", std::map<std::string, std::string>{});
    r.excluded = j.value("excluded", std::vector<std::string>{});
    r.category_means = category_means(r.scores);
    return r;
  } catch (const json::exception& e) {
    raise(ErrorCode::ParseError, std::string("bad evaluation report: ") + e.what());
  }
}

EvaluationReport evaluate_video(const fs::path& video, const std::string& narration, gateway::Gateway& gateway,
                                const fs::path& frames_dir, const EvaluateOptions& options) {
  auto info = media::probe_video(video);
  if (info.duration_s <= 0.0) raise(ErrorCode::PreconditionViolation, "video " + video.string() + " has no duration");
  auto frames = compose::sample_frames(video, {0.0, info.duration_s}, options.frames, frames_dir, "eval");

  EvaluationReport report;
  report.paper_id = options.paper_id;
  report.iteration = options.iteration;
  report.condition = options.condition;
  report.video = video.string();

  json metrics = json::array();
  for (const auto& m : rubric()) metrics.push_back({{"id", m.id}, {"name", m.name}, {"description", m.description}});
  gateway::ModelRequest req;
  req.agent = gateway::AgentId::evaluation;
  req.schema_id = "evaluation_v1";
  req.constraints = {{"score_min", options.score_min}, {"score_max", options.score_max}};
  for (std::size_t i = 0; i < frames.frames.size(); ++i)
    req.attached_images.push_back({"frame_" + std::to_string(i), frames.frames[i]});
  req.prompt_text = gateway::with_input(gateway::bundled_prompt(gateway::AgentId::evaluation),
                                        {{"rubric", metrics},
                                         {"narration", narration},
                                         {"duration_s", info.duration_s},
                                         {"score_range", {options.score_min, options.score_max}}});
  auto resp = gateway.complete_structured(req);

  // An invalid answer may still carry usable scores for some metrics.
  const json* scores = nullptr;
  const json* comments = nullptr;
  if (resp.parsed && resp.parsed->is_object()) {
    if (auto it = resp.parsed->find("scores"); it != resp.parsed->end() && it->is_object()) scores = &*it;
    if (auto it = resp.parsed->find("comments"); it != resp.parsed->end() && it->is_object()) comments = &*it;
  }
  for (const auto& m : rubric()) {
    bool ok = false;
    if (scores && scores->contains(m.id)) {
      const json& v = (*scores)[m.id];
      if (v.is_number_integer() || v.is_number_unsigned()) {
        auto s = v.get<long long>();
        if (s >= options.score_min && s <= options.score_max) {
          report.scores[m.id] = static_cast<int>(s);
          ok = true;
        }
      }
    }
    if (!ok) {
      report.excluded.push_back(m.id);
      continue;
    }
    if (comments && comments->contains(m.id) && (*comments)[m.id].is_string())
      report.comments[m.id] = (*comments)[m.id].get<std::string>();
  }
  if (!report.excluded.empty())
    spdlog::warn("evaluation of {} excluded {} metric(s): {}", video.string(), report.excluded.size(), resp.error);
  report.category_means = category_means(report.scores);
  return report;
}

std::optional<double> ci_half_width(const std::vector<double>& values) {
  if (values.size() < 2) return std::nullopt;
  auto n = static_cast<double>(values.size());
  double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return kCiZ * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

AggregateSummary aggregate_scores(const std::vector<EvaluationReport>& reports, const Grouping& grouping) {
  using Key = std::tuple<std::string, int, std::string>;
  std::map<Key, std::map<std::string, std::vector<double>>> groups;
  AggregateSummary summary;
  for (const auto& r : reports) {
    if (grouping.drop_incomplete && !r.complete()) {
      ++summary.reports_dropped;
      continue;
    }
    ++summary.reports_used;
    Key key{grouping.by_condition ? r.condition : "", grouping.by_iteration ? r.iteration : 0,
            grouping.by_paper ? r.paper_id : ""};
    auto& g = groups[key];
    for (const auto& [id, s] : r.scores) g[id].push_back(s);
    for (const auto& [cat, mean] : category_means(r.scores)) g[cat].push_back(mean);
  }
  if (summary.reports_used == 0) raise(ErrorCode::EmptyInput, "no usable evaluation reports to aggregate");

  std::vector<std::string> order;
  for (const auto& m : rubric()) order.push_back(m.id);
  for (const auto& c : categories()) order.push_back(c.first);

  for (auto& [key, metrics] : groups) {
    for (const auto& id : order) {
      auto it = metrics.find(id);
      if (it == metrics.end() || it->second.empty()) continue;
      auto values = it->second;
      // Sorted sums keep the result independent of report order.
      std::sort(values.begin(), values.end());
      AggregateRow row;
      row.condition = std::get<0>(key);
      if (grouping.by_iteration) row.iteration = std::get<1>(key);
      if (grouping.by_paper) row.paper_id = std::get<2>(key);
      row.metric = id;
      row.n = values.size();
      row.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
      row.ci_half_width = ci_half_width(values);
      summary.rows.push_back(std::move(row));
    }
  }
  return summary;
}

std::string to_csv(const AggregateSummary& summary) {
  std::string out = "condition,iteration,paper_id,metric,n,mean,ci_half_width,ci_defined\n";
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  for (const auto& r : summary.rows) {
    out += fmt::format("{},{},{},{},{},{:.6f},{},{}\n", quote(r.condition),
                       r.iteration ? std::to_string(*r.iteration) : "", quote(r.paper_id.value_or("")), quote(r.metric),
                       r.n, r.mean, r.ci_half_width ? fmt::format("{:.6f}", *r.ci_half_width) : "",
                       r.ci_half_width ? "true" : "false");
  }
  return out;
}

void write_csv(const AggregateSummary& summary, const fs::path& path) { write_file_atomic(path, to_csv(summary)); }

}  // namespace papercast::evaluate
