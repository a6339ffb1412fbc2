#include <set>

#include "papercast/common/error.hpp"
#include "papercast/orchestrator/orchestrator.hpp"

namespace papercast::orchestrator {

namespace {

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) raise(ErrorCode::ConfigError, where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : obj.items())
    if (!ok.count(k)) raise(ErrorCode::ConfigError, "unknown config key '" + where + "." + k + "'");
}

template <typename T>
T get(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    raise(ErrorCode::ConfigError, "config key '" + where + "." + key + "' has the wrong type");
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  return j.contains(key) ? j.at(key) : empty;
}

}  // namespace

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::planning: return "planning";
    case Stage::editing: return "editing";
    case Stage::compose: return "compose";
    case Stage::feedback: return "feedback";
    case Stage::evaluation: return "evaluation";
  }
  return "?";
}

Stage parse_stage(const std::string& s) {
  for (auto st : kStageOrder)
    if (to_string(st) == s) return st;
  raise(ErrorCode::ConfigError, "unknown stage '" + s + "'");
}

std::string to_string(StageStatus status) {
  switch (status) {
    case StageStatus::pending: return "pending";
    case StageStatus::done: return "done";
    case StageStatus::failed: return "failed";
  }
  return "?";
}

PipelineConfig config_from_json(const json& j) {
  only_keys(j, "$", {"iterations", "workdir", "seed", "backend", "tts", "avatar", "video", "background",
                     "sanity_check", "feedback", "evaluation", "debug"});
  PipelineConfig c;
  c.iterations = get(j, "iterations", c.iterations, "$");
  if (c.iterations < 1) raise(ErrorCode::ConfigError, "iterations must be at least 1");
  c.workdir = get(j, "workdir", c.workdir.string(), "$");
  c.seed = get(j, "seed", c.seed, "$");

  const json& b = section(j, "backend");
  only_keys(b, "backend", {"name", "temperatures", "retry_limit", "remote"});
  c.backend = {{"name", get<std::string>(b, "name", "mock", "backend")}};
  if (b.contains("remote")) c.backend["remote"] = b["remote"];
  std::string name = c.backend["name"];
  if (name != "mock" && name != "openai_compatible") raise(ErrorCode::ConfigError, "backend '" + name + "' is not registered");
  c.gateway.temperatures = get(b, "temperatures", c.gateway.temperatures, "backend");
  c.gateway.retry_limit = get(b, "retry_limit", c.gateway.retry_limit, "backend");
  if (c.gateway.temperatures.empty()) raise(ErrorCode::ConfigError, "at least one temperature is required");
  for (double t : c.gateway.temperatures)
    if (t < 0.0 || t > 1.0) raise(ErrorCode::ConfigError, "temperatures must lie in [0, 1]");
  if (c.gateway.retry_limit < 1) raise(ErrorCode::ConfigError, "retry_limit must be at least 1");

  const json& tts = section(j, "tts");
  only_keys(tts, "tts", {"backend"});
  c.tts = get(tts, "backend", c.tts, "tts");
  if (c.tts != "stub") raise(ErrorCode::ConfigError, "tts backend '" + c.tts + "' is not registered");
  const json& av = section(j, "avatar");
  only_keys(av, "avatar", {"backend"});
  c.avatar = get(av, "backend", c.avatar, "avatar");
  if (c.avatar != "stub" && c.avatar != "none")
    raise(ErrorCode::ConfigError, "avatar backend '" + c.avatar + "' is not registered");

  const json& v = section(j, "video");
  only_keys(v, "video", {"target_duration_s", "fps", "width", "height", "codec_profile"});
  c.target_duration_s = get(v, "target_duration_s", c.target_duration_s, "video");
  if (c.target_duration_s < planning::kTargetDurationMin || c.target_duration_s > planning::kTargetDurationMax)
    raise(ErrorCode::ConfigError, "video.target_duration_s must lie in [60, 180]");
  c.video.fps = get(v, "fps", c.video.fps, "video");
  c.video.width = get(v, "width", c.video.width, "video");
  c.video.height = get(v, "height", c.video.height, "video");
  if (c.video.fps < 1 || c.video.fps > 120) raise(ErrorCode::ConfigError, "video.fps must lie in [1, 120]");
  if (c.video.width < 64 || c.video.height < 64 || c.video.width % 2 || c.video.height % 2)
    raise(ErrorCode::ConfigError, "video width and height must be even and at least 64");
  try {
    c.video.profile = media::parse_codec_profile(get<std::string>(v, "codec_profile", "production", "video"));
  } catch (const Error& e) {
    raise(ErrorCode::ConfigError, e.what());
  }

  const json& bg = section(j, "background");
  only_keys(bg, "background", {"fixed_black"});
  c.fixed_black_background = get(bg, "fixed_black", c.fixed_black_background, "background");
  const json& sc = section(j, "sanity_check");
  only_keys(sc, "sanity_check", {"enabled"});
  c.sanity_check = get(sc, "enabled", c.sanity_check, "sanity_check");

  const json& fb = section(j, "feedback");
  only_keys(fb, "feedback", {"metrics", "route_sceneplan_to_effects", "score_min", "score_max"});
  c.feedback.metrics = feedback::parse_metric_config(get<std::string>(fb, "metrics", "experiment", "feedback"));
  c.feedback.routing.sceneplan_to_effects = get(fb, "route_sceneplan_to_effects", false, "feedback");
  c.feedback.score_min = get(fb, "score_min", c.feedback.score_min, "feedback");
  c.feedback.score_max = get(fb, "score_max", c.feedback.score_max, "feedback");
  if (c.feedback.score_min >= c.feedback.score_max) raise(ErrorCode::ConfigError, "feedback score range is empty");

  const json& ev = section(j, "evaluation");
  only_keys(ev, "evaluation", {"enabled", "frames", "drop_incomplete"});
  c.evaluation = get(ev, "enabled", c.evaluation, "evaluation");
  c.evaluation_frames = get(ev, "frames", c.evaluation_frames, "evaluation");
  c.drop_incomplete_reports = get(ev, "drop_incomplete", c.drop_incomplete_reports, "evaluation");
  if (c.evaluation_frames < 1) raise(ErrorCode::ConfigError, "evaluation.frames must be positive");

  const json& dbg = section(j, "debug");
  only_keys(dbg, "debug", {"kill_after"});
  if (dbg.contains("kill_after")) {
    const json& k = dbg["kill_after"];
    only_keys(k, "debug.kill_after", {"iteration", "stage"});
    c.kill_after = KillPoint{get(k, "iteration", 1, "debug.kill_after"),
                             parse_stage(get<std::string>(k, "stage", "feedback", "debug.kill_after"))};
  }
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  json j;
  try {
    j = read_json(path);
  } catch (const Error& e) {
    raise(ErrorCode::ConfigError, std::string("cannot read config: ") + e.what());
  }
  return config_from_json(j);
}

json to_json(const PipelineConfig& c) {
  json backend = c.backend;
  backend["temperatures"] = c.gateway.temperatures;
  backend["retry_limit"] = c.gateway.retry_limit;
  return {{"iterations", c.iterations},
          {"seed", c.seed},
          {"backend", backend},
          {"tts", {{"backend", c.tts}}},
          {"avatar", {{"backend", c.avatar}}},
          {"video",
           {{"target_duration_s", c.target_duration_s},
            {"fps", c.video.fps},
            {"width", c.video.width},
            {"height", c.video.height},
            {"codec_profile", media::to_string(c.video.profile)}}},
          {"background", {{"fixed_black", c.fixed_black_background}}},
          {"sanity_check", {{"enabled", c.sanity_check}}},
          {"feedback",
           {{"metrics", c.feedback.metrics == feedback::MetricConfig::full ? "full" : "experiment"},
            {"route_sceneplan_to_effects", c.feedback.routing.sceneplan_to_effects},
            {"score_min", c.feedback.score_min},
            {"score_max", c.feedback.score_max}}},
          {"evaluation",
           {{"enabled", c.evaluation}, {"frames", c.evaluation_frames}, {"drop_incomplete", c.drop_incomplete_reports}}}};
}

namespace {

json to_json(const StageRecord& r) {
  json j = {{"status", to_string(r.status)}, {"artifacts", r.artifacts}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

StageRecord record_from_json(const json& j) {
  StageRecord r;
  std::string s = j.at("status").get<std::string>();
  if (s == "pending") r.status = StageStatus::pending;
  else if (s == "done") r.status = StageStatus::done;
  else if (s == "failed") r.status = StageStatus::failed;
  else raise(ErrorCode::CorruptState, "unknown stage status '" + s + "'");
  r.artifacts = j.value("artifacts", std::map<std::string, std::string>{});
  r.error = j.value("error", "");
  return r;
}

}  // namespace

bool RunState::complete() const {
  if (preprocessing.status != StageStatus::done) return false;
  for (const auto& it : iterations)
    for (const auto& [stage, rec] : it.stages)
      if (rec.status != StageStatus::done) return false;
  return true;
}

json to_json(const RunState& s) {
  json iters = json::array();
  for (const auto& it : s.iterations) {
    json stages = json::object();
    for (const auto& [stage, rec] : it.stages) stages[to_string(stage)] = to_json(rec);
    iters.push_back({{"iteration", it.iteration}, {"stages", stages}});
  }
  return {{"schema", "papercast.run_state"},  {"paper_id", s.paper_id},
          {"source_ref", s.source_ref},       {"condition", s.condition},
          {"config", s.config},               {"preprocessing", to_json(s.preprocessing)},
          {"iterations", iters}};
}

RunState state_from_json(const json& j) {
  RunState s;
  try {
    if (j.value("schema", "") != "papercast.run_state") raise(ErrorCode::CorruptState, "not a run state file");
    s.paper_id = j.at("paper_id").get<std::string>();
    s.source_ref = j.value("source_ref", "");
    s.condition = j.value("condition", std::string(evaluate::kMultiAgent));
    s.config = j.at("config");
    s.preprocessing = record_from_json(j.at("preprocessing"));
    bool previous_done = s.preprocessing.status == StageStatus::done;
    int expected = 1;
    for (const auto& it : j.at("iterations")) {
      IterationState st;
      st.iteration = it.at("iteration").get<int>();
      if (st.iteration != expected++) raise(ErrorCode::CorruptState, "iterations are not consecutive");
      for (auto stage : kStageOrder) {
        auto rec = it.at("stages").contains(to_string(stage)) ? record_from_json(it.at("stages").at(to_string(stage)))
                                                               : StageRecord{};
        if (rec.status == StageStatus::done && !previous_done)
          raise(ErrorCode::CorruptState, "iteration " + std::to_string(st.iteration) + " " + to_string(stage) +
                                             " is done but an earlier stage is not");
        previous_done = rec.status == StageStatus::done;
        st.stages[stage] = rec;
      }
      s.iterations.push_back(std::move(st));
    }
  } catch (const json::exception& e) {
    raise(ErrorCode::CorruptState, std::string("unreadable run state: ") + e.what());
  }
  return s;
}

}  // namespace papercast::orchestrator
