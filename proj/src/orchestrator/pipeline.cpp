#include <cstdlib>

#include <spdlog/spdlog.h>

#include "internal.hpp"
#include "papercast/common/error.hpp"
#include "papercast/gateway/backends.hpp"

namespace papercast::orchestrator {

using namespace detail;
using gateway::AgentId;

namespace {

class Runner {
 public:
  Runner(PipelineConfig config, fs::path paper_root, RunState state)
      : config_(std::move(config)),
        root_(std::move(paper_root)),
        state_(std::move(state)),
        gateway_(gateway::make_backend(config_.backend, config_.seed), config_.gateway),
        store_(root_) {
    gateway_.log().mirror_to(root_ / "logs" / "calls.jsonl");
  }

  void preprocess(std::optional<ingest::RawBundle> fetched = std::nullopt) {
    auto bundle = fetched ? std::move(*fetched) : ingest::fetch_paper(state_.source_ref, config_.workdir);
    assets_ = ingest::extract_assets(bundle);
    ingest::write_manifest(assets_);
    for (auto agent : gateway::kGenerationAgents) store_.put(gateway::initial_prompt_state(agent));

    StageRecord rec;
    std::vector<std::string> files = {"manifest.json"};
    if (fs::exists(root_ / "body.txt")) files.push_back("body.txt");
    for (const auto& f : files_under(root_, root_ / "assets")) files.push_back(f);
    for (auto agent : gateway::kGenerationAgents)
      files.push_back(fs::relative(store_.path_for(agent, 0), root_).generic_string());
    record_artifacts(rec, root_, files);
    rec.status = StageStatus::done;
    state_.preprocessing = rec;
    save_state();
    executed_ = true;
  }

  void load_assets() { assets_ = ingest::read_manifest(root_ / "manifest.json"); }

  void verify() const {
    auto check = [&](const StageRecord& rec, const std::string& what) {
      if (rec.status != StageStatus::done) return;
      for (const auto& [path, sha] : rec.artifacts) {
        fs::path p = root_ / path;
        if (!fs::is_regular_file(p)) raise(ErrorCode::CorruptState, what + " artifact " + path + " is missing");
        if (sha256_file(p) != sha) raise(ErrorCode::CorruptState, what + " artifact " + path + " does not match its checksum");
      }
    };
    check(state_.preprocessing, "preprocessing");
    for (const auto& it : state_.iterations)
      for (const auto& [stage, rec] : it.stages)
        check(rec, "iteration " + std::to_string(it.iteration) + " " + to_string(stage));
  }

  void run_iterations() {
    for (auto& it : state_.iterations) {
      for (auto stage : kStageOrder) {
        auto& rec = it.stages[stage];
        if (rec.status == StageStatus::done) continue;
        run_stage(it.iteration, stage, rec);
      }
    }
  }

  void finish() {
    fs::path manifest = root_ / "run_manifest.json";
    if (executed_ || !fs::exists(manifest)) write_json(manifest, build_run_manifest(state_, root_));
  }

  RunResult result() const {
    RunResult r;
    r.paper_root = root_;
    r.executed_anything = executed_;
    for (const auto& it : state_.iterations) {
      fs::path dir = root_ / iter_dir_name(it.iteration);
      if (fs::exists(dir / "video.json")) r.videos.push_back(video_from_json(read_json(dir / "video.json"), dir));
      if (fs::exists(dir / "evaluation.json")) r.reports.push_back(evaluate::report_from_json(read_json(dir / "evaluation.json")));
    }
    return r;
  }

 private:
  void save_state() const { write_json(root_ / "state.json", to_json(state_)); }

  void run_stage(int j, Stage stage, StageRecord& rec) {
    spdlog::info("iteration {} {}", j, to_string(stage));
    gateway_.set_context({{"iteration", j}, {"stage", to_string(stage)}});
    executed_ = true;
    try {
      StageRecord fresh;
      switch (stage) {
        case Stage::planning: planning_stage(j, fresh); break;
        case Stage::editing: editing_stage(j, fresh); break;
        case Stage::compose: compose_stage(j, fresh); break;
        case Stage::feedback: feedback_stage(j, fresh); break;
        case Stage::evaluation: evaluation_stage(j, fresh); break;
      }
      fresh.status = StageStatus::done;
      rec = fresh;
    } catch (const std::exception& e) {
      rec.status = StageStatus::failed;
      rec.error = e.what();
      save_state();
      gateway_.set_context(json::object());
      throw;
    }
    gateway_.set_context(json::object());
    save_state();
    if (config_.kill_after && config_.kill_after->iteration == j && config_.kill_after->stage == stage) {
      spdlog::warn("kill hook reached after iteration {} {}", j, to_string(stage));
      spdlog::default_logger()->flush();
      std::_Exit(kKillExitCode);
    }
  }

  fs::path dir(int j) const { return root_ / iter_dir_name(j); }
  std::string rel(const fs::path& p) const { return fs::relative(p, root_).generic_string(); }

  void planning_stage(int j, StageRecord& rec) {
    fs::path d = dir(j);
    fs::remove_all(d / "audio");
    fs::remove_all(d / "avatar");
    fs::create_directories(d);
    auto script = planning::generate_flashtalk(assets_, store_.get(AgentId::F, j - 1), gateway_, config_.target_duration_s);
    if (auto bad = planning::check_script(script, assets_)) raise(ErrorCode::InvalidModelOutput, "flashtalk: " + *bad);
    write_json(d / "flashtalk.json", planning::to_json(script));

    auto tts = planning::make_tts_backend(config_.tts);
    auto avatar = planning::make_avatar_backend(config_.avatar);
    std::vector<planning::AudioTrack> audio;
    json audio_j = json::array(), avatar_j = json::array();
    for (const auto& section : script.sections) {
      audio.push_back(planning::synthesize_narration(section, *tts, d / "audio"));
      auto clip = planning::render_avatar(section, audio.back(), *avatar, d / "avatar");
      audio_j.push_back(planning::to_json(audio.back(), d));
      avatar_j.push_back(planning::to_json(clip, d));
    }
    write_json(d / "audio.json", audio_j);
    write_json(d / "avatar.json", avatar_j);

    auto plan = planning::generate_sceneplan(script, audio, store_.get(AgentId::S, j - 1), gateway_);
    if (auto bad = planning::check_plan(plan, script, audio)) raise(ErrorCode::InfeasiblePlan, *bad);
    write_json(d / "sceneplan.json", planning::to_json(plan));

    std::vector<std::string> files = {rel(d / "flashtalk.json"), rel(d / "audio.json"), rel(d / "avatar.json"),
                                      rel(d / "sceneplan.json")};
    for (const auto& f : files_under(root_, d / "audio")) files.push_back(f);
    for (const auto& f : files_under(root_, d / "avatar")) files.push_back(f);
    record_artifacts(rec, root_, files);
  }

  struct Loaded {
    planning::FlashtalkScript script;
    planning::ScenePlan plan;
    std::vector<planning::AudioTrack> audio;
    std::vector<planning::AvatarClip> avatars;
    std::map<std::string, editing::SceneDirectives> directives;
  };

  Loaded load(int j, bool with_directives) const {
    fs::path d = dir(j);
    Loaded l;
    l.script = planning::script_from_json(read_json(d / "flashtalk.json"));
    l.plan = planning::plan_from_json(read_json(d / "sceneplan.json"));
    for (const auto& a : read_json(d / "audio.json")) l.audio.push_back(planning::audio_from_json(a, d));
    for (const auto& a : read_json(d / "avatar.json")) l.avatars.push_back(planning::avatar_from_json(a, d));
    if (with_directives)
      for (const auto& scene : l.plan.scenes)
        for (const auto& sub : scene.sub_scenes)
          l.directives[sub.sub_scene_id] =
              editing::directives_from_json(read_json(d / "directives" / (sub.sub_scene_id + ".json")));
    return l;
  }

  void editing_stage(int j, StageRecord& rec) {
    fs::path d = dir(j);
    fs::remove_all(d / "directives");
    auto l = load(j, false);
    editing::EditingPrompts prompts{store_.get(AgentId::B, j - 1), store_.get(AgentId::T, j - 1),
                                    store_.get(AgentId::E, j - 1), store_.get(AgentId::L, j - 1)};
    editing::EditingOptions options{config_.fixed_black_background, config_.sanity_check};
    json reports = json::array();
    std::vector<std::string> files;
    for (std::size_t i = 0; i < l.plan.scenes.size(); ++i) {
      const auto& scene = l.plan.scenes[i];
      bool avatar_present = l.avatars[i].path.has_value();
      for (std::size_t k = 0; k < scene.sub_scenes.size(); ++k) {
        const auto& sub = scene.sub_scenes[k];
        gateway_.set_context({{"iteration", j}, {"stage", "editing"}, {"sub_scene", sub.sub_scene_id}});
        std::pair<editing::SceneDirectives, editing::SanityReport> out;
        try {
          out = editing::generate_directives(sub, planning::narration_slice(l.script.sections[i], scene, k), assets_,
                                             prompts, gateway_, options, avatar_present);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::BackendUnavailable) throw;
          spdlog::warn("editing {} failed ({}); using the fallback layout", sub.sub_scene_id, e.what());
          out = editing::sanity_check(fallback_directives(sub, avatar_present), config_.sanity_check);
        }
        fs::path p = d / "directives" / (sub.sub_scene_id + ".json");
        write_json(p, editing::to_json(out.first));
        files.push_back(rel(p));
        reports.push_back(editing::to_json(out.second));
      }
    }
    write_json(d / "sanity_report.json", reports);
    files.push_back(rel(d / "sanity_report.json"));
    record_artifacts(rec, root_, files);
  }

  void compose_stage(int j, StageRecord& rec) {
    fs::path d = dir(j);
    auto l = load(j, true);
    auto clips = build_clips(l.plan, l.directives, l.audio, assets_, config_.video);
    auto video = compose::assemble_video(clips, l.audio, l.avatars, d / "video.mp4", config_.video, j);
    write_json(d / "video.json", detail::to_json(video, d));
    record_artifacts(rec, root_, {rel(d / "video.mp4"), rel(d / "video.json")});
  }

  void feedback_stage(int j, StageRecord& rec) {
    fs::path d = dir(j);
    fs::remove_all(d / "feedback_frames");
    auto l = load(j, true);
    feedback::IterationInputs in;
    in.iteration = j;
    in.video = video_from_json(read_json(d / "video.json"), d);
    in.script = std::move(l.script);
    in.plan = std::move(l.plan);
    in.audio = std::move(l.audio);
    in.directives = std::move(l.directives);
    std::map<AgentId, gateway::PromptState> prompts;
    for (auto agent : gateway::kGenerationAgents) prompts[agent] = store_.get(agent, j - 1);
    auto out = feedback::run_feedback_iteration(in, prompts, gateway_, config_.feedback, d, &store_);
    write_json(d / "feedback_warnings.json", out.warnings);

    std::vector<std::string> files = {rel(d / "feedback_summary.json"), rel(d / "feedback_warnings.json")};
    if (fs::exists(d / "feedback.jsonl")) files.push_back(rel(d / "feedback.jsonl"));
    for (const auto& f : files_under(root_, d / "feedback_frames")) files.push_back(f);
    for (auto agent : gateway::kGenerationAgents) files.push_back(rel(store_.path_for(agent, j)));
    record_artifacts(rec, root_, files);
  }

  void evaluation_stage(int j, StageRecord& rec) {
    if (!config_.evaluation) return;
    fs::path d = dir(j);
    fs::remove_all(d / "eval_frames");
    auto script = planning::script_from_json(read_json(d / "flashtalk.json"));
    evaluate::EvaluateOptions opts;
    opts.paper_id = state_.paper_id;
    opts.iteration = j;
    opts.condition = evaluate::kMultiAgent;
    opts.frames = config_.evaluation_frames;
    opts.score_min = config_.feedback.score_min;
    opts.score_max = config_.feedback.score_max;
    auto report = evaluate::evaluate_video(d / "video.mp4", full_narration(script), gateway_, d / "eval_frames", opts);
    report.video = rel(d / "video.mp4");
    write_json(d / "evaluation.json", evaluate::to_json(report));
    std::vector<std::string> files = {rel(d / "evaluation.json")};
    for (const auto& f : files_under(root_, d / "eval_frames")) files.push_back(f);
    record_artifacts(rec, root_, files);
  }

  PipelineConfig config_;
  fs::path root_;
  RunState state_;
  gateway::Gateway gateway_;
  feedback::PromptStore store_;
  ingest::PaperAssets assets_;
  bool executed_ = false;
};

void clear_outputs(const fs::path& root) {
  if (!fs::is_directory(root)) return;
  for (const auto& e : fs::directory_iterator(root)) {
    std::string name = e.path().filename().string();
    if (name.rfind("iter", 0) == 0 || name == "prompts" || name == "logs" || name == "state.json" ||
        name == "run_manifest.json")
      fs::remove_all(e.path());
  }
}

RunState fresh_state(const std::string& paper_id, const std::string& source_ref, const PipelineConfig& config) {
  RunState s;
  s.paper_id = paper_id;
  s.source_ref = source_ref;
  s.config = to_json(config);
  for (int j = 1; j <= config.iterations; ++j) {
    IterationState it;
    it.iteration = j;
    for (auto stage : kStageOrder) it.stages[stage] = {};
    s.iterations.push_back(std::move(it));
  }
  return s;
}

}  // namespace

json build_run_manifest(const RunState& state, const fs::path& paper_root) {
  std::map<std::string, std::string> files = state.preprocessing.artifacts;
  json stages = json::array();
  for (const auto& it : state.iterations) {
    json st = json::object();
    for (const auto& [stage, rec] : it.stages) {
      st[to_string(stage)] = to_string(rec.status);
      files.insert(rec.artifacts.begin(), rec.artifacts.end());
    }
    stages.push_back({{"iteration", it.iteration}, {"stages", st}});
  }
  json listing = json::array();
  for (const auto& [path, sha] : files)
    listing.push_back({{"path", path}, {"sha256", sha}, {"bytes", fs::file_size(paper_root / path)}});
  json lineage = json::object();
  feedback::PromptStore store(paper_root);
  for (auto agent : gateway::kGenerationAgents) {
    int n = 0;
    while (store.has(agent, n)) ++n;
    lineage[gateway::to_string(agent)] = n;
  }
  return {{"schema", "papercast.run_manifest"},
          {"paper_id", state.paper_id},
          {"condition", state.condition},
          {"config", state.config},
          {"iterations", stages},
          {"prompt_lineage", lineage},
          {"files", listing}};
}

RunResult run_pipeline(const std::string& source_ref, const PipelineConfig& config) {
  validate_config(config);
  fs::create_directories(config.workdir);
  auto bundle = ingest::fetch_paper(source_ref, config.workdir);
  clear_outputs(bundle.root);
  Runner runner(config, bundle.root, fresh_state(bundle.paper_id, source_ref, config));
  runner.preprocess(bundle);
  runner.run_iterations();
  runner.finish();
  return runner.result();
}

RunResult resume(const std::string& paper_id, const PipelineConfig& config) {
  fs::path root = config.workdir / paper_id;
  fs::path state_path = root / "state.json";
  if (!fs::exists(state_path)) raise(ErrorCode::NotFound, "no run state for paper '" + paper_id + "'");
  json raw;
  try {
    raw = read_json(state_path);
  } catch (const Error& e) {
    raise(ErrorCode::CorruptState, std::string("unreadable run state: ") + e.what());
  }
  RunState state = state_from_json(raw);
  if (state.paper_id != paper_id) raise(ErrorCode::CorruptState, "state belongs to paper '" + state.paper_id + "'");

  PipelineConfig effective;
  try {
    effective = config_from_json(state.config);
  } catch (const Error& e) {
    raise(ErrorCode::CorruptState, std::string("stored config is invalid: ") + e.what());
  }
  effective.workdir = config.workdir;
  effective.kill_after = config.kill_after;

  Runner runner(effective, root, state);
  runner.verify();
  if (state.preprocessing.status == StageStatus::done) runner.load_assets();
  else runner.preprocess();
  runner.run_iterations();
  runner.finish();
  return runner.result();
}

}  // namespace papercast::orchestrator
