#include <algorithm>

#include <spdlog/spdlog.h>

#include "internal.hpp"
#include "papercast/common/error.hpp"
#include "papercast/common/text.hpp"
#include "papercast/gateway/backends.hpp"

namespace papercast::orchestrator {

using namespace detail;

namespace {

json paper_input(const ingest::PaperAssets& assets, double target_duration_s) {
  json sections = json::array();
  for (const auto& s : assets.body_text) {
    auto words = text::split_words(s.text);
    if (words.size() > 400) words.resize(400);
    sections.push_back({{"heading", s.heading}, {"text", text::join(words, " ")}});
  }
  json list = json::array();
  for (const auto& img : assets.images)
    list.push_back({{"asset_id", img.asset_id}, {"kind", ingest::to_string(img.kind)}, {"caption", img.caption.value_or("")}});
  return {{"title", assets.title}, {"sections", sections}, {"assets", list}, {"target_duration_s", target_duration_s}};
}

editing::SceneDirectives baseline_directives(const planning::SubScene& sub, const json& text_j, bool avatar_present,
                                             std::vector<std::string>& warnings) {
  editing::SceneDirectives d;
  d.sub_scene_id = sub.sub_scene_id;
  d.duration_s = sub.duration_s;
  d.image_ids = sub.image_ids();
  d.avatar = avatar_present;

  editing::TextOverlay o;
  o.overlay_id = "text_1";
  o.content = text::normalize_space(text_j["content"].get<std::string>());
  o.font_size_pt = std::clamp(text_j["font_size_pt"].get<int>(), editing::kFontMin, editing::kFontMax);
  o.color = text_j["color"].get<std::string>();
  if (!editing::is_hex_color(o.color)) {
    warnings.push_back(sub.sub_scene_id + ": replaced text color " + o.color);
    o.color = "#FFFFFF";
  }
  const json& p = text_j["position"];
  o.position = editing::clamp_to_frame({p["x"].get<double>(), p["y"].get<double>(), p["w"].get<double>(), p["h"].get<double>()});
  o.start_s = 0.0;
  o.duration_s = sub.duration_s;
  d.overlays.push_back(o);
  d.layout.placements[o.overlay_id] = o.position;

  // Images share the band between the avatar corner and the text.
  auto grid = editing::fallback_grid(d.image_ids.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    d.layout.placements[d.image_ids[i]] = {grid[i].x, 0.19 + grid[i].y * 0.58, grid[i].w, grid[i].h * 0.58};
  if (avatar_present) d.layout.placements[editing::kAvatarId] = {0.70, 0.03, 0.27, 0.15};

  std::vector<std::string> components = d.image_ids;
  components.push_back(o.overlay_id);
  if (avatar_present) components.push_back(editing::kAvatarId);
  d.effects = editing::normalize_effects({}, sub, components, &d.warnings);
  return d;
}

}  // namespace

BaselineResult run_baseline(const std::string& source_ref, const PipelineConfig& config) {
  validate_config(config);
  fs::create_directories(config.workdir);
  auto bundle = ingest::fetch_paper(source_ref, config.workdir);
  auto assets = ingest::extract_assets(bundle);
  ingest::write_manifest(assets);

  BaselineResult result;
  result.paper_root = bundle.root;
  fs::path d = bundle.root / "baseline";
  fs::remove_all(d);
  fs::create_directories(d);

  gateway::Gateway gw(gateway::make_backend(config.backend, config.seed), config.gateway);
  gw.log().mirror_to(d / "calls.jsonl");
  gw.set_context({{"stage", "baseline"}});

  double target = std::clamp(config.target_duration_s, planning::kTargetDurationMin, planning::kTargetDurationMax);
  gateway::ModelRequest req;
  req.agent = gateway::AgentId::F;
  req.schema_id = "baseline_v1";
  for (const auto& img : assets.images)
    if (req.attached_images.size() < gw.backend().image_limit()) req.attached_images.push_back({img.asset_id, img.path});
  req.prompt_text = gateway::with_input(gateway::baseline_prompt(), paper_input(assets, target));
  auto resp = gw.complete_structured(req);
  if (!resp.valid) raise(ErrorCode::InvalidModelOutput, "baseline output rejected: " + resp.error);
  const json& out = *resp.parsed;
  write_json(d / "baseline_output.json", out);

  planning::FlashtalkScript script;
  script.target_duration_s = target;
  for (std::size_t i = 0; i < out["sections"].size(); ++i) {
    const json& s = out["sections"][i];
    planning::Section sec;
    sec.kind = planning::kSectionOrder[i];
    sec.order_index = static_cast<int>(i);
    sec.narration_text = text::normalize_space(s["narration"].get<std::string>());
    for (const auto& id : s["image_ids"]) {
      std::string aid = id.get<std::string>();
      bool dup = std::find(sec.assigned_image_ids.begin(), sec.assigned_image_ids.end(), aid) != sec.assigned_image_ids.end();
      if (!dup && assets.find(aid)) sec.assigned_image_ids.push_back(aid);
      else script.warnings.push_back("dropped asset reference '" + aid + "' in " + planning::to_string(sec.kind));
    }
    script.sections.push_back(std::move(sec));
  }
  if (auto bad = planning::check_script(script, assets)) raise(ErrorCode::InvalidModelOutput, "baseline script: " + *bad);
  write_json(d / "flashtalk.json", planning::to_json(script));

  auto tts = planning::make_tts_backend(config.tts);
  auto avatar = planning::make_avatar_backend(config.avatar);
  std::vector<planning::AudioTrack> audio;
  std::vector<planning::AvatarClip> avatars;
  planning::ScenePlan plan;
  std::map<std::string, editing::SceneDirectives> directives;
  json sanity = json::array();
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < script.sections.size(); ++i) {
    const auto& section = script.sections[i];
    audio.push_back(planning::synthesize_narration(section, *tts, d / "audio"));
    avatars.push_back(planning::render_avatar(section, audio.back(), *avatar, d / "avatar"));

    json subs = json::array();
    const json& model_subs = out["sections"][i]["sub_scenes"];
    for (const auto& sub : model_subs) {
      json images = json::array();
      for (const auto& id : sub["image_ids"]) images.push_back({{"asset_id", id}});
      subs.push_back({{"description", sub["description"]}, {"duration_s", sub["duration_s"]}, {"images", images}});
    }
    plan.scenes.push_back(planning::build_scene(section, audio.back(), subs));
    const auto& scene = plan.scenes.back();
    for (std::size_t k = 0; k < scene.sub_scenes.size(); ++k) {
      const auto& sub = scene.sub_scenes[k];
      auto draft = baseline_directives(sub, model_subs[k]["text"], avatars.back().path.has_value(), warnings);
      auto [checked, report] = editing::sanity_check(draft, config.sanity_check);
      sanity.push_back(editing::to_json(report));
      write_json(d / "directives" / (sub.sub_scene_id + ".json"), editing::to_json(checked));
      directives[sub.sub_scene_id] = std::move(checked);
    }
  }
  if (auto bad = planning::check_plan(plan, script, audio)) raise(ErrorCode::InfeasiblePlan, "baseline plan: " + *bad);
  write_json(d / "sceneplan.json", planning::to_json(plan));
  write_json(d / "sanity_report.json", sanity);
  for (const auto& w : warnings) spdlog::warn("baseline: {}", w);

  auto clips = build_clips(plan, directives, audio, assets, config.video);
  result.video = compose::assemble_video(clips, audio, avatars, d / "video.mp4", config.video, 0);
  write_json(d / "video.json", detail::to_json(result.video, d));
  result.generation_calls = gw.log().count_generation();

  if (config.evaluation) {
    gw.set_context({{"stage", "evaluation"}});
    evaluate::EvaluateOptions opts;
    opts.paper_id = bundle.paper_id;
    opts.iteration = 0;
    opts.condition = evaluate::kSingleAgent;
    opts.frames = config.evaluation_frames;
    opts.score_min = config.feedback.score_min;
    opts.score_max = config.feedback.score_max;
    auto report = evaluate::evaluate_video(d / "video.mp4", full_narration(script), gw, d / "eval_frames", opts);
    report.video = fs::relative(d / "video.mp4", bundle.root).generic_string();
    write_json(d / "evaluation.json", evaluate::to_json(report));
    result.report = report;
  }
  return result;
}

}  // namespace papercast::orchestrator
