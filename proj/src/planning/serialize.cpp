#include "papercast/planning/planning.hpp"

namespace papercast::planning {

namespace {

std::string store_path(const fs::path& p, const fs::path& base) {
  return base.empty() ? p.string() : p.lexically_relative(base).generic_string();
}

fs::path load_path(const std::string& p, const fs::path& base) { return base.empty() ? fs::path(p) : base / p; }

}  // namespace

json to_json(const FlashtalkScript& script) {
  json sections = json::array();
  for (const auto& s : script.sections)
    sections.push_back({{"kind", to_string(s.kind)},
                        {"order_index", s.order_index},
                        {"narration_text", s.narration_text},
                        {"assigned_image_ids", s.assigned_image_ids}});
  return {{"schema", "papercast.flashtalk"},
          {"version", 1},
          {"target_duration_s", script.target_duration_s},
          {"sections", sections},
          {"warnings", script.warnings}};
}

FlashtalkScript script_from_json(const json& j) {
  FlashtalkScript script;
  script.target_duration_s = j.at("target_duration_s").get<double>();
  for (const auto& s : j.at("sections")) {
    Section sec;
    sec.kind = parse_section_kind(s.at("kind").get<std::string>());
    sec.order_index = s.at("order_index").get<int>();
    sec.narration_text = s.at("narration_text").get<std::string>();
    sec.assigned_image_ids = s.at("assigned_image_ids").get<std::vector<std::string>>();
    script.sections.push_back(std::move(sec));
  }
  script.warnings = j.value("warnings", std::vector<std::string>{});
  return script;
}

json to_json(const ScenePlan& plan) {
  json scenes = json::array();
  for (const auto& sc : plan.scenes) {
    json subs = json::array();
    for (const auto& s : sc.sub_scenes) {
      json images = json::array();
      for (const auto& i : s.images) images.push_back({{"asset_id", i.asset_id}, {"duration_s", i.duration_s}});
      subs.push_back({{"sub_scene_id", s.sub_scene_id},
                      {"description", s.description},
                      {"start_s", s.start_s},
                      {"duration_s", s.duration_s},
                      {"images", images}});
    }
    scenes.push_back({{"section_kind", to_string(sc.section_kind)}, {"sub_scenes", subs}});
  }
  return {{"schema", "papercast.sceneplan"}, {"version", 1}, {"scenes", scenes}};
}

ScenePlan plan_from_json(const json& j) {
  ScenePlan plan;
  for (const auto& sc : j.at("scenes")) {
    Scene scene;
    scene.section_kind = parse_section_kind(sc.at("section_kind").get<std::string>());
    for (const auto& s : sc.at("sub_scenes")) {
      SubScene sub;
      sub.sub_scene_id = s.at("sub_scene_id").get<std::string>();
      sub.description = s.at("description").get<std::string>();
      sub.start_s = s.at("start_s").get<double>();
      sub.duration_s = s.at("duration_s").get<double>();
      for (const auto& i : s.at("images")) sub.images.push_back({i.at("asset_id").get<std::string>(), i.at("duration_s").get<double>()});
      scene.sub_scenes.push_back(std::move(sub));
    }
    plan.scenes.push_back(std::move(scene));
  }
  return plan;
}

json to_json(const AudioTrack& track, const fs::path& base) {
  return {{"section_kind", to_string(track.section_kind)},
          {"path", store_path(track.path, base)},
          {"duration_s", track.duration_s}};
}

AudioTrack audio_from_json(const json& j, const fs::path& base) {
  return {parse_section_kind(j.at("section_kind").get<std::string>()), load_path(j.at("path").get<std::string>(), base),
          j.at("duration_s").get<double>()};
}

json to_json(const AvatarClip& clip, const fs::path& base) {
  return {{"section_kind", to_string(clip.section_kind)},
          {"path", clip.path ? json(store_path(*clip.path, base)) : json(nullptr)},
          {"duration_s", clip.duration_s}};
}

AvatarClip avatar_from_json(const json& j, const fs::path& base) {
  AvatarClip clip;
  clip.section_kind = parse_section_kind(j.at("section_kind").get<std::string>());
  if (j.contains("path") && j["path"].is_string()) clip.path = load_path(j["path"].get<std::string>(), base);
  clip.duration_s = j.at("duration_s").get<double>();
  return clip;
}

}  // namespace papercast::planning
