#include <algorithm>

#include <fmt/format.h>

#include "internal.hpp"
#include "papercast/common/error.hpp"
#include "papercast/common/text.hpp"

namespace papercast::orchestrator::detail {

std::string iter_dir_name(int iteration) { return "iter" + std::to_string(iteration); }

std::vector<std::string> files_under(const fs::path& root, const fs::path& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).generic_string());
  std::sort(out.begin(), out.end());
  return out;
}

void record_artifacts(StageRecord& rec, const fs::path& root, const std::vector<std::string>& rel_paths) {
  for (const auto& p : rel_paths) {
    if (!fs::is_regular_file(root / p)) raise(ErrorCode::PreconditionViolation, "artifact " + p + " was not written");
    rec.artifacts[p] = sha256_file(root / p);
  }
}

std::string full_narration(const planning::FlashtalkScript& script) {
  std::vector<std::string> parts;
  for (const auto& s : script.sections) parts.push_back(s.narration_text);
  return text::join(parts, " ");
}

editing::SceneDirectives fallback_directives(const planning::SubScene& sub, bool avatar_present) {
  editing::SceneDirectives d;
  d.sub_scene_id = sub.sub_scene_id;
  d.duration_s = sub.duration_s;
  d.image_ids = sub.image_ids();
  d.avatar = avatar_present;
  // Grid below the avatar corner.
  auto grid = editing::fallback_grid(d.image_ids.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    editing::Rect r = grid[i];
    d.layout.placements[d.image_ids[i]] = {r.x, 0.19 + r.y * 0.76, r.w, r.h * 0.76};
  }
  if (avatar_present) d.layout.placements[editing::kAvatarId] = {0.70, 0.03, 0.27, 0.15};
  d.warnings.push_back("editing agents failed; used the fallback layout");
  return d;
}

std::vector<std::vector<compose::ClipSegment>> build_clips(
    const planning::ScenePlan& plan, const std::map<std::string, editing::SceneDirectives>& directives,
    const std::vector<planning::AudioTrack>& audio, const ingest::PaperAssets& assets,
    const media::VideoSettings& canvas) {
  auto spans = compose::sub_scene_spans(plan, audio);
  std::vector<std::vector<compose::ClipSegment>> clips;
  std::size_t idx = 0;
  for (const auto& scene : plan.scenes) {
    clips.emplace_back();
    for (const auto& sub : scene.sub_scenes) {
      auto it = directives.find(sub.sub_scene_id);
      if (it == directives.end()) raise(ErrorCode::MissingAsset, "no directives for " + sub.sub_scene_id);
      clips.back().push_back(compose::build_subscene_clip(it->second, assets, sub, canvas, spans[idx++].second.first));
    }
  }
  return clips;
}

json to_json(const compose::VideoArtifact& v, const fs::path& base) {
  return {{"path", base.empty() ? v.path.generic_string() : fs::relative(v.path, base).generic_string()},
          {"duration_s", v.duration_s},
          {"width_px", v.width_px},
          {"height_px", v.height_px},
          {"iteration", v.iteration}};
}

compose::VideoArtifact video_from_json(const json& j, const fs::path& base) {
  compose::VideoArtifact v;
  v.path = base / j.at("path").get<std::string>();
  v.duration_s = j.at("duration_s").get<double>();
  v.width_px = j.at("width_px").get<int>();
  v.height_px = j.at("height_px").get<int>();
  v.iteration = j.at("iteration").get<int>();
  return v;
}

void validate_config(const PipelineConfig& config) { (void)config_from_json(to_json(config)); }

}  // namespace papercast::orchestrator::detail
