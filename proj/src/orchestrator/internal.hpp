#pragma once

#include <map>
#include <string>
#include <vector>

#include "papercast/orchestrator/orchestrator.hpp"

namespace papercast::orchestrator::detail {

inline constexpr int kKillExitCode = 86;

std::string iter_dir_name(int iteration);
// Applies the same checks as config_from_json to a config built in code.
void validate_config(const PipelineConfig& config);

// Files under `dir` (recursively), as paths relative to `root`.
std::vector<std::string> files_under(const fs::path& root, const fs::path& dir);
void record_artifacts(StageRecord& rec, const fs::path& root, const std::vector<std::string>& rel_paths);

std::string full_narration(const planning::FlashtalkScript& script);

// Images on a grid, the avatar in its corner, nothing else. Used when the
// editing agents fail for one sub-scene.
editing::SceneDirectives fallback_directives(const planning::SubScene& sub, bool avatar_present);

std::vector<std::vector<compose::ClipSegment>> build_clips(
    const planning::ScenePlan& plan, const std::map<std::string, editing::SceneDirectives>& directives,
    const std::vector<planning::AudioTrack>& audio, const ingest::PaperAssets& assets,
    const media::VideoSettings& canvas);

json to_json(const compose::VideoArtifact& v, const fs::path& base);
compose::VideoArtifact video_from_json(const json& j, const fs::path& base);

}  // namespace papercast::orchestrator::detail
