#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "papercast/gateway/gateway.hpp"
#include "papercast/gateway/prompts.hpp"
#include "papercast/ingest/ingest.hpp"

namespace papercast::planning {

using gateway::Gateway;
using gateway::PromptState;

enum class SectionKind { aggressive_hook, brief_context, intriguing_teaser, call_to_action };
inline constexpr std::array<SectionKind, 4> kSectionOrder = {
    SectionKind::aggressive_hook, SectionKind::brief_context, SectionKind::intriguing_teaser,
    SectionKind::call_to_action};

std::string to_string(SectionKind kind);
SectionKind parse_section_kind(const std::string& s);

struct Section {
  SectionKind kind = SectionKind::aggressive_hook;
  std::string narration_text;
  std::vector<std::string> assigned_image_ids;
  int order_index = 0;

  bool operator==(const Section&) const = default;
};

struct FlashtalkScript {
  std::vector<Section> sections;
  double target_duration_s = 120.0;
  std::vector<std::string> warnings;  // dropped asset references and similar
};

struct AudioTrack {
  SectionKind section_kind = SectionKind::aggressive_hook;
  fs::path path;
  double duration_s = 0.0;
};

struct AvatarClip {
  SectionKind section_kind = SectionKind::aggressive_hook;
  std::optional<fs::path> path;  // absent for the `none` backend
  double duration_s = 0.0;
};

struct TimedImage {
  std::string asset_id;
  double duration_s = 0.0;

  bool operator==(const TimedImage&) const = default;
};

struct SubScene {
  std::string sub_scene_id;
  std::string description;
  double start_s = 0.0;  // relative to the section start
  double duration_s = 0.0;
  std::vector<TimedImage> images;

  [[nodiscard]] std::vector<std::string> image_ids() const;
  bool operator==(const SubScene&) const = default;
};

struct Scene {
  SectionKind section_kind = SectionKind::aggressive_hook;
  std::vector<SubScene> sub_scenes;

  [[nodiscard]] double duration_s() const;
  bool operator==(const Scene&) const = default;
};

struct ScenePlan {
  std::vector<Scene> scenes;

  [[nodiscard]] std::size_t sub_scene_count() const;
  [[nodiscard]] const SubScene* find(const std::string& sub_scene_id) const;
};

inline constexpr double kTargetDurationDefault = 120.0;
inline constexpr double kTargetDurationMin = 60.0;
inline constexpr double kTargetDurationMax = 180.0;
inline constexpr double kStubWordsPerSecond = 2.5;
inline constexpr int kMaxSubScenes = 5;

// ---- script ---------------------------------------------------------------

FlashtalkScript generate_flashtalk(const ingest::PaperAssets& assets, const PromptState& prompt, Gateway& gateway,
                                   double target_duration_s = kTargetDurationDefault);

// Checks every FlashtalkScript invariant; returns the first violation.
std::optional<std::string> check_script(const FlashtalkScript& script, const ingest::PaperAssets& assets);

// ---- narration and avatar -------------------------------------------------

class TtsBackend {
 public:
  virtual ~TtsBackend() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  // Writes the audio file and returns its duration in seconds.
  virtual double synthesize(const std::string& text, const fs::path& out_path) = 0;
};

// Silence lasting words / 2.5 seconds, written as 48 kHz WAV.
class StubTts final : public TtsBackend {
 public:
  [[nodiscard]] std::string name() const override { return "stub"; }
  double synthesize(const std::string& text, const fs::path& out_path) override;
};

class AvatarBackend {
 public:
  virtual ~AvatarBackend() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  // Returns the clip path, or nullopt when the backend produces no avatar.
  virtual std::optional<fs::path> render(const AudioTrack& audio, const fs::path& out_path) = 0;
};

// A static placeholder portrait for the length of the narration.
class StubAvatar final : public AvatarBackend {
 public:
  [[nodiscard]] std::string name() const override { return "stub"; }
  std::optional<fs::path> render(const AudioTrack& audio, const fs::path& out_path) override;
};

class NoAvatar final : public AvatarBackend {
 public:
  [[nodiscard]] std::string name() const override { return "none"; }
  std::optional<fs::path> render(const AudioTrack&, const fs::path&) override { return std::nullopt; }
};

std::shared_ptr<TtsBackend> make_tts_backend(const std::string& name);
std::shared_ptr<AvatarBackend> make_avatar_backend(const std::string& name);

inline constexpr int kAvatarSizePx = 320;

// Writes <out_dir>/<section kind>.wav.
AudioTrack synthesize_narration(const Section& section, TtsBackend& tts, const fs::path& out_dir);
// Writes <out_dir>/<section kind>.mp4 unless the backend yields nothing.
AvatarClip render_avatar(const Section& section, const AudioTrack& audio, AvatarBackend& avatar,
                         const fs::path& out_dir);

// ---- scene plan -----------------------------------------------------------

ScenePlan generate_sceneplan(const FlashtalkScript& script, const std::vector<AudioTrack>& audio,
                             const PromptState& prompt, Gateway& gateway);

// Turns model sub-scenes ({description, duration_s, images}) into a scene
// whose durations fill the narration and whose images match the section.
Scene build_scene(const Section& section, const AudioTrack& audio, const json& sub_scenes);

// Scales `raw` so it sums to `total`. Falls back to an equal split when the
// raw values are unusable (non-positive or non-finite).
std::vector<double> rescale_durations(const std::vector<double>& raw, double total);

// Makes the scene's images exactly the section's assignment: model-placed ids
// are kept once per assignment, unknown or surplus ids are dropped, and the
// rest go to the earliest sub-scene holding the fewest images. Image
// durations are capped by their host sub-scene.
Scene redistribute_images(const Scene& scene, const Section& section);

// Words of the section narration spoken during sub-scene `index`, assuming a
// constant speaking rate across the section.
std::string narration_slice(const Section& section, const Scene& scene, std::size_t index);

std::optional<std::string> check_plan(const ScenePlan& plan, const FlashtalkScript& script,
                                      const std::vector<AudioTrack>& audio);

// ---- persistence ----------------------------------------------------------

json to_json(const FlashtalkScript& script);
FlashtalkScript script_from_json(const json& j);
json to_json(const ScenePlan& plan);
ScenePlan plan_from_json(const json& j);
// Paths are stored relative to `base` when it is given.
json to_json(const AudioTrack& track, const fs::path& base = {});
AudioTrack audio_from_json(const json& j, const fs::path& base = {});
json to_json(const AvatarClip& clip, const fs::path& base = {});
AvatarClip avatar_from_json(const json& j, const fs::path& base = {});

}  // namespace papercast::planning
