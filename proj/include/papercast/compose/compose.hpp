#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <opencv2/core.hpp>

#include "papercast/editing/editing.hpp"
#include "papercast/ingest/ingest.hpp"
#include "papercast/media/video.hpp"
#include "papercast/planning/planning.hpp"

namespace papercast::compose {

using editing::SceneDirectives;

inline constexpr int kModelFrameWidth = 360;
inline constexpr int kModelFrameHeight = 640;
inline constexpr double kSceneDurationTolerance = 0.25;
inline constexpr double kVideoDurationTolerance = 0.5;

struct VideoArtifact {
  fs::path path;
  double duration_s = 0.0;
  int width_px = 0;
  int height_px = 0;
  int iteration = 0;
};

struct FrameSet {
  std::vector<fs::path> frames;
  std::vector<double> timestamps_s;
  std::pair<double, double> source_span{0.0, 0.0};
  int width = kModelFrameWidth;
  int height = kModelFrameHeight;
};

// Frame timing of one effect inside a clip, in local frame indices.
struct EffectState {
  double progress = 0.0;  // 0 before the window, 1 after it
  bool active = false;
};

// A renderable sub-scene. Frame k of the clip shows the instant
// global_start_s + k / fps.
class ClipSegment {
 public:
  ClipSegment(SceneDirectives directives, const ingest::PaperAssets& assets, const media::VideoSettings& canvas,
              double global_start_s);

  [[nodiscard]] const SceneDirectives& directives() const { return directives_; }
  [[nodiscard]] long frame_count() const { return frame_count_; }
  [[nodiscard]] double duration_s() const { return static_cast<double>(frame_count_) / canvas_.fps; }
  [[nodiscard]] double global_start_s() const { return global_start_s_; }

  // Renders local frame k. `avatar` is the current avatar frame, if any.
  [[nodiscard]] cv::Mat render(long k, const cv::Mat* avatar = nullptr) const;
  // Scale applied to component `id` at local frame k (1 without zooms).
  [[nodiscard]] double scale_at(const std::string& id, long k) const;
  [[nodiscard]] double opacity_at(const std::string& id, long k) const;
  [[nodiscard]] cv::Point2d offset_at(const std::string& id, long k) const;
  [[nodiscard]] bool overlay_visible(std::size_t overlay_index, long k) const;

 private:
  struct Layer {
    std::string id;
    cv::Mat pixels;  // BGR fitted into its placement at scale 1; empty for the avatar
    cv::Rect slot;   // placement in canvas pixels
  };

  [[nodiscard]] EffectState effect_state(const editing::EffectSpec& e, long k) const;
  [[nodiscard]] std::string signature(long k) const;

  SceneDirectives directives_;
  media::VideoSettings canvas_;
  double global_start_s_ = 0.0;
  long frame_count_ = 0;
  cv::Mat background_;
  std::vector<Layer> layers_;
  std::optional<Layer> avatar_;
  mutable long cached_index_ = -1;
  mutable std::string cached_signature_;
  mutable cv::Mat cached_frame_;
};

// Throws MissingAsset when a referenced asset is absent or unreadable.
ClipSegment build_subscene_clip(const SceneDirectives& directives, const ingest::PaperAssets& assets,
                                const planning::SubScene& sub_scene, const media::VideoSettings& canvas,
                                double global_start_s = 0.0);

// Encodes a single clip without audio; handy for inspecting one sub-scene.
void write_clip(const ClipSegment& clip, const fs::path& out_path, const media::VideoSettings& canvas);

// Clips in timeline order, grouped per scene (scene i matches audio[i]).
VideoArtifact assemble_video(const std::vector<std::vector<ClipSegment>>& clips,
                             const std::vector<planning::AudioTrack>& audio,
                             const std::vector<planning::AvatarClip>& avatars, const fs::path& out_path,
                             const media::VideoSettings& canvas, int iteration = 0);

// Uniform midpoint sampling of `count` frames over [span.first, span.second],
// downscaled to 360x640 and written as <out_dir>/<prefix>_<i>.png.
FrameSet sample_frames(const fs::path& video, std::pair<double, double> span, int count, const fs::path& out_dir,
                       const std::string& prefix = "frame");

// Global start time of every sub-scene, keyed by sub-scene id, with each
// scene starting where the previous scene's audio ends.
std::vector<std::pair<std::string, std::pair<double, double>>> sub_scene_spans(
    const planning::ScenePlan& plan, const std::vector<planning::AudioTrack>& audio);

cv::Scalar parse_color(const std::string& hex);

}  // namespace papercast::compose
