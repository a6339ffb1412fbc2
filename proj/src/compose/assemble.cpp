#include <cmath>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <spdlog/spdlog.h>

#include "papercast/common/error.hpp"
#include "papercast/compose/compose.hpp"
#include "papercast/media/audio.hpp"

namespace papercast::compose {

namespace {

cv::Mat letterbox(const cv::Mat& src, int width, int height) {
  double s = std::min(static_cast<double>(width) / src.cols, static_cast<double>(height) / src.rows);
  cv::Size fitted(std::max(1, static_cast<int>(std::lround(src.cols * s))),
                  std::max(1, static_cast<int>(std::lround(src.rows * s))));
  cv::Mat scaled;
  cv::resize(src, scaled, fitted, 0, 0, cv::INTER_AREA);
  if (fitted == cv::Size(width, height)) return scaled;
  cv::Mat out(height, width, src.type(), cv::Scalar::all(0));
  scaled.copyTo(out(cv::Rect((width - fitted.width) / 2, (height - fitted.height) / 2, fitted.width, fitted.height)));
  return out;
}

}  // namespace

std::vector<std::pair<std::string, std::pair<double, double>>> sub_scene_spans(
    const planning::ScenePlan& plan, const std::vector<planning::AudioTrack>& audio) {
  if (audio.size() != plan.scenes.size()) raise(ErrorCode::PreconditionViolation, "need one audio track per scene");
  std::vector<std::pair<std::string, std::pair<double, double>>> out;
  double offset = 0.0;
  for (std::size_t i = 0; i < plan.scenes.size(); ++i) {
    for (const auto& sub : plan.scenes[i].sub_scenes)
      out.push_back({sub.sub_scene_id, {offset + sub.start_s, offset + sub.start_s + sub.duration_s}});
    offset += audio[i].duration_s;
  }
  return out;
}

VideoArtifact assemble_video(const std::vector<std::vector<ClipSegment>>& clips,
                             const std::vector<planning::AudioTrack>& audio,
                             const std::vector<planning::AvatarClip>& avatars, const fs::path& out_path,
                             const media::VideoSettings& canvas, int iteration) {
  if (clips.size() != audio.size()) raise(ErrorCode::PreconditionViolation, "need one audio track per scene");
  if (!avatars.empty() && avatars.size() != audio.size())
    raise(ErrorCode::PreconditionViolation, "need one avatar clip per scene or none");

  double audio_total = 0.0;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (clips[i].empty()) raise(ErrorCode::PreconditionViolation, "scene " + std::to_string(i) + " has no clips");
    double planned = 0.0;
    for (const auto& c : clips[i]) planned += c.directives().duration_s;
    if (std::abs(planned - audio[i].duration_s) > kSceneDurationTolerance)
      raise(ErrorCode::DurationMismatch, fmt::format("scene {} clips last {:.2f} s but its narration lasts {:.2f} s", i,
                                                     planned, audio[i].duration_s));
    audio_total += audio[i].duration_s;
  }

  std::vector<media::PcmAudio> parts;
  for (const auto& a : audio) parts.push_back(media::decode_audio(a.path));
  media::PcmAudio track = media::concat(parts);

  media::VideoEncoder enc(out_path, canvas, &track);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    std::unique_ptr<media::VideoReader> avatar;
    if (!avatars.empty() && avatars[i].path) avatar = std::make_unique<media::VideoReader>(*avatars[i].path);
    cv::Mat avatar_frame;
    for (const auto& clip : clips[i]) {
      for (long k = 0; k < clip.frame_count(); ++k) {
        if (avatar) {
          cv::Mat next;
          double pts = 0.0;
          if (avatar->read(next, pts)) avatar_frame = next;
        }
        enc.write(clip.render(k, avatar_frame.empty() ? nullptr : &avatar_frame));
      }
    }
  }
  long frames = enc.frames_written();
  enc.finish();

  VideoArtifact v;
  v.path = out_path;
  v.duration_s = static_cast<double>(frames) / canvas.fps;
  v.width_px = canvas.width;
  v.height_px = canvas.height;
  v.iteration = iteration;
  if (std::abs(v.duration_s - audio_total) > kVideoDurationTolerance)
    raise(ErrorCode::DurationMismatch,
          fmt::format("video lasts {:.2f} s but the narration lasts {:.2f} s", v.duration_s, audio_total));
  spdlog::info("wrote {} ({} frames, {:.2f} s)", out_path.string(), frames, v.duration_s);
  return v;
}

FrameSet sample_frames(const fs::path& video, std::pair<double, double> span, int count, const fs::path& out_dir,
                       const std::string& prefix) {
  if (count < 1) raise(ErrorCode::PreconditionViolation, "frame count must be at least 1");
  auto info = media::probe_video(video);
  auto [start, end] = span;
  if (!(start >= 0.0) || !(end > start) || end > info.duration_s + 1e-3)
    raise(ErrorCode::SpanOutOfRange, fmt::format("span [{:.3f}, {:.3f}] outside video of {:.3f} s", start, end,
                                                 info.duration_s));
  FrameSet set;
  set.source_span = span;
  double step = (end - start) / count;
  for (int i = 0; i < count; ++i) set.timestamps_s.push_back(start + (i + 0.5) * step);
  auto frames = media::read_frames_at(video, set.timestamps_s);
  if (frames.size() != static_cast<std::size_t>(count))
    raise(ErrorCode::SpanOutOfRange, "decoder returned " + std::to_string(frames.size()) + " frames");
  fs::create_directories(out_dir);
  for (int i = 0; i < count; ++i) {
    cv::Mat small = letterbox(frames[static_cast<std::size_t>(i)], kModelFrameWidth, kModelFrameHeight);
    fs::path p = out_dir / fmt::format("{}_{:02d}.png", prefix, i);
    if (!cv::imwrite(p.string(), small)) raise(ErrorCode::IoError, "cannot write " + p.string());
    set.frames.push_back(p);
  }
  return set;
}

}  // namespace papercast::compose
