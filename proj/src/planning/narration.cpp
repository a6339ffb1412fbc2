#include <cmath>

#include <opencv2/imgproc.hpp>

#include "papercast/common/error.hpp"
#include "papercast/common/text.hpp"
#include "papercast/media/audio.hpp"
#include "papercast/media/video.hpp"
#include "papercast/planning/planning.hpp"

namespace papercast::planning {

double StubTts::synthesize(const std::string& text, const fs::path& out_path) {
  double seconds = static_cast<double>(text::count_words(text)) / kStubWordsPerSecond;
  try {
    media::write_wav(out_path, media::make_silence(seconds));
  } catch (const Error& e) {
    raise(ErrorCode::TTSBackendError, e.what());
  }
  return seconds;
}

std::optional<fs::path> StubAvatar::render(const AudioTrack& audio, const fs::path& out_path) {
  cv::Mat frame(kAvatarSizePx, kAvatarSizePx, CV_8UC3, cv::Scalar(60, 48, 40));
  const int c = kAvatarSizePx / 2;
  cv::circle(frame, {c, c - 30}, 62, cv::Scalar(170, 190, 215), cv::FILLED, cv::LINE_AA);
  cv::ellipse(frame, {c, kAvatarSizePx + 20}, {120, 110}, 0, 180, 360, cv::Scalar(140, 90, 50), cv::FILLED,
              cv::LINE_AA);
  media::VideoSettings vs;
  vs.width = vs.height = kAvatarSizePx;
  long frames = std::lround(audio.duration_s * vs.fps);
  try {
    media::VideoEncoder enc(out_path, vs);
    for (long i = 0; i < frames; ++i) enc.write(frame);
    enc.finish();
  } catch (const Error& e) {
    raise(ErrorCode::AvatarBackendError, e.what());
  }
  return out_path;
}

std::shared_ptr<TtsBackend> make_tts_backend(const std::string& name) {
  if (name == "stub") return std::make_shared<StubTts>();
  raise(ErrorCode::ConfigError, "tts backend '" + name + "' is not registered");
}

std::shared_ptr<AvatarBackend> make_avatar_backend(const std::string& name) {
  if (name == "stub") return std::make_shared<StubAvatar>();
  if (name == "none") return std::make_shared<NoAvatar>();
  raise(ErrorCode::ConfigError, "avatar backend '" + name + "' is not registered");
}

AudioTrack synthesize_narration(const Section& section, TtsBackend& tts, const fs::path& out_dir) {
  if (text::trim(section.narration_text).empty())
    raise(ErrorCode::PreconditionViolation, to_string(section.kind) + " has empty narration");
  fs::create_directories(out_dir);
  AudioTrack track;
  track.section_kind = section.kind;
  track.path = out_dir / (to_string(section.kind) + ".wav");
  track.duration_s = tts.synthesize(section.narration_text, track.path);
  if (!(track.duration_s > 0.0)) raise(ErrorCode::TTSBackendError, "tts produced no audio for " + to_string(section.kind));
  return track;
}

AvatarClip render_avatar(const Section& section, const AudioTrack& audio, AvatarBackend& avatar,
                         const fs::path& out_dir) {
  if (!(audio.duration_s > 0.0)) raise(ErrorCode::PreconditionViolation, "avatar needs a non-empty audio track");
  fs::create_directories(out_dir);
  AvatarClip clip;
  clip.section_kind = section.kind;
  clip.path = avatar.render(audio, out_dir / (to_string(section.kind) + ".mp4"));
  clip.duration_s = audio.duration_s;
  if (clip.path) {
    double measured = media::probe_video(*clip.path, true).duration_s;
    if (std::abs(measured - audio.duration_s) > 0.25)
      raise(ErrorCode::AvatarBackendError, "avatar clip lasts " + std::to_string(measured) + " s, audio " +
                                               std::to_string(audio.duration_s) + " s");
    clip.duration_s = measured;
  }
  return clip;
}

}  // namespace papercast::planning
