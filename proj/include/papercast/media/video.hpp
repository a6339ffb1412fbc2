#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "papercast/media/audio.hpp"

namespace papercast::media {

enum class CodecProfile { production, lossless_test };

CodecProfile parse_codec_profile(const std::string& name);
std::string to_string(CodecProfile profile);

struct VideoSettings {
  int width = 1080;
  int height = 1920;
  int fps = 30;
  CodecProfile profile = CodecProfile::production;
};

struct VideoInfo {
  int width = 0;
  int height = 0;
  double fps = 0.0;
  long frame_count = 0;
  double duration_s = 0.0;
  bool has_audio = false;
  double audio_duration_s = 0.0;
};

// Encodes BGR frames to an mp4 (H.264) with an optional AAC audio track.
// Audio is interleaved progressively with the video frames.
class VideoEncoder {
 public:
  VideoEncoder(const std::filesystem::path& path, const VideoSettings& settings,
               const PcmAudio* audio = nullptr);
  ~VideoEncoder();
  VideoEncoder(const VideoEncoder&) = delete;
  VideoEncoder& operator=(const VideoEncoder&) = delete;

  void write(const cv::Mat& bgr);
  void finish();
  [[nodiscard]] long frames_written() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Sequential decoder producing BGR frames with presentation timestamps.
class VideoReader {
 public:
  explicit VideoReader(const std::filesystem::path& path);
  ~VideoReader();
  VideoReader(const VideoReader&) = delete;
  VideoReader& operator=(const VideoReader&) = delete;

  [[nodiscard]] const VideoInfo& info() const;
  // Returns false at end of stream.
  bool read(cv::Mat& bgr, double& pts_s);
  // Decodes the next frame without colour conversion.
  bool grab(double& pts_s);
  // Converts the last grabbed frame, or the one grabbed before it.
  void retrieve(cv::Mat& bgr, bool previous = false);
  // Positions the decoder at or before t; subsequent reads resume from the
  // preceding keyframe.
  void seek(double t_s);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Container-level metadata; with count_frames the video stream is fully
// decoded and frame_count / duration_s come from the decoded frames.
VideoInfo probe_video(const std::filesystem::path& path, bool count_frames = false);

// For each timestamp, the frame displayed at that instant. Timestamps need not
// be sorted; output order matches input order.
std::vector<cv::Mat> read_frames_at(const std::filesystem::path& path,
                                    const std::vector<double>& timestamps_s);

}  // namespace papercast::media
