#pragma once

#include <filesystem>
#include <vector>

namespace papercast::media {

// Mono float PCM.
struct PcmAudio {
  int sample_rate = 48000;
  std::vector<float> samples;

  [[nodiscard]] double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

PcmAudio make_silence(double seconds, int sample_rate = 48000);

// 16-bit PCM WAV through the libavformat wav muxer.
void write_wav(const std::filesystem::path& path, const PcmAudio& audio);

// Decodes any audio file libavformat understands and resamples to mono.
PcmAudio decode_audio(const std::filesystem::path& path, int sample_rate = 48000);

// Length of the decoded audio stream in seconds.
double probe_audio_duration(const std::filesystem::path& path);

PcmAudio concat(const std::vector<PcmAudio>& parts);

}  // namespace papercast::media
