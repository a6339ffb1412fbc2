#include "papercast/media/audio.hpp"

#include <algorithm>
#include <cmath>

extern "C" {
#include <libavutil/channel_layout.h>
#include <libavutil/opt.h>
#include <libswresample/swresample.h>
}

#include "av_util.hpp"

namespace papercast::media {

using namespace detail;

PcmAudio make_silence(double seconds, int sample_rate) {
  PcmAudio a;
  a.sample_rate = sample_rate;
  a.samples.assign(static_cast<std::size_t>(std::llround(seconds * sample_rate)), 0.0f);
  return a;
}

PcmAudio concat(const std::vector<PcmAudio>& parts) {
  PcmAudio out;
  if (!parts.empty()) out.sample_rate = parts.front().sample_rate;
  for (const auto& p : parts) {
    if (p.sample_rate != out.sample_rate)
      raise(ErrorCode::PreconditionViolation, "cannot concatenate audio with differing rates");
    out.samples.insert(out.samples.end(), p.samples.begin(), p.samples.end());
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const PcmAudio& audio) {
  quiet_logs();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  AVFormatContext* raw = nullptr;
  check(avformat_alloc_output_context2(&raw, nullptr, "wav", path.c_str()),
        ErrorCode::EncodeError, "wav output");
  std::unique_ptr<AVFormatContext, void (*)(AVFormatContext*)> oc(raw, [](AVFormatContext* c) {
    if (c->pb) avio_closep(&c->pb);
    avformat_free_context(c);
  });
  AVStream* st = avformat_new_stream(oc.get(), nullptr);
  st->codecpar->codec_type = AVMEDIA_TYPE_AUDIO;
  st->codecpar->codec_id = AV_CODEC_ID_PCM_S16LE;
  st->codecpar->sample_rate = audio.sample_rate;
  st->codecpar->channels = 1;
  st->codecpar->channel_layout = AV_CH_LAYOUT_MONO;
  st->codecpar->format = AV_SAMPLE_FMT_S16;
  st->codecpar->bits_per_coded_sample = 16;
  st->codecpar->block_align = 2;
  st->codecpar->bit_rate = static_cast<int64_t>(audio.sample_rate) * 16;
  st->time_base = AVRational{1, audio.sample_rate};
  check(avio_open(&oc->pb, path.c_str(), AVIO_FLAG_WRITE), ErrorCode::EncodeError,
        "open " + path.string());
  // The wav muxer otherwise stamps an encoder string containing the library
  // version; drop it so outputs are byte-stable.
  AVDictionary* opts = nullptr;
  av_dict_set(&opts, "fflags", "+bitexact", 0);
  int err = avformat_write_header(oc.get(), &opts);
  av_dict_free(&opts);
  check(err, ErrorCode::EncodeError, "wav header");

  constexpr std::size_t kChunk = 4096;
  PacketPtr pkt(av_packet_alloc());
  for (std::size_t off = 0; off < audio.samples.size(); off += kChunk) {
    std::size_t n = std::min(kChunk, audio.samples.size() - off);
    check(av_new_packet(pkt.get(), static_cast<int>(n * 2)), ErrorCode::EncodeError, "packet");
    auto* dst = reinterpret_cast<int16_t*>(pkt->data);
    for (std::size_t i = 0; i < n; ++i) {
      float v = std::clamp(audio.samples[off + i], -1.0f, 1.0f);
      dst[i] = static_cast<int16_t>(std::lrint(v * 32767.0f));
    }
    pkt->stream_index = st->index;
    pkt->pts = pkt->dts = static_cast<int64_t>(off);
    pkt->duration = static_cast<int64_t>(n);
    av_packet_rescale_ts(pkt.get(), AVRational{1, audio.sample_rate}, st->time_base);
    check(av_write_frame(oc.get(), pkt.get()), ErrorCode::EncodeError, "wav write");
    av_packet_unref(pkt.get());
  }
  check(av_write_trailer(oc.get()), ErrorCode::EncodeError, "wav trailer");
}

PcmAudio decode_audio(const std::filesystem::path& path, int sample_rate) {
  if (!std::filesystem::exists(path)) raise(ErrorCode::MissingAsset, path.string());
  auto ic = open_input(path.string(), ErrorCode::ParseError);
  int idx = av_find_best_stream(ic.get(), AVMEDIA_TYPE_AUDIO, -1, -1, nullptr, 0);
  if (idx < 0) raise(ErrorCode::ParseError, "no audio stream in " + path.string());
  auto dec = open_decoder(ic->streams[idx], ErrorCode::ParseError);
  if (dec->channel_layout == 0) dec->channel_layout = av_get_default_channel_layout(dec->channels);

  SwrContext* swr = swr_alloc_set_opts(nullptr, AV_CH_LAYOUT_MONO, AV_SAMPLE_FMT_FLT, sample_rate,
                                       static_cast<int64_t>(dec->channel_layout), dec->sample_fmt,
                                       dec->sample_rate, 0, nullptr);
  std::unique_ptr<SwrContext, void (*)(SwrContext*)> swr_guard(swr, [](SwrContext* s) { swr_free(&s); });
  check(swr_init(swr), ErrorCode::ParseError, "resampler");

  PcmAudio out;
  out.sample_rate = sample_rate;
  FramePtr frame(av_frame_alloc());
  PacketPtr pkt(av_packet_alloc());

  auto drain = [&]() {
    while (true) {
      int err = avcodec_receive_frame(dec.get(), frame.get());
      if (err == AVERROR(EAGAIN) || err == AVERROR_EOF) return;
      check(err, ErrorCode::ParseError, "decode audio");
      int max_out = swr_get_out_samples(swr, frame->nb_samples);
      std::vector<float> buf(static_cast<std::size_t>(std::max(max_out, 0)));
      auto* outp = reinterpret_cast<uint8_t*>(buf.data());
      int got = swr_convert(swr, &outp, max_out, const_cast<const uint8_t**>(frame->extended_data),
                            frame->nb_samples);
      check(got, ErrorCode::ParseError, "resample");
      out.samples.insert(out.samples.end(), buf.begin(), buf.begin() + got);
      av_frame_unref(frame.get());
    }
  };

  while (av_read_frame(ic.get(), pkt.get()) >= 0) {
    if (pkt->stream_index == idx) {
      check(avcodec_send_packet(dec.get(), pkt.get()), ErrorCode::ParseError, "send packet");
      drain();
    }
    av_packet_unref(pkt.get());
  }
  avcodec_send_packet(dec.get(), nullptr);
  drain();
  // Flush resampler tail.
  while (true) {
    std::vector<float> buf(4096);
    auto* outp = reinterpret_cast<uint8_t*>(buf.data());
    int got = swr_convert(swr, &outp, 4096, nullptr, 0);
    if (got <= 0) break;
    out.samples.insert(out.samples.end(), buf.begin(), buf.begin() + got);
  }
  return out;
}

double probe_audio_duration(const std::filesystem::path& path) {
  auto ic = open_input(path.string(), ErrorCode::ParseError);
  int idx = av_find_best_stream(ic.get(), AVMEDIA_TYPE_AUDIO, -1, -1, nullptr, 0);
  if (idx < 0) raise(ErrorCode::ParseError, "no audio stream in " + path.string());
  auto dec = open_decoder(ic->streams[idx], ErrorCode::ParseError);
  FramePtr frame(av_frame_alloc());
  PacketPtr pkt(av_packet_alloc());
  int64_t samples = 0;
  auto drain = [&]() {
    while (avcodec_receive_frame(dec.get(), frame.get()) >= 0) {
      samples += frame->nb_samples;
      av_frame_unref(frame.get());
    }
  };
  while (av_read_frame(ic.get(), pkt.get()) >= 0) {
    if (pkt->stream_index == idx) {
      check(avcodec_send_packet(dec.get(), pkt.get()), ErrorCode::ParseError, "send packet");
      drain();
    }
    av_packet_unref(pkt.get());
  }
  avcodec_send_packet(dec.get(), nullptr);
  drain();
  return dec->sample_rate > 0 ? static_cast<double>(samples) / dec->sample_rate : 0.0;
}

}  // namespace papercast::media
