#pragma once

#include <memory>
#include <string>

extern "C" {
#include <libavcodec/avcodec.h>
#include <libavformat/avformat.h>
#include <libavutil/error.h>
#include <libavutil/log.h>
}

#include <mutex>

#include "papercast/common/error.hpp"

namespace papercast::media::detail {

inline std::string av_error_string(int err) {
  char buf[AV_ERROR_MAX_STRING_SIZE] = {0};
  av_strerror(err, buf, sizeof(buf));
  return buf;
}

inline void check(int err, ErrorCode code, const std::string& what) {
  if (err < 0) raise(code, what + ": " + av_error_string(err));
}

struct FormatInputDeleter {
  void operator()(AVFormatContext* ctx) const { avformat_close_input(&ctx); }
};
struct CodecContextDeleter {
  void operator()(AVCodecContext* ctx) const { avcodec_free_context(&ctx); }
};
struct FrameDeleter {
  void operator()(AVFrame* f) const { av_frame_free(&f); }
};
struct PacketDeleter {
  void operator()(AVPacket* p) const { av_packet_free(&p); }
};

using InputPtr = std::unique_ptr<AVFormatContext, FormatInputDeleter>;
using CodecPtr = std::unique_ptr<AVCodecContext, CodecContextDeleter>;
using FramePtr = std::unique_ptr<AVFrame, FrameDeleter>;
using PacketPtr = std::unique_ptr<AVPacket, PacketDeleter>;

inline void quiet_logs() {
  static std::once_flag once;
  std::call_once(once, [] { av_log_set_level(AV_LOG_ERROR); });
}

inline InputPtr open_input(const std::string& path, ErrorCode code) {
  quiet_logs();
  AVFormatContext* raw = nullptr;
  check(avformat_open_input(&raw, path.c_str(), nullptr, nullptr), code, "open " + path);
  InputPtr ctx(raw);
  check(avformat_find_stream_info(ctx.get(), nullptr), code, "stream info " + path);
  return ctx;
}

inline CodecPtr open_decoder(AVStream* stream, ErrorCode code) {
  const AVCodec* dec = avcodec_find_decoder(stream->codecpar->codec_id);
  if (!dec) raise(code, "no decoder for stream");
  CodecPtr ctx(avcodec_alloc_context3(dec));
  check(avcodec_parameters_to_context(ctx.get(), stream->codecpar), code, "decoder params");
  ctx->thread_count = 1;
  check(avcodec_open2(ctx.get(), dec, nullptr), code, "open decoder");
  return ctx;
}

}  // namespace papercast::media::detail
