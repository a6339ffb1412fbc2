#include "papercast/media/video.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

extern "C" {
#include <libavutil/channel_layout.h>
#include <libavutil/imgutils.h>
#include <libavutil/opt.h>
#include <libswscale/swscale.h>
}

#include "av_util.hpp"

namespace papercast::media {

using namespace detail;

CodecProfile parse_codec_profile(const std::string& name) {
  if (name == "production") return CodecProfile::production;
  if (name == "lossless_test") return CodecProfile::lossless_test;
  raise(ErrorCode::ConfigError, "unknown codec profile '" + name + "'");
}

std::string to_string(CodecProfile profile) {
  return profile == CodecProfile::production ? "production" : "lossless_test";
}

namespace {

struct SwsDeleter {
  void operator()(SwsContext* s) const { sws_freeContext(s); }
};
using SwsPtr = std::unique_ptr<SwsContext, SwsDeleter>;

}  // namespace

// ---------------------------------------------------------------------------
// Encoder

struct VideoEncoder::Impl {
  VideoSettings settings;
  std::filesystem::path path;
  AVFormatContext* oc = nullptr;
  CodecPtr venc;
  CodecPtr aenc;
  AVStream* vst = nullptr;
  AVStream* ast = nullptr;
  SwsPtr sws;
  FramePtr vframe;
  FramePtr aframe;
  PacketPtr pkt;
  const PcmAudio* audio = nullptr;
  std::size_t audio_pos = 0;
  long frames = 0;
  bool finished = false;

  ~Impl() {
    if (oc) {
      if (oc->pb) avio_closep(&oc->pb);
      avformat_free_context(oc);
    }
  }

  void drain(AVCodecContext* enc, AVStream* st) {
    while (true) {
      int err = avcodec_receive_packet(enc, pkt.get());
      if (err == AVERROR(EAGAIN) || err == AVERROR_EOF) return;
      check(err, ErrorCode::EncodeError, "encode");
      av_packet_rescale_ts(pkt.get(), enc->time_base, st->time_base);
      pkt->stream_index = st->index;
      check(av_interleaved_write_frame(oc, pkt.get()), ErrorCode::EncodeError, "mux");
    }
  }

  void push_audio_until(std::size_t target, bool final) {
    if (!aenc) return;
    const int fsz = aenc->frame_size;
    target = std::min(target, audio->samples.size());
    while (audio_pos < target) {
      std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(fsz), audio->samples.size() - audio_pos);
      if (n < static_cast<std::size_t>(fsz) && !final) return;
      check(av_frame_make_writable(aframe.get()), ErrorCode::EncodeError, "audio frame");
      aframe->nb_samples = static_cast<int>(n);
      std::copy_n(audio->samples.begin() + static_cast<std::ptrdiff_t>(audio_pos), n,
                  reinterpret_cast<float*>(aframe->data[0]));
      aframe->pts = static_cast<int64_t>(audio_pos);
      check(avcodec_send_frame(aenc.get(), aframe.get()), ErrorCode::EncodeError, "send audio");
      drain(aenc.get(), ast);
      audio_pos += n;
    }
  }
};

VideoEncoder::VideoEncoder(const std::filesystem::path& path, const VideoSettings& settings,
                           const PcmAudio* audio)
    : impl_(std::make_unique<Impl>()) {
  quiet_logs();
  auto& s = *impl_;
  s.settings = settings;
  s.path = path;
  s.pkt.reset(av_packet_alloc());
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  check(avformat_alloc_output_context2(&s.oc, nullptr, "mp4", path.c_str()), ErrorCode::EncodeError,
        "mp4 output");

  const bool lossless = settings.profile == CodecProfile::lossless_test;
  const AVCodec* vc = avcodec_find_encoder_by_name(lossless ? "libx264rgb" : "libx264");
  if (!vc) raise(ErrorCode::EncodeError, "H.264 encoder unavailable");
  s.vst = avformat_new_stream(s.oc, nullptr);
  s.venc.reset(avcodec_alloc_context3(vc));
  auto* v = s.venc.get();
  v->width = settings.width;
  v->height = settings.height;
  v->time_base = AVRational{1, settings.fps};
  v->framerate = AVRational{settings.fps, 1};
  v->gop_size = settings.fps;
  v->max_b_frames = 0;
  v->pix_fmt = lossless ? AV_PIX_FMT_BGR24 : AV_PIX_FMT_YUV420P;
  v->thread_count = 1;
  v->flags |= AV_CODEC_FLAG_BITEXACT;
  if (s.oc->oformat->flags & AVFMT_GLOBALHEADER) v->flags |= AV_CODEC_FLAG_GLOBAL_HEADER;
  AVDictionary* vopts = nullptr;
  av_dict_set(&vopts, "preset", "ultrafast", 0);
  if (lossless) {
    av_dict_set(&vopts, "qp", "0", 0);
  } else {
    av_dict_set(&vopts, "crf", "23", 0);
  }
  int err = avcodec_open2(v, vc, &vopts);
  av_dict_free(&vopts);
  check(err, ErrorCode::EncodeError, "open video encoder");
  check(avcodec_parameters_from_context(s.vst->codecpar, v), ErrorCode::EncodeError, "video params");
  s.vst->time_base = v->time_base;
  s.vst->avg_frame_rate = v->framerate;

  s.vframe.reset(av_frame_alloc());
  s.vframe->format = v->pix_fmt;
  s.vframe->width = v->width;
  s.vframe->height = v->height;
  check(av_frame_get_buffer(s.vframe.get(), 0), ErrorCode::EncodeError, "video frame");
  if (!lossless) {
    s.sws.reset(sws_getContext(v->width, v->height, AV_PIX_FMT_BGR24, v->width, v->height,
                               AV_PIX_FMT_YUV420P, SWS_BILINEAR | SWS_BITEXACT,
                               nullptr, nullptr, nullptr));
    if (!s.sws) raise(ErrorCode::EncodeError, "colour converter");
  }

  if (audio && !audio->samples.empty()) {
    s.audio = audio;
    const AVCodec* ac = avcodec_find_encoder(AV_CODEC_ID_AAC);
    if (!ac) raise(ErrorCode::EncodeError, "AAC encoder unavailable");
    s.ast = avformat_new_stream(s.oc, nullptr);
    s.aenc.reset(avcodec_alloc_context3(ac));
    auto* a = s.aenc.get();
    a->sample_fmt = AV_SAMPLE_FMT_FLTP;
    a->sample_rate = audio->sample_rate;
    a->channel_layout = AV_CH_LAYOUT_MONO;
    a->channels = 1;
    a->bit_rate = 96000;
    a->time_base = AVRational{1, audio->sample_rate};
    a->flags |= AV_CODEC_FLAG_BITEXACT;
    if (s.oc->oformat->flags & AVFMT_GLOBALHEADER) a->flags |= AV_CODEC_FLAG_GLOBAL_HEADER;
    check(avcodec_open2(a, ac, nullptr), ErrorCode::EncodeError, "open audio encoder");
    check(avcodec_parameters_from_context(s.ast->codecpar, a), ErrorCode::EncodeError, "audio params");
    s.ast->time_base = a->time_base;
    s.aframe.reset(av_frame_alloc());
    s.aframe->format = a->sample_fmt;
    s.aframe->channel_layout = a->channel_layout;
    s.aframe->sample_rate = a->sample_rate;
    s.aframe->nb_samples = a->frame_size;
    check(av_frame_get_buffer(s.aframe.get(), 0), ErrorCode::EncodeError, "audio frame");
  }

  check(avio_open(&s.oc->pb, path.c_str(), AVIO_FLAG_WRITE), ErrorCode::EncodeError,
        "open " + path.string());
  AVDictionary* mopts = nullptr;
  av_dict_set(&mopts, "fflags", "+bitexact", 0);
  err = avformat_write_header(s.oc, &mopts);
  av_dict_free(&mopts);
  check(err, ErrorCode::EncodeError, "mp4 header");
}

VideoEncoder::~VideoEncoder() {
  if (impl_ && !impl_->finished) {
    try {
      finish();
    } catch (...) {
    }
  }
}

void VideoEncoder::write(const cv::Mat& bgr) {
  auto& s = *impl_;
  if (s.finished) raise(ErrorCode::EncodeError, "write after finish");
  if (bgr.type() != CV_8UC3 || bgr.cols != s.settings.width || bgr.rows != s.settings.height)
    raise(ErrorCode::EncodeError, "frame size/type mismatch");
  check(av_frame_make_writable(s.vframe.get()), ErrorCode::EncodeError, "video frame");
  if (s.sws) {
    const uint8_t* src[1] = {bgr.data};
    int stride[1] = {static_cast<int>(bgr.step[0])};
    sws_scale(s.sws.get(), src, stride, 0, bgr.rows, s.vframe->data, s.vframe->linesize);
  } else {
    for (int y = 0; y < bgr.rows; ++y)
      std::copy_n(bgr.ptr<uint8_t>(y), bgr.cols * 3, s.vframe->data[0] + y * s.vframe->linesize[0]);
  }
  s.vframe->pts = s.frames;
  check(avcodec_send_frame(s.venc.get(), s.vframe.get()), ErrorCode::EncodeError, "send video");
  s.drain(s.venc.get(), s.vst);
  ++s.frames;
  if (s.audio) {
    auto target = static_cast<std::size_t>(
        std::llround(static_cast<double>(s.frames) / s.settings.fps * s.audio->sample_rate));
    s.push_audio_until(target, false);
  }
}

void VideoEncoder::finish() {
  auto& s = *impl_;
  if (s.finished) return;
  s.finished = true;
  if (s.audio) {
    s.push_audio_until(s.audio->samples.size(), true);
    avcodec_send_frame(s.aenc.get(), nullptr);
    s.drain(s.aenc.get(), s.ast);
  }
  avcodec_send_frame(s.venc.get(), nullptr);
  s.drain(s.venc.get(), s.vst);
  check(av_write_trailer(s.oc), ErrorCode::EncodeError, "mp4 trailer");
}

long VideoEncoder::frames_written() const { return impl_->frames; }

// ---------------------------------------------------------------------------
// Reader

struct VideoReader::Impl {
  InputPtr ic;
  CodecPtr dec;
  int vidx = -1;
  AVRational tb{1, 1};
  double start_s = 0.0;
  SwsPtr sws;
  FramePtr frame;
  FramePtr current;
  FramePtr previous;
  PacketPtr pkt;
  VideoInfo info;
  bool eof_sent = false;
};

VideoReader::VideoReader(const std::filesystem::path& path) : impl_(std::make_unique<Impl>()) {
  auto& s = *impl_;
  if (!std::filesystem::exists(path)) raise(ErrorCode::MissingAsset, path.string());
  s.ic = open_input(path.string(), ErrorCode::ParseError);
  s.vidx = av_find_best_stream(s.ic.get(), AVMEDIA_TYPE_VIDEO, -1, -1, nullptr, 0);
  if (s.vidx < 0) raise(ErrorCode::ParseError, "no video stream in " + path.string());
  AVStream* st = s.ic->streams[s.vidx];
  s.dec = open_decoder(st, ErrorCode::ParseError);
  s.tb = st->time_base;
  s.start_s = st->start_time == AV_NOPTS_VALUE ? 0.0 : st->start_time * av_q2d(s.tb);
  s.frame.reset(av_frame_alloc());
  s.current.reset(av_frame_alloc());
  s.previous.reset(av_frame_alloc());
  s.pkt.reset(av_packet_alloc());

  auto& info = s.info;
  info.width = s.dec->width;
  info.height = s.dec->height;
  AVRational fr = st->avg_frame_rate.num ? st->avg_frame_rate : st->r_frame_rate;
  info.fps = fr.num ? av_q2d(fr) : 0.0;
  info.frame_count = st->nb_frames;
  if (st->duration != AV_NOPTS_VALUE) {
    info.duration_s = st->duration * av_q2d(s.tb);
  } else if (s.ic->duration != AV_NOPTS_VALUE) {
    info.duration_s = static_cast<double>(s.ic->duration) / AV_TIME_BASE;
  }
  if (info.frame_count == 0 && info.fps > 0) info.frame_count = std::lround(info.duration_s * info.fps);
  int aidx = av_find_best_stream(s.ic.get(), AVMEDIA_TYPE_AUDIO, -1, -1, nullptr, 0);
  if (aidx >= 0) {
    info.has_audio = true;
    AVStream* ast = s.ic->streams[aidx];
    if (ast->duration != AV_NOPTS_VALUE) info.audio_duration_s = ast->duration * av_q2d(ast->time_base);
  }
}

VideoReader::~VideoReader() = default;

const VideoInfo& VideoReader::info() const { return impl_->info; }

bool VideoReader::grab(double& pts_s) {
  auto& s = *impl_;
  while (true) {
    int err = avcodec_receive_frame(s.dec.get(), s.frame.get());
    if (err >= 0) {
      av_frame_unref(s.previous.get());
      av_frame_move_ref(s.previous.get(), s.current.get());
      av_frame_move_ref(s.current.get(), s.frame.get());
      int64_t ts = s.current->best_effort_timestamp;
      pts_s = (ts == AV_NOPTS_VALUE ? 0.0 : ts * av_q2d(s.tb)) - s.start_s;
      return true;
    }
    if (err == AVERROR_EOF) return false;
    if (err != AVERROR(EAGAIN)) check(err, ErrorCode::ParseError, "decode video");
    if (s.eof_sent) return false;
    // Feed another packet.
    while (true) {
      int rerr = av_read_frame(s.ic.get(), s.pkt.get());
      if (rerr < 0) {
        avcodec_send_packet(s.dec.get(), nullptr);
        s.eof_sent = true;
        break;
      }
      bool mine = s.pkt->stream_index == s.vidx;
      if (mine) {
        int serr = avcodec_send_packet(s.dec.get(), s.pkt.get());
        av_packet_unref(s.pkt.get());
        check(serr, ErrorCode::ParseError, "send packet");
        break;
      }
      av_packet_unref(s.pkt.get());
    }
  }
}

void VideoReader::retrieve(cv::Mat& bgr, bool previous) {
  auto& s = *impl_;
  AVFrame* f = previous ? s.previous.get() : s.current.get();
  if (!f->data[0]) raise(ErrorCode::ParseError, "no decoded frame to retrieve");
  if (!s.sws) {
    s.sws.reset(sws_getContext(f->width, f->height, static_cast<AVPixelFormat>(f->format), f->width, f->height,
                               AV_PIX_FMT_BGR24, SWS_BILINEAR | SWS_ACCURATE_RND | SWS_BITEXACT, nullptr, nullptr,
                               nullptr));
    if (!s.sws) raise(ErrorCode::ParseError, "colour converter");
  }
  bgr.create(f->height, f->width, CV_8UC3);
  uint8_t* dst[1] = {bgr.data};
  int stride[1] = {static_cast<int>(bgr.step[0])};
  sws_scale(s.sws.get(), f->data, f->linesize, 0, f->height, dst, stride);
}

bool VideoReader::read(cv::Mat& bgr, double& pts_s) {
  if (!grab(pts_s)) return false;
  retrieve(bgr);
  return true;
}

void VideoReader::seek(double t_s) {
  auto& s = *impl_;
  auto ts = static_cast<int64_t>(std::floor((t_s + s.start_s) / av_q2d(s.tb)));
  check(av_seek_frame(s.ic.get(), s.vidx, std::max<int64_t>(ts, 0), AVSEEK_FLAG_BACKWARD),
        ErrorCode::ParseError, "seek");
  avcodec_flush_buffers(s.dec.get());
  av_frame_unref(s.current.get());
  av_frame_unref(s.previous.get());
  s.eof_sent = false;
}

VideoInfo probe_video(const std::filesystem::path& path, bool count_frames) {
  VideoReader reader(path);
  VideoInfo info = reader.info();
  if (count_frames) {
    double pts = 0.0, last = 0.0;
    long n = 0;
    while (reader.grab(pts)) {
      ++n;
      last = std::max(last, pts);
    }
    if (n == 0) raise(ErrorCode::ParseError, "no decodable frames in " + path.string());
    info.frame_count = n;
    if (info.fps > 0) info.duration_s = static_cast<double>(n) / info.fps;
  }
  return info;
}

std::vector<cv::Mat> read_frames_at(const std::filesystem::path& path,
                                    const std::vector<double>& timestamps_s) {
  std::vector<cv::Mat> out(timestamps_s.size());
  if (timestamps_s.empty()) return out;
  std::vector<std::size_t> order(timestamps_s.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return timestamps_s[a] < timestamps_s[b]; });

  VideoReader reader(path);
  const double first = timestamps_s[order.front()];
  if (first > 1.0) reader.seek(first - 0.5);

  constexpr double kEps = 1e-6;
  double pts = 0.0;
  bool have_prev = false, have_any = false;
  std::size_t next = 0;
  while (next < order.size() && reader.grab(pts)) {
    have_any = true;
    while (next < order.size() && pts > timestamps_s[order[next]] + kEps) {
      // Requested instant precedes this frame: the previous frame is on screen
      // (or, before the first frame, the first frame itself).
      reader.retrieve(out[order[next]], have_prev);
      ++next;
    }
    have_prev = true;
  }
  if (next < order.size() && !have_any) raise(ErrorCode::ParseError, "no decodable frames in " + path.string());
  while (next < order.size()) reader.retrieve(out[order[next++]]);
  return out;
}

}  // namespace papercast::media
