#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "papercast/common/error.hpp"
#include "papercast/common/text.hpp"
#include "papercast/compose/compose.hpp"

namespace papercast::compose {

using editing::EffectKind;
using editing::EffectSpec;
using editing::TextOverlay;

namespace {

constexpr int kFont = cv::FONT_HERSHEY_SIMPLEX;

cv::Rect to_pixels(const editing::Rect& r, const cv::Size& canvas) {
  int x0 = static_cast<int>(std::lround(r.x * canvas.width));
  int y0 = static_cast<int>(std::lround(r.y * canvas.height));
  int x1 = static_cast<int>(std::lround(r.right() * canvas.width));
  int y1 = static_cast<int>(std::lround(r.bottom() * canvas.height));
  return cv::Rect(x0, y0, std::max(1, x1 - x0), std::max(1, y1 - y0)) & cv::Rect(0, 0, canvas.width, canvas.height);
}

// Largest size with the source aspect ratio that fits inside `box`.
cv::Size fit_inside(const cv::Size& src, const cv::Size& box) {
  double s = std::min(static_cast<double>(box.width) / src.width, static_cast<double>(box.height) / src.height);
  return {std::max(1, static_cast<int>(std::lround(src.width * s))), std::max(1, static_cast<int>(std::lround(src.height * s)))};
}

// Copies `src` onto `dst` centred at `center`, clipped to dst, with opacity.
void blit(cv::Mat& dst, const cv::Mat& src, cv::Point2d center, double opacity) {
  if (opacity <= 0.0 || src.empty()) return;
  cv::Rect target(static_cast<int>(std::lround(center.x - src.cols / 2.0)),
                  static_cast<int>(std::lround(center.y - src.rows / 2.0)), src.cols, src.rows);
  cv::Rect visible = target & cv::Rect(0, 0, dst.cols, dst.rows);
  if (visible.empty()) return;
  cv::Mat from = src(visible - target.tl());
  cv::Mat to = dst(visible);
  if (opacity >= 1.0) from.copyTo(to);
  else cv::addWeighted(from, opacity, to, 1.0 - opacity, 0.0, to);
}

std::string ascii_only(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
    if (c < 0x80) out.push_back(static_cast<char>(c));
    else if ((c & 0xC0) == 0xC0) out.push_back('?');  // one mark per multibyte character
  }
  return out;
}

struct TextLayout {
  std::vector<std::string> lines;
  double scale = 1.0;
  int thickness = 2;
  int line_height = 0;
};

TextLayout layout_text(const std::string& content, int font_size_pt, const cv::Size& slot, int canvas_height) {
  TextLayout t;
  double px = font_size_pt * 1.5 * canvas_height / 1920.0;
  auto words = text::split_words(ascii_only(content));
  for (t.scale = px / 30.0; t.scale > 0.2; t.scale *= 0.9) {
    t.thickness = std::max(1, static_cast<int>(std::lround(t.scale * 2.0)));
    int base = 0;
    t.line_height = static_cast<int>(std::lround(cv::getTextSize("Ag", kFont, t.scale, t.thickness, &base).height * 1.6));
    t.lines.clear();
    std::string line;
    for (const auto& w : words) {
      std::string candidate = line.empty() ? w : line + " " + w;
      if (!line.empty() && cv::getTextSize(candidate, kFont, t.scale, t.thickness, &base).width > slot.width) {
        t.lines.push_back(line);
        line = w;
      } else {
        line = candidate;
      }
    }
    if (!line.empty()) t.lines.push_back(line);
    if (static_cast<int>(t.lines.size()) * t.line_height <= slot.height) break;
  }
  return t;
}

void draw_text(cv::Mat& frame, const TextOverlay& o, const cv::Rect& slot, double opacity) {
  if (opacity <= 0.0 || slot.empty()) return;
  auto t = layout_text(o.content, o.font_size_pt, slot.size(), frame.rows);
  cv::Mat roi = frame(slot);
  cv::Mat canvas = opacity < 1.0 ? roi.clone() : roi;
  int total = static_cast<int>(t.lines.size()) * t.line_height;
  int y = std::max(0, (slot.height - total) / 2);
  cv::Scalar color = parse_color(o.color);
  for (const auto& line : t.lines) {
    int base = 0;
    auto size = cv::getTextSize(line, kFont, t.scale, t.thickness, &base);
    cv::Point org((slot.width - size.width) / 2, y + (t.line_height + size.height) / 2);
    cv::putText(canvas, line, org, kFont, t.scale, cv::Scalar(0, 0, 0), t.thickness + 3, cv::LINE_AA);
    cv::putText(canvas, line, org, kFont, t.scale, color, t.thickness, cv::LINE_AA);
    y += t.line_height;
  }
  if (opacity < 1.0) cv::addWeighted(canvas, opacity, roi, 1.0 - opacity, 0.0, roi);
}

cv::Mat load_asset(const ingest::PaperAssets& assets, const std::string& id) {
  const auto* a = assets.find(id);
  if (!a) raise(ErrorCode::MissingAsset, "asset '" + id + "' is not in the manifest");
  cv::Mat img = cv::imread(a->path.string(), cv::IMREAD_COLOR);
  if (img.empty()) raise(ErrorCode::MissingAsset, "cannot read " + a->path.string());
  return img;
}

}  // namespace

cv::Scalar parse_color(const std::string& hex) {
  if (!editing::is_hex_color(hex)) raise(ErrorCode::RenderError, "bad color '" + hex + "'");
  auto v = std::stoul(hex.substr(1), nullptr, 16);
  return cv::Scalar(static_cast<double>(v & 0xFF), static_cast<double>((v >> 8) & 0xFF),
                    static_cast<double>((v >> 16) & 0xFF));
}

ClipSegment::ClipSegment(SceneDirectives directives, const ingest::PaperAssets& assets,
                         const media::VideoSettings& canvas, double global_start_s)
    : directives_(std::move(directives)), canvas_(canvas), global_start_s_(global_start_s) {
  const double fps = canvas_.fps;
  frame_count_ = std::lround((global_start_s_ + directives_.duration_s) * fps) - std::lround(global_start_s_ * fps);
  if (frame_count_ < 1) raise(ErrorCode::RenderError, directives_.sub_scene_id + " is shorter than one frame");
  const cv::Size size(canvas_.width, canvas_.height);

  if (editing::is_hex_color(directives_.background)) {
    background_ = cv::Mat(size, CV_8UC3, parse_color(directives_.background));
  } else {
    cv::Mat img = load_asset(assets, directives_.background);
    double s = std::max(static_cast<double>(size.width) / img.cols, static_cast<double>(size.height) / img.rows);
    cv::Mat cover;
    cv::resize(img, cover, cv::Size(), s, s, cv::INTER_AREA);
    cv::Rect crop((cover.cols - size.width) / 2, (cover.rows - size.height) / 2, size.width, size.height);
    // Dimmed so overlays stay readable on top of it.
    cover(crop).convertTo(background_, CV_8UC3, 0.35);
  }

  for (const auto& id : directives_.image_ids) {
    auto it = directives_.layout.placements.find(id);
    if (it == directives_.layout.placements.end()) raise(ErrorCode::RenderError, "image '" + id + "' has no placement");
    cv::Mat img = load_asset(assets, id);
    cv::Rect slot = to_pixels(it->second, size);
    cv::Size fitted = fit_inside(img.size(), slot.size());
    Layer layer{id, img, cv::Rect(slot.x + (slot.width - fitted.width) / 2, slot.y + (slot.height - fitted.height) / 2,
                                  fitted.width, fitted.height)};
    layers_.push_back(std::move(layer));
  }
  if (directives_.avatar) {
    auto it = directives_.layout.placements.find(editing::kAvatarId);
    if (it != directives_.layout.placements.end()) avatar_ = Layer{editing::kAvatarId, {}, to_pixels(it->second, size)};
  }
}

EffectState ClipSegment::effect_state(const EffectSpec& e, long k) const {
  const double fps = canvas_.fps;
  long fs = std::lround(e.start_s * fps);
  long fe = std::lround((e.start_s + e.duration_s) * fps);
  EffectState s;
  s.active = k >= fs && k < fe;
  if (fe - fs <= 1) s.progress = k >= fs ? 1.0 : 0.0;
  else s.progress = std::clamp(static_cast<double>(k - fs) / static_cast<double>(fe - fs - 1), 0.0, 1.0);
  return s;
}

double ClipSegment::scale_at(const std::string& id, long k) const {
  double scale = 1.0;
  for (const auto& e : directives_.effects) {
    if (e.target_component_id != id) continue;
    double p = effect_state(e, k).progress;
    if (e.kind == EffectKind::zoom_in) scale *= 1.0 + (e.magnitude - 1.0) * p;
    else if (e.kind == EffectKind::zoom_out) scale *= 1.0 + (1.0 / e.magnitude - 1.0) * p;
  }
  return scale;
}

double ClipSegment::opacity_at(const std::string& id, long k) const {
  double a = 1.0;
  for (const auto& e : directives_.effects) {
    if (e.target_component_id != id) continue;
    double p = effect_state(e, k).progress;
    if (e.kind == EffectKind::fade_in) a *= p;
    else if (e.kind == EffectKind::fade_out) a *= 1.0 - p;
  }
  return a;
}

cv::Point2d ClipSegment::offset_at(const std::string& id, long k) const {
  cv::Point2d d(0, 0);
  for (const auto& e : directives_.effects)
    if (e.target_component_id == id && e.kind == EffectKind::pan)
      d.x -= e.magnitude * canvas_.width * effect_state(e, k).progress;
  return d;
}

bool ClipSegment::overlay_visible(std::size_t i, long k) const {
  const auto& o = directives_.overlays.at(i);
  long fs = std::lround(o.start_s * canvas_.fps);
  long fe = std::lround(o.end_s() * canvas_.fps);
  return k >= fs && k < std::max(fe, fs + 1);
}

std::string ClipSegment::signature(long k) const {
  std::string sig;
  for (std::size_t i = 0; i < directives_.overlays.size(); ++i) sig += overlay_visible(i, k) ? '1' : '0';
  for (const auto& e : directives_.effects) sig += "|" + std::to_string(effect_state(e, k).progress);
  return sig;
}

cv::Mat ClipSegment::render(long k, const cv::Mat* avatar) const {
  auto draw_layer = [&](cv::Mat& frame, const Layer& layer, const cv::Mat& source) {
    double s = scale_at(layer.id, k);
    cv::Size target(std::max(1, static_cast<int>(std::lround(layer.slot.width * s))),
                    std::max(1, static_cast<int>(std::lround(layer.slot.height * s))));
    cv::Mat scaled;
    cv::resize(source, scaled, target, 0, 0, target.area() < source.size().area() ? cv::INTER_AREA : cv::INTER_LINEAR);
    cv::Point2d center(layer.slot.x + layer.slot.width / 2.0, layer.slot.y + layer.slot.height / 2.0);
    blit(frame, scaled, center + offset_at(layer.id, k), opacity_at(layer.id, k));
  };

  // Background, images and text only change with effects and overlay timing,
  // so consecutive frames with the same signature share them.
  std::string sig = signature(k);
  if (cached_index_ < 0 || sig != cached_signature_) {
    cv::Mat frame = background_.clone();
    for (const auto& layer : layers_) draw_layer(frame, layer, layer.pixels);
    const cv::Size size(canvas_.width, canvas_.height);
    for (std::size_t i = 0; i < directives_.overlays.size(); ++i) {
      if (!overlay_visible(i, k)) continue;
      const auto& o = directives_.overlays[i];
      draw_text(frame, o, to_pixels(o.position, size), opacity_at(o.overlay_id, k));
    }
    cached_signature_ = sig;
    cached_frame_ = frame;
  }
  cached_index_ = k;
  cv::Mat frame = cached_frame_.clone();

  // The presenter sits on top of everything else.
  if (avatar && !avatar->empty() && avatar_) {
    Layer fitted = *avatar_;
    cv::Size f = fit_inside(avatar->size(), avatar_->slot.size());
    fitted.slot = cv::Rect(avatar_->slot.x + (avatar_->slot.width - f.width) / 2,
                           avatar_->slot.y + (avatar_->slot.height - f.height) / 2, f.width, f.height);
    draw_layer(frame, fitted, *avatar);
  }
  return frame;
}

ClipSegment build_subscene_clip(const SceneDirectives& directives, const ingest::PaperAssets& assets,
                                const planning::SubScene& sub_scene, const media::VideoSettings& canvas,
                                double global_start_s) {
  if (directives.sub_scene_id != sub_scene.sub_scene_id)
    raise(ErrorCode::PreconditionViolation, "directives for " + directives.sub_scene_id + " passed with sub-scene " +
                                                sub_scene.sub_scene_id);
  SceneDirectives d = directives;
  d.duration_s = sub_scene.duration_s;
  return ClipSegment(std::move(d), assets, canvas, global_start_s);
}

void write_clip(const ClipSegment& clip, const fs::path& out_path, const media::VideoSettings& canvas) {
  media::VideoEncoder enc(out_path, canvas);
  for (long k = 0; k < clip.frame_count(); ++k) enc.write(clip.render(k));
  enc.finish();
}

}  // namespace papercast::compose
