#include <algorithm>
#include <cmath>

#include "papercast/editing/editing.hpp"

namespace papercast::editing {

namespace {

// Rounding slack when comparing timings that were computed, not chosen.
constexpr double kEps = 1e-9;

}  // namespace

double Rect::intersection_area(const Rect& o) const {
  double ix = std::min(right(), o.right()) - std::max(x, o.x);
  double iy = std::min(bottom(), o.bottom()) - std::max(y, o.y);
  return ix > 0.0 && iy > 0.0 ? ix * iy : 0.0;
}

bool Rect::inside_frame(double eps) const {
  return x >= -eps && y >= -eps && w > 0.0 && h > 0.0 && right() <= 1.0 + eps && bottom() <= 1.0 + eps;
}

Rect clamp_to_frame(const Rect& r) {
  constexpr double kMinExtent = 0.01;
  auto finite_or = [](double v, double fallback) { return std::isfinite(v) ? v : fallback; };
  Rect out;
  out.w = std::clamp(finite_or(r.w, 1.0), kMinExtent, 1.0);
  out.h = std::clamp(finite_or(r.h, 1.0), kMinExtent, 1.0);
  out.x = std::clamp(finite_or(r.x, 0.0), 0.0, 1.0 - out.w);
  out.y = std::clamp(finite_or(r.y, 0.0), 0.0, 1.0 - out.h);
  return out;
}

std::vector<Rect> fallback_grid(std::size_t count) {
  std::vector<Rect> out;
  if (count == 0) return out;
  auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
  std::size_t rows = (count + cols - 1) / cols;
  constexpr double kMargin = 0.05;
  constexpr double kGap = 0.02;
  double cw = (1.0 - 2 * kMargin - kGap * static_cast<double>(cols - 1)) / static_cast<double>(cols);
  double ch = (1.0 - 2 * kMargin - kGap * static_cast<double>(rows - 1)) / static_cast<double>(rows);
  for (std::size_t i = 0; i < count; ++i) {
    auto r = static_cast<double>(i / cols), c = static_cast<double>(i % cols);
    out.push_back({kMargin + c * (cw + kGap), kMargin + r * (ch + kGap), cw, ch});
  }
  return out;
}

std::vector<std::size_t> prune_overlaps(const std::vector<Rect>& rects) {
  std::vector<bool> alive(rects.size(), true);
  for (;;) {
    double worst = 0.0;
    std::size_t victim = rects.size();
    for (std::size_t i = 0; i < rects.size(); ++i) {
      if (!alive[i]) continue;
      double total = 0.0;
      for (std::size_t j = 0; j < rects.size(); ++j)
        if (j != i && alive[j]) total += rects[i].intersection_area(rects[j]);
      if (total > 0.0 && total >= worst) {
        worst = total;
        victim = i;
      }
    }
    if (victim == rects.size()) break;
    alive[victim] = false;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rects.size(); ++i)
    if (alive[i]) out.push_back(i);
  return out;
}

std::pair<SceneDirectives, SanityReport> sanity_check(const SceneDirectives& directives, bool enabled) {
  SanityReport report;
  report.sub_scene_id = directives.sub_scene_id;
  report.enabled = enabled;
  if (!enabled) return {directives, report};

  SceneDirectives d = directives;
  const Rect frame{0.0, 0.0, 1.0, 1.0};
  std::vector<std::string> removed;
  auto remove = [&](const std::string& id, const std::string& reason) {
    report.actions.push_back({id, "removed", reason});
    removed.push_back(id);
    d.layout.placements.erase(id);
  };

  // Components entirely outside the frame.
  for (auto it = d.layout.placements.begin(); it != d.layout.placements.end();) {
    if (it->second.intersection_area(frame) > 0.0) {
      ++it;
      continue;
    }
    std::string id = it->first;
    ++it;
    remove(id, "outside the frame");
  }
  std::vector<TextOverlay> kept;
  for (auto& o : d.overlays) {
    bool gone = std::find(removed.begin(), removed.end(), o.overlay_id) != removed.end();
    if (!gone && o.position.intersection_area(frame) <= 0.0) {
      remove(o.overlay_id, "outside the frame");
      gone = true;
    }
    if (gone) continue;
    // Timing window.
    double start = std::max(0.0, o.start_s);
    double end = o.end_s() > d.duration_s + kEps ? d.duration_s : o.end_s();
    if (end - start <= 0.0) {
      remove(o.overlay_id, "empty display window");
      continue;
    }
    if (start != o.start_s || end != o.end_s()) {
      report.actions.push_back({o.overlay_id, "clipped", "display window outside the sub-scene"});
      o.start_s = start;
      o.duration_s = end - start;
    }
    kept.push_back(o);
  }
  d.overlays = std::move(kept);

  // Overlapping text.
  std::vector<Rect> rects;
  for (const auto& o : d.overlays) rects.push_back(o.position);
  auto survivors = prune_overlaps(rects);
  if (survivors.size() != d.overlays.size()) {
    std::vector<TextOverlay> next;
    std::size_t s = 0;
    for (std::size_t i = 0; i < d.overlays.size(); ++i) {
      if (s < survivors.size() && survivors[s] == i) {
        next.push_back(d.overlays[i]);
        ++s;
      } else {
        remove(d.overlays[i].overlay_id, "overlaps another text overlay");
      }
    }
    d.overlays = std::move(next);
  }

  // Images and the avatar follow their placements.
  std::vector<std::string> images;
  for (const auto& id : d.image_ids)
    if (std::find(removed.begin(), removed.end(), id) == removed.end()) images.push_back(id);
  d.image_ids = std::move(images);
  if (d.avatar && std::find(removed.begin(), removed.end(), kAvatarId) != removed.end()) d.avatar = false;

  std::vector<EffectSpec> effects;
  for (auto e : d.effects) {
    if (std::find(removed.begin(), removed.end(), e.target_component_id) != removed.end()) {
      report.actions.push_back({e.target_component_id, "removed", to_string(e.kind) + " effect lost its target"});
      continue;
    }
    double start = std::max(0.0, e.start_s);
    double end = e.start_s + e.duration_s > d.duration_s + kEps ? d.duration_s : e.start_s + e.duration_s;
    if (end - start <= 0.0) {
      report.actions.push_back({e.target_component_id, "removed", to_string(e.kind) + " effect has an empty window"});
      continue;
    }
    if (start != e.start_s || end != e.start_s + e.duration_s) {
      report.actions.push_back({e.target_component_id, "clipped", to_string(e.kind) + " effect window"});
      e.start_s = start;
      e.duration_s = end - start;
    }
    effects.push_back(e);
  }
  d.effects = std::move(effects);
  return {d, report};
}

}  // namespace papercast::editing
