#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

#include <spdlog/spdlog.h>

#include "papercast/common/error.hpp"
#include "papercast/common/text.hpp"
#include "papercast/editing/editing.hpp"

namespace papercast::editing {

namespace {

void warn(std::vector<std::string>* sink, const std::string& msg) {
  spdlog::warn("{}", msg);
  if (sink) sink->push_back(msg);
}

void require_agent(const PromptState& p, gateway::AgentId expected) {
  if (p.agent != expected)
    raise(ErrorCode::PreconditionViolation, "expected an agent " + gateway::to_string(expected) + " prompt, got " +
                                                gateway::to_string(p.agent));
}

json call(Gateway& gateway, const PromptState& prompt, const std::string& schema, const json& input,
          std::vector<gateway::ImageRef> images = {}) {
  gateway::ModelRequest req;
  req.agent = prompt.agent;
  req.schema_id = schema;
  req.prompt_text = gateway::with_input(prompt.text, input);
  if (images.size() > gateway.backend().image_limit()) images.resize(gateway.backend().image_limit());
  req.attached_images = std::move(images);
  auto resp = gateway.complete_structured(req);
  if (!resp.valid) raise(ErrorCode::InvalidModelOutput, schema + " output rejected: " + resp.error);
  return *resp.parsed;
}

Rect rect_from(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(), j.at("h").get<double>()};
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::string to_string(EffectKind kind) {
  switch (kind) {
    case EffectKind::zoom_in: return "zoom_in";
    case EffectKind::zoom_out: return "zoom_out";
    case EffectKind::pan: return "pan";
    case EffectKind::fade_in: return "fade_in";
    case EffectKind::fade_out: return "fade_out";
    case EffectKind::none: return "none";
  }
  return "?";
}

EffectKind parse_effect_kind(const std::string& s) {
  for (auto k : {EffectKind::zoom_in, EffectKind::zoom_out, EffectKind::pan, EffectKind::fade_in, EffectKind::fade_out,
                 EffectKind::none})
    if (to_string(k) == s) return k;
  raise(ErrorCode::ParseError, "unknown effect kind '" + s + "'");
}

bool is_hex_color(const std::string& s) {
  static const std::regex hex("#[0-9A-Fa-f]{6}");
  return std::regex_match(s, hex);
}

std::string select_background(const SubScene& sub, const PromptState& prompt, Gateway& gateway, bool fixed_black,
                              std::vector<std::string>* warnings) {
  require_agent(prompt, gateway::AgentId::B);
  if (fixed_black) return kBlack;
  auto ids = sub.image_ids();
  json out = call(gateway, prompt, "background_v1",
                  {{"sub_scene", {{"id", sub.sub_scene_id}, {"description", sub.description}, {"image_ids", ids}}}});
  std::string choice = text::trim(out["background"].get<std::string>());
  if (is_hex_color(choice) || contains(ids, choice)) return choice;
  warn(warnings, sub.sub_scene_id + ": background '" + choice + "' is neither a color nor a sub-scene image");
  return kBlack;
}

std::vector<TextOverlay> generate_text_overlays(const SubScene& sub, const std::string& narration_slice,
                                                const PromptState& prompt, Gateway& gateway,
                                                std::vector<std::string>* warnings) {
  require_agent(prompt, gateway::AgentId::T);
  json out = call(gateway, prompt, "text_overlays_v1",
                  {{"sub_scene", {{"id", sub.sub_scene_id}, {"description", sub.description}, {"duration_s", sub.duration_s}}},
                   {"narration_slice", narration_slice}});
  std::vector<TextOverlay> overlays;
  const std::string& sid = sub.sub_scene_id;
  for (const auto& o : out["overlays"]) {
    TextOverlay t;
    t.overlay_id = "text_" + std::to_string(overlays.size() + 1);
    t.content = text::normalize_space(o["content"].get<std::string>());
    if (t.content.empty()) continue;
    auto size = o["font_size_pt"].get<long long>();
    t.font_size_pt = static_cast<int>(std::clamp<long long>(size, kFontMin, kFontMax));
    if (t.font_size_pt != size)
      warn(warnings, sid + ": font size " + std::to_string(size) + " clamped to " + std::to_string(t.font_size_pt));
    t.color = o["color"].get<std::string>();
    if (!is_hex_color(t.color)) {
      warn(warnings, sid + ": color '" + t.color + "' replaced by #FFFFFF");
      t.color = "#FFFFFF";
    }
    t.position = clamp_to_frame(rect_from(o["position"]));
    t.start_s = std::max(0.0, o["start_s"].get<double>());
    t.duration_s = o["duration_s"].get<double>();
    if (!std::isfinite(t.start_s) || t.start_s >= sub.duration_s || !(t.duration_s > 0.0)) {
      warn(warnings, sid + ": overlay '" + t.content + "' has no visible window");
      continue;
    }
    if (t.end_s() > sub.duration_s + kTimingTolerance) t.duration_s = sub.duration_s - t.start_s;
    overlays.push_back(std::move(t));
  }
  return overlays;
}

std::optional<std::string> zoom_request(const std::string& description, EffectKind* kind) {
  static const std::regex zoom(R"(\bzoom(?:[- ]?(in|out))?\b)", std::regex::icase);
  static const std::regex asset(R"(\b([A-Za-z0-9_]+)\.(?:png|jpe?g)\b)", std::regex::icase);
  std::smatch m;
  if (!std::regex_search(description, m, zoom)) return std::nullopt;
  if (kind) *kind = text::to_lower(m[1].str()) == "out" ? EffectKind::zoom_out : EffectKind::zoom_in;
  std::smatch a;
  if (std::regex_search(description, a, asset)) return a[1].str();
  return std::string{};
}

std::vector<EffectSpec> normalize_effects(const std::vector<EffectSpec>& raw, const SubScene& sub,
                                          const std::vector<std::string>& components,
                                          std::vector<std::string>* warnings) {
  const std::string& sid = sub.sub_scene_id;
  std::vector<EffectSpec> out;
  for (auto e : raw) {
    if (e.kind == EffectKind::none) continue;
    if (!contains(components, e.target_component_id)) {
      warn(warnings, sid + ": effect target '" + e.target_component_id + "' is not in the sub-scene");
      continue;
    }
    bool zoom = e.kind == EffectKind::zoom_in || e.kind == EffectKind::zoom_out;
    if (zoom || e.kind == EffectKind::pan) {
      double fallback = zoom ? kZoomMagnitudeDefault : kPanMagnitudeDefault;
      if (!std::isfinite(e.magnitude) || e.magnitude <= 0.0) e.magnitude = fallback;
      if (e.magnitude > kMagnitudeMax) {
        warn(warnings, sid + ": effect magnitude clamped to 4");
        e.magnitude = kMagnitudeMax;
      }
    } else {
      e.magnitude = 1.0;
    }
    double start = std::isfinite(e.start_s) ? std::max(0.0, e.start_s) : 0.0;
    double end = std::isfinite(e.duration_s) ? std::min(e.start_s + e.duration_s, sub.duration_s) : sub.duration_s;
    if (end - start <= 0.0) {
      warn(warnings, sid + ": " + to_string(e.kind) + " effect has an empty window");
      continue;
    }
    e.start_s = start;
    e.duration_s = end - start;
    out.push_back(e);
  }

  EffectKind kind = EffectKind::zoom_in;
  if (auto named = zoom_request(sub.description, &kind)) {
    std::string target = *named;
    if (!contains(sub.image_ids(), target)) {
      auto ids = sub.image_ids();
      target = ids.empty() ? std::string{} : ids.front();
    }
    bool has_zoom = std::any_of(out.begin(), out.end(), [&](const EffectSpec& e) {
      return (e.kind == EffectKind::zoom_in || e.kind == EffectKind::zoom_out) && e.target_component_id == target;
    });
    if (!target.empty() && !has_zoom) {
      warn(warnings, sid + ": direction asks for a zoom on " + target + "; adding one");
      out.push_back({kind, target, 0.0, sub.duration_s, kZoomMagnitudeDefault});
    }
  }
  return out;
}

std::vector<EffectSpec> generate_effects(const SubScene& sub, const std::vector<std::string>& components,
                                         const PromptState& prompt, Gateway& gateway,
                                         std::vector<std::string>* warnings) {
  require_agent(prompt, gateway::AgentId::E);
  json out = call(gateway, prompt, "effects_v1",
                  {{"sub_scene", {{"id", sub.sub_scene_id}, {"description", sub.description}, {"duration_s", sub.duration_s}}},
                   {"components", components},
                   {"image_ids", sub.image_ids()}});
  std::vector<EffectSpec> raw;
  for (const auto& e : out["effects"]) {
    EffectSpec s;
    s.kind = parse_effect_kind(e["kind"].get<std::string>());
    if (s.kind == EffectKind::none) continue;
    s.target_component_id = e["target"].get<std::string>();
    s.start_s = e["start_s"].get<double>();
    s.duration_s = e["duration_s"].get<double>();
    s.magnitude = e.value("magnitude", 0.0);
    raw.push_back(s);
  }
  return normalize_effects(raw, sub, components, warnings);
}

LayoutPlan allocate_layout(const SceneMarkup& markup, const PromptState& prompt, Gateway& gateway,
                           std::vector<std::string>* warnings) {
  require_agent(prompt, gateway::AgentId::L);
  auto components = parse_scene_markup(markup.markup_text);
  LayoutPlan plan;
  if (components.empty()) return plan;
  json out = call(gateway, prompt, "layout_v1", {{"markup", markup.markup_text}});
  const json& placements = out["placements"];
  std::vector<std::string> missing;
  for (const auto& c : components) {
    if (!placements.contains(c.id)) {
      missing.push_back(c.id);
      continue;
    }
    Rect raw = rect_from(placements[c.id]);
    Rect r = clamp_to_frame(raw);
    if (!(r == raw)) warn(warnings, "layout for '" + c.id + "' clamped into the frame");
    plan.placements[c.id] = r;
  }
  auto grid = fallback_grid(missing.size());
  for (std::size_t i = 0; i < missing.size(); ++i) {
    warn(warnings, "layout omitted '" + missing[i] + "'; using the fallback grid");
    plan.placements[missing[i]] = grid[i];
  }
  return plan;
}

std::pair<SceneDirectives, SanityReport> generate_directives(const SubScene& sub, const std::string& narration_slice,
                                                             const ingest::PaperAssets& assets,
                                                             const EditingPrompts& prompts, Gateway& gateway,
                                                             const EditingOptions& options, bool avatar_present) {
  SceneDirectives d;
  d.sub_scene_id = sub.sub_scene_id;
  d.duration_s = sub.duration_s;
  d.avatar = avatar_present;
  std::set<std::string> seen;
  for (const auto& id : sub.image_ids())
    if (seen.insert(id).second) d.image_ids.push_back(id);

  d.background = select_background(sub, prompts.background, gateway, options.fixed_black_background, &d.warnings);
  d.overlays = generate_text_overlays(sub, narration_slice, prompts.text, gateway, &d.warnings);

  std::vector<std::string> components = d.image_ids;
  for (const auto& o : d.overlays) components.push_back(o.overlay_id);
  if (avatar_present) components.push_back(kAvatarId);
  d.effects = generate_effects(sub, components, prompts.effects, gateway, &d.warnings);

  auto markup = serialize_scene_markup(sub, d.overlays, avatar_present, assets);
  d.layout = allocate_layout(markup, prompts.layout, gateway, &d.warnings);
  // Layout decides where text goes; the text agent's own position is a hint.
  for (auto& o : d.overlays) o.position = d.layout.placements.at(o.overlay_id);

  return sanity_check(d, options.sanity_check);
}

}  // namespace papercast::editing
