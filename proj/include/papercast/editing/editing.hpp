#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "papercast/gateway/gateway.hpp"
#include "papercast/gateway/prompts.hpp"
#include "papercast/ingest/ingest.hpp"
#include "papercast/planning/planning.hpp"

namespace papercast::editing {

using gateway::Gateway;
using gateway::PromptState;
using planning::SubScene;

// Normalized to the frame: (0,0) top-left, (1,1) bottom-right.
struct Rect {
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;

  [[nodiscard]] double area() const { return w * h; }
  [[nodiscard]] double right() const { return x + w; }
  [[nodiscard]] double bottom() const { return y + h; }
  // Area shared with `o`; edges that merely touch share nothing.
  [[nodiscard]] double intersection_area(const Rect& o) const;
  [[nodiscard]] bool intersects(const Rect& o) const { return intersection_area(o) > 0.0; }
  [[nodiscard]] bool inside_frame(double eps = 1e-9) const;
  bool operator==(const Rect&) const = default;
};

// Shrinks oversize extents to the frame, then shifts the rect inside it.
Rect clamp_to_frame(const Rect& r);

struct TextOverlay {
  std::string overlay_id;
  std::string content;
  int font_size_pt = 48;
  std::string color = "#FFFFFF";
  Rect position;
  double start_s = 0.0;  // relative to the sub-scene start
  double duration_s = 0.0;

  [[nodiscard]] double end_s() const { return start_s + duration_s; }
  bool operator==(const TextOverlay&) const = default;
};

enum class EffectKind { zoom_in, zoom_out, pan, fade_in, fade_out, none };
std::string to_string(EffectKind kind);
EffectKind parse_effect_kind(const std::string& s);

struct EffectSpec {
  EffectKind kind = EffectKind::none;
  std::string target_component_id;
  double start_s = 0.0;
  double duration_s = 0.0;
  double magnitude = 1.0;  // scale factor for zooms, frame fraction for pans

  bool operator==(const EffectSpec&) const = default;
};

inline constexpr double kZoomMagnitudeDefault = 1.3;
inline constexpr double kPanMagnitudeDefault = 0.2;
inline constexpr double kMagnitudeMax = 4.0;
inline constexpr int kFontMin = 12;
inline constexpr int kFontMax = 96;
inline constexpr double kTimingTolerance = 0.01;
inline constexpr const char* kAvatarId = "avatar";
inline constexpr const char* kBlack = "#000000";

enum class ComponentKind { image, text, avatar };
std::string to_string(ComponentKind kind);

struct MarkupComponent {
  ComponentKind kind = ComponentKind::image;
  std::string id;
  int width = 0;  // intrinsic size hint in pixels
  int height = 0;
  std::string content;  // text components only

  bool operator==(const MarkupComponent&) const = default;
};

struct SceneMarkup {
  std::string markup_text;
};

struct LayoutPlan {
  std::map<std::string, Rect> placements;
};

struct SanityAction {
  std::string component_id;
  std::string action;  // "removed" or "clipped"
  std::string reason;
};

struct SanityReport {
  std::string sub_scene_id;
  bool enabled = true;
  std::vector<SanityAction> actions;
};

struct SceneDirectives {
  std::string sub_scene_id;
  double duration_s = 0.0;
  std::string background = kBlack;  // #RRGGBB or an asset id
  std::vector<std::string> image_ids;
  bool avatar = false;
  std::vector<TextOverlay> overlays;
  std::vector<EffectSpec> effects;
  LayoutPlan layout;
  std::vector<std::string> warnings;
};

bool is_hex_color(const std::string& s);

struct EditingOptions {
  bool fixed_black_background = true;
  bool sanity_check = true;
};

// ---- agents ---------------------------------------------------------------

std::string select_background(const SubScene& sub, const PromptState& prompt, Gateway& gateway,
                              bool fixed_black, std::vector<std::string>* warnings = nullptr);

std::vector<TextOverlay> generate_text_overlays(const SubScene& sub, const std::string& narration_slice,
                                                const PromptState& prompt, Gateway& gateway,
                                                std::vector<std::string>* warnings = nullptr);

// `components` are the ids an effect may target.
std::vector<EffectSpec> generate_effects(const SubScene& sub, const std::vector<std::string>& components,
                                         const PromptState& prompt, Gateway& gateway,
                                         std::vector<std::string>* warnings = nullptr);

// Validates raw effects: drops `none` and unknown targets, defaults and clamps
// magnitudes, clips windows, and adds a zoom when the direction asks for one.
std::vector<EffectSpec> normalize_effects(const std::vector<EffectSpec>& raw, const SubScene& sub,
                                          const std::vector<std::string>& components,
                                          std::vector<std::string>* warnings = nullptr);

// The asset named by a zoom direction ("zoom-in on fig_2.png"), if any.
std::optional<std::string> zoom_request(const std::string& description, EffectKind* kind = nullptr);

SceneMarkup serialize_scene_markup(const SubScene& sub, const std::vector<TextOverlay>& overlays, bool avatar_present,
                                   const ingest::PaperAssets& assets);
// Throws ParseError on malformed nesting, unknown tags or duplicate ids.
std::vector<MarkupComponent> parse_scene_markup(const std::string& markup_text);

LayoutPlan allocate_layout(const SceneMarkup& markup, const PromptState& prompt, Gateway& gateway,
                           std::vector<std::string>* warnings = nullptr);

// Uniform grid in reading order for `count` components.
std::vector<Rect> fallback_grid(std::size_t count);

std::pair<SceneDirectives, SanityReport> sanity_check(const SceneDirectives& directives, bool enabled);

// Which overlay indices survive greedy overlap pruning. Ties on total overlap
// drop the later overlay.
std::vector<std::size_t> prune_overlaps(const std::vector<Rect>& rects);

struct EditingPrompts {
  PromptState background, text, effects, layout;
};

// Runs background, text, effects, markup, layout and the sanity check for one
// sub-scene.
std::pair<SceneDirectives, SanityReport> generate_directives(const SubScene& sub, const std::string& narration_slice,
                                                             const ingest::PaperAssets& assets,
                                                             const EditingPrompts& prompts, Gateway& gateway,
                                                             const EditingOptions& options, bool avatar_present);

json to_json(const SceneDirectives& d);
SceneDirectives directives_from_json(const json& j);
json to_json(const SanityReport& r);

}  // namespace papercast::editing
