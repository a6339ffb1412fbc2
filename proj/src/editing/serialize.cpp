#include "papercast/editing/editing.hpp"

namespace papercast::editing {

namespace {

json rect_json(const Rect& r) { return {{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}; }

Rect rect_of(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(), j.at("h").get<double>()};
}

}  // namespace

json to_json(const SceneDirectives& d) {
  json overlays = json::array();
  for (const auto& o : d.overlays)
    overlays.push_back({{"overlay_id", o.overlay_id},
                        {"content", o.content},
                        {"font_size_pt", o.font_size_pt},
                        {"color", o.color},
                        {"position", rect_json(o.position)},
                        {"start_s", o.start_s},
                        {"duration_s", o.duration_s}});
  json effects = json::array();
  for (const auto& e : d.effects)
    effects.push_back({{"kind", to_string(e.kind)},
                       {"target_component_id", e.target_component_id},
                       {"start_s", e.start_s},
                       {"duration_s", e.duration_s},
                       {"magnitude", e.magnitude}});
  json placements = json::object();
  for (const auto& [id, r] : d.layout.placements) placements[id] = rect_json(r);
  return {{"schema", "papercast.directives"},
          {"version", 1},
          {"sub_scene_id", d.sub_scene_id},
          {"duration_s", d.duration_s},
          {"background", d.background},
          {"image_ids", d.image_ids},
          {"avatar", d.avatar},
          {"overlays", overlays},
          {"effects", effects},
          {"layout", placements},
          {"warnings", d.warnings}};
}

SceneDirectives directives_from_json(const json& j) {
  SceneDirectives d;
  d.sub_scene_id = j.at("sub_scene_id").get<std::string>();
  d.duration_s = j.at("duration_s").get<double>();
  d.background = j.at("background").get<std::string>();
  d.image_ids = j.at("image_ids").get<std::vector<std::string>>();
  d.avatar = j.at("avatar").get<bool>();
  for (const auto& o : j.at("overlays"))
    d.overlays.push_back({o.at("overlay_id").get<std::string>(), o.at("content").get<std::string>(),
                          o.at("font_size_pt").get<int>(), o.at("color").get<std::string>(), rect_of(o.at("position")),
                          o.at("start_s").get<double>(), o.at("duration_s").get<double>()});
  for (const auto& e : j.at("effects"))
    d.effects.push_back({parse_effect_kind(e.at("kind").get<std::string>()), e.at("target_component_id").get<std::string>(),
                         e.at("start_s").get<double>(), e.at("duration_s").get<double>(), e.at("magnitude").get<double>()});
  for (const auto& [id, r] : j.at("layout").items()) d.layout.placements[id] = rect_of(r);
  d.warnings = j.value("warnings", std::vector<std::string>{});
  return d;
}

json to_json(const SanityReport& r) {
  json actions = json::array();
  for (const auto& a : r.actions)
    actions.push_back({{"component_id", a.component_id}, {"action", a.action}, {"reason", a.reason}});
  return {{"sub_scene_id", r.sub_scene_id}, {"enabled", r.enabled}, {"actions", actions}};
}

}  // namespace papercast::editing
