#include "papercast/gateway/schemas.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace papercast::gateway {

namespace {

struct Invalid {
  std::string message;
};

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw Invalid{path + ": " + what}; }

const json& field(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path, std::string("missing field '") + key + "'");
  return *it;
}

std::string str(const json& obj, const std::string& path, const char* key, bool nonempty = true) {
  const json& v = field(obj, path, key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  if (nonempty && v.get<std::string>().find_first_not_of(" \t\r\n") == std::string::npos)
    fail(path + "." + key, "must not be empty");
  return v.get<std::string>();
}

double num(const json& obj, const std::string& path, const char* key) {
  const json& v = field(obj, path, key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

long long integer(const json& obj, const std::string& path, const char* key) {
  const json& v = field(obj, path, key);
  if (v.is_number_integer() || v.is_number_unsigned()) return v.get<long long>();
  if (v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<long long>(v.get<double>())))
    return static_cast<long long>(v.get<double>());
  fail(path + "." + key, "expected an integer");
}

const json& arr(const json& obj, const std::string& path, const char* key) {
  const json& v = field(obj, path, key);
  if (!v.is_array()) fail(path + "." + key, "expected an array");
  return v;
}

void string_array(const json& obj, const std::string& path, const char* key) {
  const json& a = arr(obj, path, key);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!a[i].is_string()) fail(path + "." + key + "[" + std::to_string(i) + "]", "expected a string");
}

void rect(const json& obj, const std::string& path, const char* key) {
  const json& r = field(obj, path, key);
  std::string p = path + "." + key;
  for (const char* k : {"x", "y", "w", "h"}) num(r, p, k);
}

void check_flashtalk(const json& v, const json&) {
  const json& sections = arr(v, "$", "sections");
  if (sections.size() != kSectionKinds.size())
    fail("$.sections", "expected exactly 4 sections, got " + std::to_string(sections.size()));
  for (std::size_t i = 0; i < sections.size(); ++i) {
    std::string p = "$.sections[" + std::to_string(i) + "]";
    std::string kind = str(sections[i], p, "kind");
    if (kind != kSectionKinds[i])
      fail(p + ".kind", "expected '" + std::string(kSectionKinds[i]) + "', got '" + kind + "'");
    str(sections[i], p, "narration");
    string_array(sections[i], p, "image_ids");
  }
}

void check_sub_scene_images(const json& sub, const std::string& p) {
  if (!sub.contains("images")) return;
  const json& images = arr(sub, p, "images");
  for (std::size_t k = 0; k < images.size(); ++k) {
    std::string ip = p + ".images[" + std::to_string(k) + "]";
    str(images[k], ip, "asset_id");
    if (images[k].contains("duration_s")) num(images[k], ip, "duration_s");
  }
}

void check_sceneplan(const json& v, const json&) {
  const json& subs = arr(v, "$", "sub_scenes");
  for (std::size_t i = 0; i < subs.size(); ++i) {
    std::string p = "$.sub_scenes[" + std::to_string(i) + "]";
    str(subs[i], p, "description");
    num(subs[i], p, "duration_s");
    check_sub_scene_images(subs[i], p);
  }
}

void check_background(const json& v, const json&) { str(v, "$", "background"); }

void check_overlay(const json& o, const std::string& p) {
  str(o, p, "content");
  if (integer(o, p, "font_size_pt") <= 0) fail(p + ".font_size_pt", "must be positive");
  str(o, p, "color");
  rect(o, p, "position");
  num(o, p, "start_s");
  num(o, p, "duration_s");
}

void check_text_overlays(const json& v, const json&) {
  const json& overlays = arr(v, "$", "overlays");
  for (std::size_t i = 0; i < overlays.size(); ++i) check_overlay(overlays[i], "$.overlays[" + std::to_string(i) + "]");
}

void check_effects(const json& v, const json&) {
  const json& effects = arr(v, "$", "effects");
  for (std::size_t i = 0; i < effects.size(); ++i) {
    std::string p = "$.effects[" + std::to_string(i) + "]";
    std::string kind = str(effects[i], p, "kind");
    if (std::find(kEffectKinds.begin(), kEffectKinds.end(), kind) == kEffectKinds.end())
      fail(p + ".kind", "unknown effect '" + kind + "'");
    if (kind == "none") continue;
    str(effects[i], p, "target");
    num(effects[i], p, "start_s");
    num(effects[i], p, "duration_s");
    if (effects[i].contains("magnitude")) num(effects[i], p, "magnitude");
  }
}

void check_layout(const json& v, const json&) {
  const json& placements = field(v, "$", "placements");
  if (!placements.is_object()) fail("$.placements", "expected an object keyed by component id");
  for (const auto& [id, r] : placements.items()) {
    std::string p = "$.placements." + id;
    for (const char* k : {"x", "y", "w", "h"}) num(r, p, k);
  }
}

std::pair<long long, long long> score_range(const json& c) {
  return {c.value("score_min", 1LL), c.value("score_max", 5LL)};
}

void check_feedback(const json& v, const json& c) {
  std::string metric = str(v, "$", "metric");
  if (c.contains("metrics")) {
    const auto& allowed = c["metrics"];
    if (std::find(allowed.begin(), allowed.end(), json(metric)) == allowed.end())
      fail("$.metric", "metric '" + metric + "' was not requested");
  }
  auto [lo, hi] = score_range(c);
  long long score = integer(v, "$", "score");
  if (score < lo || score > hi)
    fail("$.score", "score " + std::to_string(score) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  str(v, "$", "comment", false);
}

void check_summary(const json& v, const json&) { str(v, "$", "summary", false); }

void check_reflection(const json& v, const json&) { str(v, "$", "revised_prompt"); }

void check_evaluation(const json& v, const json& c) {
  const json& scores = field(v, "$", "scores");
  auto [lo, hi] = score_range(c);
  for (auto id : kEvaluationMetricIds) {
    std::string key(id);
    long long s = integer(scores, "$.scores", key.c_str());
    if (s < lo || s > hi) fail("$.scores." + key, "score " + std::to_string(s) + " out of range");
  }
  if (v.contains("comments") && !v["comments"].is_object()) fail("$.comments", "expected an object");
}

void check_baseline(const json& v, const json&) {
  const json& sections = arr(v, "$", "sections");
  if (sections.size() != kSectionKinds.size()) fail("$.sections", "expected exactly 4 sections");
  for (std::size_t i = 0; i < sections.size(); ++i) {
    std::string p = "$.sections[" + std::to_string(i) + "]";
    std::string kind = str(sections[i], p, "kind");
    if (kind != kSectionKinds[i]) fail(p + ".kind", "expected '" + std::string(kSectionKinds[i]) + "'");
    str(sections[i], p, "narration");
    string_array(sections[i], p, "image_ids");
    const json& subs = arr(sections[i], p, "sub_scenes");
    if (subs.empty() || subs.size() > 5) fail(p + ".sub_scenes", "expected 1 to 5 sub-scenes");
    for (std::size_t k = 0; k < subs.size(); ++k) {
      std::string sp = p + ".sub_scenes[" + std::to_string(k) + "]";
      str(subs[k], sp, "description");
      num(subs[k], sp, "duration_s");
      string_array(subs[k], sp, "image_ids");
      const json& t = field(subs[k], sp, "text");
      str(t, sp + ".text", "content");
      if (integer(t, sp + ".text", "font_size_pt") <= 0) fail(sp + ".text.font_size_pt", "must be positive");
      str(t, sp + ".text", "color");
      rect(t, sp + ".text", "position");
    }
  }
}

using Checker = std::function<void(const json&, const json&)>;

const std::map<std::string, Checker>& checkers() {
  static const std::map<std::string, Checker> m = {
      {"flashtalk_v1", check_flashtalk},   {"sceneplan_v1", check_sceneplan}, {"background_v1", check_background},
      {"text_overlays_v1", check_text_overlays}, {"effects_v1", check_effects}, {"layout_v1", check_layout},
      {"feedback_v1", check_feedback},     {"summary_v1", check_summary},     {"reflection_v1", check_reflection},
      {"evaluation_v1", check_evaluation}, {"baseline_v1", check_baseline},
  };
  return m;
}

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> m = {
      {"flashtalk_v1", R"({"sections": [
  {"kind": "aggressive_hook", "narration": "<spoken text>", "image_ids": ["first_page"]},
  {"kind": "brief_context", "narration": "<spoken text>", "image_ids": ["fig_1"]},
  {"kind": "intriguing_teaser", "narration": "<spoken text>", "image_ids": []},
  {"kind": "call_to_action", "narration": "<spoken text>", "image_ids": []}
]}
Exactly four sections in this order. image_ids must come from the provided asset list.)"},
      {"sceneplan_v1", R"({"sub_scenes": [
  {"description": "<direction, e.g. a zoom-in on first_page.png>", "duration_s": 4.0,
   "images": [{"asset_id": "first_page", "duration_s": 4.0}]}
]}
Between 1 and 5 sub-scenes. Every image of the section should appear in exactly one sub-scene.)"},
      {"background_v1", R"({"background": "#000000"}
Either a #RRGGBB color or one asset id from the sub-scene.)"},
      {"text_overlays_v1", R"({"overlays": [
  {"content": "<short on-screen text>", "font_size_pt": 48, "color": "#FFFFFF",
   "position": {"x": 0.05, "y": 0.8, "w": 0.9, "h": 0.08}, "start_s": 0.0, "duration_s": 3.0}
]}
Positions are normalized to the frame. Font sizes between 12 and 96. Timings relative to the sub-scene start.)"},
      {"effects_v1", R"({"effects": [
  {"kind": "zoom_in", "target": "first_page", "start_s": 0.0, "duration_s": 3.0, "magnitude": 1.3}
]}
kind is one of zoom_in, zoom_out, pan, fade_in, fade_out, none. target is a component id.)"},
      {"layout_v1", R"({"placements": {"<component id>": {"x": 0.1, "y": 0.2, "w": 0.8, "h": 0.4}}}
One normalized rectangle per component in the markup, inside the unit frame.)"},
      {"feedback_v1", R"({"metric": "<metric name>", "score": 3, "comment": "<one or two sentences>"}
score is an integer from 1 (poor) to 5 (excellent).)"},
      {"summary_v1", R"({"summary": "<condensed, actionable feedback>"})"},
      {"reflection_v1", R"({"revised_prompt": "<full rewritten prompt>"}
The revised prompt must keep the OUTPUT_SCHEMA block exactly as given.)"},
      {"evaluation_v1", R"({"scores": {"SI": 3, "KCC": 3, "LF": 3, "C": 3, "SR": 3, "AVA": 3, "AR": 3, "Pacing": 3, "CTA": 3, "HE": 3},
 "comments": {"SI": "<reason>"}}
Integer scores from 1 to 5 for all ten metrics.)"},
      {"baseline_v1", R"({"sections": [
  {"kind": "aggressive_hook", "narration": "<spoken text>", "image_ids": ["first_page"],
   "sub_scenes": [{"description": "<direction>", "duration_s": 4.0, "image_ids": ["first_page"],
                   "text": {"content": "<on-screen text>", "font_size_pt": 48, "color": "#FFFFFF",
                            "position": {"x": 0.05, "y": 0.8, "w": 0.9, "h": 0.08}}}]}
]}
Four sections (aggressive_hook, brief_context, intriguing_teaser, call_to_action), each with 1 to 5 sub-scenes.)"},
  };
  return m;
}

}  // namespace

bool is_known_schema(const std::string& schema_id) { return checkers().count(schema_id) > 0; }

std::vector<std::string> known_schemas() {
  std::vector<std::string> out;
  for (const auto& [k, _] : checkers()) out.push_back(k);
  return out;
}

std::optional<std::string> validate(const std::string& schema_id, const json& value, const json& constraints) {
  auto it = checkers().find(schema_id);
  if (it == checkers().end()) return "unknown schema '" + schema_id + "'";
  try {
    it->second(value, constraints.is_object() ? constraints : json::object());
  } catch (const Invalid& e) {
    return e.message;
  } catch (const json::exception& e) {
    return std::string("malformed value: ") + e.what();
  }
  return std::nullopt;
}

std::string schema_description(const std::string& schema_id) {
  auto it = descriptions().find(schema_id);
  return it == descriptions().end() ? std::string{} : it->second;
}

}  // namespace papercast::gateway
