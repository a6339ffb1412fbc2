#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <spdlog/spdlog.h>

#include "papercast/common/error.hpp"
#include "papercast/common/text.hpp"
#include "papercast/planning/planning.hpp"

namespace papercast::planning {

std::vector<std::string> SubScene::image_ids() const {
  std::vector<std::string> out;
  for (const auto& i : images) out.push_back(i.asset_id);
  return out;
}

double Scene::duration_s() const {
  double total = 0.0;
  for (const auto& s : sub_scenes) total += s.duration_s;
  return total;
}

std::size_t ScenePlan::sub_scene_count() const {
  std::size_t n = 0;
  for (const auto& s : scenes) n += s.sub_scenes.size();
  return n;
}

const SubScene* ScenePlan::find(const std::string& sub_scene_id) const {
  for (const auto& sc : scenes)
    for (const auto& s : sc.sub_scenes)
      if (s.sub_scene_id == sub_scene_id) return &s;
  return nullptr;
}

std::vector<double> rescale_durations(const std::vector<double>& raw, double total) {
  if (raw.empty()) return {};
  double sum = 0.0;
  bool usable = true;
  for (double d : raw) {
    if (!std::isfinite(d) || d <= 0.0) usable = false;
    sum += d;
  }
  std::vector<double> out(raw.size(), total / static_cast<double>(raw.size()));
  if (!usable || !(sum > 0.0)) return out;
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] * total / sum;
  return out;
}

Scene redistribute_images(const Scene& scene, const Section& section) {
  Scene out = scene;
  if (out.sub_scenes.empty()) return out;
  std::map<std::string, int> remaining;
  for (const auto& id : section.assigned_image_ids) ++remaining[id];

  for (auto& sub : out.sub_scenes) {
    std::vector<TimedImage> kept;
    for (const auto& img : sub.images) {
      auto it = remaining.find(img.asset_id);
      if (it == remaining.end() || it->second == 0) {
        spdlog::debug("dropping image {} from {}", img.asset_id, sub.sub_scene_id);
        continue;
      }
      --it->second;
      double d = img.duration_s > 0.0 && img.duration_s < sub.duration_s ? img.duration_s : sub.duration_s;
      kept.push_back({img.asset_id, d});
    }
    sub.images = std::move(kept);
  }

  // Unplaced images, in assignment order.
  for (const auto& id : section.assigned_image_ids) {
    auto& left = remaining[id];
    if (left == 0) continue;
    --left;
    auto host = std::min_element(out.sub_scenes.begin(), out.sub_scenes.end(),
                                 [](const SubScene& a, const SubScene& b) { return a.images.size() < b.images.size(); });
    host->images.push_back({id, host->duration_s});
  }
  return out;
}

std::string narration_slice(const Section& section, const Scene& scene, std::size_t index) {
  auto words = text::split_words(section.narration_text);
  double total = scene.duration_s();
  if (index >= scene.sub_scenes.size() || words.empty() || !(total > 0.0)) return {};
  const auto& sub = scene.sub_scenes[index];
  auto at = [&](double t) {
    return std::min(words.size(), static_cast<std::size_t>(std::floor(static_cast<double>(words.size()) * t / total + 1e-9)));
  };
  std::size_t from = at(sub.start_s);
  std::size_t to = index + 1 == scene.sub_scenes.size() ? words.size() : at(sub.start_s + sub.duration_s);
  return text::join(std::vector<std::string>(words.begin() + static_cast<long>(from), words.begin() + static_cast<long>(to)), " ");
}

namespace {

gateway::ModelResponse request_plan(const Section& section, const AudioTrack& audio, const PromptState& prompt,
                                    Gateway& gateway, const std::string& correction) {
  gateway::ModelRequest req;
  req.agent = gateway::AgentId::S;
  req.schema_id = "sceneplan_v1";
  json input = {{"section",
                 {{"kind", to_string(section.kind)},
                  {"narration", section.narration_text},
                  {"image_ids", section.assigned_image_ids}}},
                {"audio_duration_s", audio.duration_s},
                {"max_sub_scenes", kMaxSubScenes}};
  if (!correction.empty()) input["correction"] = correction;
  req.prompt_text = gateway::with_input(prompt.text, input);
  return gateway.complete_structured(req);
}

}  // namespace

Scene build_scene(const Section& section, const AudioTrack& audio, const json& subs) {
  Scene scene;
  scene.section_kind = section.kind;
  std::vector<double> raw;
  for (const auto& s : subs) raw.push_back(s["duration_s"].get<double>());
  auto durations = rescale_durations(raw, audio.duration_s);
  double t = 0.0;
  for (std::size_t k = 0; k < subs.size(); ++k) {
    SubScene sub;
    sub.sub_scene_id = to_string(section.kind) + "_" + std::to_string(k + 1);
    sub.description = text::normalize_space(subs[k]["description"].get<std::string>());
    sub.start_s = t;
    sub.duration_s = durations[k];
    double scale = raw[k] > 0.0 && std::isfinite(raw[k]) ? durations[k] / raw[k] : 1.0;
    for (const auto& img : subs[k].value("images", json::array())) {
      double d = img.contains("duration_s") && img["duration_s"].is_number() ? img["duration_s"].get<double>() * scale : 0.0;
      sub.images.push_back({img["asset_id"].get<std::string>(), d});
    }
    t += durations[k];
    scene.sub_scenes.push_back(std::move(sub));
  }
  return redistribute_images(scene, section);
}

ScenePlan generate_sceneplan(const FlashtalkScript& script, const std::vector<AudioTrack>& audio,
                             const PromptState& prompt, Gateway& gateway) {
  if (prompt.agent != gateway::AgentId::S)
    raise(ErrorCode::PreconditionViolation, "sceneplan needs an agent S prompt, got " + gateway::to_string(prompt.agent));
  if (audio.size() != script.sections.size())
    raise(ErrorCode::PreconditionViolation, "need one audio track per section");

  ScenePlan plan;
  for (std::size_t i = 0; i < script.sections.size(); ++i) {
    const auto& section = script.sections[i];
    if (audio[i].section_kind != section.kind)
      raise(ErrorCode::PreconditionViolation, "audio tracks are not in section order");
    std::string correction;
    json subs;
    for (int attempt = 0; attempt < 2; ++attempt) {
      auto resp = request_plan(section, audio[i], prompt, gateway, correction);
      if (!resp.valid) raise(ErrorCode::InvalidModelOutput, "sceneplan output rejected: " + resp.error);
      subs = (*resp.parsed)["sub_scenes"];
      if (!subs.empty() && subs.size() <= static_cast<std::size_t>(kMaxSubScenes)) break;
      correction = "The previous plan had " + std::to_string(subs.size()) +
                   " sub-scenes. Return between 1 and 5 sub-scenes.";
      spdlog::warn("{}: {}", to_string(section.kind), correction);
      if (attempt == 1)
        raise(ErrorCode::InfeasiblePlan, to_string(section.kind) + ": model proposed " + std::to_string(subs.size()) +
                                             " sub-scenes twice");
    }
    plan.scenes.push_back(build_scene(section, audio[i], subs));
  }
  return plan;
}

std::optional<std::string> check_plan(const ScenePlan& plan, const FlashtalkScript& script,
                                      const std::vector<AudioTrack>& audio) {
  if (plan.scenes.size() != script.sections.size() || audio.size() != script.sections.size())
    return "scene, section and audio counts differ";
  for (std::size_t i = 0; i < plan.scenes.size(); ++i) {
    const auto& scene = plan.scenes[i];
    std::string name = to_string(scene.section_kind);
    if (scene.section_kind != script.sections[i].kind) return name + " is out of order";
    if (scene.sub_scenes.empty() || scene.sub_scenes.size() > static_cast<std::size_t>(kMaxSubScenes))
      return name + " has " + std::to_string(scene.sub_scenes.size()) + " sub-scenes";
    double t = 0.0;
    std::vector<std::string> ids;
    for (const auto& sub : scene.sub_scenes) {
      if (!(sub.duration_s > 0.0)) return sub.sub_scene_id + " has a non-positive duration";
      if (std::abs(sub.start_s - t) > 1e-6) return sub.sub_scene_id + " is not contiguous";
      if (text::trim(sub.description).empty()) return sub.sub_scene_id + " has no description";
      for (const auto& img : sub.images) {
        if (!(img.duration_s > 0.0) || img.duration_s > sub.duration_s + 1e-9)
          return sub.sub_scene_id + " image " + img.asset_id + " has a bad duration";
        ids.push_back(img.asset_id);
      }
      t += sub.duration_s;
    }
    if (std::abs(t - audio[i].duration_s) > 0.25) return name + " durations do not match its audio";
    auto expected = script.sections[i].assigned_image_ids;
    std::sort(ids.begin(), ids.end());
    std::sort(expected.begin(), expected.end());
    if (ids != expected) return name + " does not conserve its images";
  }
  return std::nullopt;
}

}  // namespace papercast::planning
