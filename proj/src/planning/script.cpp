#include <algorithm>
#include <set>

#include <spdlog/spdlog.h>

#include "papercast/common/error.hpp"
#include "papercast/common/text.hpp"
#include "papercast/planning/planning.hpp"

namespace papercast::planning {

namespace {

constexpr std::size_t kMaxWordsPerInputSection = 400;

std::string clip_words(const std::string& s, std::size_t max_words) {
  auto words = text::split_words(s);
  if (words.size() <= max_words) return text::normalize_space(s);
  words.resize(max_words);
  return text::join(words, " ") + " ...";
}

}  // namespace

std::string to_string(SectionKind kind) {
  switch (kind) {
    case SectionKind::aggressive_hook: return "aggressive_hook";
    case SectionKind::brief_context: return "brief_context";
    case SectionKind::intriguing_teaser: return "intriguing_teaser";
    case SectionKind::call_to_action: return "call_to_action";
  }
  return "?";
}

SectionKind parse_section_kind(const std::string& s) {
  for (auto k : kSectionOrder)
    if (to_string(k) == s) return k;
  raise(ErrorCode::ParseError, "unknown section kind '" + s + "'");
}

FlashtalkScript generate_flashtalk(const ingest::PaperAssets& assets, const PromptState& prompt, Gateway& gateway,
                                   double target_duration_s) {
  if (prompt.agent != gateway::AgentId::F)
    raise(ErrorCode::PreconditionViolation, "flashtalk needs an agent F prompt, got " + gateway::to_string(prompt.agent));
  if (assets.body_text.empty()) raise(ErrorCode::EmptyDocument, "paper has no text sections");

  FlashtalkScript script;
  script.target_duration_s = std::clamp(target_duration_s, kTargetDurationMin, kTargetDurationMax);

  json sections = json::array();
  for (const auto& s : assets.body_text)
    sections.push_back({{"heading", s.heading}, {"text", clip_words(s.text, kMaxWordsPerInputSection)}});
  json asset_list = json::array();
  gateway::ModelRequest req;
  req.agent = gateway::AgentId::F;
  req.schema_id = "flashtalk_v1";
  for (const auto& img : assets.images) {
    asset_list.push_back({{"asset_id", img.asset_id},
                          {"kind", ingest::to_string(img.kind)},
                          {"caption", img.caption.value_or("")}});
    if (req.attached_images.size() < gateway.backend().image_limit())
      req.attached_images.push_back({img.asset_id, img.path});
  }
  req.prompt_text = gateway::with_input(prompt.text, {{"title", assets.title},
                                                      {"sections", sections},
                                                      {"assets", asset_list},
                                                      {"target_duration_s", script.target_duration_s}});
  auto resp = gateway.complete_structured(req);
  if (!resp.valid) raise(ErrorCode::InvalidModelOutput, "flashtalk output rejected: " + resp.error);

  const auto& out = (*resp.parsed)["sections"];
  for (std::size_t i = 0; i < out.size(); ++i) {
    Section sec;
    sec.kind = kSectionOrder[i];
    sec.order_index = static_cast<int>(i);
    sec.narration_text = text::normalize_space(out[i]["narration"].get<std::string>());
    for (const auto& id : out[i]["image_ids"]) {
      std::string aid = id.get<std::string>();
      if (std::find(sec.assigned_image_ids.begin(), sec.assigned_image_ids.end(), aid) != sec.assigned_image_ids.end()) {
        script.warnings.push_back("dropped repeated asset reference '" + aid + "' in " + to_string(sec.kind));
      } else if (assets.find(aid)) {
        sec.assigned_image_ids.push_back(aid);
      } else {
        std::string w = "dropped unknown asset reference '" + aid + "' in " + to_string(sec.kind);
        spdlog::warn("{}", w);
        script.warnings.push_back(w);
      }
    }
    script.sections.push_back(std::move(sec));
  }
  return script;
}

std::optional<std::string> check_script(const FlashtalkScript& script, const ingest::PaperAssets& assets) {
  if (script.sections.size() != kSectionOrder.size())
    return "expected 4 sections, got " + std::to_string(script.sections.size());
  for (std::size_t i = 0; i < script.sections.size(); ++i) {
    const auto& s = script.sections[i];
    if (s.kind != kSectionOrder[i]) return "section " + std::to_string(i) + " has kind " + to_string(s.kind);
    if (s.order_index != static_cast<int>(i)) return "section " + std::to_string(i) + " has a wrong order_index";
    if (text::trim(s.narration_text).empty()) return to_string(s.kind) + " has empty narration";
    for (const auto& id : s.assigned_image_ids)
      if (!assets.find(id)) return to_string(s.kind) + " references unknown asset " + id;
  }
  if (script.target_duration_s < kTargetDurationMin || script.target_duration_s > kTargetDurationMax)
    return "target duration out of range";
  return std::nullopt;
}

}  // namespace papercast::planning
