#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "papercast/common/io.hpp"

namespace papercast::gateway {

inline constexpr std::array<std::string_view, 4> kSectionKinds = {"aggressive_hook", "brief_context",
                                                                  "intriguing_teaser", "call_to_action"};
inline constexpr std::array<std::string_view, 6> kEffectKinds = {"zoom_in", "zoom_out", "pan",
                                                                 "fade_in", "fade_out", "none"};
inline constexpr std::array<std::string_view, 10> kEvaluationMetricIds = {"SI", "KCC", "LF",  "C",   "SR",
                                                                          "AVA", "AR", "Pacing", "CTA", "HE"};

// Delimiters of the immutable output-schema block inside every agent prompt.
inline constexpr std::string_view kSchemaBlockBegin = "<<<OUTPUT_SCHEMA";
inline constexpr std::string_view kSchemaBlockEnd = "OUTPUT_SCHEMA>>>";

bool is_known_schema(const std::string& schema_id);
std::vector<std::string> known_schemas();

// Returns an error description, or nullopt when `value` conforms.
// `constraints` narrows ranges per request (score_min/score_max, metrics).
std::optional<std::string> validate(const std::string& schema_id, const json& value,
                                    const json& constraints = json::object());

// Example-shaped description embedded in agent prompts.
std::string schema_description(const std::string& schema_id);

}  // namespace papercast::gateway
