#include "papercast/gateway/prompts.hpp"

#include "papercast/common/error.hpp"
#include "papercast/gateway/schemas.hpp"

namespace papercast::gateway {

namespace {

std::string with_schema(const std::string& instructions, const std::string& schema_id) {
  return instructions + "\n\n" + schema_block(schema_id) + "\n";
}

const char* kFlashtalk = R"(You are the script writer for a short vertical video that presents a research paper.
Write the voiceover in four parts, in this order:
1. aggressive_hook: one punchy line that makes a scrolling viewer stop.
2. brief_context: the problem the paper tackles, in plain words.
3. intriguing_teaser: the most surprising result or idea, without giving everything away.
4. call_to_action: tell the viewer what to do next.
Keep the whole script speakable in about target_duration_s seconds at a calm pace.
Assign images only from the provided assets. The first_page screenshot suits the hook.
Figures belong where the narration talks about them. Do not invent asset ids.)";

const char* kSceneplan = R"(You are the scene planner. Split one section of the script into between 1 and 5 sub-scenes.
Each sub-scene gets a one-line camera direction (for example a zoom or a pan on a named image such as fig_1.png),
a proposed duration in seconds, and the images it shows. The durations will be scaled to the real narration length,
so only their proportions matter. Every image assigned to the section should appear in exactly one sub-scene.)";

const char* kBackground = R"(You pick the background of one sub-scene. Answer with a solid color as #RRGGBB,
or with the id of one image already shown in the sub-scene.)";

const char* kText = R"(You write the on-screen text of one sub-scene: a subtitle that follows the narration slice and,
when useful, a short headline with the key number or term. Use normalized frame coordinates, font sizes between 12
and 96 points, #RRGGBB colors, and timings relative to the start of the sub-scene that end before it does.)";

const char* kEffects = R"(You add motion to one sub-scene. Follow the direction literally: a zoom direction needs a zoom
on the named image, a pan direction needs a pan. Target only the listed component ids and keep every effect inside
the sub-scene. Zoom magnitude is a scale factor (about 1.3); pan magnitude is a fraction of the frame (about 0.2).
Return an empty list when the direction asks for no motion.)";

const char* kLayout = R"(You place the components of one sub-scene on a 9:16 portrait frame. The markup lists every
component with its intrinsic size. Return one rectangle per component id, normalized to the frame, fully inside it.
Keep text away from images, keep the avatar in a corner, and preserve image aspect ratios where possible.)";

const char* kFeedbackFlashtalk = R"(You review the script of a research video. The frames come from the section that contains
the sub-scene below. Score the requested metric from 1 to 5 and give one or two concrete sentences about the script only.)";

const char* kFeedbackSceneplan = R"(You review the visual plan of one sub-scene of a research video. Look at the frames and
the direction. Score the requested metric from 1 to 5 and comment only on pacing, choice of visuals and camera work.)";

const char* kFeedbackText = R"(You review the on-screen text of one sub-scene of a research video. Look at the frames,
the narration slice and the overlays. Score the requested metric from 1 to 5 and comment only on the text.)";

const char* kReflection = R"(You maintain the prompt of one agent in a video pipeline. Rewrite the prompt so the next video
addresses the feedback below. Use only this prompt and this feedback. Ignore suggestions that the agent cannot act on.
Copy the OUTPUT_SCHEMA block exactly as it appears.)";

const char* kEvaluation = R"(You grade a finished short video about a research paper. The frames are sampled uniformly over
the whole video and the narration is given as text. Score every rubric metric from 1 to 5 and justify each score briefly.)";

const char* kSummary = R"(Condense the feedback records below into short, actionable advice for the agent named in the input.
Report the mean score of each metric and keep only comments about that agent's own work.)";

const char* kBaseline = R"(Turn the paper below into a complete short vertical video in one pass. Write the four-part voiceover
(aggressive_hook, brief_context, intriguing_teaser, call_to_action), split each part into 1 to 5 sub-scenes with a
direction, a duration, images from the asset list and one on-screen text with its position.)";

}  // namespace

std::string schema_for(AgentId agent) {
  switch (agent) {
    case AgentId::F: return "flashtalk_v1";
    case AgentId::S: return "sceneplan_v1";
    case AgentId::B: return "background_v1";
    case AgentId::T: return "text_overlays_v1";
    case AgentId::E: return "effects_v1";
    case AgentId::L: return "layout_v1";
    case AgentId::feedback_flashtalk:
    case AgentId::feedback_sceneplan:
    case AgentId::feedback_text: return "feedback_v1";
    case AgentId::reflection: return "reflection_v1";
    case AgentId::evaluation: return "evaluation_v1";
  }
  raise(ErrorCode::UnknownAgent, "no schema for agent");
}

std::string schema_block(const std::string& schema_id) {
  if (!is_known_schema(schema_id)) raise(ErrorCode::UnknownSchema, "unknown schema '" + schema_id + "'");
  return std::string(kSchemaBlockBegin) + " " + schema_id + "\nReturn a single JSON object shaped like this:\n" +
         schema_description(schema_id) + "\n" + std::string(kSchemaBlockEnd);
}

std::string find_schema_block(const std::string& prompt) {
  auto begin = prompt.find(kSchemaBlockBegin);
  if (begin == std::string::npos) return {};
  auto end = prompt.find(kSchemaBlockEnd, begin);
  if (end == std::string::npos) return {};
  return prompt.substr(begin, end + kSchemaBlockEnd.size() - begin);
}

std::string bundled_prompt(AgentId agent) {
  switch (agent) {
    case AgentId::F: return with_schema(kFlashtalk, "flashtalk_v1");
    case AgentId::S: return with_schema(kSceneplan, "sceneplan_v1");
    case AgentId::B: return with_schema(kBackground, "background_v1");
    case AgentId::T: return with_schema(kText, "text_overlays_v1");
    case AgentId::E: return with_schema(kEffects, "effects_v1");
    case AgentId::L: return with_schema(kLayout, "layout_v1");
    case AgentId::feedback_flashtalk: return with_schema(kFeedbackFlashtalk, "feedback_v1");
    case AgentId::feedback_sceneplan: return with_schema(kFeedbackSceneplan, "feedback_v1");
    case AgentId::feedback_text: return with_schema(kFeedbackText, "feedback_v1");
    case AgentId::reflection: return with_schema(kReflection, "reflection_v1");
    case AgentId::evaluation: return with_schema(kEvaluation, "evaluation_v1");
  }
  raise(ErrorCode::UnknownAgent, "no bundled prompt for agent");
}

std::string baseline_prompt() { return with_schema(kBaseline, "baseline_v1"); }

std::string summary_prompt() { return with_schema(kSummary, "summary_v1"); }

PromptState initial_prompt_state(AgentId agent) {
  if (!is_generation_agent(agent)) raise(ErrorCode::UnknownAgent, to_string(agent) + " is not a generation agent");
  return {agent, 0, bundled_prompt(agent)};
}

}  // namespace papercast::gateway
