#pragma once

#include <string>

#include "papercast/gateway/gateway.hpp"

namespace papercast::gateway {

// One generation agent's prompt at one iteration of the refinement loop.
struct PromptState {
  AgentId agent = AgentId::F;
  int iteration = 0;
  std::string text;

  bool operator==(const PromptState&) const = default;
};

// Schema produced by each agent's main call.
std::string schema_for(AgentId agent);

// The delimited, immutable output-schema block embedded in a prompt.
std::string schema_block(const std::string& schema_id);

// Returns the schema block found in `prompt`, or an empty string.
std::string find_schema_block(const std::string& prompt);

// Iteration-0 prompt for generation agents, fixed template for the others.
std::string bundled_prompt(AgentId agent);
std::string baseline_prompt();
std::string summary_prompt();

PromptState initial_prompt_state(AgentId agent);

}  // namespace papercast::gateway
