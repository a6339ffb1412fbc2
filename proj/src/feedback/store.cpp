#include "papercast/common/error.hpp"
#include "papercast/feedback/feedback.hpp"

namespace papercast::feedback {

PromptStore::PromptStore(fs::path root) : root_(std::move(root)) {}

fs::path PromptStore::path_for(AgentId agent, int iteration) const {
  return root_ / "prompts" / gateway::to_string(agent) / (std::to_string(iteration) + ".txt");
}

void PromptStore::put(const PromptState& prompt) {
  if (!gateway::is_generation_agent(prompt.agent))
    raise(ErrorCode::PreconditionViolation, "prompt store only holds generation agents");
  if (prompt.iteration < 0) raise(ErrorCode::PreconditionViolation, "negative prompt iteration");
  if (prompt.text.empty()) raise(ErrorCode::PreconditionViolation, "empty prompt text");
  write_file_atomic(path_for(prompt.agent, prompt.iteration), prompt.text);
}

PromptState PromptStore::get(AgentId agent, int iteration) const {
  reads_.emplace_back(agent, iteration);
  fs::path p = path_for(agent, iteration);
  if (!fs::exists(p))
    raise(ErrorCode::NotFound, "no prompt for " + gateway::to_string(agent) + " at iteration " + std::to_string(iteration));
  return {agent, iteration, read_file(p)};
}

bool PromptStore::has(AgentId agent, int iteration) const { return fs::exists(path_for(agent, iteration)); }

int PromptStore::latest(AgentId agent) const {
  int best = -1;
  fs::path dir = root_ / "prompts" / gateway::to_string(agent);
  if (!fs::is_directory(dir)) return best;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".txt") continue;
    try {
      std::size_t used = 0;
      std::string stem = entry.path().stem().string();
      int j = std::stoi(stem, &used);
      if (used == stem.size()) best = std::max(best, j);
    } catch (const std::exception&) {
    }
  }
  return best;
}

std::vector<PromptState> PromptStore::lineage(AgentId agent) const {
  std::vector<PromptState> out;
  for (int j = 0; has(agent, j); ++j) out.push_back(get(agent, j));
  return out;
}

}  // namespace papercast::feedback
