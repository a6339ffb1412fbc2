#include <algorithm>

#include "papercast/common/error.hpp"
#include "papercast/gateway/backends.hpp"

namespace papercast::gateway {

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses, std::size_t image_limit)
    : responses_(std::move(responses)), image_limit_(image_limit) {
  if (responses_.empty()) raise(ErrorCode::ConfigError, "scripted backend needs at least one response");
}

ScriptedBackend::ScriptedBackend(Handler handler, std::size_t image_limit)
    : handler_(std::move(handler)), image_limit_(image_limit) {}

std::string ScriptedBackend::complete(const BackendRequest& request) {
  std::unique_lock lock(mu_);
  std::size_t index = seen_.size();
  seen_.push_back(request);
  if (handler_) {
    lock.unlock();
    return handler_(request);
  }
  return responses_[std::min(index, responses_.size() - 1)];
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return seen_.size();
}

std::vector<BackendRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mu_);
  return seen_;
}

}  // namespace papercast::gateway
