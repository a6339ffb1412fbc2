#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "papercast/gateway/gateway.hpp"
#include "papercast/ingest/http.hpp"

namespace papercast::gateway {

// Offline backend. Output is a pure function of (agent, schema, prompt text,
// image ids, seed); it grounds its answers on the prompt's INPUT block.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(std::uint64_t seed) : seed_(seed) {}
  [[nodiscard]] std::string name() const override { return "mock"; }
  [[nodiscard]] std::size_t image_limit() const override { return 64; }
  std::string complete(const BackendRequest& request) override;

  // Direct access for tests: same result as complete() with no retry text.
  [[nodiscard]] json respond(AgentId agent, const std::string& schema_id, const std::string& prompt,
                             const std::vector<std::string>& image_ids) const;

 private:
  std::uint64_t seed_;
};

// Replays canned responses in order (the last one repeats), or delegates to
// a callback. Used to drive retry and failure paths in tests.
class ScriptedBackend final : public Backend {
 public:
  using Handler = std::function<std::string(const BackendRequest&)>;
  explicit ScriptedBackend(std::vector<std::string> responses, std::size_t image_limit = 64);
  explicit ScriptedBackend(Handler handler, std::size_t image_limit = 64);

  [[nodiscard]] std::string name() const override { return "scripted"; }
  [[nodiscard]] std::size_t image_limit() const override { return image_limit_; }
  std::string complete(const BackendRequest& request) override;
  [[nodiscard]] std::size_t calls() const;
  [[nodiscard]] std::vector<BackendRequest> requests() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> responses_;
  Handler handler_;
  std::size_t image_limit_;
  std::vector<BackendRequest> seen_;
};

struct RemoteOptions {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key_env = "PAPERCAST_API_KEY";
  std::size_t image_limit = 64;
};

// Chat-completions style HTTP API with image parts sent as data URLs.
class OpenAICompatibleBackend final : public Backend {
 public:
  OpenAICompatibleBackend(RemoteOptions options, std::shared_ptr<HttpClient> http = nullptr);
  [[nodiscard]] std::string name() const override { return "openai_compatible"; }
  [[nodiscard]] std::size_t image_limit() const override { return options_.image_limit; }
  [[nodiscard]] bool needs_pixels() const override { return true; }
  std::string complete(const BackendRequest& request) override;

 private:
  RemoteOptions options_;
  std::shared_ptr<HttpClient> http_;
};

// Builds a backend from the config's "backend" object.
std::shared_ptr<Backend> make_backend(const json& backend_config, std::uint64_t seed);

std::string base64_encode(std::string_view bytes);

}  // namespace papercast::gateway
