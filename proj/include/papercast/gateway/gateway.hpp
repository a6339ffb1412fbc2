#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "papercast/common/io.hpp"

namespace papercast::gateway {

enum class AgentId {
  F,
  S,
  B,
  T,
  E,
  L,
  feedback_flashtalk,
  feedback_sceneplan,
  feedback_text,
  reflection,
  evaluation,
};

std::string to_string(AgentId agent);
AgentId parse_agent(const std::string& s);  // throws UnknownAgent
bool is_generation_agent(AgentId agent);
inline constexpr AgentId kGenerationAgents[] = {AgentId::F, AgentId::S, AgentId::B,
                                                AgentId::T, AgentId::E, AgentId::L};

struct ImageRef {
  std::string asset_id;
  fs::path path;
};

struct ModelRequest {
  AgentId agent = AgentId::F;
  std::string prompt_text;
  std::vector<ImageRef> attached_images;
  std::optional<double> temperature;  // assigned round-robin when unset
  std::string schema_id;
  json constraints = json::object();  // extra per-request checks, e.g. score range
};

struct ModelResponse {
  std::string raw_text;
  std::optional<json> parsed;  // last well-formed JSON, even when invalid
  int attempts = 0;
  bool valid = false;
  std::string error;  // last validation error when invalid
  double temperature = 0.0;
};

struct PreparedImage {
  std::string asset_id;
  std::string png;  // empty for backends that only need ids
};

struct BackendRequest {
  AgentId agent;
  std::string schema_id;
  std::string prompt;  // includes any correction appended on retry
  std::vector<PreparedImage> images;
  double temperature;
};

class Backend {
 public:
  virtual ~Backend() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual std::size_t image_limit() const = 0;
  [[nodiscard]] virtual bool needs_pixels() const { return false; }
  // Returns the raw completion text. Throws Error(BackendUnavailable).
  virtual std::string complete(const BackendRequest& request) = 0;
};

struct CallRecord {
  AgentId agent;
  std::string schema_id;
  int attempts = 0;
  bool valid = false;
  double temperature = 0.0;
  json context;  // caller-supplied tags such as iteration and stage
};

class CallLog {
 public:
  void record(CallRecord rec);
  [[nodiscard]] std::vector<CallRecord> snapshot() const;
  [[nodiscard]] std::size_t count(AgentId agent) const;
  [[nodiscard]] std::size_t count_generation() const;
  void clear();
  // Mirrors every record to a JSON-lines file from now on.
  void mirror_to(const fs::path& path);

 private:
  mutable std::mutex mu_;
  std::vector<CallRecord> records_;
  std::optional<fs::path> mirror_;
};

struct GatewayConfig {
  std::vector<double> temperatures{0.7, 0.9};
  int retry_limit = 3;
  int image_width = 360;
  int image_height = 640;
};

class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, GatewayConfig config = {});

  // Never throws on schema violations: those come back as valid=false after
  // the retry budget is spent. Throws UnknownSchema, BackendUnavailable, and
  // PreconditionViolation for empty prompts or too many images.
  ModelResponse complete_structured(const ModelRequest& request);

  void set_context(json context);
  [[nodiscard]] CallLog& log() { return log_; }
  [[nodiscard]] const GatewayConfig& config() const { return config_; }
  [[nodiscard]] Backend& backend() { return *backend_; }

 private:
  double next_temperature();

  std::shared_ptr<Backend> backend_;
  GatewayConfig config_;
  std::atomic<std::uint64_t> temperature_counter_{0};
  CallLog log_;
  std::mutex context_mu_;
  json context_ = json::object();
};

// Prompt framing shared by all agents: instructions, then a machine-readable
// input block the backend grounds on.
std::string with_input(const std::string& prompt_text, const json& input);
std::optional<json> extract_input(const std::string& prompt);
// Parses model text as JSON, tolerating code fences and surrounding prose.
std::optional<json> parse_model_json(const std::string& raw);

// Downscales to fit inside width x height and pads to exactly that size.
std::string prepare_image_png(const fs::path& path, int width, int height);

}  // namespace papercast::gateway
