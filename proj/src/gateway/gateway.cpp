#include "papercast/gateway/gateway.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <spdlog/spdlog.h>

#include "papercast/common/error.hpp"
#include "papercast/gateway/schemas.hpp"

namespace papercast::gateway {

namespace {

constexpr std::string_view kInputHeader = "### INPUT\n";

const std::vector<std::pair<AgentId, std::string>>& agent_names() {
  static const std::vector<std::pair<AgentId, std::string>> names = {
      {AgentId::F, "F"},
      {AgentId::S, "S"},
      {AgentId::B, "B"},
      {AgentId::T, "T"},
      {AgentId::E, "E"},
      {AgentId::L, "L"},
      {AgentId::feedback_flashtalk, "feedback_flashtalk"},
      {AgentId::feedback_sceneplan, "feedback_sceneplan"},
      {AgentId::feedback_text, "feedback_text"},
      {AgentId::reflection, "reflection"},
      {AgentId::evaluation, "evaluation"},
  };
  return names;
}

json call_to_json(const CallRecord& r) {
  return {{"agent", to_string(r.agent)}, {"schema_id", r.schema_id}, {"attempts", r.attempts},
          {"valid", r.valid},            {"temperature", r.temperature}, {"context", r.context}};
}

}  // namespace

std::string to_string(AgentId agent) {
  for (const auto& [id, name] : agent_names())
    if (id == agent) return name;
  return "?";
}

AgentId parse_agent(const std::string& s) {
  for (const auto& [id, name] : agent_names())
    if (name == s) return id;
  raise(ErrorCode::UnknownAgent, "unknown agent '" + s + "'");
}

bool is_generation_agent(AgentId agent) {
  return std::find(std::begin(kGenerationAgents), std::end(kGenerationAgents), agent) != std::end(kGenerationAgents);
}

// ---------------------------------------------------------------------------

void CallLog::record(CallRecord rec) {
  std::lock_guard lock(mu_);
  if (mirror_) append_line(*mirror_, call_to_json(rec).dump());
  records_.push_back(std::move(rec));
}

std::vector<CallRecord> CallLog::snapshot() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t CallLog::count(AgentId agent) const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [&](const CallRecord& r) { return r.agent == agent; }));
}

std::size_t CallLog::count_generation() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(),
                                                [](const CallRecord& r) { return is_generation_agent(r.agent); }));
}

void CallLog::clear() {
  std::lock_guard lock(mu_);
  records_.clear();
}

void CallLog::mirror_to(const fs::path& path) {
  std::lock_guard lock(mu_);
  mirror_ = path;
}

// ---------------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayConfig config)
    : backend_(std::move(backend)), config_(std::move(config)) {
  if (!backend_) raise(ErrorCode::BackendUnavailable, "no backend registered");
  if (config_.temperatures.empty()) raise(ErrorCode::ConfigError, "at least one temperature is required");
  for (double t : config_.temperatures)
    if (t < 0.0 || t > 1.0) raise(ErrorCode::ConfigError, "temperatures must lie in [0, 1]");
  if (config_.retry_limit < 1) raise(ErrorCode::ConfigError, "retry_limit must be at least 1");
}

void Gateway::set_context(json context) {
  std::lock_guard lock(context_mu_);
  context_ = std::move(context);
}

double Gateway::next_temperature() {
  auto i = temperature_counter_.fetch_add(1);
  return config_.temperatures[i % config_.temperatures.size()];
}

ModelResponse Gateway::complete_structured(const ModelRequest& request) {
  if (!is_known_schema(request.schema_id)) raise(ErrorCode::UnknownSchema, "unknown schema '" + request.schema_id + "'");
  if (request.prompt_text.empty()) raise(ErrorCode::PreconditionViolation, "prompt_text is empty");
  if (request.attached_images.size() > backend_->image_limit())
    raise(ErrorCode::PreconditionViolation, std::to_string(request.attached_images.size()) + " images exceed the " +
                                                backend_->name() + " limit of " +
                                                std::to_string(backend_->image_limit()));
  double temperature = next_temperature();
  if (request.temperature) {
    const auto& ts = config_.temperatures;
    if (std::none_of(ts.begin(), ts.end(), [&](double t) { return std::abs(t - *request.temperature) < 1e-9; }))
      raise(ErrorCode::PreconditionViolation, "temperature is not one of the configured values");
    temperature = *request.temperature;
  }

  BackendRequest breq{request.agent, request.schema_id, request.prompt_text, {}, temperature};
  for (const auto& img : request.attached_images) {
    PreparedImage p{img.asset_id, {}};
    if (backend_->needs_pixels()) p.png = prepare_image_png(img.path, config_.image_width, config_.image_height);
    breq.images.push_back(std::move(p));
  }

  ModelResponse resp;
  resp.temperature = temperature;
  for (int attempt = 1; attempt <= config_.retry_limit; ++attempt) {
    resp.attempts = attempt;
    if (attempt > 1) {
      breq.prompt = request.prompt_text + "\n\n### PREVIOUS ATTEMPT REJECTED\n" + resp.error +
                    "\nReturn only JSON that satisfies the output schema.";
    }
    resp.raw_text = backend_->complete(breq);
    auto parsed = parse_model_json(resp.raw_text);
    if (!parsed) {
      resp.error = "response is not valid JSON";
      continue;
    }
    // Kept even when invalid so callers can salvage well-formed parts.
    resp.parsed = std::move(parsed);
    if (auto err = validate(request.schema_id, *resp.parsed, request.constraints)) {
      resp.error = *err;
      continue;
    }
    resp.valid = true;
    resp.error.clear();
    break;
  }
  if (!resp.valid)
    spdlog::warn("{} output for {} invalid after {} attempts: {}", request.schema_id, to_string(request.agent),
                 resp.attempts, resp.error);
  json ctx;
  {
    std::lock_guard lock(context_mu_);
    ctx = context_;
  }
  log_.record(CallRecord{request.agent, request.schema_id, resp.attempts, resp.valid, temperature, std::move(ctx)});
  return resp;
}

// ---------------------------------------------------------------------------

std::string with_input(const std::string& prompt_text, const json& input) {
  return prompt_text + "\n\n" + std::string(kInputHeader) + input.dump(2);
}

std::optional<json> extract_input(const std::string& prompt) {
  auto pos = prompt.rfind(kInputHeader);
  if (pos == std::string::npos) return std::nullopt;
  pos += kInputHeader.size();
  auto end = prompt.find("\n### ", pos);
  std::string body = prompt.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
  auto parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded()) return std::nullopt;
  return parsed;
}

std::optional<json> parse_model_json(const std::string& raw) {
  auto direct = json::parse(raw, nullptr, false);
  if (!direct.is_discarded() && direct.is_object()) return direct;
  // Fall back to the outermost {...} span, which strips code fences and prose.
  auto first = raw.find('{');
  auto last = raw.rfind('}');
  if (first == std::string::npos || last == std::string::npos || last <= first) return std::nullopt;
  auto inner = json::parse(raw.substr(first, last - first + 1), nullptr, false);
  if (inner.is_discarded() || !inner.is_object()) return std::nullopt;
  return inner;
}

std::string prepare_image_png(const fs::path& path, int width, int height) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (img.empty()) raise(ErrorCode::MissingAsset, "cannot decode image " + path.string());
  double scale = std::min(static_cast<double>(width) / img.cols, static_cast<double>(height) / img.rows);
  int w = std::max(1, static_cast<int>(std::lround(img.cols * scale)));
  int h = std::max(1, static_cast<int>(std::lround(img.rows * scale)));
  cv::Mat resized;
  cv::resize(img, resized, {w, h}, 0, 0, scale < 1.0 ? cv::INTER_AREA : cv::INTER_LINEAR);
  cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(0, 0, 0));
  resized.copyTo(canvas(cv::Rect((width - w) / 2, (height - h) / 2, w, h)));
  std::vector<uchar> png;
  cv::imencode(".png", canvas, png);
  return std::string(png.begin(), png.end());
}

}  // namespace papercast::gateway
