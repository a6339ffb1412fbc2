#include <cstdlib>

#include <openssl/evp.h>

#include "papercast/common/error.hpp"
#include "papercast/gateway/backends.hpp"

namespace papercast::gateway {

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

OpenAICompatibleBackend::OpenAICompatibleBackend(RemoteOptions options, std::shared_ptr<HttpClient> http)
    : options_(std::move(options)), http_(http ? std::move(http) : default_http_client()) {
  if (options_.base_url.empty() || options_.model.empty())
    raise(ErrorCode::ConfigError, "remote backend needs base_url and model");
  while (!options_.base_url.empty() && options_.base_url.back() == '/') options_.base_url.pop_back();
}

std::string OpenAICompatibleBackend::complete(const BackendRequest& request) {
  const char* key = std::getenv(options_.api_key_env.c_str());
  if (!key || !*key) raise(ErrorCode::BackendUnavailable, "environment variable " + options_.api_key_env + " is not set");

  json content = json::array();
  content.push_back({{"type", "text"}, {"text", request.prompt}});
  for (const auto& img : request.images)
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(img.png)}}}});
  json body = {{"model", options_.model},
               {"temperature", request.temperature},
               {"response_format", {{"type", "json_object"}}},
               {"messages", json::array({{{"role", "user"}, {"content", content}}})}};

  HttpResponse resp;
  try {
    resp = http_->post(options_.base_url + "/chat/completions", body.dump(),
                       {{"Content-Type", "application/json"}, {"Authorization", std::string("Bearer ") + key}});
  } catch (const Error& e) {
    raise(ErrorCode::BackendUnavailable, e.what());
  }
  if (resp.status != 200)
    raise(ErrorCode::BackendUnavailable, "HTTP " + std::to_string(resp.status) + " from " + options_.base_url);
  auto parsed = json::parse(resp.body, nullptr, false);
  if (parsed.is_discarded()) raise(ErrorCode::BackendUnavailable, "backend returned a non-JSON envelope");
  try {
    return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    raise(ErrorCode::BackendUnavailable, "backend envelope has no choices[0].message.content");
  }
}

std::shared_ptr<Backend> make_backend(const json& backend_config, std::uint64_t seed) {
  std::string name = backend_config.value("name", "mock");
  if (name == "mock") return std::make_shared<MockBackend>(seed);
  if (name == "openai_compatible") {
    RemoteOptions o;
    const json& r = backend_config.contains("remote") ? backend_config["remote"] : json::object();
    o.base_url = r.value("base_url", "");
    o.model = r.value("model", "");
    o.api_key_env = r.value("api_key_env", o.api_key_env);
    o.image_limit = r.value("image_limit", o.image_limit);
    return std::make_shared<OpenAICompatibleBackend>(o);
  }
  raise(ErrorCode::ConfigError, "backend '" + name + "' is not registered");
}

}  // namespace papercast::gateway
