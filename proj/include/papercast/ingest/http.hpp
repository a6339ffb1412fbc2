#pragma once

#include <map>
#include <memory>
#include <string>

namespace papercast {

struct HttpResponse {
  long status = 0;
  std::string body;
  std::string content_type;
};

class HttpClient {
 public:
  virtual ~HttpClient() = default;
  // Throws Error(NetworkError) when the host cannot be reached. HTTP error
  // statuses are returned, not thrown.
  virtual HttpResponse get(const std::string& url) = 0;
  virtual HttpResponse post(const std::string& url, const std::string& body,
                            const std::map<std::string, std::string>& headers) = 0;
};

class CurlHttpClient final : public HttpClient {
 public:
  explicit CurlHttpClient(long timeout_s = 60);
  HttpResponse get(const std::string& url) override;
  HttpResponse post(const std::string& url, const std::string& body,
                    const std::map<std::string, std::string>& headers) override;

 private:
  long timeout_s_;
};

std::shared_ptr<HttpClient> default_http_client();

}  // namespace papercast
