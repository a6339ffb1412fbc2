#include "papercast/ingest/http.hpp"

#include <mutex>

#include <curl/curl.h>

#include "papercast/common/error.hpp"

namespace papercast {

namespace {

void global_init() {
  static std::once_flag once;
  std::call_once(once, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
}

std::size_t on_body(char* data, std::size_t size, std::size_t n, void* user) {
  static_cast<std::string*>(user)->append(data, size * n);
  return size * n;
}

HttpResponse perform(CURL* curl, const std::string& url) {
  HttpResponse out;
  curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, on_body);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, &out.body);
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl, CURLOPT_MAXREDIRS, 8L);
  curl_easy_setopt(curl, CURLOPT_NOSIGNAL, 1L);
  curl_easy_setopt(curl, CURLOPT_USERAGENT, "papercast/0.1");
  CURLcode rc = curl_easy_perform(curl);
  if (rc != CURLE_OK) {
    std::string msg = curl_easy_strerror(rc);
    curl_easy_cleanup(curl);
    raise(ErrorCode::NetworkError, url + ": " + msg);
  }
  curl_easy_getinfo(curl, CURLINFO_RESPONSE_CODE, &out.status);
  char* ct = nullptr;
  curl_easy_getinfo(curl, CURLINFO_CONTENT_TYPE, &ct);
  if (ct) out.content_type = ct;
  curl_easy_cleanup(curl);
  return out;
}

}  // namespace

CurlHttpClient::CurlHttpClient(long timeout_s) : timeout_s_(timeout_s) { global_init(); }

HttpResponse CurlHttpClient::get(const std::string& url) {
  CURL* curl = curl_easy_init();
  if (!curl) raise(ErrorCode::NetworkError, "curl_easy_init failed");
  curl_easy_setopt(curl, CURLOPT_TIMEOUT, timeout_s_);
  return perform(curl, url);
}

HttpResponse CurlHttpClient::post(const std::string& url, const std::string& body,
                                  const std::map<std::string, std::string>& headers) {
  CURL* curl = curl_easy_init();
  if (!curl) raise(ErrorCode::NetworkError, "curl_easy_init failed");
  curl_slist* list = nullptr;
  for (const auto& [k, v] : headers) list = curl_slist_append(list, (k + ": " + v).c_str());
  curl_easy_setopt(curl, CURLOPT_TIMEOUT, timeout_s_);
  curl_easy_setopt(curl, CURLOPT_HTTPHEADER, list);
  curl_easy_setopt(curl, CURLOPT_POSTFIELDS, body.c_str());
  curl_easy_setopt(curl, CURLOPT_POSTFIELDSIZE, static_cast<long>(body.size()));
  try {
    auto out = perform(curl, url);
    curl_slist_free_all(list);
    return out;
  } catch (...) {
    curl_slist_free_all(list);
    throw;
  }
}

std::shared_ptr<HttpClient> default_http_client() { return std::make_shared<CurlHttpClient>(); }

}  // namespace papercast
