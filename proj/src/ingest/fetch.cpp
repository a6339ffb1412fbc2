#include <regex>

#include <spdlog/spdlog.h>

#include "papercast/common/error.hpp"
#include "papercast/common/text.hpp"
#include "papercast/ingest/html.hpp"
#include "papercast/ingest/ingest.hpp"

namespace papercast::ingest {

namespace {

bool looks_like_pdf(std::string_view body) {
  return body.substr(0, 1024).find("%PDF-") != std::string_view::npos;
}

bool looks_like_html(const HttpResponse& r) {
  if (r.content_type.find("html") != std::string::npos) return true;
  auto head = text::to_lower(std::string_view(r.body).substr(0, 2048));
  return head.find("<html") != std::string::npos || head.find("<!doctype html") != std::string::npos;
}

std::optional<std::string> match_arxiv_id(const std::string& ref, const std::string& base) {
  static const std::regex bare(R"(^(?:arxiv:)?(\d{4}\.\d{4,5}(?:v\d+)?)$)", std::regex::icase);
  static const std::regex old_style(R"(^(?:arxiv:)?([a-z\-]+(?:\.[A-Z]{2})?/\d{7}(?:v\d+)?)$)", std::regex::icase);
  static const std::regex url(R"(^https?://(?:www\.|export\.)?arxiv\.org/(?:abs|pdf|html)/(.+?)(?:\.pdf)?/?$)",
                              std::regex::icase);
  std::smatch m;
  if (std::regex_match(ref, m, bare) || std::regex_match(ref, m, old_style) || std::regex_match(ref, m, url))
    return m[1].str();
  for (const char* kind : {"/abs/", "/pdf/", "/html/"}) {
    std::string prefix = base + kind;
    if (ref.rfind(prefix, 0) == 0) {
      std::string id = ref.substr(prefix.size());
      while (!id.empty() && id.back() == '/') id.pop_back();
      if (id.size() > 4 && id.substr(id.size() - 4) == ".pdf") id.resize(id.size() - 4);
      if (!id.empty()) return id;
    }
  }
  return std::nullopt;
}

std::string url_directory(const std::string& url) {
  auto scheme = url.find("://");
  auto slash = url.rfind('/');
  if (scheme == std::string::npos || slash == std::string::npos || slash < scheme + 3) return url + "/";
  return url.substr(0, slash + 1);
}

std::string resolve_url(const std::string& page_url, const std::string& ref) {
  if (ref.rfind("http://", 0) == 0 || ref.rfind("https://", 0) == 0) return ref;
  auto scheme_end = page_url.find("://");
  std::string scheme = scheme_end == std::string::npos ? "https" : page_url.substr(0, scheme_end);
  if (ref.rfind("//", 0) == 0) return scheme + ":" + ref;
  if (!ref.empty() && ref[0] == '/') {
    auto host_end = page_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    return (host_end == std::string::npos ? page_url : page_url.substr(0, host_end)) + ref;
  }
  return url_directory(page_url) + ref;
}

std::string resource_file_name(std::size_t index, const std::string& src) {
  std::string base = src;
  if (auto q = base.find_first_of("?#"); q != std::string::npos) base.resize(q);
  if (auto s = base.rfind('/'); s != std::string::npos) base = base.substr(s + 1);
  fs::path p(base);
  std::string stem = text::slugify(p.stem().string());
  std::string ext = text::to_lower(p.extension().string());
  if (ext.size() > 6) ext.clear();
  return std::to_string(index) + "_" + (stem.empty() ? "image" : stem) + ext;
}

void save_bundle(const RawBundle& b) {
  json res = json::object();
  for (const auto& [src, path] : b.html_resources) res[src] = fs::relative(path, b.root).generic_string();
  json j = {{"paper_id", b.paper_id},
            {"source_ref", b.source_ref},
            {"html", b.html ? json(fs::relative(*b.html, b.root).generic_string()) : json(nullptr)},
            {"pdf", b.pdf ? json(fs::relative(*b.pdf, b.root).generic_string()) : json(nullptr)},
            {"html_resources", res}};
  write_json(b.root / "raw" / "bundle.json", j);
}

RawBundle start_bundle(const std::string& paper_id, const std::string& source_ref, const fs::path& workdir) {
  RawBundle b;
  b.paper_id = paper_id.empty() ? "paper" : paper_id;
  b.source_ref = source_ref;
  b.root = fs::absolute(workdir / b.paper_id).lexically_normal();
  fs::remove_all(b.root / "raw");
  fs::create_directories(b.root / "raw" / "html_files");
  return b;
}

// Downloads (or copies) every image the HTML references so extraction can
// run offline.
template <typename Fetch>
void collect_html_resources(RawBundle& b, const std::string& html, Fetch&& fetch_one) {
  auto doc = html::parse(html);
  std::size_t index = 0;
  for (const auto& src : doc.image_sources) {
    if (b.html_resources.count(src) || src.rfind("data:", 0) == 0) continue;
    fs::path dest = b.root / "raw" / "html_files" / resource_file_name(index++, src);
    try {
      if (fetch_one(src, dest)) b.html_resources[src] = dest;
    } catch (const Error& e) {
      spdlog::warn("skipping html resource {}: {}", src, e.what());
    }
  }
}

RawBundle fetch_remote_html(RawBundle b, const std::string& page_url, const HttpResponse& resp, HttpClient& http) {
  b.html = b.root / "raw" / "paper.html";
  write_file_atomic(*b.html, resp.body);
  collect_html_resources(b, resp.body, [&](const std::string& src, const fs::path& dest) {
    auto r = http.get(resolve_url(page_url, src));
    if (r.status != 200) {
      spdlog::warn("html resource {} returned HTTP {}", src, r.status);
      return false;
    }
    write_file_atomic(dest, r.body);
    return true;
  });
  return b;
}

RawBundle fetch_arxiv(const std::string& id, const std::string& source_ref, const fs::path& workdir,
                      const std::string& base, HttpClient& http) {
  std::string paper_id = text::slugify(id);
  std::string html_url = base + "/html/" + id + "/";
  std::string pdf_url = base + "/pdf/" + id;
  auto html_resp = http.get(html_url);
  auto pdf_resp = http.get(pdf_url);
  bool html_ok = html_resp.status == 200 && looks_like_html(html_resp);
  bool pdf_ok = pdf_resp.status == 200 && looks_like_pdf(pdf_resp.body);
  if (!html_ok && !pdf_ok) {
    if (html_resp.status == 404 && pdf_resp.status == 404) raise(ErrorCode::NotFound, "arXiv id not found: " + id);
    raise(ErrorCode::UnsupportedFormat, "neither HTML nor PDF obtained for " + id);
  }
  RawBundle b = start_bundle(paper_id, source_ref, workdir);
  if (html_ok) b = fetch_remote_html(std::move(b), html_url, html_resp, http);
  if (pdf_ok) {
    b.pdf = b.root / "raw" / "paper.pdf";
    write_file_atomic(*b.pdf, pdf_resp.body);
  }
  save_bundle(b);
  return b;
}

RawBundle fetch_url(const std::string& url, const fs::path& workdir, HttpClient& http) {
  auto resp = http.get(url);
  if (resp.status == 404 || resp.status == 410) raise(ErrorCode::NotFound, url + " returned HTTP " + std::to_string(resp.status));
  if (resp.status != 200) raise(ErrorCode::NetworkError, url + " returned HTTP " + std::to_string(resp.status));
  std::string path = url;
  if (auto q = path.find_first_of("?#"); q != std::string::npos) path.resize(q);
  while (!path.empty() && path.back() == '/') path.pop_back();
  std::string last = path.substr(path.rfind('/') + 1);
  std::string paper_id = text::slugify(fs::path(last).stem().string());
  if (looks_like_pdf(resp.body)) {
    RawBundle b = start_bundle(paper_id, url, workdir);
    b.pdf = b.root / "raw" / "paper.pdf";
    write_file_atomic(*b.pdf, resp.body);
    save_bundle(b);
    return b;
  }
  if (looks_like_html(resp)) {
    RawBundle b = fetch_remote_html(start_bundle(paper_id, url, workdir), url, resp, http);
    save_bundle(b);
    return b;
  }
  raise(ErrorCode::UnsupportedFormat, url + " served neither HTML nor PDF (" + resp.content_type + ")");
}

RawBundle fetch_local(const fs::path& path, const std::string& source_ref, const fs::path& workdir) {
  std::string ext = text::to_lower(path.extension().string());
  std::string content = read_file(path);
  std::string paper_id = text::slugify(path.stem().string());
  if (looks_like_pdf(content)) {
    RawBundle b = start_bundle(paper_id, source_ref, workdir);
    b.pdf = b.root / "raw" / "paper.pdf";
    write_file_atomic(*b.pdf, content);
    save_bundle(b);
    return b;
  }
  if (ext == ".html" || ext == ".htm" || ext == ".xhtml") {
    RawBundle b = start_bundle(paper_id, source_ref, workdir);
    b.html = b.root / "raw" / "paper.html";
    write_file_atomic(*b.html, content);
    fs::path dir = fs::absolute(path).parent_path();
    collect_html_resources(b, content, [&](const std::string& src, const fs::path& dest) {
      if (src.rfind("http://", 0) == 0 || src.rfind("https://", 0) == 0) return false;
      fs::path file = dir / src;
      if (!fs::is_regular_file(file)) {
        spdlog::warn("html resource {} not found next to {}", src, path.string());
        return false;
      }
      fs::copy_file(file, dest, fs::copy_options::overwrite_existing);
      return true;
    });
    save_bundle(b);
    return b;
  }
  raise(ErrorCode::UnsupportedFormat, path.string() + " is neither HTML nor PDF");
}

}  // namespace

RawBundle fetch_paper(const std::string& source_ref, const fs::path& workdir, const FetchOptions& options) {
  std::string ref = text::trim(source_ref);
  if (ref.empty()) raise(ErrorCode::NotFound, "empty source reference");
  std::string base = options.arxiv_base;
  while (!base.empty() && base.back() == '/') base.pop_back();

  std::error_code ec;
  if (fs::is_regular_file(ref, ec)) return fetch_local(ref, ref, workdir);

  auto http = options.http ? options.http : default_http_client();
  if (auto id = match_arxiv_id(ref, base)) return fetch_arxiv(*id, ref, workdir, base, *http);
  if (ref.rfind("http://", 0) == 0 || ref.rfind("https://", 0) == 0) return fetch_url(ref, workdir, *http);
  raise(ErrorCode::NotFound, "'" + ref + "' is not a file, URL, or arXiv identifier");
}

RawBundle load_bundle(const fs::path& paper_root) {
  json j = read_json(paper_root / "raw" / "bundle.json");
  RawBundle b;
  b.root = fs::absolute(paper_root).lexically_normal();
  b.paper_id = j.at("paper_id").get<std::string>();
  b.source_ref = j.value("source_ref", "");
  if (!j["html"].is_null()) b.html = b.root / j["html"].get<std::string>();
  if (!j["pdf"].is_null()) b.pdf = b.root / j["pdf"].get<std::string>();
  for (const auto& [src, rel] : j["html_resources"].items()) b.html_resources[src] = b.root / rel.get<std::string>();
  return b;
}

}  // namespace papercast::ingest
