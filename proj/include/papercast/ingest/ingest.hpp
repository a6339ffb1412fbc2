#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "papercast/common/io.hpp"
#include "papercast/ingest/http.hpp"

namespace papercast::ingest {

enum class AssetKind { figure, table, screenshot };
std::string to_string(AssetKind kind);
AssetKind parse_asset_kind(const std::string& s);

struct ImageAsset {
  std::string asset_id;
  AssetKind kind = AssetKind::figure;
  fs::path path;  // absolute
  std::optional<std::string> caption;
  int width_px = 0;
  int height_px = 0;

  bool operator==(const ImageAsset&) const = default;
};

struct TextSection {
  std::string heading;
  std::string text;

  bool operator==(const TextSection&) const = default;
};

struct PaperAssets {
  std::string paper_id;
  std::string title;
  std::string source_ref;
  std::string text_source;  // "html" or "pdf"
  std::vector<TextSection> body_text;
  std::vector<ImageAsset> images;  // includes the first_page screenshot
  fs::path root;                   // <workdir>/<paper_id>
  fs::path manifest_path;

  [[nodiscard]] const ImageAsset& first_page() const;
  [[nodiscard]] const ImageAsset* find(const std::string& asset_id) const;
  [[nodiscard]] std::vector<std::string> asset_ids() const;
  [[nodiscard]] std::string full_text() const;
};

struct RawBundle {
  std::string paper_id;
  std::string source_ref;
  fs::path root;  // <workdir>/<paper_id>
  std::optional<fs::path> html;
  std::optional<fs::path> pdf;
  // <img src> value -> downloaded or copied file under raw/html_files/
  std::map<std::string, fs::path> html_resources;
};

struct FetchOptions {
  std::string arxiv_base = "https://arxiv.org";
  std::shared_ptr<HttpClient> http;  // defaults to libcurl
};

// Accepts a local .pdf/.html path, an arXiv identifier ("2401.01234",
// "arxiv:2401.01234v2"), an arXiv abs/pdf/html URL, or any http(s) URL that
// serves HTML or PDF. Persists the bundle under <workdir>/<paper_id>/raw/.
RawBundle fetch_paper(const std::string& source_ref, const fs::path& workdir, const FetchOptions& options = {});
RawBundle load_bundle(const fs::path& paper_root);

// Text from HTML when available, else PDF. Screenshot from the PDF's first
// page, else a rendering of the HTML's opening text.
PaperAssets extract_assets(const RawBundle& bundle);

void write_manifest(const PaperAssets& assets);
PaperAssets read_manifest(const fs::path& manifest_path);

inline constexpr int kMinFigurePx = 64;
inline constexpr int kScreenshotWidth = 1080;

}  // namespace papercast::ingest
