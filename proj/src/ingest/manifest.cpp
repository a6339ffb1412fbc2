#include "papercast/common/error.hpp"
#include "papercast/ingest/ingest.hpp"

namespace papercast::ingest {

namespace {
constexpr const char* kSchema = "papercast.manifest";
constexpr int kVersion = 1;
}  // namespace

std::string to_string(AssetKind kind) {
  switch (kind) {
    case AssetKind::figure: return "figure";
    case AssetKind::table: return "table";
    case AssetKind::screenshot: return "screenshot";
  }
  return "figure";
}

AssetKind parse_asset_kind(const std::string& s) {
  if (s == "figure") return AssetKind::figure;
  if (s == "table") return AssetKind::table;
  if (s == "screenshot") return AssetKind::screenshot;
  raise(ErrorCode::ParseError, "unknown asset kind '" + s + "'");
}

const ImageAsset& PaperAssets::first_page() const {
  if (const auto* a = find("first_page")) return *a;
  raise(ErrorCode::MissingAsset, "paper " + paper_id + " has no first_page screenshot");
}

const ImageAsset* PaperAssets::find(const std::string& asset_id) const {
  for (const auto& a : images)
    if (a.asset_id == asset_id) return &a;
  return nullptr;
}

std::vector<std::string> PaperAssets::asset_ids() const {
  std::vector<std::string> ids;
  for (const auto& a : images) ids.push_back(a.asset_id);
  return ids;
}

std::string PaperAssets::full_text() const {
  std::string out;
  for (const auto& s : body_text) {
    if (!out.empty()) out += "\n\n";
    out += s.text;
  }
  return out;
}

void write_manifest(const PaperAssets& assets) {
  std::string body;
  json sections = json::array();
  for (const auto& s : assets.body_text) {
    if (!body.empty()) body += "\n\n";
    sections.push_back({{"heading", s.heading}, {"offset", body.size()}, {"length", s.text.size()}});
    body += s.text;
  }
  json images = json::array();
  for (const auto& a : assets.images) {
    images.push_back({{"asset_id", a.asset_id},
                      {"kind", to_string(a.kind)},
                      {"path", fs::relative(a.path, assets.root).generic_string()},
                      {"caption", a.caption ? json(*a.caption) : json(nullptr)},
                      {"width_px", a.width_px},
                      {"height_px", a.height_px}});
  }
  json j = {{"schema", kSchema},
            {"version", kVersion},
            {"paper_id", assets.paper_id},
            {"title", assets.title},
            {"source", {{"ref", assets.source_ref}, {"text_from", assets.text_source}}},
            {"body_text_file", "body.txt"},
            {"sections", sections},
            {"assets", images},
            {"first_page", "first_page"}};
  write_file_atomic(assets.root / "body.txt", body);
  write_json(assets.manifest_path, j);
}

PaperAssets read_manifest(const fs::path& manifest_path) {
  json j = read_json(manifest_path);
  if (j.value("schema", "") != kSchema || j.value("version", 0) != kVersion)
    raise(ErrorCode::ParseError, manifest_path.string() + " is not a v1 papercast manifest");
  PaperAssets out;
  out.manifest_path = fs::absolute(manifest_path).lexically_normal();
  out.root = out.manifest_path.parent_path();
  try {
    out.paper_id = j.at("paper_id").get<std::string>();
    out.title = j.at("title").get<std::string>();
    out.source_ref = j.at("source").value("ref", "");
    out.text_source = j.at("source").value("text_from", "");
    std::string body = read_file(out.root / j.at("body_text_file").get<std::string>());
    for (const auto& s : j.at("sections")) {
      auto offset = s.at("offset").get<std::size_t>();
      auto length = s.at("length").get<std::size_t>();
      if (offset + length > body.size()) raise(ErrorCode::ParseError, "section span outside body.txt");
      out.body_text.push_back(TextSection{s.at("heading").get<std::string>(), body.substr(offset, length)});
    }
    for (const auto& a : j.at("assets")) {
      ImageAsset asset;
      asset.asset_id = a.at("asset_id").get<std::string>();
      asset.kind = parse_asset_kind(a.at("kind").get<std::string>());
      asset.path = out.root / a.at("path").get<std::string>();
      if (!a.at("caption").is_null()) asset.caption = a.at("caption").get<std::string>();
      asset.width_px = a.at("width_px").get<int>();
      asset.height_px = a.at("height_px").get<int>();
      if (!fs::is_regular_file(asset.path)) raise(ErrorCode::MissingAsset, asset.path.string());
      out.images.push_back(std::move(asset));
    }
  } catch (const json::exception& e) {
    raise(ErrorCode::ParseError, manifest_path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace papercast::ingest
