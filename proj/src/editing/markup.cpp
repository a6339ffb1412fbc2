#include <cmath>
#include <map>
#include <regex>
#include <set>

#include <fmt/format.h>

#include "papercast/common/error.hpp"
#include "papercast/editing/editing.hpp"
#include "papercast/ingest/html.hpp"

namespace papercast::editing {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// Rough rendered extent of a single text line on the 1080-wide canvas.
std::pair<int, int> text_extent(const TextOverlay& o) {
  double px = o.font_size_pt * 1.5;
  int w = static_cast<int>(std::lround(std::min(1080.0, static_cast<double>(o.content.size()) * px * 0.55)));
  return {std::max(w, 1), static_cast<int>(std::lround(px * 1.3))};
}

std::map<std::string, std::string> attributes(const std::string& body) {
  static const std::regex attr(R"re(([a-z_]+)\s*=\s*"([^"]*)")re");
  std::map<std::string, std::string> out;
  for (auto it = std::sregex_iterator(body.begin(), body.end(), attr); it != std::sregex_iterator(); ++it)
    out[(*it)[1].str()] = ingest::html::decode_entities((*it)[2].str());
  return out;
}

int int_attr(const std::map<std::string, std::string>& attrs, const char* key) {
  auto it = attrs.find(key);
  if (it == attrs.end()) return 0;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    raise(ErrorCode::ParseError, std::string("markup attribute ") + key + " is not an integer");
  }
}

}  // namespace

std::string to_string(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::image: return "image";
    case ComponentKind::text: return "text";
    case ComponentKind::avatar: return "avatar";
  }
  return "?";
}

SceneMarkup serialize_scene_markup(const SubScene& sub, const std::vector<TextOverlay>& overlays, bool avatar_present,
                                   const ingest::PaperAssets& assets) {
  std::string out = fmt::format("<scene id=\"{}\" duration=\"{:.2f}\">\n", escape(sub.sub_scene_id), sub.duration_s);
  std::set<std::string> seen;
  for (const auto& img : sub.images) {
    if (!seen.insert(img.asset_id).second) continue;
    const auto* a = assets.find(img.asset_id);
    int w = a ? a->width_px : 0, h = a ? a->height_px : 0;
    out += fmt::format("  <image id=\"{}\" width=\"{}\" height=\"{}\"/>\n", escape(img.asset_id), w, h);
  }
  for (const auto& o : overlays) {
    auto [w, h] = text_extent(o);
    out += fmt::format("  <text id=\"{}\" width=\"{}\" height=\"{}\" font_size=\"{}\">{}</text>\n", escape(o.overlay_id),
                       w, h, o.font_size_pt, escape(o.content));
  }
  if (avatar_present)
    out += fmt::format("  <avatar id=\"{}\" width=\"{}\" height=\"{}\"/>\n", kAvatarId, planning::kAvatarSizePx,
                       planning::kAvatarSizePx);
  out += "</scene>\n";
  return {out};
}

std::vector<MarkupComponent> parse_scene_markup(const std::string& markup_text) {
  static const std::regex tag(R"(<(/?)([a-z]+)([^<>]*?)(/?)>)");
  std::vector<MarkupComponent> out;
  std::vector<std::string> stack;
  std::set<std::string> ids;
  bool saw_scene = false;
  std::size_t text_start = 0;
  std::size_t last_end = 0;

  for (auto it = std::sregex_iterator(markup_text.begin(), markup_text.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    bool closing = !m[1].str().empty();
    bool self_closing = !m[4].str().empty();
    std::string name = m[2].str();
    auto pos = static_cast<std::size_t>(m.position(0));
    std::string between = markup_text.substr(last_end, pos - last_end);
    last_end = pos + static_cast<std::size_t>(m.length(0));
    if (!stack.empty() && stack.back() != "text" && between.find_first_not_of(" \t\r\n") != std::string::npos)
      raise(ErrorCode::ParseError, "stray text inside <" + stack.back() + ">");

    if (closing) {
      if (stack.empty() || stack.back() != name) raise(ErrorCode::ParseError, "unbalanced </" + name + ">");
      if (name == "text") out.back().content = ingest::html::decode_entities(markup_text.substr(text_start, pos - text_start));
      stack.pop_back();
      continue;
    }
    if (name == "scene") {
      if (saw_scene || !stack.empty()) raise(ErrorCode::ParseError, "markup must have exactly one top-level <scene>");
      saw_scene = true;
      if (!self_closing) stack.push_back(name);
      continue;
    }
    if (stack.empty() || stack.back() != "scene") raise(ErrorCode::ParseError, "<" + name + "> must sit directly in <scene>");
    MarkupComponent c;
    if (name == "image") c.kind = ComponentKind::image;
    else if (name == "text") c.kind = ComponentKind::text;
    else if (name == "avatar") c.kind = ComponentKind::avatar;
    else raise(ErrorCode::ParseError, "unknown markup tag <" + name + ">");
    auto attrs = attributes(m[3].str());
    c.id = attrs["id"];
    if (c.id.empty()) raise(ErrorCode::ParseError, "<" + name + "> without an id");
    if (!ids.insert(c.id).second) raise(ErrorCode::ParseError, "duplicate component id '" + c.id + "'");
    c.width = int_attr(attrs, "width");
    c.height = int_attr(attrs, "height");
    out.push_back(c);
    if (!self_closing) {
      stack.push_back(name);
      text_start = last_end;
    }
  }
  if (!saw_scene) raise(ErrorCode::ParseError, "markup has no <scene>");
  if (!stack.empty()) raise(ErrorCode::ParseError, "unclosed <" + stack.back() + ">");
  return out;
}

}  // namespace papercast::editing
