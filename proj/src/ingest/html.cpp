#include "papercast/ingest/html.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "papercast/common/text.hpp"

namespace papercast::ingest::html {

namespace {

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x110000) {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

struct Tag {
  std::string name;
  bool end = false;
  bool self_closing = false;
  std::map<std::string, std::string> attrs;

  [[nodiscard]] std::string attr(const std::string& key) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? std::string{} : it->second;
  }
  [[nodiscard]] bool has_class(std::string_view cls) const {
    for (const auto& c : text::split_words(attr("class")))
      if (c == cls) return true;
    return false;
  }
};

// Parses the tag starting at html[pos] == '<'. Returns the position after '>'.
std::size_t parse_tag(std::string_view html, std::size_t pos, Tag& tag) {
  std::size_t i = pos + 1;
  if (i < html.size() && html[i] == '/') {
    tag.end = true;
    ++i;
  }
  std::size_t start = i;
  while (i < html.size() && !std::isspace(static_cast<unsigned char>(html[i])) && html[i] != '>' &&
         html[i] != '/')
    ++i;
  tag.name = text::to_lower(html.substr(start, i - start));
  while (i < html.size() && html[i] != '>') {
    char c = html[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/') {
      tag.self_closing = true;
      ++i;
      continue;
    }
    std::size_t ks = i;
    while (i < html.size() && !std::isspace(static_cast<unsigned char>(html[i])) && html[i] != '=' &&
           html[i] != '>' && html[i] != '/')
      ++i;
    std::string key = text::to_lower(html.substr(ks, i - ks));
    while (i < html.size() && std::isspace(static_cast<unsigned char>(html[i]))) ++i;
    std::string value;
    if (i < html.size() && html[i] == '=') {
      ++i;
      while (i < html.size() && std::isspace(static_cast<unsigned char>(html[i]))) ++i;
      if (i < html.size() && (html[i] == '"' || html[i] == '\'')) {
        char q = html[i++];
        std::size_t vs = i;
        while (i < html.size() && html[i] != q) ++i;
        value = std::string(html.substr(vs, i - vs));
        if (i < html.size()) ++i;
      } else {
        std::size_t vs = i;
        while (i < html.size() && !std::isspace(static_cast<unsigned char>(html[i])) && html[i] != '>') ++i;
        value = std::string(html.substr(vs, i - vs));
      }
    }
    if (!key.empty()) tag.attrs[key] = decode_entities(value);
  }
  return i < html.size() ? i + 1 : html.size();
}

const std::unordered_set<std::string> kRawText = {"script", "style", "textarea", "title", "template"};
const std::unordered_set<std::string> kSkipped = {"nav", "header", "footer", "aside", "noscript",
                                                   "button", "svg", "form", "select"};
const std::unordered_set<std::string> kBlock = {"p",      "div",   "br",      "li",         "ul",
                                                 "ol",     "section", "article", "figure",   "figcaption",
                                                 "table",  "tr",    "blockquote", "pre",    "dl",
                                                 "dd",     "dt",    "hr",      "main"};

int heading_level(const std::string& name) {
  if (name.size() == 2 && name[0] == 'h' && name[1] >= '1' && name[1] <= '6') return name[1] - '0';
  return 0;
}

struct FigureCtx {
  std::vector<std::string> images;
  std::string caption;
  bool table = false;
  std::vector<std::vector<std::string>> cells;
  bool in_table = false;
  std::vector<std::size_t> uncaptioned;  // output figures waiting for this caption
};

class Builder {
 public:
  explicit Builder(std::string_view html) : html_(html) {}

  Document run() {
    std::size_t i = 0;
    while (i < html_.size()) {
      if (html_[i] != '<') {
        std::size_t next = html_.find('<', i);
        if (next == std::string_view::npos) next = html_.size();
        on_text(html_.substr(i, next - i));
        i = next;
        continue;
      }
      if (html_.substr(i, 4) == "<!--") {
        std::size_t end = html_.find("-->", i + 4);
        i = end == std::string_view::npos ? html_.size() : end + 3;
        continue;
      }
      if (i + 1 < html_.size() && (html_[i + 1] == '!' || html_[i + 1] == '?')) {
        std::size_t end = html_.find('>', i);
        i = end == std::string_view::npos ? html_.size() : end + 1;
        continue;
      }
      if (i + 1 >= html_.size() ||
          !(std::isalpha(static_cast<unsigned char>(html_[i + 1])) || html_[i + 1] == '/')) {
        on_text(html_.substr(i, 1));
        ++i;
        continue;
      }
      Tag tag;
      i = parse_tag(html_, i, tag);
      if (!tag.end && kRawText.count(tag.name)) {
        std::string close = "</" + tag.name;
        std::size_t end = i;
        while (true) {
          end = html_.find('<', end);
          if (end == std::string_view::npos) break;
          if (text::to_lower(html_.substr(end, close.size())) == close) break;
          ++end;
        }
        if (end == std::string_view::npos) end = html_.size();
        if (tag.name == "title" && page_title_.empty())
          page_title_ = text::normalize_space(decode_entities(html_.substr(i, end - i)));
        std::size_t gt = html_.find('>', end);
        i = gt == std::string_view::npos ? html_.size() : gt + 1;
        continue;
      }
      on_tag(tag);
    }
    finish();
    return std::move(doc_);
  }

 private:
  void on_text(std::string_view raw) {
    if (skip_depth_ > 0) return;
    std::string t = decode_entities(raw);
    if (in_heading_) {
      heading_buf_ += t;
    } else if (!figures_.empty() && figures_.back().in_table && !in_caption_) {
      if (in_cell_ && !figures_.back().cells.empty() && !figures_.back().cells.back().empty())
        figures_.back().cells.back().back() += t;
    } else {
      para_ += t;
      if (in_caption_ && !figures_.empty()) figures_.back().caption += t;
    }
  }

  void on_tag(const Tag& tag) {
    const std::string& n = tag.name;
    if (skip_depth_ > 0) {
      if (n == skip_name_) skip_depth_ += tag.end ? -1 : (tag.self_closing ? 0 : 1);
      return;
    }
    if (!tag.end && (kSkipped.count(n) || (n == "section" && tag.has_class("ltx_bibliography")))) {
      if (tag.self_closing) return;
      skip_name_ = n;
      skip_depth_ = 1;
      return;
    }
    if (n == "math" && !tag.end) {
      std::string alt = tag.attr("alttext");
      if (!alt.empty()) {
        if (in_heading_) {
          heading_buf_ += " " + alt + " ";
        } else {
          para_ += " " + alt + " ";
          if (in_caption_ && !figures_.empty()) figures_.back().caption += " " + alt + " ";
        }
      }
      if (!tag.self_closing) {
        skip_name_ = n;
        skip_depth_ = 1;
      }
      return;
    }

    if (int level = heading_level(n)) {
      if (!tag.end) {
        flush_para();
        in_heading_ = true;
        heading_is_title_ = level == 1 && (tag.has_class("ltx_title_document") || doc_.title.empty());
        heading_buf_.clear();
      } else if (in_heading_) {
        in_heading_ = false;
        std::string h = text::normalize_space(heading_buf_);
        if (heading_is_title_ && doc_.title.empty()) {
          doc_.title = h;
        } else if (!h.empty()) {
          doc_.sections.push_back(Section{h, {}});
          paragraphs_.emplace_back();
        }
      }
      return;
    }

    if (n == "img" && !tag.end) {
      std::string src = tag.attr("src");
      if (src.empty()) return;
      doc_.image_sources.push_back(src);
      if (!figures_.empty()) {
        figures_.back().images.push_back(src);
      } else {
        doc_.figures.push_back(Figure{src, {}, false, {}});
      }
      return;
    }

    if (n == "figure") {
      if (!tag.end) {
        flush_para();
        FigureCtx ctx;
        ctx.table = tag.has_class("ltx_table");
        figures_.push_back(std::move(ctx));
      } else if (!figures_.empty()) {
        flush_para();
        close_figure();
      }
      return;
    }
    if (n == "figcaption") {
      flush_para();
      in_caption_ = !tag.end && !tag.self_closing;
      return;
    }
    if (!figures_.empty() && n == "table") {
      figures_.back().in_table = !tag.end;
      return;
    }
    if (!figures_.empty() && figures_.back().in_table) {
      if (n == "tr" && !tag.end) figures_.back().cells.emplace_back();
      if ((n == "td" || n == "th")) {
        in_cell_ = !tag.end;
        if (!tag.end) {
          if (figures_.back().cells.empty()) figures_.back().cells.emplace_back();
          figures_.back().cells.back().emplace_back();
        }
      }
      return;
    }

    if (kBlock.count(n)) flush_para();
  }

  void close_figure() {
    FigureCtx ctx = std::move(figures_.back());
    figures_.pop_back();
    std::string caption = text::normalize_space(ctx.caption);
    bool table = ctx.table || caption.rfind("Table", 0) == 0;
    for (std::size_t idx : ctx.uncaptioned) {
      if (!caption.empty()) {
        doc_.figures[idx].caption = caption;
        doc_.figures[idx].table = doc_.figures[idx].table || table;
      } else if (!figures_.empty()) {
        figures_.back().uncaptioned.push_back(idx);
      }
    }
    for (const auto& src : ctx.images) {
      doc_.figures.push_back(Figure{src, caption, table, {}});
      if (caption.empty() && !figures_.empty()) figures_.back().uncaptioned.push_back(doc_.figures.size() - 1);
    }
    if (ctx.images.empty() && !ctx.cells.empty()) {
      for (auto& row : ctx.cells)
        for (auto& cell : row) cell = text::normalize_space(cell);
      doc_.figures.push_back(Figure{{}, caption, true, std::move(ctx.cells)});
    }
  }

  void flush_para() {
    std::string p = text::normalize_space(para_);
    para_.clear();
    if (p.empty()) return;
    if (paragraphs_.empty()) {
      doc_.sections.push_back(Section{{}, {}});
      paragraphs_.emplace_back();
    }
    paragraphs_.back().push_back(p);
  }

  void finish() {
    flush_para();
    if (doc_.title.empty()) doc_.title = page_title_;
    std::vector<Section> kept;
    for (std::size_t i = 0; i < doc_.sections.size(); ++i) {
      Section s = doc_.sections[i];
      s.text = text::join(paragraphs_[i], "\n\n");
      if (s.text.empty()) continue;
      if (s.heading.empty()) s.heading = "Preamble";
      kept.push_back(std::move(s));
    }
    doc_.sections = std::move(kept);
  }

  std::string_view html_;
  Document doc_;
  std::string page_title_;
  std::vector<std::vector<std::string>> paragraphs_;  // parallel to doc_.sections
  std::string para_;
  std::string heading_buf_;
  bool in_heading_ = false;
  bool heading_is_title_ = false;
  bool in_caption_ = false;
  bool in_cell_ = false;
  std::vector<FigureCtx> figures_;
  std::string skip_name_;
  int skip_depth_ = 0;
};

}  // namespace

std::string decode_entities(std::string_view s) {
  static const std::unordered_map<std::string, std::uint32_t> named = {
      {"amp", '&'},      {"lt", '<'},        {"gt", '>'},        {"quot", '"'},      {"apos", '\''},
      {"nbsp", 0xA0},    {"ndash", 0x2013},  {"mdash", 0x2014},  {"hellip", 0x2026}, {"lsquo", 0x2018},
      {"rsquo", 0x2019}, {"ldquo", 0x201C},  {"rdquo", 0x201D},  {"times", 0xD7},    {"minus", 0x2212},
      {"deg", 0xB0},     {"middot", 0xB7},   {"copy", 0xA9},     {"reg", 0xAE},      {"plusmn", 0xB1},
      {"le", 0x2264},    {"ge", 0x2265},     {"ne", 0x2260},     {"approx", 0x2248}, {"alpha", 0x3B1},
      {"beta", 0x3B2},   {"gamma", 0x3B3},   {"delta", 0x3B4},   {"lambda", 0x3BB},  {"mu", 0x3BC},
      {"pi", 0x3C0},     {"sigma", 0x3C3},   {"thinsp", 0x2009}, {"ensp", 0x2002},   {"emsp", 0x2003},
  };
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    std::size_t semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back(s[i++]);
      continue;
    }
    std::string_view ent = s.substr(i + 1, semi - i - 1);
    bool ok = false;
    if (!ent.empty() && ent[0] == '#') {
      std::uint32_t cp = 0;
      bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
      std::string_view digits = ent.substr(hex ? 2 : 1);
      ok = !digits.empty();
      for (char c : digits) {
        int d = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
                : (hex && std::isxdigit(static_cast<unsigned char>(c)))
                    ? std::tolower(static_cast<unsigned char>(c)) - 'a' + 10
                    : -1;
        if (d < 0 || cp > 0x10FFFF) {
          ok = false;
          break;
        }
        cp = cp * (hex ? 16u : 10u) + static_cast<std::uint32_t>(d);
      }
      if (ok) append_utf8(out, cp);
    } else if (auto it = named.find(std::string(ent)); it != named.end()) {
      append_utf8(out, it->second);
      ok = true;
    }
    if (ok) {
      i = semi + 1;
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

Document parse(std::string_view html) { return Builder(html).run(); }

}  // namespace papercast::ingest::html
