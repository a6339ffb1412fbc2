#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <set>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <spdlog/spdlog.h>

#include "papercast/common/error.hpp"
#include "papercast/common/text.hpp"
#include "papercast/ingest/html.hpp"
#include "papercast/ingest/ingest.hpp"
#include "papercast/ingest/pdf.hpp"

namespace papercast::ingest {

namespace {

// ---------------------------------------------------------------------------
// Raster helpers

std::string ascii_fold(std::string_view s) {
  static const std::vector<std::pair<std::string, std::string>> subs = {
      {"\xE2\x80\x98", "'"}, {"\xE2\x80\x99", "'"},  {"\xE2\x80\x9C", "\""}, {"\xE2\x80\x9D", "\""},
      {"\xE2\x80\x93", "-"}, {"\xE2\x80\x94", "-"},  {"\xE2\x80\xA6", "..."}, {"\xC2\xA0", " "},
      {"\xE2\x88\x92", "-"}, {"\xC3\x97", "x"},      {"\xE2\x80\xA2", "*"},
  };
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    bool matched = false;
    for (const auto& [from, to] : subs) {
      if (s.substr(i, from.size()) == from) {
        out += to;
        i += from.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    auto c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
      ++i;
    } else {
      // Skip one UTF-8 sequence.
      std::size_t len = c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 1;
      out.push_back('?');
      i += len;
    }
  }
  return out;
}

// Draws word-wrapped text and returns the y coordinate below the last line.
int draw_wrapped(cv::Mat& img, const std::string& text, int x, int y, int max_w, double scale, int thickness,
                 int max_y) {
  const int font = cv::FONT_HERSHEY_SIMPLEX;
  int baseline = 0;
  int line_h = static_cast<int>(cv::getTextSize("Ag", font, scale, thickness, &baseline).height * 1.7);
  std::string line;
  auto emit = [&](const std::string& l) {
    if (y + line_h > max_y) return false;
    y += line_h;
    cv::putText(img, l, {x, y}, font, scale, cv::Scalar(20, 20, 20), thickness, cv::LINE_AA);
    return true;
  };
  for (const auto& word : text::split_words(ascii_fold(text))) {
    std::string candidate = line.empty() ? word : line + " " + word;
    if (!line.empty() && cv::getTextSize(candidate, font, scale, thickness, &baseline).width > max_w) {
      if (!emit(line)) return y;
      line = word;
    } else {
      line = candidate;
    }
  }
  if (!line.empty()) emit(line);
  return y;
}

cv::Mat render_html_first_page(const std::string& title, const std::vector<TextSection>& sections) {
  cv::Mat page(1398, kScreenshotWidth, CV_8UC3, cv::Scalar(255, 255, 255));
  int y = draw_wrapped(page, title, 90, 90, 900, 1.4, 3, 400);
  y += 30;
  for (const auto& s : sections) {
    if (y > 1300) break;
    y = draw_wrapped(page, s.heading, 90, y, 900, 0.9, 2, 1340);
    y = draw_wrapped(page, s.text, 90, y + 6, 900, 0.7, 1, 1340) + 24;
  }
  return page;
}

cv::Mat render_cell_table(const std::vector<std::vector<std::string>>& rows) {
  const int font = cv::FONT_HERSHEY_SIMPLEX;
  const double scale = 0.6;
  std::size_t ncols = 0;
  for (const auto& r : rows) ncols = std::max(ncols, r.size());
  if (ncols == 0) return {};
  std::vector<int> widths(ncols, 40);
  int baseline = 0;
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c)
      widths[c] = std::max(widths[c], cv::getTextSize(ascii_fold(r[c]), font, scale, 1, &baseline).width + 24);
  const int row_h = 36;
  int total_w = 0;
  for (int w : widths) total_w += w;
  cv::Mat img(row_h * static_cast<int>(rows.size()) + 2, total_w + 2, CV_8UC3, cv::Scalar(255, 255, 255));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    int x = 1;
    int y = 1 + static_cast<int>(r) * row_h;
    for (std::size_t c = 0; c < ncols; ++c) {
      cv::rectangle(img, {x, y, widths[c], row_h}, cv::Scalar(160, 160, 160), 1);
      if (c < rows[r].size())
        cv::putText(img, ascii_fold(rows[r][c]), {x + 12, y + 24}, font, scale, cv::Scalar(20, 20, 20), 1,
                    cv::LINE_AA);
      x += widths[c];
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// PDF text layout

struct Line {
  int page = 0;
  double x0 = 0, x1 = 0, y = 0, size = 0;
  bool bold = false;
  std::string text;
};

std::vector<Line> page_lines(const pdf::Document& doc, std::size_t page) {
  auto runs = doc.text_runs(page);
  runs.erase(std::remove_if(runs.begin(), runs.end(),
                            [](const pdf::TextRun& r) { return text::trim(r.text).empty() || r.font_size <= 0; }),
             runs.end());
  std::stable_sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) {
    if (std::abs(a.y - b.y) > 0.01) return a.y > b.y;
    return a.x < b.x;
  });
  std::vector<std::vector<pdf::TextRun>> groups;
  for (const auto& r : runs) {
    if (!groups.empty()) {
      auto& g = groups.back();
      double tol = 0.4 * std::max(g.front().font_size, r.font_size);
      if (std::abs(g.front().y - r.y) <= tol) {
        g.push_back(r);
        continue;
      }
    }
    groups.push_back({r});
  }
  std::vector<Line> lines;
  for (auto& g : groups) {
    std::sort(g.begin(), g.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
    Line line;
    line.page = static_cast<int>(page);
    line.x0 = g.front().x;
    line.y = g.front().y;
    std::size_t bold_chars = 0, chars = 0;
    double end = -1e9;
    for (const auto& r : g) {
      if (!line.text.empty() && r.x - end > 0.2 * r.font_size && line.text.back() != ' ' && r.text.front() != ' ')
        line.text += ' ';
      line.text += r.text;
      end = std::max(end, r.x + r.width);
      line.size = std::max(line.size, r.font_size);
      chars += r.text.size();
      if (r.bold) bold_chars += r.text.size();
    }
    line.x1 = end;
    line.bold = bold_chars * 2 > chars;
    line.text = text::normalize_space(line.text);
    if (!line.text.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

// Reorders a two-column page: full-width header lines, left column, right
// column, then any full-width lines below the columns.
std::vector<Line> reading_order(std::vector<Line> lines, const pdf::PageInfo& box) {
  const double mid = (box.x0 + box.x1) / 2.0;
  const double slack = box.width() * 0.02;
  auto is_left = [&](const Line& l) { return l.x1 <= mid + slack; };
  auto is_right = [&](const Line& l) { return l.x0 >= mid - slack; };
  std::size_t nl = 0, nr = 0;
  for (const auto& l : lines) {
    if (is_left(l)) ++nl;
    else if (is_right(l)) ++nr;
  }
  if (nl < 3 || nr < 3) return lines;
  double top = -1e9, bottom = 1e9;
  for (const auto& l : lines)
    if (is_left(l) || is_right(l)) {
      top = std::max(top, l.y);
      bottom = std::min(bottom, l.y);
    }
  std::vector<Line> head, left, right, tail;
  for (auto& l : lines) {
    if (is_left(l)) left.push_back(std::move(l));
    else if (is_right(l)) right.push_back(std::move(l));
    else if (l.y > top) head.push_back(std::move(l));
    else if (l.y < bottom) tail.push_back(std::move(l));
    else left.push_back(std::move(l));
  }
  std::vector<Line> out;
  for (auto* part : {&head, &left, &right, &tail})
    for (auto& l : *part) out.push_back(std::move(l));
  return out;
}

const std::regex kCaption(R"(^(Figure|Fig\.|Table)\s*[0-9IVX]+[.:]?(\s|$))");
const std::regex kNumberedHeading(R"(^(\d+(\.\d+)*\.?|[IVX]+\.|[A-H]\.?)\s+[A-Z].*)");
const std::regex kPageNumber(R"(^\d{1,4}$)");
const std::set<std::string> kNamedHeadings = {
    "abstract",   "introduction", "related work", "background", "method",          "methods",
    "methodology", "approach",    "experiments", "evaluation", "results",         "discussion",
    "conclusion", "conclusions",  "references",  "bibliography", "acknowledgments", "acknowledgements",
    "limitations", "appendix"};

struct Caption {
  int page = 0;
  double y = 0;  // baseline of the first caption line
  double x0 = 0, x1 = 0;
  std::string text;
};

struct PdfText {
  std::string title;
  std::vector<TextSection> sections;
  std::vector<Caption> captions;
};

double body_font_size(const std::vector<Line>& lines) {
  std::map<double, std::size_t> weight;
  for (const auto& l : lines) weight[std::round(l.size * 2.0) / 2.0] += l.text.size();
  double best = 10.0;
  std::size_t best_w = 0;
  for (const auto& [size, w] : weight)
    if (w > best_w) {
      best = size;
      best_w = w;
    }
  return best;
}

PdfText layout_pdf_text(const pdf::Document& doc) {
  std::vector<Line> lines;
  for (std::size_t p = 0; p < doc.page_count(); ++p) {
    auto ordered = reading_order(page_lines(doc, p), doc.page_info(p));
    for (auto& l : ordered) {
      if (std::regex_match(l.text, kPageNumber)) continue;
      lines.push_back(std::move(l));
    }
  }
  PdfText out;
  if (lines.empty()) return out;
  const double body = body_font_size(lines);

  // Title: document info first, else the largest lines at the top of page 1.
  std::set<std::size_t> title_lines;
  double max_size = 0;
  for (const auto& l : lines)
    if (l.page == 0) max_size = std::max(max_size, l.size);
  if (max_size > body * 1.12) {
    for (std::size_t i = 0; i < lines.size() && lines[i].page == 0; ++i)
      if (std::abs(lines[i].size - max_size) < 0.25) title_lines.insert(i);
  }
  if (auto info = doc.info_title(); info && !text::trim(*info).empty()) {
    out.title = text::normalize_space(*info);
  } else {
    std::vector<std::string> parts;
    for (auto i : title_lines) parts.push_back(lines[i].text);
    out.title = text::join(parts, " ");
  }

  auto is_heading = [&](const Line& l) {
    std::size_t words = text::count_words(l.text);
    if (words == 0 || words > 12 || std::regex_search(l.text, kCaption)) return false;
    std::string lower = text::to_lower(l.text);
    while (!lower.empty() && (lower.back() == '.' || lower.back() == ':')) lower.pop_back();
    std::string unnumbered = lower;
    if (std::smatch m; std::regex_match(l.text, m, std::regex(R"(^[\dIVX.]+\s+(.*)$)")))
      unnumbered = text::to_lower(m[1].str());
    bool larger = l.size >= body * 1.12;
    bool emphasised = larger || l.bold;
    if (!emphasised) return false;
    if (kNamedHeadings.count(unnumbered)) return true;
    if (std::regex_match(l.text, kNumberedHeading)) return true;
    return larger && words <= 8 && l.text.back() != '.';
  };

  std::vector<std::pair<std::string, std::vector<std::string>>> sections;
  sections.emplace_back("", std::vector<std::string>{});
  std::string para;
  bool skipping_refs = false;
  bool in_caption = false;
  const Line* prev = nullptr;
  auto flush = [&] {
    std::string p = text::normalize_space(para);
    para.clear();
    if (!p.empty() && !skipping_refs) sections.back().second.push_back(p);
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const Line& l = lines[i];
    if (title_lines.count(i)) continue;
    if (is_heading(l)) {
      flush();
      in_caption = false;
      std::string lower = text::to_lower(l.text);
      skipping_refs = lower.find("references") != std::string::npos || lower.find("bibliography") != std::string::npos;
      if (!skipping_refs) sections.emplace_back(l.text, std::vector<std::string>{});
      prev = &l;
      continue;
    }
    bool caption = std::regex_search(l.text, kCaption);
    bool gap = prev && (prev->page != l.page || prev->y - l.y > 1.6 * std::max(prev->size, l.size) ||
                        l.y > prev->y);
    if (caption || gap || (prev && std::abs(prev->size - l.size) > 1.0)) {
      flush();
      in_caption = false;
    }
    if (caption) {
      out.captions.push_back(Caption{l.page, l.y, l.x0, l.x1, l.text});
      in_caption = true;
    } else if (in_caption) {
      out.captions.back().text += " " + l.text;
    }
    if (!para.empty() && para.back() == '-' && !l.text.empty() && std::islower(static_cast<unsigned char>(l.text[0]))) {
      para.pop_back();
      para += l.text;
    } else {
      if (!para.empty()) para += ' ';
      para += l.text;
    }
    prev = &l;
  }
  flush();
  for (auto& [heading, paras] : sections) {
    if (paras.empty()) continue;
    std::string h = heading;
    if (h.empty()) h = text::to_lower(paras.front()).rfind("abstract", 0) == 0 ? "Abstract" : "Preamble";
    out.sections.push_back(TextSection{h, text::join(paras, "\n\n")});
  }
  for (auto& c : out.captions) c.text = text::normalize_space(c.text);
  return out;
}

// ---------------------------------------------------------------------------

struct Pending {
  cv::Mat image;
  std::optional<std::string> caption;
  bool table = false;
};

bool caption_is_table(const std::optional<std::string>& caption) {
  return caption && caption->rfind("Table", 0) == 0;
}

std::vector<Pending> pdf_figures(const pdf::Document& doc, const std::vector<Caption>& captions) {
  std::vector<Pending> out;
  std::set<int> seen;
  for (std::size_t p = 0; p < doc.page_count(); ++p) {
    for (const auto& pl : doc.image_placements(p)) {
      if (pl.object_num < 0 || !seen.insert(pl.object_num).second) continue;
      cv::Mat img = doc.decode_image(pl.object_num);
      if (img.empty()) {
        spdlog::warn("pdf image object {} uses an unsupported encoding; skipped", pl.object_num);
        continue;
      }
      if (img.cols < kMinFigurePx || img.rows < kMinFigurePx) continue;
      const Caption* best = nullptr;
      double best_d = 120.0;
      for (const auto& c : captions) {
        if (c.page != static_cast<int>(p)) continue;
        bool overlaps = c.x0 <= pl.x1 + 20 && c.x1 >= pl.x0 - 20;
        if (!overlaps) continue;
        double d = c.y < pl.y0 ? pl.y0 - c.y : (c.y > pl.y1 ? c.y - pl.y1 : 0.0);
        if (d < best_d) {
          best_d = d;
          best = &c;
        }
      }
      Pending f;
      f.image = img;
      if (best) f.caption = best->text;
      f.table = caption_is_table(f.caption);
      out.push_back(std::move(f));
    }
  }
  return out;
}

std::vector<Pending> html_figures(const html::Document& doc, const RawBundle& bundle) {
  std::vector<Pending> out;
  for (const auto& fig : doc.figures) {
    Pending f;
    if (!fig.caption.empty()) f.caption = fig.caption;
    f.table = fig.table || caption_is_table(f.caption);
    if (fig.src.empty()) {
      f.image = render_cell_table(fig.cells);
    } else {
      auto it = bundle.html_resources.find(fig.src);
      if (it == bundle.html_resources.end()) continue;
      f.image = cv::imread(it->second.string(), cv::IMREAD_COLOR);
    }
    if (f.image.empty() || f.image.cols < kMinFigurePx || f.image.rows < kMinFigurePx) continue;
    out.push_back(std::move(f));
  }
  return out;
}

ImageAsset save_asset(const fs::path& root, const std::string& id, AssetKind kind, const cv::Mat& img,
                      std::optional<std::string> caption) {
  ImageAsset a;
  a.asset_id = id;
  a.kind = kind;
  a.path = root / "assets" / (id + ".png");
  a.caption = std::move(caption);
  a.width_px = img.cols;
  a.height_px = img.rows;
  std::vector<uchar> png;
  if (!cv::imencode(".png", img, png)) raise(ErrorCode::IoError, "failed to encode " + id);
  write_file_atomic(a.path, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
  return a;
}

}  // namespace

PaperAssets extract_assets(const RawBundle& bundle) {
  if (!bundle.html && !bundle.pdf) raise(ErrorCode::UnsupportedFormat, "bundle has neither HTML nor PDF");

  std::optional<pdf::Document> pdf_doc;
  std::optional<html::Document> html_doc;
  if (bundle.pdf) {
    try {
      pdf_doc = pdf::Document::parse(read_file(*bundle.pdf));
    } catch (const Error& e) {
      if (!bundle.html) throw;
      spdlog::warn("pdf unreadable, continuing with html only: {}", e.what());
    }
  }
  if (bundle.html) html_doc = html::parse(read_file(*bundle.html));

  PaperAssets out;
  out.paper_id = bundle.paper_id;
  out.source_ref = bundle.source_ref;
  out.root = bundle.root;
  out.manifest_path = bundle.root / "manifest.json";

  std::optional<PdfText> pdf_text;
  if (pdf_doc) pdf_text = layout_pdf_text(*pdf_doc);

  if (html_doc && !html_doc->sections.empty()) {
    out.text_source = "html";
    out.title = html_doc->title;
    for (const auto& s : html_doc->sections) out.body_text.push_back(TextSection{s.heading, s.text});
  } else if (pdf_text && !pdf_text->sections.empty()) {
    out.text_source = "pdf";
    out.title = pdf_text->title;
    out.body_text = pdf_text->sections;
  }
  if (out.body_text.empty()) raise(ErrorCode::EmptyDocument, "no extractable text in " + bundle.paper_id);
  if (out.title.empty() && pdf_text) out.title = pdf_text->title;
  if (out.title.empty()) out.title = out.body_text.front().heading;

  std::vector<Pending> figures;
  if (html_doc) figures = html_figures(*html_doc, bundle);
  if (figures.empty() && pdf_doc) figures = pdf_figures(*pdf_doc, pdf_text->captions);

  fs::remove_all(out.root / "assets");
  fs::create_directories(out.root / "assets");
  int n_fig = 0, n_table = 0;
  for (const auto& f : figures) {
    bool table = f.table;
    std::string id = table ? "table_" + std::to_string(++n_table) : "fig_" + std::to_string(++n_fig);
    out.images.push_back(save_asset(out.root, id, table ? AssetKind::table : AssetKind::figure, f.image, f.caption));
  }
  cv::Mat first = pdf_doc ? pdf_doc->render_page(0, kScreenshotWidth)
                          : render_html_first_page(out.title, out.body_text);
  out.images.push_back(save_asset(out.root, "first_page", AssetKind::screenshot, first, std::nullopt));

  write_manifest(out);
  spdlog::info("extracted {}: {} sections, {} images (text from {})", out.paper_id, out.body_text.size(),
               out.images.size(), out.text_source);
  return out;
}

}  // namespace papercast::ingest
