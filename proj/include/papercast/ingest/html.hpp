#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace papercast::ingest::html {

struct Figure {
  std::string src;  // empty when the figure is a cell table without an image
  std::string caption;
  bool table = false;
  std::vector<std::vector<std::string>> cells;  // filled for cell tables
};

struct Section {
  std::string heading;
  std::string text;  // paragraphs separated by blank lines
};

struct Document {
  std::string title;
  std::vector<Section> sections;
  std::vector<Figure> figures;
  std::vector<std::string> image_sources;  // every <img src>, in document order
};

// Tolerant parser for article pages. Script, style and page chrome (nav,
// header, footer, aside) are skipped; math contributes its alttext.
Document parse(std::string_view html);

std::string decode_entities(std::string_view text);

}  // namespace papercast::ingest::html
