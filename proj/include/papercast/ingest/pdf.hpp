#pragma once

// Minimal PDF reader: object graph, stream filters, text runs, raster images,
// and an approximate page rasterizer. Enough to ground downstream agents on a
// paper's own words and figures; not a general-purpose renderer.

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

namespace papercast::ingest::pdf {

struct Object;
using Dict = std::map<std::string, Object>;
using Array = std::vector<Object>;

struct Ref {
  int num = 0;
  int gen = 0;
};

struct Stream {
  Dict dict;
  std::string raw;  // bytes between "stream" and "endstream", still encoded
};

struct Object {
  enum class Kind { Null, Bool, Number, String, Name, Array, Dict, Ref, Stream };

  Kind kind = Kind::Null;
  bool boolean = false;
  double number = 0.0;
  std::string str;  // String bytes or Name (without slash)
  std::shared_ptr<Array> array;
  std::shared_ptr<Dict> dict;
  Ref ref;
  std::shared_ptr<Stream> stream;

  [[nodiscard]] bool is(Kind k) const { return kind == k; }
  [[nodiscard]] bool is_name(std::string_view n) const { return kind == Kind::Name && str == n; }
};

// Affine transform [a b c d e f] in PDF convention: (x,y) -> (a x + c y + e, b x + d y + f).
using Matrix = std::array<double, 6>;
Matrix multiply(const Matrix& lhs, const Matrix& rhs);
constexpr Matrix kIdentity{1, 0, 0, 1, 0, 0};

struct TextRun {
  int page = 0;
  double x = 0.0;  // baseline origin, user space
  double y = 0.0;
  double font_size = 0.0;  // effective size after text and graphics matrices
  double width = 0.0;      // advance estimate in user space
  bool bold = false;
  std::string text;  // UTF-8
};

struct ImagePlacement {
  int page = 0;
  int object_num = -1;  // -1 for inline images
  Matrix ctm = kIdentity;
  // Axis-aligned bounds in user space.
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

struct PageInfo {
  double x0 = 0, y0 = 0, x1 = 612, y1 = 792;  // MediaBox
  [[nodiscard]] double width() const { return x1 - x0; }
  [[nodiscard]] double height() const { return y1 - y0; }
};

class Document {
 public:
  // Throws Error(ParseError) when no page tree can be recovered.
  static Document parse(std::string bytes);

  [[nodiscard]] std::size_t page_count() const { return pages_.size(); }
  [[nodiscard]] const PageInfo& page_info(std::size_t page) const { return page_infos_.at(page); }

  [[nodiscard]] std::vector<TextRun> text_runs(std::size_t page) const;
  [[nodiscard]] std::vector<ImagePlacement> image_placements(std::size_t page) const;
  // Decodes an image XObject; empty Mat when its encoding is unsupported.
  [[nodiscard]] cv::Mat decode_image(int object_num) const;
  [[nodiscard]] std::optional<std::string> info_title() const;

  // White page with images and text drawn at their positions.
  [[nodiscard]] cv::Mat render_page(std::size_t page, int width_px) const;

  [[nodiscard]] const Object& resolve(const Object& obj) const;
  [[nodiscard]] std::string decode_stream(const Stream& stream) const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
  std::vector<Object> pages_;  // resolved page dictionaries
  std::vector<PageInfo> page_infos_;
};

// Exposed for tests.
std::string inflate(std::string_view data);
std::string ascii85_decode(std::string_view data);
std::string ascii_hex_decode(std::string_view data);
Object parse_object_text(std::string_view text);

}  // namespace papercast::ingest::pdf
