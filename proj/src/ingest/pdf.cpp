#include "papercast/ingest/pdf.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <functional>
#include <set>
#include <unordered_map>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <zlib.h>

#include "papercast/common/error.hpp"

namespace papercast::ingest::pdf {

namespace {

bool is_white(char c) {
  return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' || c == '\0';
}
bool is_delim(char c) {
  return c == '(' || c == ')' || c == '<' || c == '>' || c == '[' || c == ']' || c == '{' ||
         c == '}' || c == '/' || c == '%';
}
bool is_regular(char c) { return !is_white(c) && !is_delim(c); }

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// ---------------------------------------------------------------------------
// Lexer / parser

enum class Tok { Eof, Number, Name, String, ArrayBegin, ArrayEnd, DictBegin, DictEnd, Keyword };

struct Token {
  Tok type = Tok::Eof;
  std::string text;
  double number = 0.0;
  bool integer = false;
};

class Lexer {
 public:
  explicit Lexer(std::string_view data, std::size_t pos = 0) : data_(data), pos_(pos) {}

  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }
  std::string_view data() const { return data_; }

  void skip_space() {
    while (pos_ < data_.size()) {
      char c = data_[pos_];
      if (is_white(c)) {
        ++pos_;
      } else if (c == '%') {
        while (pos_ < data_.size() && data_[pos_] != '\n' && data_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  Token next() {
    skip_space();
    Token t;
    if (pos_ >= data_.size()) return t;
    char c = data_[pos_];
    if (c == '[') {
      ++pos_;
      t.type = Tok::ArrayBegin;
    } else if (c == ']') {
      ++pos_;
      t.type = Tok::ArrayEnd;
    } else if (c == '<' && peek_char(1) == '<') {
      pos_ += 2;
      t.type = Tok::DictBegin;
    } else if (c == '>' && peek_char(1) == '>') {
      pos_ += 2;
      t.type = Tok::DictEnd;
    } else if (c == '<') {
      t.type = Tok::String;
      t.text = read_hex_string();
    } else if (c == '(') {
      t.type = Tok::String;
      t.text = read_literal_string();
    } else if (c == '/') {
      ++pos_;
      t.type = Tok::Name;
      t.text = read_name();
    } else if (c == '{' || c == '}' || c == ')' || c == '>') {
      ++pos_;
      t.type = Tok::Keyword;
      t.text = std::string(1, c);
    } else {
      std::size_t start = pos_;
      while (pos_ < data_.size() && is_regular(data_[pos_])) ++pos_;
      t.text = std::string(data_.substr(start, pos_ - start));
      if (looks_numeric(t.text)) {
        t.type = Tok::Number;
        t.number = std::strtod(t.text.c_str(), nullptr);
        t.integer = t.text.find('.') == std::string::npos;
      } else {
        t.type = Tok::Keyword;
      }
    }
    return t;
  }

 private:
  char peek_char(std::size_t off) const {
    return pos_ + off < data_.size() ? data_[pos_ + off] : '\0';
  }

  static bool looks_numeric(const std::string& s) {
    if (s.empty()) return false;
    bool digit = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      char c = s[i];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        digit = true;
      } else if ((c == '+' || c == '-') && i == 0) {
      } else if (c != '.') {
        return false;
      }
    }
    return digit;
  }

  std::string read_name() {
    std::string out;
    while (pos_ < data_.size() && is_regular(data_[pos_])) {
      char c = data_[pos_++];
      if (c == '#' && pos_ + 1 < data_.size() && hex_value(data_[pos_]) >= 0 &&
          hex_value(data_[pos_ + 1]) >= 0) {
        out.push_back(static_cast<char>(hex_value(data_[pos_]) * 16 + hex_value(data_[pos_ + 1])));
        pos_ += 2;
      } else {
        out.push_back(c);
      }
    }
    return out;
  }

  std::string read_hex_string() {
    ++pos_;  // '<'
    std::string out;
    int hi = -1;
    while (pos_ < data_.size() && data_[pos_] != '>') {
      int v = hex_value(data_[pos_++]);
      if (v < 0) continue;
      if (hi < 0) {
        hi = v;
      } else {
        out.push_back(static_cast<char>(hi * 16 + v));
        hi = -1;
      }
    }
    if (hi >= 0) out.push_back(static_cast<char>(hi * 16));
    if (pos_ < data_.size()) ++pos_;
    return out;
  }

  std::string read_literal_string() {
    ++pos_;  // '('
    std::string out;
    int depth = 1;
    while (pos_ < data_.size()) {
      char c = data_[pos_++];
      if (c == '\\') {
        if (pos_ >= data_.size()) break;
        char e = data_[pos_++];
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 'r': out.push_back('\r'); break;
          case 't': out.push_back('\t'); break;
          case 'b': out.push_back('\b'); break;
          case 'f': out.push_back('\f'); break;
          case '\r':
            if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
            break;
          case '\n': break;
          default:
            if (e >= '0' && e <= '7') {
              int v = e - '0';
              for (int k = 0; k < 2 && pos_ < data_.size() && data_[pos_] >= '0' && data_[pos_] <= '7'; ++k)
                v = v * 8 + (data_[pos_++] - '0');
              out.push_back(static_cast<char>(v & 0xFF));
            } else {
              out.push_back(e);
            }
        }
      } else if (c == '(') {
        ++depth;
        out.push_back(c);
      } else if (c == ')') {
        if (--depth == 0) break;
        out.push_back(c);
      } else {
        out.push_back(c);
      }
    }
    return out;
  }

  std::string_view data_;
  std::size_t pos_;
};

struct Parsed {
  Object obj;
  bool is_keyword = false;
  std::string keyword;
  bool eof = false;
};

Object make_number(double v) {
  Object o;
  o.kind = Object::Kind::Number;
  o.number = v;
  return o;
}

Parsed parse_next(Lexer& lex, int depth = 0);

Object parse_value(Lexer& lex, int depth) {
  auto p = parse_next(lex, depth);
  return p.obj;
}

Parsed parse_next(Lexer& lex, int depth) {
  Parsed out;
  if (depth > 64) raise(ErrorCode::ParseError, "pdf nesting too deep");
  Token t = lex.next();
  switch (t.type) {
    case Tok::Eof:
      out.eof = true;
      return out;
    case Tok::Number: {
      if (t.integer) {
        std::size_t save = lex.pos();
        Token t2 = lex.next();
        if (t2.type == Tok::Number && t2.integer) {
          Token t3 = lex.next();
          if (t3.type == Tok::Keyword && t3.text == "R") {
            out.obj.kind = Object::Kind::Ref;
            out.obj.ref = Ref{static_cast<int>(t.number), static_cast<int>(t2.number)};
            return out;
          }
        }
        lex.seek(save);
      }
      out.obj = make_number(t.number);
      return out;
    }
    case Tok::Name:
      out.obj.kind = Object::Kind::Name;
      out.obj.str = t.text;
      return out;
    case Tok::String:
      out.obj.kind = Object::Kind::String;
      out.obj.str = t.text;
      return out;
    case Tok::ArrayBegin: {
      out.obj.kind = Object::Kind::Array;
      out.obj.array = std::make_shared<Array>();
      while (true) {
        std::size_t save = lex.pos();
        Token peek = lex.next();
        if (peek.type == Tok::ArrayEnd || peek.type == Tok::Eof) break;
        lex.seek(save);
        auto item = parse_next(lex, depth + 1);
        if (item.eof) break;
        if (item.is_keyword) {
          // Stray operator inside an array: tolerate by skipping it.
          continue;
        }
        out.obj.array->push_back(std::move(item.obj));
      }
      return out;
    }
    case Tok::DictBegin: {
      out.obj.kind = Object::Kind::Dict;
      out.obj.dict = std::make_shared<Dict>();
      while (true) {
        Token key = lex.next();
        if (key.type == Tok::DictEnd || key.type == Tok::Eof) break;
        if (key.type != Tok::Name) continue;
        std::size_t save = lex.pos();
        Token peek = lex.next();
        if (peek.type == Tok::DictEnd) break;
        lex.seek(save);
        (*out.obj.dict)[key.text] = parse_value(lex, depth + 1);
      }
      return out;
    }
    case Tok::ArrayEnd:
    case Tok::DictEnd:
      out.is_keyword = true;
      out.keyword = t.type == Tok::ArrayEnd ? "]" : ">>";
      return out;
    case Tok::Keyword:
      if (t.text == "true" || t.text == "false") {
        out.obj.kind = Object::Kind::Bool;
        out.obj.boolean = t.text == "true";
      } else if (t.text == "null") {
        out.obj.kind = Object::Kind::Null;
      } else {
        out.is_keyword = true;
        out.keyword = t.text;
      }
      return out;
  }
  return out;
}

const Object kNull{};

const Object& dict_get(const Object& dict_obj, const std::string& key) {
  if (!dict_obj.is(Object::Kind::Dict) && !dict_obj.is(Object::Kind::Stream)) return kNull;
  const Dict& d = dict_obj.is(Object::Kind::Dict) ? *dict_obj.dict : dict_obj.stream->dict;
  auto it = d.find(key);
  return it == d.end() ? kNull : it->second;
}

// ---------------------------------------------------------------------------
// Filters

std::string lzw_decode(std::string_view data, int early_change) {
  std::string out;
  std::vector<std::string> table;
  auto reset = [&] {
    table.clear();
    for (int i = 0; i < 256; ++i) table.emplace_back(1, static_cast<char>(i));
    table.emplace_back();  // 256 clear
    table.emplace_back();  // 257 eod
  };
  reset();
  int code_len = 9;
  std::uint32_t bitbuf = 0;
  int bitcount = 0;
  std::string prev;
  bool have_prev = false;
  for (unsigned char byte : data) {
    bitbuf = (bitbuf << 8) | byte;
    bitcount += 8;
    while (bitcount >= code_len) {
      int code = static_cast<int>((bitbuf >> (bitcount - code_len)) & ((1u << code_len) - 1));
      bitcount -= code_len;
      if (code == 256) {
        reset();
        code_len = 9;
        have_prev = false;
        continue;
      }
      if (code == 257) return out;
      std::string entry;
      if (code < static_cast<int>(table.size()) && (code < 256 || code > 257)) {
        entry = table[static_cast<std::size_t>(code)];
      } else if (code == static_cast<int>(table.size()) && have_prev) {
        entry = prev + prev[0];
      } else {
        return out;
      }
      out += entry;
      if (have_prev) table.push_back(prev + entry[0]);
      prev = entry;
      have_prev = true;
      int size = static_cast<int>(table.size()) + early_change;
      if (size >= 4096) {
        code_len = 12;
      } else if (size >= 2048) {
        code_len = 12;
      } else if (size >= 1024) {
        code_len = 11;
      } else if (size >= 512) {
        code_len = 10;
      }
    }
  }
  return out;
}

std::string run_length_decode(std::string_view data) {
  std::string out;
  std::size_t i = 0;
  while (i < data.size()) {
    int len = static_cast<unsigned char>(data[i++]);
    if (len == 128) break;
    if (len < 128) {
      std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(len) + 1, data.size() - i);
      out.append(data.substr(i, n));
      i += n;
    } else if (i < data.size()) {
      out.append(static_cast<std::size_t>(257 - len), data[i++]);
    }
  }
  return out;
}

std::string apply_predictor(const std::string& data, const Object& parms) {
  const Object& pred = dict_get(parms, "Predictor");
  int predictor = pred.is(Object::Kind::Number) ? static_cast<int>(pred.number) : 1;
  if (predictor < 2) return data;
  auto num = [&](const char* key, int def) {
    const Object& o = dict_get(parms, key);
    return o.is(Object::Kind::Number) ? static_cast<int>(o.number) : def;
  };
  int colors = num("Colors", 1), bpc = num("BitsPerComponent", 8), columns = num("Columns", 1);
  int bpp = std::max(1, (colors * bpc + 7) / 8);
  int row_len = (colors * bpc * columns + 7) / 8;
  if (row_len <= 0) return data;
  std::string out;
  if (predictor == 2) {
    if (bpc != 8) return data;
    out = data;
    for (std::size_t r = 0; r + static_cast<std::size_t>(row_len) <= out.size(); r += static_cast<std::size_t>(row_len))
      for (int i = bpp; i < row_len; ++i)
        out[r + static_cast<std::size_t>(i)] = static_cast<char>(out[r + static_cast<std::size_t>(i)] + out[r + static_cast<std::size_t>(i - bpp)]);
    return out;
  }
  std::vector<unsigned char> prev(static_cast<std::size_t>(row_len), 0), cur(static_cast<std::size_t>(row_len));
  std::size_t pos = 0;
  while (pos + 1 + static_cast<std::size_t>(row_len) <= data.size()) {
    int type = static_cast<unsigned char>(data[pos]);
    for (int i = 0; i < row_len; ++i) cur[static_cast<std::size_t>(i)] = static_cast<unsigned char>(data[pos + 1 + static_cast<std::size_t>(i)]);
    for (int i = 0; i < row_len; ++i) {
      auto ui = static_cast<std::size_t>(i);
      int left = i >= bpp ? cur[ui - static_cast<std::size_t>(bpp)] : 0;
      int up = prev[ui];
      int upleft = i >= bpp ? prev[ui - static_cast<std::size_t>(bpp)] : 0;
      int v = cur[ui];
      switch (type) {
        case 1: v += left; break;
        case 2: v += up; break;
        case 3: v += (left + up) / 2; break;
        case 4: {
          int p = left + up - upleft;
          int pa = std::abs(p - left), pb = std::abs(p - up), pc = std::abs(p - upleft);
          v += (pa <= pb && pa <= pc) ? left : (pb <= pc ? up : upleft);
          break;
        }
        default: break;
      }
      cur[ui] = static_cast<unsigned char>(v & 0xFF);
    }
    out.append(reinterpret_cast<const char*>(cur.data()), cur.size());
    prev = cur;
    pos += 1 + static_cast<std::size_t>(row_len);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Glyph names and encodings

const std::unordered_map<std::string, std::string>& glyph_names() {
  static const std::unordered_map<std::string, std::string> names = {
      {"space", " "}, {"exclam", "!"}, {"quotedbl", "\""}, {"numbersign", "#"},
      {"dollar", "$"}, {"percent", "%"}, {"ampersand", "&"}, {"quotesingle", "'"},
      {"quoteright", "\xE2\x80\x99"}, {"quoteleft", "\xE2\x80\x98"}, {"parenleft", "("},
      {"parenright", ")"}, {"asterisk", "*"}, {"plus", "+"}, {"comma", ","},
      {"hyphen", "-"}, {"minus", "-"}, {"period", "."}, {"slash", "/"}, {"zero", "0"},
      {"one", "1"}, {"two", "2"}, {"three", "3"}, {"four", "4"}, {"five", "5"},
      {"six", "6"}, {"seven", "7"}, {"eight", "8"}, {"nine", "9"}, {"colon", ":"},
      {"semicolon", ";"}, {"less", "<"}, {"equal", "="}, {"greater", ">"},
      {"question", "?"}, {"at", "@"}, {"bracketleft", "["}, {"backslash", "\\"},
      {"bracketright", "]"}, {"asciicircum", "^"}, {"underscore", "_"}, {"grave", "`"},
      {"braceleft", "{"}, {"bar", "|"}, {"braceright", "}"}, {"asciitilde", "~"},
      {"fi", "fi"}, {"fl", "fl"}, {"ff", "ff"}, {"ffi", "ffi"}, {"ffl", "ffl"},
      {"endash", "\xE2\x80\x93"}, {"emdash", "\xE2\x80\x94"}, {"bullet", "\xE2\x80\xA2"},
      {"quotedblleft", "\xE2\x80\x9C"}, {"quotedblright", "\xE2\x80\x9D"},
      {"ellipsis", "..."}, {"dotlessi", "i"}, {"germandbls", "ss"}, {"degree", "\xC2\xB0"},
      {"periodcentered", "\xC2\xB7"}, {"multiply", "\xC3\x97"}, {"section", "\xC2\xA7"},
  };
  return names;
}

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
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string glyph_to_utf8(const std::string& name) {
  const auto& names = glyph_names();
  if (auto it = names.find(name); it != names.end()) return it->second;
  if (name.size() == 1) return name;
  auto hex_cp = [](std::string_view h) -> std::optional<std::uint32_t> {
    if (h.empty() || h.size() > 6) return std::nullopt;
    std::uint32_t v = 0;
    for (char c : h) {
      int d = hex_value(c);
      if (d < 0) return std::nullopt;
      v = v * 16 + static_cast<std::uint32_t>(d);
    }
    return v;
  };
  std::string out;
  if (name.rfind("uni", 0) == 0 && name.size() >= 7) {
    if (auto cp = hex_cp(std::string_view(name).substr(3, 4))) append_utf8(out, *cp);
  } else if (name.rfind("u", 0) == 0 && name.size() >= 5) {
    if (auto cp = hex_cp(std::string_view(name).substr(1))) append_utf8(out, *cp);
  }
  return out;
}

std::string utf16be_to_utf8(std::string_view bytes) {
  std::string out;
  for (std::size_t i = 0; i + 1 < bytes.size(); i += 2) {
    std::uint32_t u = (static_cast<unsigned char>(bytes[i]) << 8) | static_cast<unsigned char>(bytes[i + 1]);
    if (u >= 0xD800 && u <= 0xDBFF && i + 3 < bytes.size()) {
      std::uint32_t lo = (static_cast<unsigned char>(bytes[i + 2]) << 8) | static_cast<unsigned char>(bytes[i + 3]);
      u = 0x10000 + ((u - 0xD800) << 10) + (lo - 0xDC00);
      i += 2;
    }
    append_utf8(out, u);
  }
  return out;
}

std::uint32_t bytes_to_code(std::string_view b) {
  std::uint32_t v = 0;
  for (unsigned char c : b) v = (v << 8) | c;
  return v;
}

struct FontInfo {
  bool two_byte = false;
  bool bold = false;
  std::unordered_map<std::uint32_t, std::string> to_unicode;
  std::array<std::string, 256> simple;
  std::unordered_map<std::uint32_t, double> widths;  // thousandths of an em
  double default_width = 500.0;

  std::string decode(std::string_view bytes) const {
    std::string out;
    std::size_t step = two_byte ? 2 : 1;
    for (std::size_t i = 0; i + step <= bytes.size(); i += step) {
      auto code = bytes_to_code(bytes.substr(i, step));
      if (auto it = to_unicode.find(code); it != to_unicode.end()) {
        out += it->second;
      } else if (!two_byte) {
        out += simple[code & 0xFF];
      }
    }
    return out;
  }

  double advance(std::string_view bytes, double char_spacing, double word_spacing, double size) const {
    std::size_t step = two_byte ? 2 : 1;
    double total = 0.0;
    for (std::size_t i = 0; i + step <= bytes.size(); i += step) {
      auto code = bytes_to_code(bytes.substr(i, step));
      auto it = widths.find(code);
      double w = it == widths.end() ? default_width : it->second;
      total += w / 1000.0 * size + char_spacing;
      if (!two_byte && code == 32) total += word_spacing;
    }
    return total;
  }
};

void fill_base_encoding(FontInfo& f) {
  for (int c = 0; c < 256; ++c) {
    if (c >= 32 && c < 127) {
      f.simple[static_cast<std::size_t>(c)] = std::string(1, static_cast<char>(c));
    } else if (c >= 160) {
      std::string s;
      append_utf8(s, static_cast<std::uint32_t>(c));
      f.simple[static_cast<std::size_t>(c)] = s;
    }
  }
  f.simple[0x91] = "\xE2\x80\x98";
  f.simple[0x92] = "\xE2\x80\x99";
  f.simple[0x93] = "\xE2\x80\x9C";
  f.simple[0x94] = "\xE2\x80\x9D";
  f.simple[0x95] = "\xE2\x80\xA2";
  f.simple[0x96] = "\xE2\x80\x93";
  f.simple[0x97] = "\xE2\x80\x94";
}

void parse_cmap(const std::string& cmap, FontInfo& font) {
  Lexer lex(cmap);
  std::vector<Object> operands;
  while (true) {
    auto p = parse_next(lex);
    if (p.eof) break;
    if (!p.is_keyword) {
      operands.push_back(std::move(p.obj));
      if (operands.size() > 4096) operands.erase(operands.begin(), operands.begin() + 2048);
      continue;
    }
    const std::string& op = p.keyword;
    if (op == "begincodespacerange") {
      operands.clear();
    } else if (op == "endcodespacerange") {
      if (!operands.empty() && operands[0].is(Object::Kind::String) && operands[0].str.size() == 2)
        font.two_byte = true;
      operands.clear();
    } else if (op == "beginbfchar" || op == "beginbfrange") {
      operands.clear();
    } else if (op == "endbfchar") {
      for (std::size_t i = 0; i + 1 < operands.size(); i += 2) {
        if (!operands[i].is(Object::Kind::String) || !operands[i + 1].is(Object::Kind::String)) continue;
        font.to_unicode[bytes_to_code(operands[i].str)] = utf16be_to_utf8(operands[i + 1].str);
      }
      operands.clear();
    } else if (op == "endbfrange") {
      for (std::size_t i = 0; i + 2 < operands.size(); i += 3) {
        const auto& lo = operands[i];
        const auto& hi = operands[i + 1];
        const auto& dst = operands[i + 2];
        if (!lo.is(Object::Kind::String) || !hi.is(Object::Kind::String)) continue;
        auto a = bytes_to_code(lo.str), b = bytes_to_code(hi.str);
        if (b < a || b - a > 65535) continue;
        if (dst.is(Object::Kind::String)) {
          std::string base = dst.str;
          for (std::uint32_t c = a; c <= b; ++c) {
            font.to_unicode[c] = utf16be_to_utf8(base);
            if (!base.empty()) base.back() = static_cast<char>(base.back() + 1);
          }
        } else if (dst.is(Object::Kind::Array)) {
          for (std::uint32_t c = a; c <= b && c - a < dst.array->size(); ++c) {
            const auto& item = (*dst.array)[c - a];
            if (item.is(Object::Kind::String)) font.to_unicode[c] = utf16be_to_utf8(item.str);
          }
        }
      }
      operands.clear();
    } else {
      operands.clear();
    }
  }
}

cv::Point2d apply(const Matrix& m, double x, double y) {
  return {m[0] * x + m[2] * y + m[4], m[1] * x + m[3] * y + m[5]};
}

}  // namespace

// ---------------------------------------------------------------------------

Matrix multiply(const Matrix& l, const Matrix& r) {
  return {l[0] * r[0] + l[1] * r[2],        l[0] * r[1] + l[1] * r[3],
          l[2] * r[0] + l[3] * r[2],        l[2] * r[1] + l[3] * r[3],
          l[4] * r[0] + l[5] * r[2] + r[4], l[4] * r[1] + l[5] * r[3] + r[5]};
}

std::string inflate(std::string_view data) {
  auto run = [&](int window_bits, bool& ok) {
    z_stream zs{};
    std::string out;
    ok = inflateInit2(&zs, window_bits) == Z_OK;
    if (!ok) return out;
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    char buf[65536];
    int ret = Z_OK;
    while (ret == Z_OK) {
      zs.next_out = reinterpret_cast<Bytef*>(buf);
      zs.avail_out = sizeof(buf);
      ret = ::inflate(&zs, Z_NO_FLUSH);
      out.append(buf, sizeof(buf) - zs.avail_out);
      if (ret == Z_BUF_ERROR && zs.avail_in == 0) break;
    }
    ok = ret == Z_STREAM_END || !out.empty();
    inflateEnd(&zs);
    return out;
  };
  bool ok = false;
  auto out = run(15, ok);
  if (ok) return out;
  return run(-15, ok);
}

std::string ascii85_decode(std::string_view data) {
  std::string out;
  std::uint32_t tuple = 0;
  int count = 0;
  std::size_t i = 0;
  if (data.substr(0, 2) == "<~") i = 2;
  for (; i < data.size(); ++i) {
    char c = data[i];
    if (is_white(c)) continue;
    if (c == '~') break;
    if (c == 'z' && count == 0) {
      out.append(4, '\0');
      continue;
    }
    if (c < '!' || c > 'u') continue;
    tuple = tuple * 85 + static_cast<std::uint32_t>(c - '!');
    if (++count == 5) {
      for (int k = 3; k >= 0; --k) out.push_back(static_cast<char>((tuple >> (8 * k)) & 0xFF));
      tuple = 0;
      count = 0;
    }
  }
  if (count > 1) {
    for (int k = count; k < 5; ++k) tuple = tuple * 85 + 84;
    for (int k = 0; k < count - 1; ++k) out.push_back(static_cast<char>((tuple >> (8 * (3 - k))) & 0xFF));
  }
  return out;
}

std::string ascii_hex_decode(std::string_view data) {
  std::string out;
  int hi = -1;
  for (char c : data) {
    if (c == '>') break;
    int v = hex_value(c);
    if (v < 0) continue;
    if (hi < 0) {
      hi = v;
    } else {
      out.push_back(static_cast<char>(hi * 16 + v));
      hi = -1;
    }
  }
  if (hi >= 0) out.push_back(static_cast<char>(hi * 16));
  return out;
}

Object parse_object_text(std::string_view text) {
  Lexer lex(text);
  return parse_next(lex).obj;
}

// ---------------------------------------------------------------------------
// Document

struct Document::Impl {
  std::string bytes;
  std::unordered_map<int, Object> objects;
  Object trailer;
  mutable std::unordered_map<int, std::shared_ptr<FontInfo>> font_cache;

  const Object& resolve(const Object& o, int depth = 0) const {
    if (!o.is(Object::Kind::Ref) || depth > 32) return o;
    auto it = objects.find(o.ref.num);
    if (it == objects.end()) return kNull;
    return resolve(it->second, depth + 1);
  }

  const Object& get(const Object& dict, const std::string& key) const {
    return resolve(dict_get(resolve(dict), key));
  }

  double number(const Object& dict, const std::string& key, double def) const {
    const Object& o = get(dict, key);
    return o.is(Object::Kind::Number) ? o.number : def;
  }

  std::string decode(const Stream& s, std::string* stopped_at = nullptr) const {
    std::vector<std::string> filters;
    std::vector<Object> parms;
    const Object& f = resolve(s.dict.count("Filter") ? s.dict.at("Filter") : kNull);
    const Object& p = resolve(s.dict.count("DecodeParms") ? s.dict.at("DecodeParms") : kNull);
    if (f.is(Object::Kind::Name)) {
      filters.push_back(f.str);
      parms.push_back(p);
    } else if (f.is(Object::Kind::Array)) {
      for (std::size_t i = 0; i < f.array->size(); ++i) {
        const Object& fi = resolve((*f.array)[i]);
        if (fi.is(Object::Kind::Name)) filters.push_back(fi.str);
        if (p.is(Object::Kind::Array) && i < p.array->size()) {
          parms.push_back(resolve((*p.array)[i]));
        } else {
          parms.push_back(kNull);
        }
      }
    }
    std::string data = s.raw;
    for (std::size_t i = 0; i < filters.size(); ++i) {
      const auto& name = filters[i];
      if (name == "FlateDecode" || name == "Fl") {
        data = apply_predictor(inflate(data), parms[i]);
      } else if (name == "ASCII85Decode" || name == "A85") {
        data = ascii85_decode(data);
      } else if (name == "ASCIIHexDecode" || name == "AHx") {
        data = ascii_hex_decode(data);
      } else if (name == "LZWDecode" || name == "LZW") {
        const Object& ec = dict_get(parms[i], "EarlyChange");
        data = apply_predictor(lzw_decode(data, ec.is(Object::Kind::Number) ? static_cast<int>(ec.number) : 1),
                               parms[i]);
      } else if (name == "RunLengthDecode" || name == "RL") {
        data = run_length_decode(data);
      } else {
        if (stopped_at) *stopped_at = name;
        return data;
      }
    }
    if (stopped_at) stopped_at->clear();
    return data;
  }

  void scan_objects() {
    const std::string_view d = bytes;
    std::size_t pos = 0;
    while (true) {
      std::size_t hit = d.find("obj", pos);
      if (hit == std::string_view::npos) break;
      pos = hit + 3;
      if (hit + 3 < d.size() && is_regular(d[hit + 3])) continue;
      // Walk back over "<num> <gen> ".
      std::size_t j = hit;
      auto back_space = [&] {
        std::size_t n = 0;
        while (j > 0 && is_white(d[j - 1])) --j, ++n;
        return n;
      };
      auto back_digits = [&] {
        std::size_t end = j;
        while (j > 0 && std::isdigit(static_cast<unsigned char>(d[j - 1]))) --j;
        return end - j;
      };
      if (back_space() == 0) continue;
      std::size_t gen_end = j;
      if (back_digits() == 0) continue;
      std::size_t gen_start = j;
      if (back_space() == 0) continue;
      std::size_t num_end = j;
      if (back_digits() == 0) continue;
      if (j > 0 && is_regular(d[j - 1])) continue;
      int num = std::atoi(std::string(d.substr(j, num_end - j)).c_str());
      (void)gen_start;
      (void)gen_end;

      Lexer lex(d, hit + 3);
      Parsed parsed;
      try {
        parsed = parse_next(lex);
      } catch (const Error&) {
        continue;
      }
      if (parsed.eof || parsed.is_keyword) continue;
      Object obj = std::move(parsed.obj);
      std::size_t after = lex.pos();
      Lexer peek(d, after);
      Token t = peek.next();
      if (t.type == Tok::Keyword && t.text == "stream" && obj.is(Object::Kind::Dict)) {
        std::size_t data_start = peek.pos();
        if (data_start < d.size() && d[data_start] == '\r') ++data_start;
        if (data_start < d.size() && d[data_start] == '\n') ++data_start;
        std::size_t data_end = std::string_view::npos;
        auto len_it = obj.dict->find("Length");
        if (len_it != obj.dict->end() && len_it->second.is(Object::Kind::Number)) {
          auto len = static_cast<std::size_t>(len_it->second.number);
          std::size_t probe = data_start + len;
          if (probe <= d.size()) {
            Lexer check(d, probe);
            Token e = check.next();
            if (e.type == Tok::Keyword && e.text.rfind("endstream", 0) == 0) data_end = probe;
          }
        }
        if (data_end == std::string_view::npos) {
          std::size_t es = d.find("endstream", data_start);
          if (es == std::string_view::npos) continue;
          data_end = es;
          while (data_end > data_start && (d[data_end - 1] == '\n' || d[data_end - 1] == '\r')) --data_end;
        }
        auto stream = std::make_shared<Stream>();
        stream->dict = *obj.dict;
        stream->raw = std::string(d.substr(data_start, data_end - data_start));
        Object so;
        so.kind = Object::Kind::Stream;
        so.stream = std::move(stream);
        objects[num] = std::move(so);
        pos = std::max(pos, data_end);
      } else {
        objects[num] = std::move(obj);
        pos = std::max(pos, after);
      }
    }
  }

  void expand_object_streams() {
    std::vector<int> containers;
    for (const auto& [num, obj] : objects)
      if (obj.is(Object::Kind::Stream) && dict_get(obj, "Type").is_name("ObjStm")) containers.push_back(num);
    std::sort(containers.begin(), containers.end());
    for (int num : containers) {
      const Object& obj = objects.at(num);
      std::string data = decode(*obj.stream);
      int n = static_cast<int>(number(obj, "N", 0));
      auto first = static_cast<std::size_t>(number(obj, "First", 0));
      Lexer header(data);
      std::vector<std::pair<int, std::size_t>> entries;
      for (int i = 0; i < n; ++i) {
        Token a = header.next(), b = header.next();
        if (a.type != Tok::Number || b.type != Tok::Number) break;
        entries.emplace_back(static_cast<int>(a.number), static_cast<std::size_t>(b.number));
      }
      for (const auto& [onum, off] : entries) {
        if (objects.count(onum) || first + off >= data.size()) continue;
        Lexer lex(data, first + off);
        try {
          auto p = parse_next(lex);
          if (!p.eof && !p.is_keyword) objects[onum] = std::move(p.obj);
        } catch (const Error&) {
        }
      }
    }
  }

  void find_trailer() {
    const std::string_view d = bytes;
    std::size_t pos = d.rfind("trailer");
    while (pos != std::string_view::npos) {
      Lexer lex(d, pos + 7);
      auto p = parse_next(lex);
      if (p.obj.is(Object::Kind::Dict) && p.obj.dict->count("Root")) {
        trailer = p.obj;
        return;
      }
      if (pos == 0) break;
      pos = d.rfind("trailer", pos - 1);
    }
    for (const auto& [num, obj] : objects) {
      if (obj.is(Object::Kind::Stream) && dict_get(obj, "Type").is_name("XRef") &&
          obj.stream->dict.count("Root")) {
        trailer.kind = Object::Kind::Dict;
        trailer.dict = std::make_shared<Dict>(obj.stream->dict);
        return;
      }
    }
    for (const auto& [num, obj] : objects) {
      if (dict_get(obj, "Type").is_name("Catalog")) {
        trailer.kind = Object::Kind::Dict;
        trailer.dict = std::make_shared<Dict>();
        Object ref;
        ref.kind = Object::Kind::Ref;
        ref.ref = Ref{num, 0};
        (*trailer.dict)["Root"] = ref;
        return;
      }
    }
  }

  std::shared_ptr<FontInfo> font_for(const Object& font_ref) const {
    int key = font_ref.is(Object::Kind::Ref) ? font_ref.ref.num : -1;
    if (key >= 0) {
      if (auto it = font_cache.find(key); it != font_cache.end()) return it->second;
    }
    auto font = std::make_shared<FontInfo>();
    const Object& fd = resolve(font_ref);
    const Object& subtype = get(fd, "Subtype");
    const Object& base = get(fd, "BaseFont");
    if (base.is(Object::Kind::Name)) {
      const std::string& n = base.str;
      for (const char* marker : {"Bold", "bold", "Black", "Heavy", "Semibold", "Demi", "CMBX", "BX"})
        if (n.find(marker) != std::string::npos) font->bold = true;
    }
    if (subtype.is_name("Type0")) {
      font->two_byte = true;
      font->default_width = 1000.0;
      const Object& desc = get(fd, "DescendantFonts");
      if (desc.is(Object::Kind::Array) && !desc.array->empty()) {
        const Object& cid = resolve((*desc.array)[0]);
        font->default_width = number(cid, "DW", 1000.0);
        const Object& w = get(cid, "W");
        if (w.is(Object::Kind::Array)) {
          const auto& arr = *w.array;
          for (std::size_t i = 0; i < arr.size();) {
            const Object& a = resolve(arr[i]);
            if (i + 1 >= arr.size() || !a.is(Object::Kind::Number)) break;
            const Object& b = resolve(arr[i + 1]);
            if (b.is(Object::Kind::Array)) {
              auto c = static_cast<std::uint32_t>(a.number);
              for (const auto& wv : *b.array) {
                const Object& rw = resolve(wv);
                if (rw.is(Object::Kind::Number)) font->widths[c] = rw.number;
                ++c;
              }
              i += 2;
            } else if (i + 2 < arr.size()) {
              const Object& wv = resolve(arr[i + 2]);
              for (auto c = static_cast<std::uint32_t>(a.number); c <= static_cast<std::uint32_t>(b.number) && c - static_cast<std::uint32_t>(a.number) < 65536; ++c)
                if (wv.is(Object::Kind::Number)) font->widths[c] = wv.number;
              i += 3;
            } else {
              break;
            }
          }
        }
      }
    } else {
      fill_base_encoding(*font);
      const Object& enc = get(fd, "Encoding");
      if (enc.is(Object::Kind::Dict)) {
        const Object& diffs = get(enc, "Differences");
        if (diffs.is(Object::Kind::Array)) {
          int code = 0;
          for (const auto& item : *diffs.array) {
            const Object& r = resolve(item);
            if (r.is(Object::Kind::Number)) {
              code = static_cast<int>(r.number);
            } else if (r.is(Object::Kind::Name)) {
              if (code >= 0 && code < 256) font->simple[static_cast<std::size_t>(code)] = glyph_to_utf8(r.str);
              ++code;
            }
          }
        }
      }
      const Object& widths = get(fd, "Widths");
      if (widths.is(Object::Kind::Array)) {
        auto first = static_cast<std::uint32_t>(number(fd, "FirstChar", 0));
        for (std::size_t i = 0; i < widths.array->size(); ++i) {
          const Object& w = resolve((*widths.array)[i]);
          if (w.is(Object::Kind::Number)) font->widths[first + static_cast<std::uint32_t>(i)] = w.number;
        }
      }
    }
    const Object& tu = get(fd, "ToUnicode");
    if (tu.is(Object::Kind::Stream)) {
      bool two = font->two_byte;
      parse_cmap(decode(*tu.stream), *font);
      if (subtype.is_name("Type0")) font->two_byte = true;
      if (!subtype.is_name("Type0") && !two) font->two_byte = false;
    }
    if (key >= 0) font_cache[key] = font;
    return font;
  }

  struct Sink {
    std::vector<TextRun>* text = nullptr;
    std::vector<ImagePlacement>* images = nullptr;
  };

  void interpret(const std::string& content, const Object& resources, Matrix ctm, int page, Sink& sink,
                 int depth) const {
    if (depth > 8) return;
    struct GState {
      Matrix ctm;
    };
    std::vector<GState> stack;
    GState gs{ctm};
    Matrix tm = kIdentity, tlm = kIdentity;
    double font_size = 0.0, leading = 0.0, char_spacing = 0.0, word_spacing = 0.0, hscale = 1.0, rise = 0.0;
    std::shared_ptr<FontInfo> font;
    std::vector<Object> ops;

    auto num_at = [&](std::size_t i) {
      return i < ops.size() && ops[i].is(Object::Kind::Number) ? ops[i].number : 0.0;
    };
    auto show = [&](std::string_view bytes, std::string prefix_text = {}) {
      if (!font) font = std::make_shared<FontInfo>();
      Matrix trm = multiply(Matrix{font_size * hscale, 0, 0, font_size, 0, rise}, multiply(tm, gs.ctm));
      double adv = font->advance(bytes, char_spacing, word_spacing, font_size) * hscale;
      if (sink.text) {
        TextRun run;
        run.page = page;
        run.x = trm[4];
        run.y = trm[5];
        Matrix tmc = multiply(tm, gs.ctm);
        run.font_size = font_size * std::hypot(tmc[2], tmc[3]);
        run.width = adv * std::hypot(tmc[0], tmc[1]);
        run.bold = font->bold;
        run.text = prefix_text + font->decode(bytes);
        if (!run.text.empty()) sink.text->push_back(std::move(run));
      }
      tm = multiply(Matrix{1, 0, 0, 1, adv, 0}, tm);
    };
    auto newline = [&](double tx, double ty) {
      tlm = multiply(Matrix{1, 0, 0, 1, tx, ty}, tlm);
      tm = tlm;
    };

    Lexer lex(content);
    while (true) {
      Parsed p;
      try {
        p = parse_next(lex);
      } catch (const Error&) {
        break;
      }
      if (p.eof) break;
      if (!p.is_keyword) {
        ops.push_back(std::move(p.obj));
        continue;
      }
      const std::string& op = p.keyword;
      if (op == "q") {
        stack.push_back(gs);
      } else if (op == "Q") {
        if (!stack.empty()) {
          gs = stack.back();
          stack.pop_back();
        }
      } else if (op == "cm" && ops.size() >= 6) {
        Matrix m{num_at(0), num_at(1), num_at(2), num_at(3), num_at(4), num_at(5)};
        gs.ctm = multiply(m, gs.ctm);
      } else if (op == "BT") {
        tm = tlm = kIdentity;
      } else if (op == "Tf" && ops.size() >= 2) {
        font_size = num_at(1);
        const Object& fonts = get(resources, "Font");
        if (ops[0].is(Object::Kind::Name)) font = font_for(dict_get(fonts, ops[0].str));
      } else if (op == "Td" && ops.size() >= 2) {
        newline(num_at(0), num_at(1));
      } else if (op == "TD" && ops.size() >= 2) {
        leading = -num_at(1);
        newline(num_at(0), num_at(1));
      } else if (op == "Tm" && ops.size() >= 6) {
        tlm = tm = Matrix{num_at(0), num_at(1), num_at(2), num_at(3), num_at(4), num_at(5)};
      } else if (op == "T*") {
        newline(0, -leading);
      } else if (op == "TL") {
        leading = num_at(0);
      } else if (op == "Tc") {
        char_spacing = num_at(0);
      } else if (op == "Tw") {
        word_spacing = num_at(0);
      } else if (op == "Tz") {
        hscale = num_at(0) / 100.0;
      } else if (op == "Ts") {
        rise = num_at(0);
      } else if (op == "Tj" && !ops.empty() && ops.back().is(Object::Kind::String)) {
        show(ops.back().str);
      } else if (op == "'" && !ops.empty() && ops.back().is(Object::Kind::String)) {
        newline(0, -leading);
        show(ops.back().str);
      } else if (op == "\"" && ops.size() >= 3 && ops[2].is(Object::Kind::String)) {
        word_spacing = num_at(0);
        char_spacing = num_at(1);
        newline(0, -leading);
        show(ops[2].str);
      } else if (op == "TJ" && !ops.empty() && ops.back().is(Object::Kind::Array)) {
        // Merge the array into one run; large negative kerns become spaces.
        if (!font) font = std::make_shared<FontInfo>();
        Matrix start_tm = tm;
        std::string bytes_text;
        double total = 0.0;
        for (const auto& item : *ops.back().array) {
          if (item.is(Object::Kind::String)) {
            bytes_text += font->decode(item.str);
            total += font->advance(item.str, char_spacing, word_spacing, font_size) * hscale;
          } else if (item.is(Object::Kind::Number)) {
            if (item.number < -180 && !bytes_text.empty() && bytes_text.back() != ' ') bytes_text += ' ';
            total += -item.number / 1000.0 * font_size * hscale;
          }
        }
        Matrix trm = multiply(Matrix{font_size * hscale, 0, 0, font_size, 0, rise}, multiply(start_tm, gs.ctm));
        if (sink.text && !bytes_text.empty()) {
          Matrix tmc = multiply(start_tm, gs.ctm);
          TextRun run;
          run.page = page;
          run.x = trm[4];
          run.y = trm[5];
          run.font_size = font_size * std::hypot(tmc[2], tmc[3]);
          run.width = total * std::hypot(tmc[0], tmc[1]);
          run.bold = font->bold;
          run.text = bytes_text;
          sink.text->push_back(std::move(run));
        }
        tm = multiply(Matrix{1, 0, 0, 1, total, 0}, start_tm);
      } else if (op == "Do" && !ops.empty() && ops.back().is(Object::Kind::Name)) {
        const Object& xobjects = get(resources, "XObject");
        const Object& ref = dict_get(xobjects, ops.back().str);
        const Object& xo = resolve(ref);
        if (xo.is(Object::Kind::Stream)) {
          const Object& st = get(xo, "Subtype");
          if (st.is_name("Image")) {
            if (sink.images) {
              ImagePlacement pl;
              pl.page = page;
              pl.object_num = ref.is(Object::Kind::Ref) ? ref.ref.num : -1;
              pl.ctm = gs.ctm;
              auto c0 = apply(gs.ctm, 0, 0), c1 = apply(gs.ctm, 1, 0), c2 = apply(gs.ctm, 0, 1),
                   c3 = apply(gs.ctm, 1, 1);
              pl.x0 = std::min({c0.x, c1.x, c2.x, c3.x});
              pl.x1 = std::max({c0.x, c1.x, c2.x, c3.x});
              pl.y0 = std::min({c0.y, c1.y, c2.y, c3.y});
              pl.y1 = std::max({c0.y, c1.y, c2.y, c3.y});
              sink.images->push_back(pl);
            }
          } else if (st.is_name("Form")) {
            Matrix fm = kIdentity;
            const Object& m = get(xo, "Matrix");
            if (m.is(Object::Kind::Array) && m.array->size() == 6) {
              for (std::size_t i = 0; i < 6; ++i) {
                const Object& v = resolve((*m.array)[i]);
                fm[i] = v.is(Object::Kind::Number) ? v.number : fm[i];
              }
            }
            const Object& fres = get(xo, "Resources");
            interpret(decode(*xo.stream), fres.is(Object::Kind::Dict) ? fres : resources,
                      multiply(fm, gs.ctm), page, sink, depth + 1);
          }
        }
      } else if (op == "BI") {
        // Inline image: skip the dictionary and binary payload up to EI.
        std::size_t id = content.find("ID", lex.pos());
        if (id == std::string::npos) break;
        std::size_t search = id + 3;
        while (true) {
          std::size_t ei = content.find("EI", search);
          if (ei == std::string::npos) {
            lex.seek(content.size());
            break;
          }
          bool before = ei > 0 && is_white(content[ei - 1]);
          bool after = ei + 2 >= content.size() || is_white(content[ei + 2]);
          if (before && after) {
            lex.seek(ei + 2);
            break;
          }
          search = ei + 2;
        }
      }
      ops.clear();
    }
  }

  std::string page_content(const Object& page) const {
    const Object& contents = get(page, "Contents");
    std::string out;
    if (contents.is(Object::Kind::Stream)) {
      out = decode(*contents.stream);
    } else if (contents.is(Object::Kind::Array)) {
      for (const auto& c : *contents.array) {
        const Object& s = resolve(c);
        if (s.is(Object::Kind::Stream)) {
          out += decode(*s.stream);
          out += '\n';
        }
      }
    }
    return out;
  }
};

const Object& Document::resolve(const Object& obj) const { return impl_->resolve(obj); }

std::string Document::decode_stream(const Stream& stream) const { return impl_->decode(stream); }

Document Document::parse(std::string bytes) {
  if (bytes.find("%PDF-") == std::string::npos) raise(ErrorCode::ParseError, "missing %PDF header");
  Document doc;
  doc.impl_ = std::make_shared<Impl>();
  auto& impl = *doc.impl_;
  impl.bytes = std::move(bytes);
  impl.scan_objects();
  impl.expand_object_streams();
  impl.find_trailer();
  const Object& root = impl.get(impl.trailer, "Root");
  const Object& pages_root = impl.get(root, "Pages");
  if (!pages_root.is(Object::Kind::Dict)) raise(ErrorCode::ParseError, "no page tree");

  struct Inherit {
    Object resources;
    PageInfo box;
  };
  std::set<const void*> seen;
  std::function<void(const Object&, Inherit, int)> walk = [&](const Object& node, Inherit inh, int depth) {
    if (depth > 64 || !node.is(Object::Kind::Dict) || !seen.insert(node.dict.get()).second) return;
    const Object& res = impl.get(node, "Resources");
    if (res.is(Object::Kind::Dict)) inh.resources = res;
    const Object& mb = impl.get(node, "MediaBox");
    if (mb.is(Object::Kind::Array) && mb.array->size() == 4) {
      double v[4];
      for (std::size_t i = 0; i < 4; ++i) {
        const Object& x = impl.resolve((*mb.array)[i]);
        v[i] = x.is(Object::Kind::Number) ? x.number : 0.0;
      }
      inh.box = PageInfo{std::min(v[0], v[2]), std::min(v[1], v[3]), std::max(v[0], v[2]), std::max(v[1], v[3])};
    }
    const Object& kids = impl.get(node, "Kids");
    if (kids.is(Object::Kind::Array)) {
      for (const auto& k : *kids.array) walk(impl.resolve(k), inh, depth + 1);
      return;
    }
    Object page = node;
    auto copy = std::make_shared<Dict>(*node.dict);
    if (inh.resources.is(Object::Kind::Dict)) (*copy)["Resources"] = inh.resources;
    page.dict = copy;
    doc.pages_.push_back(page);
    doc.page_infos_.push_back(inh.box);
  };
  walk(pages_root, Inherit{}, 0);
  if (doc.pages_.empty()) raise(ErrorCode::ParseError, "page tree has no pages");
  return doc;
}

std::vector<TextRun> Document::text_runs(std::size_t page) const {
  std::vector<TextRun> runs;
  Impl::Sink sink{&runs, nullptr};
  const Object& p = pages_.at(page);
  impl_->interpret(impl_->page_content(p), impl_->get(p, "Resources"), kIdentity, static_cast<int>(page), sink, 0);
  return runs;
}

std::vector<ImagePlacement> Document::image_placements(std::size_t page) const {
  std::vector<ImagePlacement> images;
  Impl::Sink sink{nullptr, &images};
  const Object& p = pages_.at(page);
  impl_->interpret(impl_->page_content(p), impl_->get(p, "Resources"), kIdentity, static_cast<int>(page), sink, 0);
  return images;
}

std::optional<std::string> Document::info_title() const {
  const Object& info = impl_->get(impl_->trailer, "Info");
  const Object& title = impl_->get(info, "Title");
  if (!title.is(Object::Kind::String) || title.str.empty()) return std::nullopt;
  if (title.str.size() >= 2 && static_cast<unsigned char>(title.str[0]) == 0xFE &&
      static_cast<unsigned char>(title.str[1]) == 0xFF)
    return utf16be_to_utf8(std::string_view(title.str).substr(2));
  return title.str;
}

cv::Mat Document::decode_image(int object_num) const {
  auto it = impl_->objects.find(object_num);
  if (it == impl_->objects.end() || !it->second.is(Object::Kind::Stream)) return {};
  const Object& obj = it->second;
  if (impl_->get(obj, "ImageMask").is(Object::Kind::Bool) && impl_->get(obj, "ImageMask").boolean) return {};
  std::string stopped;
  std::string data = impl_->decode(*obj.stream, &stopped);
  if (stopped == "DCTDecode" || stopped == "DCT" || stopped == "JPXDecode") {
    std::vector<uchar> buf(data.begin(), data.end());
    cv::Mat img = cv::imdecode(buf, cv::IMREAD_COLOR);
    return img;
  }
  if (!stopped.empty()) return {};

  int w = static_cast<int>(impl_->number(obj, "Width", 0));
  int h = static_cast<int>(impl_->number(obj, "Height", 0));
  int bpc = static_cast<int>(impl_->number(obj, "BitsPerComponent", 8));
  if (w <= 0 || h <= 0) return {};

  const Object& cs = impl_->get(obj, "ColorSpace");
  int comps = 3;
  std::string lookup;
  int base_comps = 3;
  auto comps_of = [&](const Object& c) -> int {
    const Object& r = impl_->resolve(c);
    if (r.is_name("DeviceGray") || r.is_name("CalGray") || r.is_name("G")) return 1;
    if (r.is_name("DeviceCMYK") || r.is_name("CMYK")) return 4;
    if (r.is(Object::Kind::Array) && !r.array->empty()) {
      const Object& fam = impl_->resolve((*r.array)[0]);
      if (fam.is_name("ICCBased") && r.array->size() > 1) {
        return static_cast<int>(impl_->number((*r.array)[1], "N", 3));
      }
      if (fam.is_name("CalGray")) return 1;
    }
    return 3;
  };
  bool indexed = false;
  if (cs.is(Object::Kind::Array) && !cs.array->empty() && impl_->resolve((*cs.array)[0]).is_name("Indexed") &&
      cs.array->size() >= 4) {
    indexed = true;
    comps = 1;
    base_comps = comps_of((*cs.array)[1]);
    const Object& lk = impl_->resolve((*cs.array)[3]);
    lookup = lk.is(Object::Kind::Stream) ? impl_->decode(*lk.stream) : lk.str;
  } else {
    comps = comps_of(cs);
  }
  if (bpc != 8 && !(bpc == 1 && comps == 1)) return {};

  cv::Mat out(h, w, CV_8UC3);
  std::size_t row_bytes = bpc == 8 ? static_cast<std::size_t>(w * comps) : static_cast<std::size_t>((w + 7) / 8);
  if (data.size() < row_bytes * static_cast<std::size_t>(h)) return {};
  for (int y = 0; y < h; ++y) {
    const auto* row = reinterpret_cast<const unsigned char*>(data.data()) + row_bytes * static_cast<std::size_t>(y);
    auto* dst = out.ptr<cv::Vec3b>(y);
    for (int x = 0; x < w; ++x) {
      unsigned r = 0, g = 0, b = 0;
      if (bpc == 1) {
        unsigned bit = (row[x / 8] >> (7 - x % 8)) & 1u;
        unsigned idx = bit;
        if (indexed && lookup.size() >= static_cast<std::size_t>(base_comps) * (idx + 1)) {
          const auto* e = reinterpret_cast<const unsigned char*>(lookup.data()) + idx * static_cast<unsigned>(base_comps);
          r = e[0];
          g = base_comps >= 3 ? e[1] : e[0];
          b = base_comps >= 3 ? e[2] : e[0];
        } else {
          r = g = b = bit ? 255 : 0;
        }
      } else if (indexed) {
        unsigned idx = row[x];
        if (lookup.size() >= static_cast<std::size_t>(base_comps) * (idx + 1)) {
          const auto* e = reinterpret_cast<const unsigned char*>(lookup.data()) + idx * static_cast<unsigned>(base_comps);
          if (base_comps == 1) {
            r = g = b = e[0];
          } else if (base_comps == 4) {
            r = 255 - std::min(255u, static_cast<unsigned>(e[0] + e[3]));
            g = 255 - std::min(255u, static_cast<unsigned>(e[1] + e[3]));
            b = 255 - std::min(255u, static_cast<unsigned>(e[2] + e[3]));
          } else {
            r = e[0];
            g = e[1];
            b = e[2];
          }
        }
      } else if (comps == 1) {
        r = g = b = row[x];
      } else if (comps == 4) {
        const unsigned char* p = row + x * 4;
        r = 255 - std::min(255u, static_cast<unsigned>(p[0] + p[3]));
        g = 255 - std::min(255u, static_cast<unsigned>(p[1] + p[3]));
        b = 255 - std::min(255u, static_cast<unsigned>(p[2] + p[3]));
      } else {
        const unsigned char* p = row + x * comps;
        r = p[0];
        g = p[1];
        b = p[2];
      }
      dst[x] = cv::Vec3b(static_cast<uchar>(b), static_cast<uchar>(g), static_cast<uchar>(r));
    }
  }
  return out;
}

cv::Mat Document::render_page(std::size_t page, int width_px) const {
  const PageInfo& box = page_infos_.at(page);
  const double scale = width_px / std::max(box.width(), 1.0);
  const int height_px = std::max(1, static_cast<int>(std::lround(box.height() * scale)));
  cv::Mat canvas(height_px, width_px, CV_8UC3, cv::Scalar(255, 255, 255));

  std::vector<TextRun> runs;
  std::vector<ImagePlacement> images;
  Impl::Sink sink{&runs, &images};
  const Object& p = pages_.at(page);
  impl_->interpret(impl_->page_content(p), impl_->get(p, "Resources"), kIdentity, static_cast<int>(page), sink, 0);

  std::unordered_map<int, cv::Mat> decoded;
  for (const auto& pl : images) {
    if (pl.object_num < 0) continue;
    auto it = decoded.find(pl.object_num);
    if (it == decoded.end()) it = decoded.emplace(pl.object_num, decode_image(pl.object_num)).first;
    const cv::Mat& img = it->second;
    if (img.empty()) continue;
    // Image pixel (i, j) -> unit square (u, v) = ((i + .5)/W, 1 - (j + .5)/H)
    // -> user space via CTM -> device space (flip y).
    const auto& m = pl.ctm;
    const double W = img.cols, H = img.rows;
    double a = m[0] / W, c = -m[2] / H, e = m[2] + m[4];
    double b = m[1] / W, d = -m[3] / H, f = m[3] + m[5];
    cv::Mat affine = (cv::Mat_<double>(2, 3) << a * scale, c * scale, (e - box.x0) * scale,
                      -b * scale, -d * scale, (box.y1 - f) * scale);
    cv::warpAffine(img, canvas, affine, canvas.size(), cv::INTER_AREA, cv::BORDER_TRANSPARENT);
  }
  for (const auto& run : runs) {
    std::string ascii;
    for (unsigned char ch : run.text) ascii.push_back(ch < 128 ? static_cast<char>(ch) : '?');
    double px = run.font_size * scale;
    if (px < 1.0) continue;
    double font_scale = px * 0.7 / 22.0;
    cv::Point org(static_cast<int>(std::lround((run.x - box.x0) * scale)),
                  static_cast<int>(std::lround((box.y1 - run.y) * scale)));
    cv::putText(canvas, ascii, org, cv::FONT_HERSHEY_SIMPLEX, font_scale, cv::Scalar(20, 20, 20),
                std::max(1, static_cast<int>(std::lround(px / 12.0))), cv::LINE_AA);
  }
  return canvas;
}

}  // namespace papercast::ingest::pdf
