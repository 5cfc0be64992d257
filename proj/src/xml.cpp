#include "archgraph/xml.hpp"

#include <cctype>
#include <cstdint>

#include <fmt/format.h>

namespace archgraph::xml {
namespace {

constexpr int kMaxDepth = 256;

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':' || static_cast<unsigned char>(c) >= 0x80;
}

bool is_name_char(char c) {
  return is_name_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.';
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

bool allowed_char(std::uint32_t cp) {
  return cp == 0x9 || cp == 0xA || cp == 0xD || (cp >= 0x20 && cp <= 0xD7FF) || (cp >= 0xE000 && cp <= 0xFFFD) ||
         (cp >= 0x10000 && cp <= 0x10FFFF);
}

class Parser {
 public:
  explicit Parser(std::string doc) : s_(std::move(doc)) {}

  Element document() {
    if (s_.compare(0, 3, "\xEF\xBB\xBF") == 0) pos_ = 3;
    skip_misc(true);
    if (pos_ >= s_.size() || s_[pos_] != '<') fail("expected root element");
    Element root = element(0);
    skip_misc(false);
    if (pos_ != s_.size()) fail("content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(pos_, what); }

  bool at(std::string_view lit) const { return s_.compare(pos_, lit.size(), lit) == 0; }

  void expect(std::string_view lit) {
    if (!at(lit)) fail(fmt::format("expected '{}'", lit));
    pos_ += lit.size();
  }

  void skip_ws() {
    while (pos_ < s_.size() && is_ws(s_[pos_])) ++pos_;
  }

  void skip_until(std::string_view end) {
    const auto found = s_.find(end, pos_);
    if (found == std::string::npos) fail(fmt::format("unterminated construct, missing '{}'", end));
    pos_ = found + end.size();
  }

  void skip_misc(bool prolog) {
    while (true) {
      skip_ws();
      if (at("<?")) {
        skip_until("?>");
      } else if (at("<!--")) {
        pos_ += 4;
        skip_until("-->");
      } else if (prolog && at("<!DOCTYPE")) {
        skip_until(">");
      } else {
        return;
      }
    }
  }

  std::string name() {
    if (pos_ >= s_.size() || !is_name_start(s_[pos_])) fail("expected a name");
    const std::size_t start = pos_;
    while (pos_ < s_.size() && is_name_char(s_[pos_])) ++pos_;
    return s_.substr(start, pos_ - start);
  }

  void reference(std::string& out) {
    const std::size_t semi = s_.find(';', pos_);
    if (semi == std::string::npos || semi - pos_ > 12) fail("malformed reference");
    const std::string_view ref(s_.data() + pos_ + 1, semi - pos_ - 1);
    if (ref == "lt") {
      out.push_back('<');
    } else if (ref == "gt") {
      out.push_back('>');
    } else if (ref == "amp") {
      out.push_back('&');
    } else if (ref == "quot") {
      out.push_back('"');
    } else if (ref == "apos") {
      out.push_back('\'');
    } else if (ref.size() >= 2 && ref[0] == '#') {
      const bool hex = ref[1] == 'x';
      const std::string_view digits = ref.substr(hex ? 2 : 1);
      if (digits.empty()) fail("empty character reference");
      std::uint32_t cp = 0;
      for (char c : digits) {
        int v;
        if (std::isdigit(static_cast<unsigned char>(c))) {
          v = c - '0';
        } else if (hex && std::isxdigit(static_cast<unsigned char>(c))) {
          v = std::tolower(static_cast<unsigned char>(c)) - 'a' + 10;
        } else {
          fail("bad character reference");
        }
        cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(v);
        if (cp > 0x10FFFF) fail("character reference out of range");
      }
      if (!allowed_char(cp)) fail("character reference to a disallowed character");
      append_utf8(out, cp);
    } else {
      fail(fmt::format("unknown entity '{}'", ref));
    }
    pos_ = semi + 1;
  }

  std::string attribute_value() {
    if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) fail("expected quoted attribute value");
    const char q = s_[pos_++];
    std::string out;
    while (true) {
      if (pos_ >= s_.size()) fail("unterminated attribute value");
      const char c = s_[pos_];
      if (c == q) break;
      if (c == '<') fail("'<' in attribute value");
      if (c == '&') {
        reference(out);
        continue;
      }
      out.push_back(c == '\t' || c == '\n' ? ' ' : c);
      ++pos_;
    }
    ++pos_;
    return out;
  }

  Element element(int depth) {
    if (depth > kMaxDepth) fail("nesting too deep");
    expect("<");
    Element el;
    el.name = name();
    while (true) {
      const bool had_ws = pos_ < s_.size() && is_ws(s_[pos_]);
      skip_ws();
      if (at("/>")) {
        pos_ += 2;
        return el;
      }
      if (at(">")) {
        ++pos_;
        break;
      }
      if (!had_ws) fail("expected whitespace before attribute");
      std::string attr = name();
      skip_ws();
      expect("=");
      skip_ws();
      std::string value = attribute_value();
      if (el.attribute(attr) != nullptr) fail(fmt::format("duplicate attribute '{}'", attr));
      el.attributes.emplace_back(std::move(attr), std::move(value));
    }

    while (true) {
      if (pos_ >= s_.size()) fail(fmt::format("element '{}' is not closed", el.name));
      if (at("</")) {
        pos_ += 2;
        const std::string closing = name();
        if (closing != el.name) fail(fmt::format("mismatched end tag '{}' for '{}'", closing, el.name));
        skip_ws();
        expect(">");
        return el;
      }
      if (at("<!--")) {
        pos_ += 4;
        skip_until("-->");
      } else if (at("<![CDATA[")) {
        pos_ += 9;
        const auto end = s_.find("]]>", pos_);
        if (end == std::string::npos) fail("unterminated CDATA section");
        el.text.append(s_, pos_, end - pos_);
        pos_ = end + 3;
      } else if (at("<?")) {
        skip_until("?>");
      } else if (s_[pos_] == '<') {
        el.children.push_back(element(depth + 1));
      } else if (s_[pos_] == '&') {
        reference(el.text);
      } else {
        el.text.push_back(s_[pos_++]);
      }
    }
  }

  std::string s_;
  std::size_t pos_ = 0;
};

std::string normalize_newlines(std::string_view doc) {
  std::string out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (doc[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < doc.size() && doc[i + 1] == '\n') ++i;
    } else {
      out.push_back(doc[i]);
    }
  }
  return out;
}

}  // namespace

ParseError::ParseError(std::size_t offset, const std::string& message)
    : std::runtime_error(fmt::format("XML parse error at byte {}: {}", offset, message)), offset_(offset) {}

const std::string* Element::attribute(std::string_view attr) const {
  for (const auto& [k, v] : attributes) {
    if (k == attr) return &v;
  }
  return nullptr;
}

const Element* Element::child(std::string_view child_name) const {
  for (const auto& c : children) {
    if (c.name == child_name) return &c;
  }
  return nullptr;
}

std::vector<const Element*> Element::children_named(std::string_view child_name) const {
  std::vector<const Element*> out;
  for (const auto& c : children) {
    if (c.name == child_name) out.push_back(&c);
  }
  return out;
}

Element parse(std::string_view document) { return Parser(normalize_newlines(document)).document(); }

std::string sanitize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
      if (allowed_char(b0)) out.push_back(static_cast<char>(b0));
      ++i;
      continue;
    }
    int len = 0;
    std::uint32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + static_cast<std::size_t>(len) <= s.size();
    for (int k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
      if ((b & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3F);
    }
    if (ok) {
      const std::uint32_t min = len == 2 ? 0x80 : len == 3 ? 0x800 : 0x10000;
      ok = cp >= min && allowed_char(cp);
    }
    if (ok) {
      out.append(s.substr(i, static_cast<std::size_t>(len)));
      i += static_cast<std::size_t>(len);
    } else {
      append_utf8(out, 0xFFFD);
      ++i;
    }
  }
  return out;
}

std::string escape_text(std::string_view s) {
  std::string out;
  for (char c : sanitize(s)) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '\r': out += "&#13;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string escape_attribute(std::string_view s) {
  std::string out;
  for (char c : sanitize(s)) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      case '\t': out += "&#9;"; break;
      case '\n': out += "&#10;"; break;
      case '\r': out += "&#13;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace archgraph::xml
