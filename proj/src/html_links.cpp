#include "archgraph/html_links.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>

#include "archgraph/url.hpp"

namespace archgraph {
namespace {

struct Attr {
  std::string name;
  std::string value;
};

struct Token {
  enum class Kind { Start, End, Text } kind;
  std::string name;  // lowercased tag name
  std::vector<Attr> attrs;
  std::string text;

  const std::string* attr(std::string_view n) const {
    for (const auto& a : attrs) {
      if (a.name == n) return &a.value;
    }
    return nullptr;
  }
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool istarts_with(std::string_view s, std::size_t at, std::string_view prefix) {
  if (s.size() - at < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (lower(s[at + i]) != prefix[i]) return false;
  }
  return true;
}

std::size_t ifind(std::string_view s, std::string_view needle, std::size_t from) {
  for (std::size_t i = from; i + needle.size() <= s.size(); ++i) {
    if (istarts_with(s, i, needle)) return i;
  }
  return std::string_view::npos;
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
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

struct NamedEntity {
  std::string_view name;
  std::uint32_t cp;
};

constexpr NamedEntity kEntities[] = {
    {"amp", '&'},     {"lt", '<'},       {"gt", '>'},       {"quot", '"'},     {"apos", '\''},
    {"nbsp", 0xA0},   {"copy", 0xA9},    {"reg", 0xAE},     {"ndash", 0x2013}, {"mdash", 0x2014},
    {"hellip", 0x2026}, {"laquo", 0xAB}, {"raquo", 0xBB},   {"middot", 0xB7},  {"rsquo", 0x2019},
    {"lsquo", 0x2018}, {"rdquo", 0x201D}, {"ldquo", 0x201C}, {"eacute", 0xE9}, {"bull", 0x2022},
};

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

bool is_raw_text(std::string_view tag) { return tag == "script" || tag == "style"; }

std::vector<Token> tokenize(std::string_view html) {
  std::vector<Token> tokens;
  const std::size_t n = html.size();
  std::size_t i = 0;
  auto push_text = [&](std::string_view raw) {
    if (raw.empty()) return;
    if (!tokens.empty() && tokens.back().kind == Token::Kind::Text) {
      tokens.back().text += decode_html_entities(raw);
    } else {
      tokens.push_back(Token{Token::Kind::Text, {}, {}, decode_html_entities(raw)});
    }
  };

  while (i < n) {
    if (html[i] != '<') {
      const std::size_t next = html.find('<', i);
      const std::size_t end = next == std::string_view::npos ? n : next;
      push_text(html.substr(i, end - i));
      i = end;
      continue;
    }
    if (html.compare(i, 4, "<!--") == 0) {
      const std::size_t end = html.find("-->", i + 4);
      i = end == std::string_view::npos ? n : end + 3;
      continue;
    }
    if (i + 1 < n && (html[i + 1] == '!' || html[i + 1] == '?')) {
      const std::size_t end = html.find('>', i);
      i = end == std::string_view::npos ? n : end + 1;
      continue;
    }
    const bool closing = i + 1 < n && html[i + 1] == '/';
    std::size_t p = i + (closing ? 2 : 1);
    if (p >= n || !std::isalpha(static_cast<unsigned char>(html[p]))) {
      push_text(html.substr(i, 1));
      ++i;
      continue;
    }
    Token tok{closing ? Token::Kind::End : Token::Kind::Start, {}, {}, {}};
    while (p < n && !is_space(html[p]) && html[p] != '>' && html[p] != '/') tok.name.push_back(lower(html[p++]));

    if (closing) {
      const std::size_t end = html.find('>', p);
      i = end == std::string_view::npos ? n : end + 1;
      tokens.push_back(std::move(tok));
      continue;
    }

    // attributes
    while (p < n) {
      while (p < n && (is_space(html[p]) || html[p] == '/')) ++p;
      if (p >= n || html[p] == '>') break;
      Attr attr;
      while (p < n && !is_space(html[p]) && html[p] != '=' && html[p] != '>' && html[p] != '/') {
        attr.name.push_back(lower(html[p++]));
      }
      while (p < n && is_space(html[p])) ++p;
      if (p < n && html[p] == '=') {
        ++p;
        while (p < n && is_space(html[p])) ++p;
        if (p < n && (html[p] == '"' || html[p] == '\'')) {
          const char q = html[p++];
          const std::size_t close = html.find(q, p);
          const std::size_t vend = close == std::string_view::npos ? n : close;
          attr.value = decode_html_entities(html.substr(p, vend - p));
          p = close == std::string_view::npos ? n : close + 1;
        } else {
          const std::size_t start = p;
          while (p < n && !is_space(html[p]) && html[p] != '>') ++p;
          attr.value = decode_html_entities(html.substr(start, p - start));
        }
      }
      if (attr.name.empty()) {
        ++p;
        continue;
      }
      if (tok.attr(attr.name) == nullptr) tok.attrs.push_back(std::move(attr));
    }
    i = p < n ? p + 1 : n;
    const std::string name = tok.name;
    tokens.push_back(std::move(tok));

    if (is_raw_text(name)) {
      const std::string close = "</" + name;
      const std::size_t end = ifind(html, close, i);
      if (end == std::string_view::npos) {
        i = n;
      } else {
        const std::size_t gt = html.find('>', end);
        i = gt == std::string_view::npos ? n : gt + 1;
        tokens.push_back(Token{Token::Kind::End, name, {}, {}});
      }
    }
  }
  return tokens;
}

bool is_http_scheme(std::string_view uri) {
  return istarts_with(uri, 0, "http://") || istarts_with(uri, 0, "https://");
}

class Extractor {
 public:
  Extractor(std::string_view page_uri, std::string_view checksum, const ExtractOptions& options, ExtractStats& stats)
      : base_(page_uri), checksum_(checksum), options_(options), stats_(stats) {}

  void set_base(std::string_view raw) {
    std::string cleaned = prepare(raw);
    std::string resolved = url::resolve(base_, cleaned);
    if (is_http_scheme(resolved)) base_ = std::move(resolved);
  }

  // Resolved, fragment-free absolute URI plus its id, or nothing.
  std::optional<std::pair<std::string, UriId>> resolve(std::string_view raw) {
    std::string resolved = url::resolve(base_, prepare(raw));
    if (!is_http_scheme(resolved)) {
      ++stats_.skipped_scheme;
      return std::nullopt;
    }
    if (const auto hash = resolved.find('#'); hash != std::string::npos) resolved.resize(hash);
    try {
      const UriId id = uri_id(canonicalize(resolved));
      return std::make_pair(std::move(resolved), id);
    } catch (const CanonicalizationError&) {
      ++stats_.skipped_uncanonicalizable;
      return std::nullopt;
    }
  }

  LinkRecord make(std::pair<std::string, UriId> target, LinkType type, std::string text) const {
    return LinkRecord{std::string(checksum_), std::move(target.first), target.second, type, std::move(text)};
  }

 private:
  std::string prepare(std::string_view raw) const {
    std::string cleaned = url::clean_attribute_url(raw);
    if (!options_.replay_root.empty()) cleaned = strip_replay_prefix(cleaned, options_.replay_root);
    return cleaned;
  }

  std::string base_;
  std::string_view checksum_;
  const ExtractOptions& options_;
  ExtractStats& stats_;
};

std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out.push_back(s[i]);
      continue;
    }
    switch (s[++i]) {
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      default: out.push_back(s[i]);
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(LinkType type) { return type == LinkType::Href ? "href" : "image"; }

std::optional<LinkType> parse_link_type(std::string_view s) {
  if (s == "href") return LinkType::Href;
  if (s == "image") return LinkType::Image;
  return std::nullopt;
}

std::string decode_html_entities(std::string_view s) {
  if (s.find('&') == std::string_view::npos) return std::string(s);
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    const std::size_t semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back(s[i++]);
      continue;
    }
    const std::string_view body = s.substr(i + 1, semi - i - 1);
    bool decoded = false;
    if (body.size() >= 2 && body[0] == '#') {
      const bool hex = body[1] == 'x' || body[1] == 'X';
      const std::string_view digits = body.substr(hex ? 2 : 1);
      if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [hex](char c) {
            return hex ? std::isxdigit(static_cast<unsigned char>(c)) : std::isdigit(static_cast<unsigned char>(c));
          })) {
        std::uint32_t cp = 0;
        for (char c : digits) {
          cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : lower(c) - 'a' + 10);
          if (cp > 0x10FFFF) cp = 0x110000;
        }
        append_utf8(out, cp);
        decoded = true;
      }
    } else {
      for (const auto& e : kEntities) {
        if (e.name == body) {
          append_utf8(out, e.cp);
          decoded = true;
          break;
        }
      }
    }
    if (decoded) {
      i = semi + 1;
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

bool is_html_content_type(std::string_view content_type) {
  std::string mime;
  for (char c : content_type.substr(0, content_type.find(';'))) {
    if (!is_space(c)) mime.push_back(lower(c));
  }
  return mime == "text/html" || mime == "application/xhtml+xml";
}

std::string strip_replay_prefix(std::string_view url_in, std::string_view replay_root) {
  while (!replay_root.empty() && replay_root.back() == '/') replay_root.remove_suffix(1);
  if (replay_root.empty()) return std::string(url_in);
  const url::Reference root = url::parse(replay_root);

  std::string_view rest;
  bool matched = false;
  const std::string root_lower = [&] {
    std::string r;
    for (char c : replay_root) r.push_back(lower(c));
    return r;
  }();
  if (istarts_with(url_in, 0, root_lower) && url_in.size() > replay_root.size() && url_in[replay_root.size()] == '/') {
    rest = url_in.substr(replay_root.size() + 1);
    matched = true;
  } else if (!url_in.empty() && url_in[0] == '/' && !(url_in.size() > 1 && url_in[1] == '/')) {
    const std::string_view root_path = root.path;
    std::string_view trimmed = root_path;
    while (!trimmed.empty() && trimmed.back() == '/') trimmed.remove_suffix(1);
    if (url_in.substr(0, trimmed.size()) == trimmed && url_in.size() > trimmed.size() && url_in[trimmed.size()] == '/') {
      rest = url_in.substr(trimmed.size() + 1);
      matched = true;
    }
  }
  if (!matched || rest.size() < 15) return std::string(url_in);
  for (std::size_t k = 0; k < 14; ++k) {
    if (!std::isdigit(static_cast<unsigned char>(rest[k]))) return std::string(url_in);
  }
  std::size_t p = 14;
  while (p < rest.size() && (std::islower(static_cast<unsigned char>(rest[p])) || rest[p] == '_')) ++p;
  if (p >= rest.size() || rest[p] != '/') return std::string(url_in);
  std::string_view original = rest.substr(p + 1);
  if (original.empty()) return std::string(url_in);
  if (is_http_scheme(original)) return std::string(original);
  if (istarts_with(original, 0, "http:/") || istarts_with(original, 0, "https:/")) {
    const std::size_t colon = original.find(':');
    return std::string(original.substr(0, colon + 1)) + "/" + std::string(original.substr(colon + 1));
  }
  if (original.substr(0, 2) == "//") return "http:" + std::string(original);
  return "http://" + std::string(original);
}

std::vector<LinkRecord> extract_links(std::string_view html, std::string_view page_uri, std::string_view doc_checksum,
                                      const ExtractOptions& options, ExtractStats* stats) {
  ExtractStats local;
  ExtractStats& st = stats != nullptr ? *stats : local;
  ++st.pages;
  const std::vector<Token> tokens = tokenize(html);
  Extractor ex(page_uri, doc_checksum, options, st);

  for (const Token& t : tokens) {
    if (t.kind == Token::Kind::Start && t.name == "base") {
      if (const std::string* href = t.attr("href")) {
        ex.set_base(*href);
        break;
      }
    }
  }

  std::vector<std::optional<LinkRecord>> slots;
  std::optional<std::size_t> open_anchor;
  std::string anchor_text;
  auto close_anchor = [&] {
    if (open_anchor) slots[*open_anchor]->text = collapse_whitespace(anchor_text);
    open_anchor.reset();
    anchor_text.clear();
  };

  for (const Token& t : tokens) {
    switch (t.kind) {
      case Token::Kind::Text:
        if (open_anchor) anchor_text += t.text;
        break;
      case Token::Kind::End:
        if (t.name == "a") close_anchor();
        break;
      case Token::Kind::Start:
        if (t.name == "a") {
          close_anchor();
          const std::string* href = t.attr("href");
          if (href == nullptr) break;
          if (auto target = ex.resolve(*href)) {
            slots.emplace_back(ex.make(std::move(*target), LinkType::Href, {}));
            open_anchor = slots.size() - 1;
          }
        } else if (t.name == "img") {
          const std::string* src = t.attr("src");
          if (src == nullptr) break;
          if (auto target = ex.resolve(*src)) {
            const std::string* alt = t.attr("alt");
            slots.emplace_back(ex.make(std::move(*target), LinkType::Image, alt ? collapse_whitespace(*alt) : ""));
          }
        } else if (t.name == "br" && open_anchor) {
          anchor_text.push_back(' ');
        }
        break;
    }
  }
  close_anchor();

  std::vector<LinkRecord> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<LinkRecord> extract_links_if_html(std::string_view content_type, std::string_view html,
                                              std::string_view page_uri, std::string_view doc_checksum,
                                              const ExtractOptions& options, ExtractStats* stats) {
  if (!is_html_content_type(content_type)) {
    if (stats != nullptr) ++stats->skipped_non_html;
    return {};
  }
  return extract_links(html, page_uri, doc_checksum, options, stats);
}

std::string format_link_record(const LinkRecord& r) {
  std::string line;
  line.reserve(r.doc_checksum.size() + r.outlink_uri.size() + r.text.size() + 48);
  line.append(r.doc_checksum).push_back('\t');
  line.append(escape_field(r.outlink_uri)).push_back('\t');
  line.append(r.outlink_id.hex()).push_back('\t');
  line.append(to_string(r.type)).push_back('\t');
  line.append(escape_field(r.text));
  return line;
}

std::optional<LinkRecord> parse_link_record(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::string_view fields[5];
  for (int f = 0; f < 4; ++f) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) return std::nullopt;
    fields[f] = line.substr(0, tab);
    line.remove_prefix(tab + 1);
  }
  fields[4] = line;
  const auto id = UriId::from_hex(fields[2]);
  const auto type = parse_link_type(fields[3]);
  if (!id || !type || fields[0].empty() || fields[1].empty()) return std::nullopt;
  return LinkRecord{std::string(fields[0]), unescape_field(fields[1]), *id, *type, unescape_field(fields[4])};
}

void write_link_records(std::ostream& out, std::span<const LinkRecord> records) {
  for (const auto& r : records) out << format_link_record(r) << '\n';
}

std::vector<LinkRecord> read_link_records(std::istream& in) {
  std::vector<LinkRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (auto r = parse_link_record(line)) out.push_back(std::move(*r));
  }
  return out;
}

}  // namespace archgraph
