#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace archgraph::url {

// Generic URI reference split per RFC 3986 appendix B. Components keep
// their original spelling; nothing is decoded.
struct Reference {
  std::optional<std::string> scheme;
  std::optional<std::string> authority;
  std::string path;
  std::optional<std::string> query;
  std::optional<std::string> fragment;

  std::string str() const;
};

Reference parse(std::string_view ref);

std::string remove_dot_segments(std::string_view path);

// Resolve `ref` against the absolute `base` (RFC 3986 section 5.2.2).
std::string resolve(std::string_view base, std::string_view ref);

// Strip leading/trailing ASCII whitespace and drop embedded tabs/newlines,
// then percent-encode spaces. This is how browsers clean attribute URLs.
std::string clean_attribute_url(std::string_view raw);

}  // namespace archgraph::url
