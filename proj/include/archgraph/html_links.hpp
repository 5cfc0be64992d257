#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "archgraph/uri_identity.hpp"

namespace archgraph {

enum class LinkType { Href, Image };

std::string_view to_string(LinkType type);
std::optional<LinkType> parse_link_type(std::string_view s);

// One extracted edge observation.
struct LinkRecord {
  std::string doc_checksum;
  std::string outlink_uri;
  UriId outlink_id;
  LinkType type = LinkType::Href;
  std::string text;

  auto operator<=>(const LinkRecord&) const = default;
};

struct ExtractOptions {
  // Replay root of archive-rewritten links, e.g. "http://replay.example/web".
  // Empty for pages read straight from WARC files.
  std::string replay_root;
};

struct ExtractStats {
  std::size_t pages = 0;
  std::size_t skipped_non_html = 0;
  std::size_t skipped_scheme = 0;          // mailto:, javascript:, ...
  std::size_t skipped_uncanonicalizable = 0;
};

// <a href> and <img src> links in document order. Relative references are
// resolved against page_uri, or against the first <base href>.
std::vector<LinkRecord> extract_links(std::string_view html, std::string_view page_uri,
                                      std::string_view doc_checksum, const ExtractOptions& options = {},
                                      ExtractStats* stats = nullptr);

// Same, but returns nothing (and counts a skip) unless content_type is HTML.
std::vector<LinkRecord> extract_links_if_html(std::string_view content_type, std::string_view html,
                                              std::string_view page_uri, std::string_view doc_checksum,
                                              const ExtractOptions& options = {}, ExtractStats* stats = nullptr);

bool is_html_content_type(std::string_view content_type);

// "<root>/<14 digits>[modifier]/<original>" -> "<original>". The root may
// also appear host-relative ("/web/2010.../http://..."). Other URLs are
// returned unchanged.
std::string strip_replay_prefix(std::string_view url, std::string_view replay_root);

// Decodes character references (&amp;, &#38;, &#x26; and common names).
std::string decode_html_entities(std::string_view s);

// Tab-separated: doc_checksum, outlink_uri, id hex, type, text. Tabs,
// newlines and backslashes in the text are backslash-escaped.
std::string format_link_record(const LinkRecord& record);
std::optional<LinkRecord> parse_link_record(std::string_view line);
void write_link_records(std::ostream& out, std::span<const LinkRecord> records);
std::vector<LinkRecord> read_link_records(std::istream& in);

}  // namespace archgraph
