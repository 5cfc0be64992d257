#pragma once

// Composite key layout shared by the id table and the graph store.
// Components are separated by NUL so that prefix scans return tuples in
// component-wise lexicographic order (e.g. SURT, then datetime).
//
//   ID    \0 <id hex>                                    -> surt \0 original uri
//   COLL  \0 <id hex> \0 <incoming surt>                  -> incoming original uri
//   OUT   \0 <checksum> \0 <target hex> \0 <type> \0 <text> -> ""
//   CONTENT \0 <checksum>                                 -> ""
//   OBS   \0 <source hex> \0 <datetime>                   -> checksum
//   IN    \0 <target hex> \0 <source surt> \0 <datetime> \0 <type> \0 <text> -> source uri

#include <string>
#include <string_view>
#include <vector>

namespace archgraph::keys {

inline constexpr char kSep = '\0';

inline std::string join(std::initializer_list<std::string_view> parts) {
  std::string out;
  bool first = true;
  for (std::string_view p : parts) {
    if (!first) out.push_back(kSep);
    out.append(p);
    first = false;
  }
  return out;
}

// Prefix for scanning all keys whose leading components equal `parts`.
inline std::string prefix(std::initializer_list<std::string_view> parts) {
  std::string out = join(parts);
  out.push_back(kSep);
  return out;
}

// Splits a key into at most `max_parts` components; the last one keeps any
// further separators.
inline std::vector<std::string_view> split(std::string_view key, std::size_t max_parts) {
  std::vector<std::string_view> parts;
  while (parts.size() + 1 < max_parts) {
    const auto pos = key.find(kSep);
    if (pos == std::string_view::npos) break;
    parts.push_back(key.substr(0, pos));
    key.remove_prefix(pos + 1);
  }
  parts.push_back(key);
  return parts;
}

inline constexpr std::string_view kId = "ID";
inline constexpr std::string_view kCollision = "COLL";
inline constexpr std::string_view kOut = "OUT";
inline constexpr std::string_view kContent = "CONTENT";
inline constexpr std::string_view kObservation = "OBS";
inline constexpr std::string_view kIn = "IN";

}  // namespace archgraph::keys
