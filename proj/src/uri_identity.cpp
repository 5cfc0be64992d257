#include "archgraph/uri_identity.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include <fmt/format.h>

#include "archgraph/url.hpp"
#include "store_keys.hpp"

namespace archgraph {

CanonicalizationError::CanonicalizationError(std::string input, const std::string& why)
    : std::runtime_error(fmt::format("cannot canonicalize '{}': {}", input, why)),
      input_(std::move(input)) {}

namespace {

using u128 = unsigned __int128;

constexpr u128 make_u128(std::uint64_t hi, std::uint64_t lo) {
  return (static_cast<u128>(hi) << 64) | lo;
}

constexpr u128 kFnvOffset = make_u128(0x6c62272e07bb0142ULL, 0x62b821756295c58dULL);
constexpr u128 kFnvPrime = make_u128(0x0000000001000000ULL, 0x000000000000013bULL);

u128 fnv1a(std::string_view bytes) {
  u128 h = kFnvOffset;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  auto ws = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

bool is_www_label(std::string_view label) {
  if (label.substr(0, 3) != "www") return false;
  return std::all_of(label.begin() + 3, label.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

bool is_ipv4(const std::vector<std::string>& labels) {
  if (labels.size() != 4) return false;
  return std::all_of(labels.begin(), labels.end(), [](const std::string& l) {
    return !l.empty() && l.size() <= 3 &&
           std::all_of(l.begin(), l.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  });
}

bool valid_host_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '-' || c == '_' || c == '.' || c == '%' || u >= 0x80;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string sorted_query(std::string_view query) {
  std::vector<std::string> params;
  for (auto& p : split(query, '&')) {
    if (!p.empty()) params.push_back(std::move(p));
  }
  std::stable_sort(params.begin(), params.end(), [](const std::string& a, const std::string& b) {
    return std::string_view(a).substr(0, a.find('=')) < std::string_view(b).substr(0, b.find('='));
  });
  std::string out;
  for (const auto& p : params) {
    if (!out.empty()) out.push_back('&');
    out.append(p);
  }
  return out;
}

// Shared tail of both input forms: host given in normal (dotted) order.
SurtKey assemble(std::string_view original, std::string host, std::string_view port,
                 std::string_view path, std::optional<std::string_view> query) {
  host = to_lower(host);
  while (!host.empty() && host.back() == '.') host.pop_back();
  if (host.empty()) throw CanonicalizationError(std::string(original), "empty host");

  std::string surt_host;
  if (host.front() == '[') {
    if (host.back() != ']') throw CanonicalizationError(std::string(original), "bad IPv6 literal");
    surt_host = host;
  } else {
    if (!std::all_of(host.begin(), host.end(), valid_host_char)) {
      throw CanonicalizationError(std::string(original), "invalid host character");
    }
    std::vector<std::string> labels = split(host, '.');
    if (std::any_of(labels.begin(), labels.end(), [](const std::string& l) { return l.empty(); })) {
      throw CanonicalizationError(std::string(original), "empty host label");
    }
    if (is_ipv4(labels)) {
      surt_host = host;
    } else {
      std::size_t first = 0;
      while (labels.size() - first > 2 && is_www_label(labels[first])) ++first;
      for (std::size_t i = labels.size(); i > first; --i) {
        if (!surt_host.empty()) surt_host.push_back(',');
        surt_host.append(labels[i - 1]);
      }
    }
  }

  if (!port.empty()) {
    if (!std::all_of(port.begin(), port.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw CanonicalizationError(std::string(original), "invalid port");
    }
    const auto trimmed = port.find_first_not_of('0');
    port = trimmed == std::string_view::npos ? std::string_view("0") : port.substr(trimmed);
    if (port.size() > 5 || std::stoul(std::string(port)) > 65535) {
      throw CanonicalizationError(std::string(original), "invalid port");
    }
    if (port != "80" && port != "443") surt_host.append(":").append(port);
  }

  std::string key = surt_host;
  key.push_back(')');
  std::string norm_path = path.empty() ? std::string("/") : url::remove_dot_segments(path);
  if (norm_path.empty() || norm_path.front() != '/') norm_path.insert(norm_path.begin(), '/');
  key.append(to_lower(norm_path));
  if (query) {
    const std::string q = sorted_query(to_lower(*query));
    if (!q.empty()) key.append("?").append(q);
  }
  return SurtKey(std::move(key));
}

SurtKey canonicalize_surt_form(std::string_view s) {
  const auto close = s.find(')');
  std::string_view host_part = s.substr(0, close);
  std::string_view rest = s.substr(close + 1);
  if (const auto hash = rest.find('#'); hash != std::string_view::npos) rest = rest.substr(0, hash);

  std::string_view port;
  if (const auto colon = host_part.rfind(':');
      colon != std::string_view::npos && host_part.back() != ']') {
    port = host_part.substr(colon + 1);
    host_part = host_part.substr(0, colon);
  }
  std::string host;
  if (host_part.find(',') == std::string_view::npos) {
    host = std::string(host_part);  // single label or an unreversed IP literal
  } else {
    const auto labels = split(host_part, ',');
    for (auto it = labels.rbegin(); it != labels.rend(); ++it) {
      if (it->empty()) continue;  // tolerate a trailing comma ("org,example,)")
      if (!host.empty()) host.push_back('.');
      host.append(*it);
    }
  }
  std::optional<std::string_view> query;
  if (const auto q = rest.find('?'); q != std::string_view::npos) {
    query = rest.substr(q + 1);
    rest = rest.substr(0, q);
  }
  return assemble(s, std::move(host), port, rest, query);
}

}  // namespace

std::string_view SurtKey::host_part() const {
  return std::string_view(value_).substr(0, value_.find(')'));
}

std::string_view SurtKey::path_part() const {
  const auto pos = value_.find(')');
  return pos == std::string::npos ? std::string_view{} : std::string_view(value_).substr(pos + 1);
}

bool looks_like_surt(std::string_view s) {
  const auto close = s.find(')');
  if (close == std::string_view::npos) return false;
  const auto slash = s.find('/');
  return (slash == std::string_view::npos || close < slash) && s.find("://") == std::string_view::npos;
}

SurtKey canonicalize(std::string_view input) {
  const std::string_view s = trim(input);
  if (s.empty()) throw CanonicalizationError(std::string(input), "empty URI");
  if (looks_like_surt(s)) return canonicalize_surt_form(s);

  std::string absolute;
  if (s.substr(0, 2) == "//") {
    absolute = "http:" + std::string(s);
  } else if (s.find("://") != std::string_view::npos) {
    absolute = std::string(s);
  } else {
    const url::Reference probe = url::parse(s);
    if (probe.scheme) {
      // "host:8080/x" parses with a scheme-like prefix; a real scheme does not
      // continue with a port number.
      const std::string_view after = s.substr(probe.scheme->size() + 1);
      const bool port_follows = !after.empty() && std::isdigit(static_cast<unsigned char>(after.front()));
      if (!port_follows) throw CanonicalizationError(std::string(input), "unsupported scheme");
    }
    absolute = "http://" + std::string(s);
  }

  const url::Reference ref = url::parse(absolute);
  const std::string scheme = to_lower(ref.scheme.value_or(""));
  if (scheme != "http" && scheme != "https") {
    throw CanonicalizationError(std::string(input), "unsupported scheme");
  }
  if (!ref.authority || ref.authority->empty()) {
    throw CanonicalizationError(std::string(input), "missing host");
  }
  std::string_view authority = *ref.authority;
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
  std::string_view host = authority;
  std::string_view port;
  if (authority.front() == '[') {
    const auto close = authority.find(']');
    if (close == std::string_view::npos) throw CanonicalizationError(std::string(input), "bad IPv6 literal");
    host = authority.substr(0, close + 1);
    if (close + 1 < authority.size()) {
      if (authority[close + 1] != ':') throw CanonicalizationError(std::string(input), "bad authority");
      port = authority.substr(close + 2);
    }
  } else if (const auto colon = authority.rfind(':'); colon != std::string_view::npos) {
    host = authority.substr(0, colon);
    port = authority.substr(colon + 1);
  }
  std::optional<std::string_view> query;
  if (ref.query) query = *ref.query;
  return assemble(input, std::string(host), port, ref.path, query);
}

std::string render_uri(const SurtKey& key) {
  std::string_view host_part = key.host_part();
  std::string_view port;
  if (const auto colon = host_part.rfind(':'); colon != std::string_view::npos && host_part.front() != '[') {
    port = host_part.substr(colon + 1);
    host_part = host_part.substr(0, colon);
  }
  std::string host;
  if (host_part.find(',') == std::string_view::npos) {
    host = std::string(host_part);
  } else {
    const auto labels = split(host_part, ',');
    for (auto it = labels.rbegin(); it != labels.rend(); ++it) {
      if (!host.empty()) host.push_back('.');
      host.append(*it);
    }
  }
  std::string out = "http://" + host;
  if (!port.empty()) out.append(":").append(port);
  out.append(key.path_part());
  return out;
}

std::string UriId::hex() const { return fmt::format("{:016x}{:016x}", hi_, lo_); }

std::optional<UriId> UriId::from_hex(std::string_view hex) {
  if (hex.size() != 32) return std::nullopt;
  std::uint64_t parts[2] = {0, 0};
  for (std::size_t i = 0; i < 32; ++i) {
    const char c = hex[i];
    int v;
    if (c >= '0' && c <= '9') {
      v = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      v = c - 'a' + 10;
    } else if (c >= 'A' && c <= 'F') {
      v = c - 'A' + 10;
    } else {
      return std::nullopt;
    }
    parts[i / 16] = (parts[i / 16] << 4) | static_cast<std::uint64_t>(v);
  }
  return UriId(parts[0], parts[1]);
}

UriId fnv1a_128(std::string_view bytes) {
  const u128 h = fnv1a(bytes);
  return UriId(static_cast<std::uint64_t>(h >> 64), static_cast<std::uint64_t>(h));
}

UriId simhash128(std::string_view bytes) {
  std::array<int, 128> ones{};
  int features = 0;
  auto vote = [&](std::string_view feature) {
    const u128 h = fnv1a(feature);
    const auto lo = static_cast<std::uint64_t>(h);
    const auto hi = static_cast<std::uint64_t>(h >> 64);
    for (int i = 0; i < 64; ++i) {
      ones[i] += static_cast<int>((lo >> i) & 1U);
      ones[i + 64] += static_cast<int>((hi >> i) & 1U);
    }
    ++features;
  };
  if (bytes.size() < 4) {
    vote(bytes);
  } else {
    for (std::size_t i = 0; i + 4 <= bytes.size(); ++i) vote(bytes.substr(i, 4));
  }
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  for (int i = 0; i < 64; ++i) {
    // vote total = ones - zeros = 2 * ones - features; ties leave the bit clear
    if (2 * ones[i] > features) lo |= (std::uint64_t{1} << i);
    if (2 * ones[i + 64] > features) hi |= (std::uint64_t{1} << i);
  }
  return UriId(hi, lo);
}

IdTable::IdTable(KvStore& store, HashFn hash) : store_(store), hash_(std::move(hash)) {}

IdTable::PutOutcome IdTable::put(const SurtKey& key, std::string_view original_uri) {
  return put(hash_(key), key, original_uri);
}

IdTable::PutOutcome IdTable::put(UriId id, const SurtKey& key, std::string_view original_uri) {
  const std::string id_hex = id.hex();
  const std::string row_key = keys::join({keys::kId, id_hex});
  std::string value = key.str();
  value.push_back(keys::kSep);
  value.append(original_uri);

  std::lock_guard lock(mutex_);
  const auto existing = store_.get(row_key);
  if (!existing) {
    store_.put(row_key, value);
    return PutOutcome::Inserted;
  }
  const std::string_view stored_surt = std::string_view(*existing).substr(0, existing->find(keys::kSep));
  if (stored_surt != key.str()) {
    store_.put_if_changed(keys::join({keys::kCollision, id_hex, key.str()}), original_uri);
    return PutOutcome::Collision;
  }
  return store_.put_if_changed(row_key, value) ? PutOutcome::Updated : PutOutcome::Unchanged;
}

std::optional<IdEntry> IdTable::get(UriId id) const {
  const auto value = store_.get(keys::join({keys::kId, id.hex()}));
  if (!value) return std::nullopt;
  const auto sep = value->find(keys::kSep);
  return IdEntry{SurtKey(value->substr(0, sep)), sep == std::string::npos ? std::string() : value->substr(sep + 1)};
}

std::vector<IdCollision> IdTable::collisions() const {
  std::vector<IdCollision> out;
  store_.scan_prefix(keys::prefix({keys::kCollision}), [&](std::string_view key, std::string_view value) {
    const auto parts = keys::split(key, 3);
    if (parts.size() != 3) return;
    const auto id = UriId::from_hex(parts[1]);
    if (!id) return;
    out.push_back(IdCollision{*id, SurtKey(), SurtKey(std::string(parts[2])), std::string(value)});
  });
  for (auto& c : out) {
    if (auto entry = get(c.id)) c.existing = entry->surt;
  }
  return out;
}

}  // namespace archgraph
