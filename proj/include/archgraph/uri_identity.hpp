#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "archgraph/kv_store.hpp"

namespace archgraph {

class CanonicalizationError : public std::runtime_error {
 public:
  explicit CanonicalizationError(std::string input, const std::string& why);
  const std::string& input() const { return input_; }

 private:
  std::string input_;
};

// Canonical SURT form, e.g. "org,example)/foo.html". Values produced by
// canonicalize() satisfy the invariants; the explicit constructor trusts its
// argument (used when reading back from storage).
class SurtKey {
 public:
  SurtKey() = default;
  explicit SurtKey(std::string value) : value_(std::move(value)) {}

  const std::string& str() const { return value_; }
  std::string_view host_part() const;
  std::string_view path_part() const;

  auto operator<=>(const SurtKey&) const = default;

 private:
  std::string value_;
};

// Accepts http(s) URIs, scheme-relative URIs, bare "host/path" strings and
// strings already in SURT form. Throws CanonicalizationError.
SurtKey canonicalize(std::string_view uri);

// True when the string is already SURT form: a ")" precedes any "/".
bool looks_like_surt(std::string_view s);

// Renders a SURT key back into an http URI that canonicalizes to it.
std::string render_uri(const SurtKey& key);

// 128-bit URI identifier.
class UriId {
 public:
  constexpr UriId() = default;
  constexpr UriId(std::uint64_t hi, std::uint64_t lo) : hi_(hi), lo_(lo) {}

  std::uint64_t hi() const { return hi_; }
  std::uint64_t lo() const { return lo_; }
  bool bit(int i) const { return i < 64 ? (lo_ >> i) & 1U : (hi_ >> (i - 64)) & 1U; }

  // 32 lowercase hex digits, most significant first.
  std::string hex() const;
  static std::optional<UriId> from_hex(std::string_view hex);

  auto operator<=>(const UriId&) const = default;

 private:
  std::uint64_t hi_ = 0;
  std::uint64_t lo_ = 0;
};

struct UriIdHash {
  std::size_t operator()(const UriId& id) const noexcept {
    return static_cast<std::size_t>(id.hi() ^ (id.lo() * 0x9e3779b97f4a7c15ULL));
  }
};

UriId fnv1a_128(std::string_view bytes);

// SimHash over byte 4-grams: each feature is hashed with FNV-1a 128, every
// hash casts a +1/-1 vote per bit, and bit i is set iff its vote total is
// positive. Inputs shorter than four bytes form a single feature.
UriId simhash128(std::string_view bytes);

inline UriId uri_id(const SurtKey& key) { return simhash128(key.str()); }

struct IdEntry {
  SurtKey surt;
  std::string original_uri;

  bool operator==(const IdEntry&) const = default;
};

struct IdCollision {
  UriId id;
  SurtKey existing;
  SurtKey incoming;
  std::string incoming_uri;
};

// id -> (SURT, representative original URI). The SURT stored for an id never
// changes; the representative URI is last-write-wins. A put that presents a
// different SURT for a known id is a collision: it is recorded in a sidecar
// list and the stored entry is left untouched.
class IdTable {
 public:
  using HashFn = std::function<UriId(const SurtKey&)>;

  enum class PutOutcome { Inserted, Updated, Unchanged, Collision };

  explicit IdTable(KvStore& store, HashFn hash = uri_id);

  UriId id_of(const SurtKey& key) const { return hash_(key); }

  PutOutcome put(const SurtKey& key, std::string_view original_uri);
  PutOutcome put(UriId id, const SurtKey& key, std::string_view original_uri);
  std::optional<IdEntry> get(UriId id) const;
  std::vector<IdCollision> collisions() const;

 private:
  KvStore& store_;
  HashFn hash_;
  std::mutex mutex_;
};

}  // namespace archgraph
