#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "archgraph/cdx_filter.hpp"
#include "archgraph/html_links.hpp"
#include "archgraph/kv_store.hpp"
#include "archgraph/timestamp.hpp"
#include "archgraph/uri_identity.hpp"

namespace archgraph {

class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ObservationEntry {
  UriId source_id;
  std::string datetime;
  std::string checksum;

  auto operator<=>(const ObservationEntry&) const = default;
};

struct OutlinkTriple {
  UriId target_id;
  LinkType type = LinkType::Href;
  std::string text;

  auto operator<=>(const OutlinkTriple&) const = default;
};

struct ContentVertex {
  std::string checksum;
  std::vector<OutlinkTriple> outlinks;  // ascending, no duplicates
};

struct TemporalEdge {
  UriId source_id;
  UriId target_id;
  SurtKey target_surt;
  LinkType type = LinkType::Href;
  std::string text;
  std::vector<std::string> datetimes;  // ascending, no duplicates

  bool operator==(const TemporalEdge&) const = default;
};

struct InlinkEntry {
  UriId target_id;
  SurtKey source_surt;
  std::string source_uri;
  std::string datetime;
  LinkType type = LinkType::Href;
  std::string text;

  bool operator==(const InlinkEntry&) const = default;
};

// Property-schema edge observation, as exported for external tools.
struct Quad {
  std::string source_surt;
  std::string target_surt;
  std::string datetime;
  LinkType type = LinkType::Href;
  std::string text;

  auto operator<=>(const Quad&) const = default;
};

struct MaterializeResult {
  std::size_t written = 0;  // entries created or changed by this run
  std::size_t removed = 0;  // stale entries no longer implied by the store
  std::size_t total = 0;    // inlink entries implied by the current store
  std::vector<std::string> dangling_checksums;
};

struct LoadStats {
  std::size_t records = 0;
  std::size_t inserted = 0;
  std::size_t unchanged = 0;
  std::size_t rejected = 0;
  std::vector<std::string> errors;
};

// Content-centric temporal graph on an ordered key-value store:
// observations map (source, datetime) to a content checksum, and each
// checksum owns its outlink set. Upserts are idempotent set unions, safe to
// call from several threads. materialize_inlinks must not run concurrently
// with writers.
class GraphStore {
 public:
  static GraphStore open(const std::filesystem::path& dir);
  static GraphStore in_memory();

  GraphStore(GraphStore&&) noexcept;
  GraphStore& operator=(GraphStore&&) noexcept;
  ~GraphStore();

  KvStore& kv();
  const KvStore& kv() const;
  IdTable& ids();

  // Canonicalizes and records the URI as its id's representative. Throws
  // CanonicalizationError.
  UriId register_uri(std::string_view uri);

  // Returns true when the entry is new. Throws ConflictError when the
  // (source, datetime) pair is already bound to another checksum.
  bool upsert_observation(const ObservationEntry& entry);
  // Registers source_uri once the observation is accepted.
  bool upsert_observation(std::string_view source_uri, std::string_view datetime, std::string_view checksum);

  // Adds triples to the checksum's outlink set; returns how many were new.
  // An empty span still creates the content vertex.
  std::size_t upsert_content(std::string_view checksum, std::span<const OutlinkTriple> outlinks);

  // Makes the checksum's outlink set exactly `outlinks`. Returns the number
  // of triples added plus removed.
  std::size_t replace_content(std::string_view checksum, std::span<const OutlinkTriple> outlinks);

  // Registers link targets (keeping an existing representative URI) and
  // upserts content triples. Returns how many triples were new.
  std::size_t upsert_links(std::span<const LinkRecord> links);

  LoadStats load_observations(std::span<const Observation> log);
  LoadStats load_link_file(std::istream& in);

  // Writes the inlink family implied by observations and content. With
  // prune, entries no longer implied are deleted.
  MaterializeResult materialize_inlinks(bool prune = true);

  std::vector<TemporalEdge> get_outlinks(UriId source, const TimeRange& range = {}) const;
  std::vector<InlinkEntry> get_inlinks(UriId target, const TimeRange& range = {}) const;

  std::vector<ObservationEntry> observations_of(UriId source) const;
  std::optional<ContentVertex> content(std::string_view checksum) const;
  bool has_content(std::string_view checksum) const;

  // Full scans, in key order. Callbacks must not call back into the store.
  void for_each_observation(const std::function<void(const ObservationEntry&)>& fn) const;
  void for_each_content(const std::function<void(const ContentVertex&)>& fn) const;

  std::optional<IdEntry> lookup(UriId id) const;

  std::size_t observation_count() const;
  std::size_t content_count() const;
  std::size_t inlink_count() const;

  // Sorted, duplicate-free property-schema view built from observations
  // joined with content vertices.
  std::vector<Quad> export_quads() const;
  void write_quads(std::ostream& out) const;

  void flush();

 private:
  GraphStore(std::unique_ptr<KvStore> kv);
  std::unique_ptr<KvStore> kv_;
  std::unique_ptr<IdTable> ids_;
};

std::string format_quad(const Quad& q);

}  // namespace archgraph
