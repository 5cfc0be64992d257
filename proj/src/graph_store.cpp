#include "archgraph/graph_store.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "archgraph/digest.hpp"
#include "store_keys.hpp"

namespace archgraph {
namespace {

std::string strip_nul(std::string_view s) {
  std::string out(s);
  out.erase(std::remove(out.begin(), out.end(), '\0'), out.end());
  return out;
}

std::string out_key(std::string_view checksum, const OutlinkTriple& t) {
  return keys::join({keys::kOut, checksum, t.target_id.hex(), to_string(t.type), t.text});
}

std::optional<OutlinkTriple> parse_out_suffix(std::string_view key) {
  // OUT, checksum, target, type, text
  const auto parts = keys::split(key, 5);
  if (parts.size() != 5) return std::nullopt;
  const auto id = UriId::from_hex(parts[2]);
  const auto type = parse_link_type(parts[3]);
  if (!id || !type) return std::nullopt;
  return OutlinkTriple{*id, *type, std::string(parts[4])};
}

std::optional<ObservationEntry> parse_observation(std::string_view key, std::string_view value) {
  const auto parts = keys::split(key, 3);
  if (parts.size() != 3) return std::nullopt;
  const auto id = UriId::from_hex(parts[1]);
  if (!id) return std::nullopt;
  return ObservationEntry{*id, std::string(parts[2]), std::string(value)};
}

std::vector<OutlinkTriple> scan_outlinks(const KvStore& kv, std::string_view checksum) {
  std::vector<OutlinkTriple> out;
  kv.scan_prefix(keys::prefix({keys::kOut, checksum}), [&](std::string_view key, std::string_view) {
    if (auto t = parse_out_suffix(key)) out.push_back(std::move(*t));
  });
  return out;
}

// id -> surt for every registered id.
std::unordered_map<UriId, std::string, UriIdHash> surt_index(const KvStore& kv) {
  std::unordered_map<UriId, std::string, UriIdHash> out;
  kv.scan_prefix(keys::prefix({keys::kId}), [&](std::string_view key, std::string_view value) {
    const auto parts = keys::split(key, 2);
    if (parts.size() != 2) return;
    if (const auto id = UriId::from_hex(parts[1])) out.emplace(*id, std::string(value.substr(0, value.find(keys::kSep))));
  });
  return out;
}

std::string escape_text(std::string_view s) {
  std::string out;
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

}  // namespace

GraphStore::GraphStore(std::unique_ptr<KvStore> kv) : kv_(std::move(kv)), ids_(std::make_unique<IdTable>(*kv_)) {}
GraphStore::GraphStore(GraphStore&&) noexcept = default;
GraphStore& GraphStore::operator=(GraphStore&&) noexcept = default;
GraphStore::~GraphStore() = default;

GraphStore GraphStore::open(const std::filesystem::path& dir) {
  return GraphStore(std::make_unique<KvStore>(KvStore::open(dir)));
}

GraphStore GraphStore::in_memory() { return GraphStore(std::make_unique<KvStore>(KvStore::in_memory())); }

KvStore& GraphStore::kv() { return *kv_; }
const KvStore& GraphStore::kv() const { return *kv_; }
IdTable& GraphStore::ids() { return *ids_; }

UriId GraphStore::register_uri(std::string_view uri) {
  const SurtKey key = canonicalize(uri);
  const UriId id = ids_->id_of(key);
  ids_->put(id, key, uri);
  return id;
}

bool GraphStore::upsert_observation(const ObservationEntry& e) {
  if (!is_valid_timestamp(e.datetime)) throw std::invalid_argument(fmt::format("invalid datetime '{}'", e.datetime));
  if (e.checksum.empty() || e.checksum.find('\0') != std::string::npos) {
    throw std::invalid_argument("observation checksum is empty");
  }
  const auto existing = kv_->put_if_absent(keys::join({keys::kObservation, e.source_id.hex(), e.datetime}), e.checksum);
  if (!existing) return true;
  if (*existing != e.checksum) {
    throw ConflictError(fmt::format("observation {} at {} is bound to {}, refusing {}", e.source_id.hex(), e.datetime,
                                    *existing, e.checksum));
  }
  return false;
}

bool GraphStore::upsert_observation(std::string_view source_uri, std::string_view datetime, std::string_view checksum) {
  const SurtKey key = canonicalize(source_uri);
  const UriId id = ids_->id_of(key);
  const bool inserted = upsert_observation(ObservationEntry{id, std::string(datetime), std::string(checksum)});
  ids_->put(id, key, source_uri);
  return inserted;
}

std::size_t GraphStore::upsert_content(std::string_view checksum, std::span<const OutlinkTriple> outlinks) {
  if (checksum.empty() || checksum.find('\0') != std::string_view::npos) {
    throw std::invalid_argument("content checksum is empty");
  }
  kv_->put_if_absent(keys::join({keys::kContent, checksum}), "");
  std::size_t added = 0;
  for (const auto& t : outlinks) {
    OutlinkTriple clean{t.target_id, t.type, strip_nul(t.text)};
    if (!kv_->put_if_absent(out_key(checksum, clean), "")) ++added;
  }
  return added;
}

std::size_t GraphStore::replace_content(std::string_view checksum, std::span<const OutlinkTriple> outlinks) {
  std::set<std::string> wanted;
  for (const auto& t : outlinks) wanted.insert(out_key(checksum, OutlinkTriple{t.target_id, t.type, strip_nul(t.text)}));
  std::vector<std::string> stale;
  kv_->scan_prefix(keys::prefix({keys::kOut, checksum}), [&](std::string_view key, std::string_view) {
    if (wanted.count(std::string(key)) == 0) stale.emplace_back(key);
  });
  for (const auto& k : stale) kv_->erase(k);
  const std::size_t added = upsert_content(checksum, outlinks);
  return added + stale.size();
}

std::size_t GraphStore::upsert_links(std::span<const LinkRecord> links) {
  std::size_t added = 0;
  for (const LinkRecord& r : links) {
    if (!ids_->get(r.outlink_id)) {
      ids_->put(r.outlink_id, canonicalize(r.outlink_uri), r.outlink_uri);
    }
    const OutlinkTriple t{r.outlink_id, r.type, r.text};
    added += upsert_content(r.doc_checksum, std::span(&t, 1));
  }
  return added;
}

LoadStats GraphStore::load_observations(std::span<const Observation> log) {
  LoadStats stats;
  for (const Observation& o : log) {
    ++stats.records;
    try {
      if (o.digest == "-" || o.digest.empty()) {
        ++stats.rejected;
        continue;
      }
      const std::string& uri = o.original_uri.empty() ? o.urlkey : o.original_uri;
      if (upsert_observation(uri, o.timestamp, o.digest)) {
        ++stats.inserted;
      } else {
        ++stats.unchanged;
      }
    } catch (const ConflictError&) {
      throw;
    } catch (const std::exception& e) {
      ++stats.rejected;
      stats.errors.push_back(fmt::format("{} {}: {}", o.urlkey, o.timestamp, e.what()));
    }
  }
  return stats;
}

LoadStats GraphStore::load_link_file(std::istream& in) {
  LoadStats stats;
  std::string line;
  std::vector<LinkRecord> batch;
  std::size_t line_no = 0;
  auto drain = [&] {
    const std::size_t added = upsert_links(batch);
    stats.inserted += added;
    stats.unchanged += batch.size() - added;
    batch.clear();
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ++stats.records;
    auto rec = parse_link_record(line);
    if (!rec) {
      ++stats.rejected;
      stats.errors.push_back(fmt::format("line {}: malformed link record", line_no));
      continue;
    }
    batch.push_back(std::move(*rec));
    if (batch.size() >= 4096) drain();
  }
  drain();
  return stats;
}

MaterializeResult GraphStore::materialize_inlinks(bool prune) {
  MaterializeResult result;
  std::set<std::string> implied;
  std::vector<ObservationEntry> observations;
  for_each_observation([&](const ObservationEntry& e) { observations.push_back(e); });

  std::map<std::string, std::vector<OutlinkTriple>> content_cache;
  std::set<std::string> dangling;
  std::unordered_map<UriId, IdEntry, UriIdHash> sources;
  for (const ObservationEntry& obs : observations) {
    auto cached = content_cache.find(obs.checksum);
    if (cached == content_cache.end()) {
      if (!has_content(obs.checksum)) {
        dangling.insert(obs.checksum);
        continue;
      }
      cached = content_cache.emplace(obs.checksum, scan_outlinks(*kv_, obs.checksum)).first;
    }
    if (cached->second.empty()) continue;
    auto src = sources.find(obs.source_id);
    if (src == sources.end()) {
      auto entry = ids_->get(obs.source_id);
      if (!entry) entry = IdEntry{SurtKey(obs.source_id.hex()), obs.source_id.hex()};
      src = sources.emplace(obs.source_id, std::move(*entry)).first;
    }
    const std::string source_surt = strip_nul(src->second.surt.str());
    for (const OutlinkTriple& t : cached->second) {
      const std::string key =
          keys::join({keys::kIn, t.target_id.hex(), source_surt, obs.datetime, to_string(t.type), t.text});
      ++result.total;
      if (kv_->put_if_changed(key, src->second.original_uri)) ++result.written;
      if (prune) implied.insert(key);
    }
  }
  if (prune) {
    std::vector<std::string> stale;
    kv_->scan_prefix(keys::prefix({keys::kIn}), [&](std::string_view key, std::string_view) {
      if (implied.count(std::string(key)) == 0) stale.emplace_back(key);
    });
    for (const auto& k : stale) kv_->erase(k);
    result.removed = stale.size();
  }
  result.total = kv_->count_prefix(keys::prefix({keys::kIn}));
  result.dangling_checksums.assign(dangling.begin(), dangling.end());
  return result;
}

std::vector<TemporalEdge> GraphStore::get_outlinks(UriId source, const TimeRange& range) const {
  std::map<OutlinkTriple, std::set<std::string>> grouped;
  for (const ObservationEntry& obs : observations_of(source)) {
    if (!range.contains(obs.datetime)) continue;
    for (OutlinkTriple& t : scan_outlinks(*kv_, obs.checksum)) grouped[std::move(t)].insert(obs.datetime);
  }
  std::vector<TemporalEdge> out;
  out.reserve(grouped.size());
  for (auto& [triple, datetimes] : grouped) {
    const auto entry = ids_->get(triple.target_id);
    out.push_back(TemporalEdge{source, triple.target_id, entry ? entry->surt : SurtKey(triple.target_id.hex()),
                               triple.type, triple.text, {datetimes.begin(), datetimes.end()}});
  }
  std::sort(out.begin(), out.end(), [](const TemporalEdge& a, const TemporalEdge& b) {
    return std::tie(a.target_surt, a.datetimes.front(), a.type, a.text, a.target_id) <
           std::tie(b.target_surt, b.datetimes.front(), b.type, b.text, b.target_id);
  });
  return out;
}

std::vector<InlinkEntry> GraphStore::get_inlinks(UriId target, const TimeRange& range) const {
  std::vector<InlinkEntry> out;
  kv_->scan_prefix(keys::prefix({keys::kIn, target.hex()}), [&](std::string_view key, std::string_view value) {
    // IN, target, source surt, datetime, type, text
    const auto parts = keys::split(key, 6);
    if (parts.size() != 6 || !range.contains(parts[3])) return;
    const auto type = parse_link_type(parts[4]);
    if (!type) return;
    out.push_back(InlinkEntry{target, SurtKey(std::string(parts[2])), std::string(value), std::string(parts[3]), *type,
                              std::string(parts[5])});
  });
  return out;
}

std::vector<ObservationEntry> GraphStore::observations_of(UriId source) const {
  std::vector<ObservationEntry> out;
  kv_->scan_prefix(keys::prefix({keys::kObservation, source.hex()}), [&](std::string_view key, std::string_view value) {
    if (auto e = parse_observation(key, value)) out.push_back(std::move(*e));
  });
  return out;
}

std::optional<ContentVertex> GraphStore::content(std::string_view checksum) const {
  if (!has_content(checksum)) return std::nullopt;
  return ContentVertex{std::string(checksum), scan_outlinks(*kv_, checksum)};
}

bool GraphStore::has_content(std::string_view checksum) const {
  return kv_->contains(keys::join({keys::kContent, checksum}));
}

void GraphStore::for_each_observation(const std::function<void(const ObservationEntry&)>& fn) const {
  kv_->scan_prefix(keys::prefix({keys::kObservation}), [&](std::string_view key, std::string_view value) {
    if (auto e = parse_observation(key, value)) fn(*e);
  });
}

void GraphStore::for_each_content(const std::function<void(const ContentVertex&)>& fn) const {
  std::vector<std::string> checksums;
  kv_->scan_prefix(keys::prefix({keys::kContent}), [&](std::string_view key, std::string_view) {
    checksums.emplace_back(keys::split(key, 2).back());
  });
  std::map<std::string, std::vector<OutlinkTriple>> outlinks;
  kv_->scan_prefix(keys::prefix({keys::kOut}), [&](std::string_view key, std::string_view) {
    if (auto t = parse_out_suffix(key)) outlinks[std::string(keys::split(key, 3)[1])].push_back(std::move(*t));
  });
  for (const auto& c : checksums) {
    auto it = outlinks.find(c);
    fn(ContentVertex{c, it == outlinks.end() ? std::vector<OutlinkTriple>{} : std::move(it->second)});
  }
}

std::optional<IdEntry> GraphStore::lookup(UriId id) const { return ids_->get(id); }

std::size_t GraphStore::observation_count() const { return kv_->count_prefix(keys::prefix({keys::kObservation})); }
std::size_t GraphStore::content_count() const { return kv_->count_prefix(keys::prefix({keys::kContent})); }
std::size_t GraphStore::inlink_count() const { return kv_->count_prefix(keys::prefix({keys::kIn})); }

std::vector<Quad> GraphStore::export_quads() const {
  const auto surts = surt_index(*kv_);
  auto surt_of = [&](UriId id) {
    const auto it = surts.find(id);
    return it == surts.end() ? id.hex() : it->second;
  };
  std::unordered_map<std::string, std::vector<OutlinkTriple>> outlinks;
  kv_->scan_prefix(keys::prefix({keys::kOut}), [&](std::string_view key, std::string_view) {
    if (auto t = parse_out_suffix(key)) outlinks[std::string(keys::split(key, 3)[1])].push_back(std::move(*t));
  });
  std::vector<Quad> quads;
  for_each_observation([&](const ObservationEntry& obs) {
    const auto it = outlinks.find(obs.checksum);
    if (it == outlinks.end()) return;
    const std::string source = surt_of(obs.source_id);
    for (const OutlinkTriple& t : it->second) {
      quads.push_back(Quad{source, surt_of(t.target_id), obs.datetime, t.type, t.text});
    }
  });
  std::sort(quads.begin(), quads.end());
  quads.erase(std::unique(quads.begin(), quads.end()), quads.end());
  return quads;
}

std::string format_quad(const Quad& q) {
  return fmt::format("{}\t{}\t{}\t{}\t{}", q.source_surt, q.target_surt, q.datetime, to_string(q.type),
                     escape_text(q.text));
}

void GraphStore::write_quads(std::ostream& out) const {
  for (const Quad& q : export_quads()) out << format_quad(q) << '\n';
}

void GraphStore::flush() { kv_->flush(); }

}  // namespace archgraph
